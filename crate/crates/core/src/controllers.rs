//! Example drivers: a solo lap driver and a platooning variant that asks the
//! vehicles ahead to speed up when it gets too close.
//!
//! The pure decision functions are kept separate from the signal-function
//! wiring so each can be checked on its own.

use std::f64::consts::PI;

use crate::frp::{fanout, feedback, identity, lift_pure, SignalFunction, SignalFunctionExt};
use crate::model::{CarState, DriveState, Message, RANGEFINDER_MAX};

/// A driver maps sensor samples to actuator commands.
pub type Driver = Box<dyn SignalFunction<CarState, DriveState> + Send>;

/// Upshift above 6000 rpm, downshift below 3000, otherwise hold. Gears stay
/// within 1..=6.
pub fn shifting(rpm: f64, gear: i32) -> i32 {
    if rpm > 6000.0 {
        6.min(gear + 1)
    } else if rpm < 3000.0 {
        1.max(gear - 1)
    } else {
        gear
    }
}

/// Steering command from the heading error and lateral offset, clipped to
/// full lock. A heading error of pi/14 rad alone gives full lock.
pub fn steering(angle: f64, track_pos: f64) -> f64 {
    let turns = angle * 14.0 / PI;
    let centering = turns - track_pos * 0.1;
    centering.clamp(-1.0, 1.0)
}

/// Full throttle below a speed threshold that drops as the wheel turns.
pub fn gas(speed_x: f64, steer: f64) -> f64 {
    if speed_x < 100.0 - steer * 50.0 {
        1.0
    } else {
        0.0
    }
}

pub fn request(dist: f64) -> Message {
    if dist < 3.0 {
        Message::new("faster").expect("literal message is valid")
    } else {
        Message::empty()
    }
}

/// Raises the target speed by 10 km/h when any peer asked for "faster".
pub fn adjust_speed<'a, I>(comms: I, target_speed: f64) -> f64
where
    I: IntoIterator<Item = &'a Message>,
{
    if comms.into_iter().any(|m| m == "faster") {
        target_speed + 10.0
    } else {
        target_speed
    }
}

/// Indices of the beams within 30 degrees of straight ahead.
pub const FORWARD_BEAMS: std::ops::RangeInclusive<usize> = 6..=12;

/// Shortest forward rangefinder reading. Off-track (-1) readings are
/// skipped; with nothing left the result is the sensor cap.
pub fn min_forward_range(track: &[f64]) -> f64 {
    track[FORWARD_BEAMS]
        .iter()
        .copied()
        .filter(|r| *r >= 0.0)
        .fold(RANGEFINDER_MAX, f64::min)
}

#[derive(Debug, Clone, Copy)]
struct Readings {
    rpm: f64,
    angle: f64,
    track_pos: f64,
    speed_x: f64,
}

impl Readings {
    fn of(cs: &CarState) -> Self {
        Readings {
            rpm: cs.rpm,
            angle: cs.angle,
            track_pos: cs.track_pos,
            speed_x: cs.speed_x,
        }
    }
}

/// Gear with one step of memory: the previous gear starts at 0.
fn gearbox() -> impl SignalFunction<f64, i32> + Clone + Send {
    feedback(
        0,
        lift_pure(|(rpm, old_gear): (f64, i32)| {
            let g = shifting(rpm, old_gear);
            (g, g)
        }),
    )
}

/// Solo driver: gear from `shifting` fed back through a unit delay, steering
/// from heading error and offset, throttle from `gas`. Everything else keeps
/// its default.
pub fn my_driver() -> Driver {
    let gear = lift_pure(|r: Readings| r.rpm).then(gearbox());
    let steer_and_gas = fanout(
        identity(),
        lift_pure(|r: Readings| steering(r.angle, r.track_pos)),
    )
    .then(lift_pure(|(r, s): (Readings, f64)| (s, gas(r.speed_x, s))));
    lift_pure(|cs: CarState| Readings::of(&cs))
        .then(fanout(gear, steer_and_gas))
        .then(lift_pure(|(g, (s, a)): (i32, (f64, f64))| DriveState {
            accel: a,
            gear: g,
            steer: s,
            ..DriveState::default()
        }))
        .boxed()
}

#[derive(Debug, Clone, Copy)]
struct PlatoonReadings {
    base: Readings,
    target: f64,
    forward: f64,
}

/// Platoon driver: steering and shifting as in [`my_driver`], throttle
/// against a target speed that rises by 10 km/h for any step in which a peer
/// asked for "faster", and a "faster" broadcast of its own whenever the
/// closest forward reading is under 3 m. The target is recomputed from
/// `base_target_speed` every step.
pub fn platoon_driver(base_target_speed: f64) -> Driver {
    let gear = lift_pure(|r: PlatoonReadings| r.base.rpm).then(gearbox());
    let steer = lift_pure(|r: PlatoonReadings| steering(r.base.angle, r.base.track_pos));
    let throttle = lift_pure(
        |r: PlatoonReadings| {
            if r.base.speed_x < r.target {
                1.0
            } else {
                0.0
            }
        },
    );
    let talk = lift_pure(|r: PlatoonReadings| request(r.forward));
    lift_pure(move |cs: CarState| PlatoonReadings {
        base: Readings::of(&cs),
        target: adjust_speed(cs.communications.iter().map(|(_, m)| m), base_target_speed),
        forward: min_forward_range(&cs.track),
    })
    .then(fanout(fanout(gear, steer), fanout(throttle, talk)))
    .then(lift_pure(
        |((g, s), (a, msg)): ((i32, f64), (f64, Message))| DriveState {
            accel: a,
            gear: g,
            steer: s,
            broadcast: msg,
            ..DriveState::default()
        },
    ))
    .boxed()
}

/// Ignores its input and holds the default command with the given throttle.
pub fn constant_driver(accel: f64) -> Driver {
    crate::frp::constant(DriveState {
        accel,
        ..DriveState::default()
    })
    .boxed()
}
