#![allow(dead_code)]

use proptest::prelude::*;
use reactive_platoon::frp::{SampleStream, TimeDelta};

/// A small family of pure integer maps, so laws can be checked over
/// randomly chosen functions rather than a fixed handful.
#[derive(Debug, Clone, Copy)]
pub enum Op {
    Add(i64),
    Mul(i64),
    Xor(i64),
    Neg,
    Shr(u32),
}

impl Op {
    pub fn apply(self, x: i64) -> i64 {
        match self {
            Op::Add(k) => x.wrapping_add(k),
            Op::Mul(k) => x.wrapping_mul(k),
            Op::Xor(k) => x ^ k,
            Op::Neg => x.wrapping_neg(),
            Op::Shr(k) => x >> k,
        }
    }
}

pub fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        any::<i64>().prop_map(Op::Add),
        any::<i64>().prop_map(Op::Mul),
        any::<i64>().prop_map(Op::Xor),
        Just(Op::Neg),
        (0u32..63).prop_map(Op::Shr),
    ]
}

pub fn dt_value() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.02), 1e-4..1.0f64]
}

pub fn stream(max_len: usize) -> impl Strategy<Value = SampleStream<i64>> {
    prop::collection::vec((dt_value(), any::<i64>()), 0..=max_len).prop_map(|pairs| {
        pairs
            .into_iter()
            .map(|(dt, x)| (TimeDelta::new(dt).unwrap(), x))
            .collect()
    })
}

use rand::Rng;
use reactive_platoon::model::{
    CarState, DriveState, Message, VehicleId, MAX_GEAR, MESSAGE_MAX_LEN, MIN_GEAR,
    RANGEFINDER_COUNT, RANGEFINDER_MAX,
};

/// Reals spread over many magnitudes, including exact zeros and awkward
/// binary fractions, to stress the text form.
pub fn real<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    match rng.gen_range(0..6) {
        0 => 0.0,
        1 => rng.gen_range(lo..=hi) * 1e-200,
        2 => (rng.gen_range(lo..=hi) * 1000.0).round() / 1000.0,
        3 => lo,
        _ => rng.gen_range(lo..=hi),
    }
}

pub fn message<R: Rng>(rng: &mut R) -> Message {
    if rng.gen_bool(0.3) {
        return Message::empty();
    }
    let len = rng.gen_range(1..=MESSAGE_MAX_LEN);
    let text: String = (0..len)
        .map(|_| loop {
            let b = rng.gen_range(0x20u8..0x7f);
            if Message::allowed(b) {
                break b as char;
            }
        })
        .collect();
    Message::new(text).unwrap()
}

pub fn car_state<R: Rng>(rng: &mut R) -> CarState {
    let off_track = rng.gen_bool(0.05);
    let track: [f64; RANGEFINDER_COUNT] = std::array::from_fn(|_| {
        if off_track {
            -1.0
        } else {
            real(rng, 0.0, RANGEFINDER_MAX)
        }
    });
    let peers = rng.gen_range(0..4);
    CarState {
        angle: real(rng, -std::f64::consts::PI, std::f64::consts::PI),
        gear: rng.gen_range(MIN_GEAR..=MAX_GEAR),
        rpm: real(rng, 0.0, 12_000.0),
        speed_x: real(rng, -50.0, 350.0),
        speed_y: real(rng, -50.0, 50.0),
        track,
        track_pos: real(rng, -3.0, 3.0),
        dist_raced: real(rng, 0.0, 1e6),
        dist_from_start: real(rng, 0.0, 5e3),
        lap_time: real(rng, 0.0, 1e4),
        communications: (0..peers)
            .map(|_| (VehicleId(rng.gen_range(0..16)), message(rng)))
            .collect(),
    }
}

pub fn drive_state<R: Rng>(rng: &mut R) -> DriveState {
    DriveState {
        accel: real(rng, 0.0, 1.0),
        brake: real(rng, 0.0, 1.0),
        gear: rng.gen_range(MIN_GEAR..=MAX_GEAR),
        steer: real(rng, -1.0, 1.0),
        clutch: real(rng, 0.0, 1.0),
        meta: rng.gen_range(0..=1),
        broadcast: message(rng),
    }
}

/// Arbitrary bytes biased towards things that look like messages.
pub fn fuzz_bytes<R: Rng>(rng: &mut R) -> Vec<u8> {
    const ALPHABET: &[u8] = b"()  -.0123456789eE+:%20angletrackspeedXcommsbcastgearinfNaN\0";
    let len = rng.gen_range(0..300);
    match rng.gen_range(0..3) {
        0 => (0..len).map(|_| rng.gen()).collect(),
        1 => (0..len)
            .map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())])
            .collect(),
        _ => {
            let mut text = if rng.gen() {
                reactive_platoon::codec::serialize_sensors(&car_state(rng)).into_bytes()
            } else {
                reactive_platoon::codec::serialize_actions(&drive_state(rng)).into_bytes()
            };
            for _ in 0..rng.gen_range(1..6) {
                if text.is_empty() {
                    break;
                }
                let i = rng.gen_range(0..text.len());
                match rng.gen_range(0..3) {
                    0 => text[i] = rng.gen(),
                    1 => {
                        text.remove(i);
                    }
                    _ => text.insert(i, ALPHABET[rng.gen_range(0..ALPHABET.len())]),
                }
            }
            text
        }
    }
}

/// my_driver written as a plain loop with the gear threaded by hand.
pub struct ReferenceDriver {
    old_gear: i32,
}

impl ReferenceDriver {
    pub fn new() -> Self {
        ReferenceDriver { old_gear: 0 }
    }

    pub fn step(&mut self, cs: &CarState) -> DriveState {
        use reactive_platoon::controllers::{gas, shifting, steering};
        let g = shifting(cs.rpm, self.old_gear);
        self.old_gear = g;
        let s = steering(cs.angle, cs.track_pos);
        DriveState {
            accel: gas(cs.speed_x, s),
            gear: g,
            steer: s,
            ..DriveState::default()
        }
    }
}
