use std::f64::consts::PI;

use thiserror::Error;

use super::track::{Point, Track};
use crate::frp::TimeDelta;
use crate::model::{CarState, DriveState, RANGEFINDER_COUNT, RANGEFINDER_OFF_TRACK};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamsError {
    #[error("vehicle parameter `{0}` must be positive and finite")]
    NotPositive(&'static str),
    #[error("gear ratios must be strictly decreasing")]
    RatiosNotDecreasing,
}

/// Kinematic bicycle parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleParams {
    pub wheelbase: f64,
    pub max_accel: f64,
    pub max_brake: f64,
    /// Deceleration per squared speed, 1/m.
    pub drag_coeff: f64,
    pub max_steer_angle: f64,
    /// Engine rpm per m/s of road speed, for gears 1 to 6.
    pub gear_ratio_rpm_per_mps: [f64; 6],
    pub idle_rpm: f64,
    pub max_rpm: f64,
    /// Radius of the disc other vehicles' rangefinders see, meters.
    pub body_radius: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams {
            wheelbase: 2.6,
            max_accel: 6.0,
            max_brake: 10.0,
            drag_coeff: 0.0006,
            max_steer_angle: 0.43,
            gear_ratio_rpm_per_mps: [420.0, 260.0, 190.0, 150.0, 125.0, 105.0],
            idle_rpm: 900.0,
            max_rpm: 8000.0,
            body_radius: 1.0,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<(), ParamsError> {
        let named = [
            ("wheelbase", self.wheelbase),
            ("max_accel", self.max_accel),
            ("max_brake", self.max_brake),
            ("drag_coeff", self.drag_coeff),
            ("max_steer_angle", self.max_steer_angle),
            ("idle_rpm", self.idle_rpm),
            ("max_rpm", self.max_rpm),
            ("body_radius", self.body_radius),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v > 0.0) {
                return Err(ParamsError::NotPositive(name));
            }
        }
        let r = &self.gear_ratio_rpm_per_mps;
        if r.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(ParamsError::NotPositive("gear_ratio_rpm_per_mps"));
        }
        if r.windows(2).any(|w| w[1] >= w[0]) {
            return Err(ParamsError::RatiosNotDecreasing);
        }
        Ok(())
    }

    /// Engine speed for a road speed in m/s and a forward gear.
    pub fn rpm_of(&self, speed: f64, gear: i32) -> f64 {
        let g = gear.clamp(1, 6) as usize;
        (self.gear_ratio_rpm_per_mps[g - 1] * speed).clamp(self.idle_rpm, self.max_rpm)
    }
}

/// Simulator-side state of one vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub position: Point,
    /// Radians, counter-clockwise from +x.
    pub heading: f64,
    /// Road speed, m/s.
    pub speed: f64,
    pub gear: i32,
    pub rpm: f64,
    /// Arc length of the nearest centerline point.
    pub s_arc: f64,
    pub track_pos: f64,
    pub lap_count: u32,
    pub dist_raced: f64,
    /// Time since the last start-line crossing, seconds.
    pub lap_time: f64,
}

impl VehicleState {
    /// At rest on the centerline at arc length `s`, facing along the track.
    pub fn on_track(track: &Track, s: f64, params: &VehicleParams) -> Self {
        let s = s.rem_euclid(track.length());
        let position = track.point_at(s);
        let (s_arc, track_pos) = track.progress(position);
        VehicleState {
            position,
            heading: track.heading_at(s),
            speed: 0.0,
            gear: 1,
            rpm: params.rpm_of(0.0, 1),
            s_arc,
            track_pos,
            lap_count: 0,
            dist_raced: 0.0,
            lap_time: 0.0,
        }
    }
}

/// Explicit Euler step of the kinematic bicycle model. Heading is updated
/// first, then position moves along the new heading, then speed integrates
/// the pedal and drag accelerations and is floored at zero.
pub fn step_vehicle(
    v: &VehicleState,
    cmd: &DriveState,
    p: &VehicleParams,
    dt: TimeDelta,
) -> VehicleState {
    let dt = dt.seconds();
    let steer_angle = cmd.steer.clamp(-1.0, 1.0) * p.max_steer_angle;
    let heading = v.heading + (v.speed / p.wheelbase) * steer_angle.tan() * dt;
    let position = v
        .position
        .add(Point::from_angle(heading).scale(v.speed * dt));
    let accel = cmd.accel.clamp(0.0, 1.0) * p.max_accel
        - cmd.brake.clamp(0.0, 1.0) * p.max_brake
        - p.drag_coeff * v.speed * v.speed;
    let speed = (v.speed + accel * dt).max(0.0);
    let gear = cmd.gear.clamp(1, 6);
    VehicleState {
        position,
        heading,
        speed,
        gear,
        rpm: p.rpm_of(speed, gear),
        dist_raced: v.dist_raced + v.speed * dt,
        lap_time: v.lap_time + dt,
        ..v.clone()
    }
}

/// Refreshes `s_arc` and `track_pos` after a move and counts start-line
/// crossings. A forward wrap of the arc length adds a lap; a backward wrap
/// takes one away.
pub fn update_progress(track: &Track, v: &mut VehicleState) {
    let (s, pos) = track.progress(v.position);
    let half = track.length() / 2.0;
    if s < v.s_arc - half {
        v.lap_count += 1;
        v.lap_time = 0.0;
    } else if s > v.s_arc + half {
        v.lap_count = v.lap_count.saturating_sub(1);
    }
    v.s_arc = s;
    v.track_pos = pos;
}

/// Beam bearings in radians, measured clockwise from the vehicle axis
/// (positive = to the right), -90 to 90 degrees in 10 degree steps.
pub fn beam_bearings() -> [f64; RANGEFINDER_COUNT] {
    std::array::from_fn(|i| (-90.0 + 10.0 * i as f64).to_radians())
}

pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// Distance along the ray to the nearest disc, for discs that do not
/// contain the origin.
fn ray_disc(origin: Point, dir: Point, center: Point, radius: f64) -> Option<f64> {
    let oc = center.sub(origin);
    let c = oc.dot(oc) - radius * radius;
    if c <= 0.0 {
        return None;
    }
    let b = oc.dot(dir);
    let disc = b * b - c;
    if b <= 0.0 || disc < 0.0 {
        return None;
    }
    Some(b - disc.sqrt())
}

/// Synthesizes the sensor sample for `v`. `obstacles` are other vehicles as
/// `(center, radius)` discs that block rangefinder beams.
pub fn sense(track: &Track, v: &VehicleState, obstacles: &[(Point, f64)]) -> CarState {
    let off_track = v.track_pos.abs() > 1.0;
    let track_readings = if off_track {
        [RANGEFINDER_OFF_TRACK; RANGEFINDER_COUNT]
    } else {
        beam_bearings().map(|b| {
            let world = v.heading - b;
            let dir = Point::from_angle(world);
            let edge = track.rangefinder(v.position, world);
            obstacles
                .iter()
                .filter_map(|&(c, r)| ray_disc(v.position, dir, c, r))
                .fold(edge, f64::min)
        })
    };
    CarState {
        angle: wrap_angle(track.heading_at(v.s_arc) - v.heading),
        gear: v.gear,
        rpm: v.rpm,
        speed_x: v.speed * 3.6,
        speed_y: 0.0,
        track: track_readings,
        track_pos: v.track_pos,
        dist_raced: v.dist_raced,
        dist_from_start: v.s_arc,
        lap_time: v.lap_time,
        communications: Vec::new(),
    }
}
