//! Sensor and actuator records exchanged between a vehicle and its driver.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of rangefinder beams in the track sensor.
pub const RANGEFINDER_COUNT: usize = 19;
/// Maximum rangefinder reading, in meters.
pub const RANGEFINDER_MAX: f64 = 200.0;
/// Reading reported by every beam while the vehicle is off the track.
pub const RANGEFINDER_OFF_TRACK: f64 = -1.0;
pub const MESSAGE_MAX_LEN: usize = 256;
pub const MIN_GEAR: i32 = -1;
pub const MAX_GEAR: i32 = 6;

/// Dense vehicle index in `[0, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VehicleId(pub usize);

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MessageError {
    #[error("message is {0} bytes long, limit is {MESSAGE_MAX_LEN}")]
    TooLong(usize),
    #[error("byte {byte:#04x} at offset {offset} is not allowed in a message")]
    BadByte { offset: usize, byte: u8 },
}

/// Broadcast payload: printable ASCII without parentheses, at most 256 bytes.
/// The empty message means "nothing to say".
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Message(String);

impl Message {
    pub fn new(text: impl Into<String>) -> Result<Self, MessageError> {
        let text = text.into();
        if let Some((offset, &byte)) = text
            .as_bytes()
            .iter()
            .enumerate()
            .find(|(_, &b)| !Self::allowed(b))
        {
            return Err(MessageError::BadByte { offset, byte });
        }
        if text.len() > MESSAGE_MAX_LEN {
            return Err(MessageError::TooLong(text.len()));
        }
        Ok(Message(text))
    }

    pub fn empty() -> Self {
        Message(String::new())
    }

    /// Drops disallowed bytes and truncates to the length limit. The flag is
    /// set when anything was removed.
    pub fn sanitize(bytes: &[u8]) -> (Self, bool) {
        let kept: String = bytes
            .iter()
            .filter(|&&b| Self::allowed(b))
            .take(MESSAGE_MAX_LEN)
            .map(|&b| b as char)
            .collect();
        let changed = kept.len() != bytes.len();
        (Message(kept), changed)
    }

    pub fn allowed(byte: u8) -> bool {
        (0x20..=0x7e).contains(&byte) && byte != b'(' && byte != b')'
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for Message {
    type Error = MessageError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Message::new(value)
    }
}

impl TryFrom<&str> for Message {
    type Error = MessageError;

    fn try_from(value: &str) -> Result<Self, Self::Error> {
        Message::new(value)
    }
}

impl From<Message> for String {
    fn from(m: Message) -> String {
        m.0
    }
}

impl PartialEq<str> for Message {
    fn eq(&self, other: &str) -> bool {
        self.0 == other
    }
}

impl PartialEq<&str> for Message {
    fn eq(&self, other: &&str) -> bool {
        self.0 == *other
    }
}

/// One sensor sample for one vehicle.
///
/// `angle` is the track tangent direction minus the vehicle heading, wrapped
/// to `[-pi, pi]`. `track_pos` is positive left of the centerline.
/// `speed_x` and `speed_y` are in km/h.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarState {
    pub angle: f64,
    pub gear: i32,
    pub rpm: f64,
    pub speed_x: f64,
    pub speed_y: f64,
    pub track: [f64; RANGEFINDER_COUNT],
    pub track_pos: f64,
    pub dist_raced: f64,
    pub dist_from_start: f64,
    pub lap_time: f64,
    pub communications: Vec<(VehicleId, Message)>,
}

impl Default for CarState {
    fn default() -> Self {
        CarState {
            angle: 0.0,
            gear: 0,
            rpm: 0.0,
            speed_x: 0.0,
            speed_y: 0.0,
            track: [RANGEFINDER_MAX; RANGEFINDER_COUNT],
            track_pos: 0.0,
            dist_raced: 0.0,
            dist_from_start: 0.0,
            lap_time: 0.0,
            communications: Vec::new(),
        }
    }
}

impl CarState {
    /// Forces every field into its legal range. Returns whether anything
    /// changed.
    pub fn clamp_in_place(&mut self) -> bool {
        let mut changed = false;
        changed |= clamp_f64(&mut self.angle, -PI, PI);
        changed |= clamp_i32(&mut self.gear, MIN_GEAR, MAX_GEAR);
        changed |= clamp_f64(&mut self.rpm, 0.0, f64::MAX);
        for r in self.track.iter_mut() {
            if *r != RANGEFINDER_OFF_TRACK {
                changed |= clamp_f64(r, 0.0, RANGEFINDER_MAX);
            }
        }
        changed |= clamp_f64(&mut self.dist_raced, 0.0, f64::MAX);
        changed |= clamp_f64(&mut self.dist_from_start, 0.0, f64::MAX);
        changed |= clamp_f64(&mut self.lap_time, 0.0, f64::MAX);
        changed
    }

    pub fn is_valid(&self) -> bool {
        !self.clone().clamp_in_place()
            && [
                self.angle,
                self.rpm,
                self.speed_x,
                self.speed_y,
                self.track_pos,
                self.dist_raced,
                self.dist_from_start,
                self.lap_time,
            ]
            .iter()
            .chain(self.track.iter())
            .all(|v| v.is_finite())
    }

    pub fn is_off_track(&self) -> bool {
        self.track.iter().all(|&r| r == RANGEFINDER_OFF_TRACK)
    }
}

/// One actuator command. `steer` is positive to the left; `meta = 1` asks the
/// server for a restart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveState {
    pub accel: f64,
    pub brake: f64,
    pub gear: i32,
    pub steer: f64,
    pub clutch: f64,
    pub meta: i32,
    pub broadcast: Message,
}

impl Default for DriveState {
    /// Neutral pedals, first gear, wheel centered, nothing to broadcast.
    fn default() -> Self {
        DriveState {
            accel: 0.0,
            brake: 0.0,
            gear: 1,
            steer: 0.0,
            clutch: 0.0,
            meta: 0,
            broadcast: Message::empty(),
        }
    }
}

impl DriveState {
    /// Forces every field into its legal range. NaN pedals and steering
    /// become 0. Returns whether anything changed.
    pub fn clamp_in_place(&mut self) -> bool {
        let mut changed = false;
        changed |= clamp_f64(&mut self.accel, 0.0, 1.0);
        changed |= clamp_f64(&mut self.brake, 0.0, 1.0);
        changed |= clamp_i32(&mut self.gear, MIN_GEAR, MAX_GEAR);
        changed |= clamp_f64(&mut self.steer, -1.0, 1.0);
        changed |= clamp_f64(&mut self.clutch, 0.0, 1.0);
        changed |= clamp_i32(&mut self.meta, 0, 1);
        changed
    }

    pub fn clamped(mut self) -> Self {
        self.clamp_in_place();
        self
    }

    pub fn is_valid(&self) -> bool {
        !self.clone().clamp_in_place()
    }
}

fn clamp_f64(v: &mut f64, lo: f64, hi: f64) -> bool {
    let c = if v.is_nan() {
        0.0_f64.clamp(lo, hi)
    } else {
        v.clamp(lo, hi)
    };
    let changed = c.to_bits() != v.to_bits();
    *v = c;
    changed
}

fn clamp_i32(v: &mut i32, lo: i32, hi: i32) -> bool {
    let c = (*v).clamp(lo, hi);
    let changed = c != *v;
    *v = c;
    changed
}
