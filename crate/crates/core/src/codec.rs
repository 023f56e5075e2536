//! SCRC-style text codec.
//!
//! Messages are runs of `(name v1 v2 ...)` groups. Sensor messages carry
//! `angle gear rpm speedX speedY track trackPos distRaced distFromStart
//! lapTime comms`; action messages carry `accel brake clutch gear steer meta
//! bcast`. Reals are written in the shortest decimal form that parses back to
//! the same `f64`, so one round trip is bit-exact.
//!
//! Two groups extend the stock protocol for inter-vehicle messages:
//!
//! * `(bcast <text>)`: the raw broadcast message, everything after the first
//!   space up to the closing parenthesis.
//! * `(comms <id>:<text> ...)`: messages received from peers, one
//!   space-separated token each. Inside a token `%` is written `%25` and a
//!   space `%20`.
//!
//! Parsing accepts groups in any order, ignores unknown group names, leaves
//! missing fields at their defaults, and clamps out-of-range values.

use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{
    CarState, DriveState, Message, VehicleId, MAX_GEAR, MIN_GEAR, RANGEFINDER_COUNT,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("malformed group at byte {offset}: {reason}")]
    MalformedGroup { offset: usize, reason: &'static str },
    #[error("group `{group}` at byte {offset} has {found} values, expected {expected}")]
    WrongArity {
        group: String,
        offset: usize,
        expected: usize,
        found: usize,
    },
}

impl CodecError {
    pub fn offset(&self) -> usize {
        match self {
            CodecError::MalformedGroup { offset, .. } | CodecError::WrongArity { offset, .. } => {
                *offset
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InitError {
    #[error("client id must not be empty")]
    EmptyClientId,
    #[error("client id may not contain parentheses or whitespace")]
    BadClientId,
    #[error("expected {RANGEFINDER_COUNT} rangefinder angles, got {0}")]
    BadAngleCount(usize),
    #[error("rangefinder angle {0} is outside [-90, 90] degrees")]
    BadAngleRange(f64),
}

/// A decoded value plus whether any field had to be clamped or sanitized.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub value: T,
    pub clamped: bool,
}

/// Server control datagrams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Identified,
    Shutdown,
    Restart,
    NotControl,
}

struct Group<'a> {
    offset: usize,
    name: &'a [u8],
    body: &'a [u8],
    body_offset: usize,
}

fn is_filler(b: u8) -> bool {
    b.is_ascii_whitespace() || b == 0
}

fn split_groups(bytes: &[u8]) -> Result<Vec<Group<'_>>, CodecError> {
    let mut groups = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if is_filler(bytes[i]) {
            i += 1;
            continue;
        }
        if bytes[i] != b'(' {
            return Err(CodecError::MalformedGroup {
                offset: i,
                reason: "expected `(`",
            });
        }
        let start = i;
        let mut end = None;
        for (j, &b) in bytes.iter().enumerate().skip(start + 1) {
            match b {
                b')' => {
                    end = Some(j);
                    break;
                }
                b'(' => {
                    return Err(CodecError::MalformedGroup {
                        offset: j,
                        reason: "nested `(`",
                    })
                }
                _ => {}
            }
        }
        let end = end.ok_or(CodecError::MalformedGroup {
            offset: start,
            reason: "unterminated group",
        })?;
        let inner = &bytes[start + 1..end];
        let (name, body, body_offset) = match inner.iter().position(|&b| b == b' ') {
            Some(sp) => (&inner[..sp], &inner[sp + 1..], start + 2 + sp),
            None => (inner, &inner[inner.len()..], end),
        };
        if name.is_empty() {
            return Err(CodecError::MalformedGroup {
                offset: start + 1,
                reason: "missing group name",
            });
        }
        groups.push(Group {
            offset: start,
            name,
            body,
            body_offset,
        });
        i = end + 1;
    }
    Ok(groups)
}

impl Group<'_> {
    fn tokens(&self) -> impl Iterator<Item = (usize, &[u8])> + '_ {
        let body = self.body;
        let base = self.body_offset;
        let mut i = 0;
        std::iter::from_fn(move || {
            while i < body.len() && body[i].is_ascii_whitespace() {
                i += 1;
            }
            if i >= body.len() {
                return None;
            }
            let start = i;
            while i < body.len() && !body[i].is_ascii_whitespace() {
                i += 1;
            }
            Some((base + start, &body[start..i]))
        })
    }

    fn numbers(&self) -> Result<Vec<f64>, CodecError> {
        self.tokens()
            .map(|(offset, tok)| {
                parse_real(tok).ok_or(CodecError::MalformedGroup {
                    offset,
                    reason: "not a finite number",
                })
            })
            .collect()
    }

    fn numbers_exact(&self, expected: usize) -> Result<Vec<f64>, CodecError> {
        let values = self.numbers()?;
        if values.len() != expected {
            return Err(CodecError::WrongArity {
                group: String::from_utf8_lossy(self.name).into_owned(),
                offset: self.offset,
                expected,
                found: values.len(),
            });
        }
        Ok(values)
    }

    fn scalar(&self) -> Result<f64, CodecError> {
        Ok(self.numbers_exact(1)?[0])
    }
}

fn parse_real(tok: &[u8]) -> Option<f64> {
    let s = std::str::from_utf8(tok).ok()?;
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Integer fields are read as reals; fractional values round to nearest and
/// count as a clamp.
fn to_int(v: f64, lo: i32, hi: i32, clamped: &mut bool) -> i32 {
    let r = v.round();
    if r != v {
        *clamped = true;
    }
    let c = r.clamp(lo as f64, hi as f64);
    if c != r {
        *clamped = true;
    }
    c as i32
}

fn escape_comm(m: &Message, out: &mut String) {
    for ch in m.as_str().chars() {
        match ch {
            '%' => out.push_str("%25"),
            ' ' => out.push_str("%20"),
            c => out.push(c),
        }
    }
}

fn unescape_comm(tok: &[u8], offset: usize) -> Result<Vec<u8>, CodecError> {
    let mut out = Vec::with_capacity(tok.len());
    let mut i = 0;
    while i < tok.len() {
        if tok[i] == b'%' {
            match tok.get(i + 1..i + 3) {
                Some(b"20") => out.push(b' '),
                Some(b"25") => out.push(b'%'),
                _ => {
                    return Err(CodecError::MalformedGroup {
                        offset: offset + i,
                        reason: "bad escape in comms entry",
                    })
                }
            }
            i += 3;
        } else {
            out.push(tok[i]);
            i += 1;
        }
    }
    Ok(out)
}

fn push_real(out: &mut String, name: &str, v: f64) {
    let _ = write!(out, "({name} {v})");
}

pub fn serialize_sensors(cs: &CarState) -> String {
    let mut out = String::with_capacity(256);
    push_real(&mut out, "angle", cs.angle);
    let _ = write!(out, "(gear {})", cs.gear);
    push_real(&mut out, "rpm", cs.rpm);
    push_real(&mut out, "speedX", cs.speed_x);
    push_real(&mut out, "speedY", cs.speed_y);
    out.push_str("(track");
    for r in &cs.track {
        let _ = write!(out, " {r}");
    }
    out.push(')');
    push_real(&mut out, "trackPos", cs.track_pos);
    push_real(&mut out, "distRaced", cs.dist_raced);
    push_real(&mut out, "distFromStart", cs.dist_from_start);
    push_real(&mut out, "lapTime", cs.lap_time);
    out.push_str("(comms ");
    for (k, (id, msg)) in cs.communications.iter().enumerate() {
        if k > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{}:", id.0);
        escape_comm(msg, &mut out);
    }
    out.push(')');
    out
}

pub fn parse_sensors(bytes: impl AsRef<[u8]>) -> Result<Parsed<CarState>, CodecError> {
    let bytes = bytes.as_ref();
    let mut cs = CarState::default();
    let mut clamped = false;
    for g in split_groups(bytes)? {
        match g.name {
            b"angle" => cs.angle = g.scalar()?,
            b"gear" => cs.gear = to_int(g.scalar()?, MIN_GEAR, MAX_GEAR, &mut clamped),
            b"rpm" => cs.rpm = g.scalar()?,
            b"speedX" => cs.speed_x = g.scalar()?,
            b"speedY" => cs.speed_y = g.scalar()?,
            b"track" => {
                let values = g.numbers_exact(RANGEFINDER_COUNT)?;
                cs.track.copy_from_slice(&values);
            }
            b"trackPos" => cs.track_pos = g.scalar()?,
            b"distRaced" => cs.dist_raced = g.scalar()?,
            b"distFromStart" => cs.dist_from_start = g.scalar()?,
            b"lapTime" => cs.lap_time = g.scalar()?,
            b"comms" => {
                let mut comms = Vec::new();
                for (offset, tok) in g.tokens() {
                    let colon =
                        tok.iter()
                            .position(|&b| b == b':')
                            .ok_or(CodecError::MalformedGroup {
                                offset,
                                reason: "comms entry without `:`",
                            })?;
                    let id = std::str::from_utf8(&tok[..colon])
                        .ok()
                        .and_then(|s| s.parse::<usize>().ok())
                        .ok_or(CodecError::MalformedGroup {
                            offset,
                            reason: "comms entry with a bad vehicle id",
                        })?;
                    let raw = unescape_comm(&tok[colon + 1..], offset + colon + 1)?;
                    let (msg, changed) = Message::sanitize(&raw);
                    clamped |= changed;
                    comms.push((VehicleId(id), msg));
                }
                cs.communications = comms;
            }
            _ => {}
        }
    }
    clamped |= cs.clamp_in_place();
    Ok(Parsed { value: cs, clamped })
}

pub fn serialize_actions(ds: &DriveState) -> String {
    let mut out = String::with_capacity(96);
    push_real(&mut out, "accel", ds.accel);
    push_real(&mut out, "brake", ds.brake);
    push_real(&mut out, "clutch", ds.clutch);
    let _ = write!(out, "(gear {})", ds.gear);
    push_real(&mut out, "steer", ds.steer);
    let _ = write!(out, "(meta {})", ds.meta);
    let _ = write!(out, "(bcast {})", ds.broadcast);
    out
}

pub fn parse_actions(bytes: impl AsRef<[u8]>) -> Result<Parsed<DriveState>, CodecError> {
    let bytes = bytes.as_ref();
    let mut ds = DriveState::default();
    let mut clamped = false;
    for g in split_groups(bytes)? {
        match g.name {
            b"accel" => ds.accel = g.scalar()?,
            b"brake" => ds.brake = g.scalar()?,
            b"clutch" => ds.clutch = g.scalar()?,
            b"gear" => ds.gear = to_int(g.scalar()?, MIN_GEAR, MAX_GEAR, &mut clamped),
            b"steer" => ds.steer = g.scalar()?,
            b"meta" => ds.meta = to_int(g.scalar()?, 0, 1, &mut clamped),
            b"bcast" => {
                let (msg, changed) = Message::sanitize(g.body);
                clamped |= changed;
                ds.broadcast = msg;
            }
            _ => {}
        }
    }
    clamped |= ds.clamp_in_place();
    Ok(Parsed { value: ds, clamped })
}

/// True when the first group of `bytes` names an action field.
pub fn looks_like_actions(bytes: &[u8]) -> bool {
    match split_groups(bytes) {
        Ok(groups) => groups.first().is_some_and(|g| {
            matches!(
                g.name,
                b"accel" | b"brake" | b"clutch" | b"steer" | b"meta" | b"bcast"
            )
        }),
        Err(_) => false,
    }
}

/// Default beam layout: -90 to 90 degrees in 10 degree steps.
pub fn default_rangefinder_angles() -> [f64; RANGEFINDER_COUNT] {
    std::array::from_fn(|i| -90.0 + 10.0 * i as f64)
}

/// Handshake datagram announcing the client and its rangefinder layout,
/// e.g. `SCR(init -90 -80 ... 90)`.
pub fn init_message(client_id: &str, angles_deg: &[f64]) -> Result<String, InitError> {
    if client_id.is_empty() {
        return Err(InitError::EmptyClientId);
    }
    if client_id
        .bytes()
        .any(|b| b == b'(' || b == b')' || !b.is_ascii_graphic())
    {
        return Err(InitError::BadClientId);
    }
    if angles_deg.len() != RANGEFINDER_COUNT {
        return Err(InitError::BadAngleCount(angles_deg.len()));
    }
    if let Some(&bad) = angles_deg.iter().find(|a| !(-90.0..=90.0).contains(*a)) {
        return Err(InitError::BadAngleRange(bad));
    }
    let mut out = format!("{client_id}(init");
    for a in angles_deg {
        let _ = write!(out, " {a}");
    }
    out.push(')');
    Ok(out)
}

/// Splits an init datagram back into its client id and angles.
pub fn parse_init(bytes: &[u8]) -> Option<(String, Vec<f64>)> {
    let open = bytes.iter().position(|&b| b == b'(')?;
    let id = std::str::from_utf8(&bytes[..open]).ok()?.to_string();
    let groups = split_groups(&bytes[open..]).ok()?;
    let g = groups.first().filter(|g| g.name == b"init")?;
    Some((id, g.numbers().ok()?))
}

pub fn parse_control(bytes: impl AsRef<[u8]>) -> Control {
    let bytes = bytes.as_ref();
    let start = bytes
        .iter()
        .position(|&b| !is_filler(b))
        .unwrap_or(bytes.len());
    let end = bytes
        .iter()
        .rposition(|&b| !is_filler(b))
        .map_or(start, |e| e + 1);
    match &bytes[start..end] {
        b"***identified***" => Control::Identified,
        b"***shutdown***" => Control::Shutdown,
        b"***restart***" => Control::Restart,
        _ => Control::NotControl,
    }
}
