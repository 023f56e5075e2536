//! C interface to the reactive-platoon library.
//!
//! Every fallible function returns an [`RpStatus`]; on failure a description
//! is available from [`rp_last_error`] on the same thread. Objects are opaque
//! handles created by `rp_*_new` and released by the matching `rp_*_free`.
//! Strings returned through `char **` out-parameters are owned by the caller
//! and must be released with [`rp_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use reactive_platoon::bus::{Broadcast, PlatoonBus};
use reactive_platoon::codec;
use reactive_platoon::controllers;
use reactive_platoon::frp::TimeDelta;
use reactive_platoon::harness::{configured_drivers, DriverKind, SimConfig, Simulation};
use reactive_platoon::model::{
    CarState, DriveState, Message, VehicleId, MESSAGE_MAX_LEN, RANGEFINDER_COUNT,
};

/// Size of the broadcast buffer in [`RpDriveState`], including the NUL.
pub const RP_BROADCAST_CAPACITY: usize = 257;
pub const RP_RANGEFINDER_COUNT: usize = 19;

const _: () = assert!(RP_BROADCAST_CAPACITY == MESSAGE_MAX_LEN + 1);
const _: () = assert!(RP_RANGEFINDER_COUNT == RANGEFINDER_COUNT);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    UnknownVehicle = 4,
    Io = 5,
    Panic = 6,
}

/// Sensor sample without the received messages.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RpCarState {
    pub angle: f64,
    pub gear: i32,
    pub rpm: f64,
    pub speed_x: f64,
    pub speed_y: f64,
    pub track: [f64; RP_RANGEFINDER_COUNT],
    pub track_pos: f64,
    pub dist_raced: f64,
    pub dist_from_start: f64,
    pub lap_time: f64,
}

/// Actuator command. `broadcast` is a NUL-terminated string.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RpDriveState {
    pub accel: f64,
    pub brake: f64,
    pub gear: i32,
    pub steer: f64,
    pub clutch: f64,
    pub meta: i32,
    pub broadcast: [c_char; RP_BROADCAST_CAPACITY],
}

/// Simulator-side pose and progress of one vehicle.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RpPose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    /// m/s
    pub speed: f64,
    pub track_pos: f64,
    pub lap_count: u32,
}

pub struct RpDriver {
    inner: reactive_platoon::Driver,
}

pub struct RpBus {
    inner: PlatoonBus,
}

pub struct RpSim {
    inner: Simulation,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(RpStatus, String);

impl Failure {
    fn new(status: RpStatus, msg: impl Into<String>) -> Self {
        Failure(status, msg.into())
    }
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RpStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            RpStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::new(RpStatus::NullPointer, format!("{what} is null")))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure::new(RpStatus::NullPointer, format!("{what} is null")))
}

unsafe fn c_bytes<'a>(p: *const c_char, what: &str) -> Result<&'a [u8], Failure> {
    if p.is_null() {
        return Err(Failure::new(
            RpStatus::NullPointer,
            format!("{what} is null"),
        ));
    }
    Ok(CStr::from_ptr(p).to_bytes())
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    std::str::from_utf8(c_bytes(p, what)?)
        .map_err(|_| Failure::new(RpStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn message(bytes: &[u8]) -> Result<Message, Failure> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| Failure::new(RpStatus::InvalidArgument, "message is not ASCII"))?;
    Message::new(text).map_err(|e| Failure::new(RpStatus::InvalidArgument, e.to_string()))
}

unsafe fn give_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let out = deref_mut(out, "out")?;
    let c = CString::new(s).map_err(|_| Failure::new(RpStatus::Panic, "interior NUL"))?;
    *out = c.into_raw();
    Ok(())
}

fn dt_of(seconds: f64) -> Result<TimeDelta, Failure> {
    TimeDelta::new(seconds).map_err(|e| Failure::new(RpStatus::InvalidArgument, e.to_string()))
}

impl From<&CarState> for RpCarState {
    fn from(cs: &CarState) -> Self {
        RpCarState {
            angle: cs.angle,
            gear: cs.gear,
            rpm: cs.rpm,
            speed_x: cs.speed_x,
            speed_y: cs.speed_y,
            track: cs.track,
            track_pos: cs.track_pos,
            dist_raced: cs.dist_raced,
            dist_from_start: cs.dist_from_start,
            lap_time: cs.lap_time,
        }
    }
}

impl RpCarState {
    fn to_model(self) -> CarState {
        CarState {
            angle: self.angle,
            gear: self.gear,
            rpm: self.rpm,
            speed_x: self.speed_x,
            speed_y: self.speed_y,
            track: self.track,
            track_pos: self.track_pos,
            dist_raced: self.dist_raced,
            dist_from_start: self.dist_from_start,
            lap_time: self.lap_time,
            communications: Vec::new(),
        }
    }
}

impl From<&DriveState> for RpDriveState {
    fn from(ds: &DriveState) -> Self {
        let mut broadcast = [0 as c_char; RP_BROADCAST_CAPACITY];
        for (slot, b) in broadcast.iter_mut().zip(ds.broadcast.as_str().bytes()) {
            *slot = b as c_char;
        }
        RpDriveState {
            accel: ds.accel,
            brake: ds.brake,
            gear: ds.gear,
            steer: ds.steer,
            clutch: ds.clutch,
            meta: ds.meta,
            broadcast,
        }
    }
}

impl RpDriveState {
    fn to_model(self) -> Result<DriveState, Failure> {
        let len = self.broadcast.iter().position(|&c| c == 0).ok_or_else(|| {
            Failure::new(RpStatus::InvalidArgument, "broadcast is not terminated")
        })?;
        let bytes: Vec<u8> = self.broadcast[..len].iter().map(|&c| c as u8).collect();
        Ok(DriveState {
            accel: self.accel,
            brake: self.brake,
            gear: self.gear,
            steer: self.steer,
            clutch: self.clutch,
            meta: self.meta,
            broadcast: message(&bytes)?,
        })
    }
}

/// Description of the last failure on this thread, or an empty string. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a pointer obtained from this library that has not
/// been freed yet.
#[no_mangle]
pub unsafe extern "C" fn rp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `out` must be null or point to writable memory for one `RpCarState`.
#[no_mangle]
pub unsafe extern "C" fn rp_car_state_default(out: *mut RpCarState) -> RpStatus {
    guard(|| {
        *deref_mut(out, "out")? = RpCarState::from(&CarState::default());
        Ok(())
    })
}

/// # Safety
/// `out` must be null or point to writable memory for one `RpDriveState`.
#[no_mangle]
pub unsafe extern "C" fn rp_drive_state_default(out: *mut RpDriveState) -> RpStatus {
    guard(|| {
        *deref_mut(out, "out")? = RpDriveState::from(&DriveState::default());
        Ok(())
    })
}

/// Parses a sensor datagram. Received messages are not represented in
/// `RpCarState` and are dropped. `clamped` may be null.
///
/// # Safety
/// `text` must be null or NUL-terminated; `out` and `clamped` must be null or
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rp_parse_sensors(
    text: *const c_char,
    out: *mut RpCarState,
    clamped: *mut bool,
) -> RpStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let parsed = codec::parse_sensors(c_bytes(text, "text")?)
            .map_err(|e| Failure::new(RpStatus::Parse, e.to_string()))?;
        *out = RpCarState::from(&parsed.value);
        if let Some(c) = clamped.as_mut() {
            *c = parsed.clamped;
        }
        Ok(())
    })
}

/// # Safety
/// `cs` must be null or valid for reads; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rp_serialize_sensors(
    cs: *const RpCarState,
    out: *mut *mut c_char,
) -> RpStatus {
    guard(|| {
        let cs = deref(cs, "car state")?;
        give_string(out, codec::serialize_sensors(&cs.to_model()))
    })
}

/// Parses an action datagram. `clamped` may be null.
///
/// # Safety
/// `text` must be null or NUL-terminated; `out` and `clamped` must be null or
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rp_parse_actions(
    text: *const c_char,
    out: *mut RpDriveState,
    clamped: *mut bool,
) -> RpStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let parsed = codec::parse_actions(c_bytes(text, "text")?)
            .map_err(|e| Failure::new(RpStatus::Parse, e.to_string()))?;
        *out = RpDriveState::from(&parsed.value);
        if let Some(c) = clamped.as_mut() {
            *c = parsed.clamped;
        }
        Ok(())
    })
}

/// # Safety
/// `ds` must be null or valid for reads; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rp_serialize_actions(
    ds: *const RpDriveState,
    out: *mut *mut c_char,
) -> RpStatus {
    guard(|| {
        let ds = deref(ds, "drive state")?.to_model()?;
        give_string(out, codec::serialize_actions(&ds))
    })
}

#[no_mangle]
pub extern "C" fn rp_shifting(rpm: f64, gear: i32) -> i32 {
    controllers::shifting(rpm, gear)
}

#[no_mangle]
pub extern "C" fn rp_steering(angle: f64, track_pos: f64) -> f64 {
    controllers::steering(angle, track_pos)
}

#[no_mangle]
pub extern "C" fn rp_gas(speed_x: f64, steer: f64) -> f64 {
    controllers::gas(speed_x, steer)
}

/// True when a vehicle this close to the one ahead asks it to speed up.
#[no_mangle]
pub extern "C" fn rp_request_faster(dist: f64) -> bool {
    !controllers::request(dist).is_empty()
}

/// Creates a driver by name: `my`, `platoon`, `platoon:<km/h>` or `parked`.
///
/// # Safety
/// `kind` must be null or NUL-terminated; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rp_driver_new(kind: *const c_char, out: *mut *mut RpDriver) -> RpStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let kind: DriverKind =
            c_str(kind, "kind")?
                .parse()
                .map_err(|e: reactive_platoon::harness::ConfigError| {
                    Failure::new(RpStatus::InvalidArgument, e.to_string())
                })?;
        *out = Box::into_raw(Box::new(RpDriver {
            inner: kind.build(),
        }));
        Ok(())
    })
}

/// Advances a driver by one sample. `senders` and `messages` are parallel
/// arrays of `count` received messages; both may be null when `count` is 0.
///
/// # Safety
/// Pointers must be null or valid for the described reads and writes; every
/// `messages[i]` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn rp_driver_step(
    driver: *mut RpDriver,
    dt: f64,
    cs: *const RpCarState,
    senders: *const usize,
    messages: *const *const c_char,
    count: usize,
    out: *mut RpDriveState,
) -> RpStatus {
    guard(|| {
        let driver = deref_mut(driver, "driver")?;
        let mut input = deref(cs, "car state")?.to_model();
        let out = deref_mut(out, "out")?;
        let dt = dt_of(dt)?;
        if count > 0 {
            if senders.is_null() || messages.is_null() {
                return Err(Failure::new(
                    RpStatus::NullPointer,
                    "message arrays are null",
                ));
            }
            let ids = std::slice::from_raw_parts(senders, count);
            let texts = std::slice::from_raw_parts(messages, count);
            for (&id, &text) in ids.iter().zip(texts) {
                let m = message(c_bytes(text, "message")?)?;
                input.communications.push((VehicleId(id), m));
            }
        }
        let cmd = driver.inner.step(dt, input).clamped();
        *out = RpDriveState::from(&cmd);
        Ok(())
    })
}

/// # Safety
/// `driver` must be null or a live handle from [`rp_driver_new`].
#[no_mangle]
pub unsafe extern "C" fn rp_driver_free(driver: *mut RpDriver) {
    if !driver.is_null() {
        drop(Box::from_raw(driver));
    }
}

/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rp_bus_new(vehicles: usize, out: *mut *mut RpBus) -> RpStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let inner = PlatoonBus::new(vehicles)
            .map_err(|e| Failure::new(RpStatus::InvalidArgument, e.to_string()))?;
        *out = Box::into_raw(Box::new(RpBus { inner }));
        Ok(())
    })
}

fn bus_failure(e: reactive_platoon::bus::BusError) -> Failure {
    Failure::new(RpStatus::UnknownVehicle, e.to_string())
}

/// Stages `text` as vehicle `id`'s message; peers see it after the next
/// [`rp_bus_advance`].
///
/// # Safety
/// `bus` must be null or a live handle; `text` null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn rp_bus_publish(
    bus: *mut RpBus,
    id: usize,
    text: *const c_char,
) -> RpStatus {
    guard(|| {
        let bus = deref(bus, "bus")?;
        let m = message(c_bytes(text, "text")?)?;
        bus.inner.publish(VehicleId(id), m).map_err(bus_failure)
    })
}

/// # Safety
/// `bus` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rp_bus_advance(bus: *mut RpBus) -> RpStatus {
    guard(|| {
        deref_mut(bus, "bus")?.inner.advance();
        Ok(())
    })
}

/// The message `reader` currently receives from `sender` (empty when the
/// sender was silent). Reading one's own channel is an error.
///
/// # Safety
/// `bus` must be null or a live handle; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rp_bus_receive(
    bus: *const RpBus,
    reader: usize,
    sender: usize,
    out: *mut *mut c_char,
) -> RpStatus {
    guard(|| {
        let bus = deref(bus, "bus")?;
        let snap = bus.inner.snapshot(VehicleId(reader)).map_err(bus_failure)?;
        let (_, m) = snap
            .into_iter()
            .find(|(id, _)| id.0 == sender)
            .ok_or_else(|| {
                Failure::new(
                    RpStatus::UnknownVehicle,
                    format!("vehicle {reader} has no channel from {sender}"),
                )
            })?;
        give_string(out, m.into())
    })
}

/// Counts of non-empty messages published and delivered so far. Either
/// pointer may be null.
///
/// # Safety
/// `bus` must be null or a live handle; the out pointers null or writable.
#[no_mangle]
pub unsafe extern "C" fn rp_bus_stats(
    bus: *const RpBus,
    published: *mut u64,
    delivered: *mut u64,
) -> RpStatus {
    guard(|| {
        let stats = deref(bus, "bus")?.inner.stats();
        if let Some(p) = published.as_mut() {
            *p = stats.published;
        }
        if let Some(d) = delivered.as_mut() {
            *d = stats.delivered;
        }
        Ok(())
    })
}

/// # Safety
/// `bus` must be null or a live handle from [`rp_bus_new`].
#[no_mangle]
pub unsafe extern "C" fn rp_bus_free(bus: *mut RpBus) {
    if !bus.is_null() {
        drop(Box::from_raw(bus));
    }
}

fn sim_from(cfg: SimConfig) -> Result<*mut RpSim, Failure> {
    let inner = Simulation::new(&cfg, configured_drivers(&cfg))
        .map_err(|e| Failure::new(RpStatus::InvalidArgument, e.to_string()))?;
    Ok(Box::into_raw(Box::new(RpSim { inner })))
}

/// Default oval and settings with the given comma-separated drivers.
///
/// # Safety
/// `drivers` must be null or NUL-terminated; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rp_sim_new(drivers: *const c_char, out: *mut *mut RpSim) -> RpStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let kinds = c_str(drivers, "drivers")?
            .split(',')
            .map(|s| s.trim().parse::<DriverKind>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Failure::new(RpStatus::InvalidArgument, e.to_string()))?;
        *out = sim_from(SimConfig::default().with_drivers(&kinds))?;
        Ok(())
    })
}

/// Simulation from a key-value config file.
///
/// # Safety
/// `path` must be null or NUL-terminated; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rp_sim_from_config(path: *const c_char, out: *mut *mut RpSim) -> RpStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let path = Path::new(c_str(path, "path")?);
        let cfg = SimConfig::load(path).map_err(|e| {
            let status = if matches!(e, reactive_platoon::harness::ConfigError::Io { .. }) {
                RpStatus::Io
            } else {
                RpStatus::InvalidArgument
            };
            Failure::new(status, e.to_string())
        })?;
        *out = sim_from(cfg)?;
        Ok(())
    })
}

/// Advances every vehicle by `steps` lockstep steps.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rp_sim_step(sim: *mut RpSim, steps: u64) -> RpStatus {
    guard(|| {
        let sim = deref_mut(sim, "sim")?;
        for _ in 0..steps {
            sim.inner
                .step()
                .map_err(|e| Failure::new(RpStatus::Io, e.to_string()))?;
        }
        Ok(())
    })
}

/// # Safety
/// `sim` must be null or a live handle. Returns 0 for null.
#[no_mangle]
pub unsafe extern "C" fn rp_sim_vehicle_count(sim: *const RpSim) -> usize {
    sim.as_ref().map_or(0, |s| s.inner.vehicle_count())
}

/// # Safety
/// `sim` must be null or a live handle; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rp_sim_pose(sim: *const RpSim, id: usize, out: *mut RpPose) -> RpStatus {
    guard(|| {
        let sim = deref(sim, "sim")?;
        let out = deref_mut(out, "out")?;
        let v = sim
            .inner
            .vehicle_state(VehicleId(id))
            .ok_or_else(|| Failure::new(RpStatus::UnknownVehicle, format!("no vehicle {id}")))?;
        *out = RpPose {
            x: v.position.x,
            y: v.position.y,
            heading: v.heading,
            speed: v.speed,
            track_pos: v.track_pos,
            lap_count: v.lap_count,
        };
        Ok(())
    })
}

/// # Safety
/// `sim` must be null or a live handle from `rp_sim_new` or
/// `rp_sim_from_config`.
#[no_mangle]
pub unsafe extern "C" fn rp_sim_free(sim: *mut RpSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}
