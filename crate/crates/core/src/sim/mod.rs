//! Desk-scale track and vehicle simulator: a closed 2-D corridor, kinematic
//! bicycle dynamics and synthesized SCRC-style sensors.

mod track;
mod vehicle;

pub use track::{make_oval, Point, Track, TrackError};
pub use vehicle::{
    beam_bearings, sense, step_vehicle, update_progress, wrap_angle, ParamsError, VehicleParams,
    VehicleState,
};
