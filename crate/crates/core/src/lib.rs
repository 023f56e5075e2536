//! Vehicle platooning on an arrowized functional-reactive core.
//!
//! * [`frp`]: signal functions and their combinators.
//! * [`model`] and [`codec`]: sensor/actuator records and the SCRC-style text
//!   wire format.
//! * [`sim`]: closed 2-D tracks, kinematic vehicles and sensor synthesis.
//! * [`bus`]: single-writer broadcast channels with one step of latency.
//! * [`controllers`]: the solo and platoon drivers.
//! * [`harness`]: lockstep runs, telemetry, config files and the UDP client.

pub mod bus;
pub mod codec;
pub mod controllers;
pub mod frp;
pub mod harness;
pub mod model;
pub mod sim;

pub use controllers::Driver;
pub use model::{CarState, DriveState, Message, VehicleId};
