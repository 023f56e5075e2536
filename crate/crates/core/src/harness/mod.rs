//! Lockstep execution harness, telemetry, config files and the SCRC UDP
//! client.

mod config;
pub mod loopback;
mod run;
mod scrc_client;
mod telemetry;

pub use config::{
    default_starts, BusMode, ConfigError, DriverKind, LogFormat, SimConfig, TrackSpec, VehicleSpec,
    DEFAULT_DT, DEFAULT_PLATOON_SPEED, DEFAULT_STEPS,
};
pub use run::{
    configured_drivers, start_driver, start_drivers, HarnessError, RunReport, Simulation,
    VehicleReport,
};
pub use scrc_client::{run_scrc_client, ClientError, ClientExit, ClientReport, ScrcClientConfig};
pub use telemetry::{read_csv, TelemetryError, TelemetryRow, TelemetryWriter, CSV_HEADER};
