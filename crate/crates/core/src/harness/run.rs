use std::fs::File;
use std::io::BufWriter;
use std::time::{Duration, Instant};

use log::{debug, info, warn};
use rayon::prelude::*;
use thiserror::Error;

use super::config::{BusMode, ConfigError, SimConfig};
use super::telemetry::{TelemetryError, TelemetryRow, TelemetryWriter};
use crate::bus::{Broadcast, BusError, BusStats, LossyBus, PlatoonBus};
use crate::controllers::{min_forward_range, Driver};
use crate::frp::TimeDelta;
use crate::model::{CarState, DriveState, VehicleId};
use crate::sim::{sense, step_vehicle, update_progress, Point, Track, VehicleParams, VehicleState};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Bus(#[from] BusError),
    #[error("telemetry: {0}")]
    Telemetry(#[from] TelemetryError),
}

impl HarnessError {
    pub fn is_config(&self) -> bool {
        matches!(self, HarnessError::Config(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleReport {
    pub laps: u32,
    pub max_abs_track_pos: f64,
    pub off_track_steps: u64,
    pub dist_raced: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub steps: u64,
    pub vehicles: Vec<VehicleReport>,
    pub bus: BusStats,
    pub telemetry_rows: u64,
    pub wall_time: Duration,
}

impl RunReport {
    pub fn laps_completed(&self) -> u32 {
        self.vehicles.iter().map(|v| v.laps).min().unwrap_or(0)
    }

    pub fn max_abs_track_pos(&self) -> f64 {
        self.vehicles
            .iter()
            .map(|v| v.max_abs_track_pos)
            .fold(0.0, f64::max)
    }

    pub fn off_track_steps(&self) -> u64 {
        self.vehicles.iter().map(|v| v.off_track_steps).sum()
    }
}

struct Vehicle {
    state: VehicleState,
    params: VehicleParams,
    driver: Driver,
    sensed: CarState,
    command: DriveState,
    max_abs_track_pos: f64,
    off_track_steps: u64,
}

/// Lockstep multi-vehicle simulation.
///
/// Each call to [`Simulation::step`] runs, with a barrier between phases:
/// sense every vehicle (bus snapshot into `communications`), step every
/// driver, publish every broadcast, advance the bus, step every vehicle's
/// dynamics, and log one telemetry row per vehicle. With `parallel` set the
/// per-vehicle phases run on the rayon pool; results are identical either
/// way.
pub struct Simulation {
    track: Track,
    dt: TimeDelta,
    vehicles: Vec<Vehicle>,
    bus: Box<dyn Broadcast>,
    step: u64,
    parallel: bool,
    telemetry: Option<TelemetryWriter<BufWriter<File>>>,
    rows: u64,
}

impl Simulation {
    pub fn new(cfg: &SimConfig, drivers: Vec<Driver>) -> Result<Self, HarnessError> {
        cfg.validate()?;
        if drivers.len() != cfg.vehicles.len() {
            return Err(ConfigError::Invalid(format!(
                "{} drivers for {} configured vehicles",
                drivers.len(),
                cfg.vehicles.len()
            ))
            .into());
        }
        let track = cfg.track.build().map_err(ConfigError::from)?;
        let dt = TimeDelta::new(cfg.dt).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let n = drivers.len();
        let bus: Box<dyn Broadcast> = match cfg.bus {
            BusMode::Lossless => Box::new(PlatoonBus::new(n)?),
            BusMode::Lossy {
                drop_probability,
                range_limit,
                seed,
            } => Box::new(LossyBus::new(
                PlatoonBus::new(n)?,
                drop_probability,
                range_limit,
                seed,
            )?),
        };
        let vehicles = cfg
            .vehicles
            .iter()
            .zip(drivers)
            .map(|(spec, driver)| {
                let state = VehicleState::on_track(&track, spec.start_offset, &spec.params);
                Vehicle {
                    state,
                    params: spec.params.clone(),
                    driver,
                    sensed: CarState::default(),
                    command: DriveState::default(),
                    max_abs_track_pos: 0.0,
                    off_track_steps: 0,
                }
            })
            .collect();
        let telemetry = match &cfg.log_path {
            Some(path) => Some(TelemetryWriter::create(path, cfg.log_format)?),
            None => None,
        };
        Ok(Simulation {
            track,
            dt,
            vehicles,
            bus,
            step: 0,
            parallel: cfg.parallel,
            telemetry,
            rows: 0,
        })
    }

    pub fn track(&self) -> &Track {
        &self.track
    }

    pub fn steps_done(&self) -> u64 {
        self.step
    }

    pub fn vehicle_count(&self) -> usize {
        self.vehicles.len()
    }

    pub fn vehicle_state(&self, id: VehicleId) -> Option<&VehicleState> {
        self.vehicles.get(id.0).map(|v| &v.state)
    }

    /// Sensor samples fed to the drivers during the last step.
    pub fn last_sensed(&self) -> impl Iterator<Item = &CarState> + '_ {
        self.vehicles.iter().map(|v| &v.sensed)
    }

    /// Clamped commands produced during the last step.
    pub fn last_commands(&self) -> impl Iterator<Item = &DriveState> + '_ {
        self.vehicles.iter().map(|v| &v.command)
    }

    pub fn bus_stats(&self) -> BusStats {
        self.bus.stats()
    }

    pub fn step(&mut self) -> Result<(), HarnessError> {
        let dt = self.dt;
        let positions: Vec<Point> = self.vehicles.iter().map(|v| v.state.position).collect();
        let obstacles: Vec<(Point, f64)> = self
            .vehicles
            .iter()
            .map(|v| (v.state.position, v.params.body_radius))
            .collect();
        self.bus.set_positions(&positions);

        let track = &self.track;
        let bus = &*self.bus;
        let sense_one = |i: usize, v: &mut Vehicle| -> Result<(), BusError> {
            let others: Vec<(Point, f64)> = obstacles
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, o)| *o)
                .collect();
            let mut cs = sense(track, &v.state, &others);
            cs.communications = bus.snapshot(VehicleId(i))?;
            v.sensed = cs;
            Ok(())
        };
        let drive_one = |v: &mut Vehicle| {
            v.command = v.driver.step(dt, v.sensed.clone()).clamped();
        };
        let move_one = |v: &mut Vehicle| {
            let mut next = step_vehicle(&v.state, &v.command, &v.params, dt);
            update_progress(track, &mut next);
            v.state = next;
        };

        if self.parallel {
            self.vehicles
                .par_iter_mut()
                .enumerate()
                .try_for_each(|(i, v)| sense_one(i, v))?;
            self.vehicles.par_iter_mut().for_each(drive_one);
        } else {
            for (i, v) in self.vehicles.iter_mut().enumerate() {
                sense_one(i, v)?;
            }
            self.vehicles.iter_mut().for_each(drive_one);
        }

        for (i, v) in self.vehicles.iter().enumerate() {
            self.bus
                .publish(VehicleId(i), v.command.broadcast.clone())?;
        }
        self.bus.advance();

        // log the pose and readings the driver acted on, before moving
        let rows: Vec<TelemetryRow> = self
            .vehicles
            .iter()
            .enumerate()
            .map(|(i, v)| TelemetryRow {
                step: self.step,
                vehicle_id: i,
                sim_time: self.step as f64 * dt.seconds(),
                x: v.state.position.x,
                y: v.state.position.y,
                speed_x: v.sensed.speed_x,
                rpm: v.sensed.rpm,
                gear: v.command.gear,
                steer: v.command.steer,
                accel: v.command.accel,
                track_pos: v.sensed.track_pos,
                angle: v.sensed.angle,
                min_forward_range: min_forward_range(&v.sensed.track),
                broadcast: v.command.broadcast.to_string(),
                lap_count: v.state.lap_count,
            })
            .collect();

        if self.parallel {
            self.vehicles.par_iter_mut().for_each(move_one);
        } else {
            self.vehicles.iter_mut().for_each(move_one);
        }

        for v in &mut self.vehicles {
            let pos = v.sensed.track_pos.abs();
            v.max_abs_track_pos = v.max_abs_track_pos.max(pos);
            if pos > 1.0 {
                v.off_track_steps += 1;
                if v.off_track_steps == 1 {
                    warn!("vehicle left the track at step {}", self.step);
                }
            }
        }
        if let Some(t) = self.telemetry.as_mut() {
            for row in &rows {
                t.write(row)?;
            }
        }
        self.rows += rows.len() as u64;
        self.step += 1;
        Ok(())
    }

    fn laps_done(&self, laps: u32) -> bool {
        self.vehicles.iter().all(|v| v.state.lap_count >= laps)
    }

    pub fn report(&self, wall_time: Duration) -> RunReport {
        RunReport {
            steps: self.step,
            vehicles: self
                .vehicles
                .iter()
                .map(|v| VehicleReport {
                    laps: v.state.lap_count,
                    max_abs_track_pos: v.max_abs_track_pos,
                    off_track_steps: v.off_track_steps,
                    dist_raced: v.state.dist_raced,
                })
                .collect(),
            bus: self.bus.stats(),
            telemetry_rows: self.rows,
            wall_time,
        }
    }

    /// Steps until `max_steps` or until every vehicle has finished `laps`.
    pub fn run(&mut self, max_steps: u64, laps: Option<u32>) -> Result<RunReport, HarnessError> {
        let started = Instant::now();
        while self.step < max_steps {
            if laps.is_some_and(|l| self.laps_done(l)) {
                break;
            }
            self.step()?;
        }
        if let Some(t) = self.telemetry.as_mut() {
            t.flush()?;
        }
        let report = self.report(started.elapsed());
        info!(
            "ran {} steps: laps {:?}, max |trackPos| {:.3}",
            report.steps,
            report.vehicles.iter().map(|v| v.laps).collect::<Vec<_>>(),
            report.max_abs_track_pos()
        );
        debug!("bus {:?}", report.bus);
        Ok(report)
    }
}

/// Runs one driver on the configured track.
pub fn start_driver(driver: Driver, cfg: &SimConfig) -> Result<RunReport, HarnessError> {
    if cfg.vehicles.len() != 1 {
        return Err(ConfigError::Invalid(format!(
            "a solo run needs exactly one vehicle, the config has {}",
            cfg.vehicles.len()
        ))
        .into());
    }
    start_drivers(vec![driver], cfg)
}

/// Runs several drivers together in lockstep, connected by the bus.
pub fn start_drivers(drivers: Vec<Driver>, cfg: &SimConfig) -> Result<RunReport, HarnessError> {
    let mut sim = Simulation::new(cfg, drivers)?;
    sim.run(cfg.max_steps, cfg.laps)
}

/// Builds the drivers named in the config.
pub fn configured_drivers(cfg: &SimConfig) -> Vec<Driver> {
    cfg.vehicles.iter().map(|v| v.driver.build()).collect()
}
