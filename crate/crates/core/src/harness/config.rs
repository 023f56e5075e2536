use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::controllers::{constant_driver, my_driver, platoon_driver, Driver};
use crate::sim::{make_oval, Track, TrackError, VehicleParams};

pub const DEFAULT_DT: f64 = 0.02;
pub const DEFAULT_STEPS: u64 = 60_000;
pub const DEFAULT_PLATOON_SPEED: f64 = 80.0;
/// Spacing between default start positions, meters.
pub const DEFAULT_SPACING: f64 = 10.0;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {value}")]
    BadValue { key: String, value: String },
    #[error("unknown driver `{0}` (expected my, platoon, platoon:<km/h> or parked)")]
    UnknownDriver(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Track(#[from] TrackError),
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrackSpec {
    Oval {
        straight: f64,
        radius: f64,
        half_width: f64,
        vertices_per_arc: usize,
    },
    File(PathBuf),
}

impl Default for TrackSpec {
    /// 200 m straights, 50 m corners, 10 m wide.
    fn default() -> Self {
        TrackSpec::Oval {
            straight: 200.0,
            radius: 50.0,
            half_width: 5.0,
            vertices_per_arc: 64,
        }
    }
}

impl TrackSpec {
    pub fn build(&self) -> Result<Track, TrackError> {
        match self {
            TrackSpec::Oval {
                straight,
                radius,
                half_width,
                vertices_per_arc,
            } => make_oval(*straight, *radius, *half_width, *vertices_per_arc),
            TrackSpec::File(path) => Track::load(path),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriverKind {
    Solo,
    Platoon { target_speed: f64 },
    Parked,
}

impl DriverKind {
    pub fn build(self) -> Driver {
        match self {
            DriverKind::Solo => my_driver(),
            DriverKind::Platoon { target_speed } => platoon_driver(target_speed),
            DriverKind::Parked => constant_driver(0.0),
        }
    }
}

impl FromStr for DriverKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "my" | "solo" | "my_driver" => return Ok(DriverKind::Solo),
            "platoon" => {
                return Ok(DriverKind::Platoon {
                    target_speed: DEFAULT_PLATOON_SPEED,
                })
            }
            "parked" => return Ok(DriverKind::Parked),
            _ => {}
        }
        s.strip_prefix("platoon:")
            .and_then(|v| v.parse::<f64>().ok())
            .filter(|v| v.is_finite())
            .map(|target_speed| DriverKind::Platoon { target_speed })
            .ok_or_else(|| ConfigError::UnknownDriver(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleSpec {
    pub driver: DriverKind,
    /// Arc length of the start position along the centerline, meters.
    pub start_offset: f64,
    pub params: VehicleParams,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BusMode {
    Lossless,
    Lossy {
        drop_probability: f64,
        range_limit: Option<f64>,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogFormat {
    #[default]
    Csv,
    JsonLines,
}

impl FromStr for LogFormat {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "csv" => Ok(LogFormat::Csv),
            "jsonl" | "json-lines" => Ok(LogFormat::JsonLines),
            other => Err(ConfigError::BadValue {
                key: "log_format".into(),
                value: other.into(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub max_steps: u64,
    /// Stop once every vehicle has completed this many laps.
    pub laps: Option<u32>,
    pub track: TrackSpec,
    pub vehicles: Vec<VehicleSpec>,
    pub bus: BusMode,
    pub log_path: Option<PathBuf>,
    pub log_format: LogFormat,
    pub seed: u64,
    /// Run the per-vehicle phases on the rayon pool.
    pub parallel: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: DEFAULT_DT,
            max_steps: DEFAULT_STEPS,
            laps: None,
            track: TrackSpec::default(),
            vehicles: vec![VehicleSpec {
                driver: DriverKind::Solo,
                start_offset: 0.0,
                params: VehicleParams::default(),
            }],
            bus: BusMode::Lossless,
            log_path: None,
            log_format: LogFormat::Csv,
            seed: 0,
            parallel: false,
        }
    }
}

/// Start offsets for `n` vehicles, the first one in front.
pub fn default_starts(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| DEFAULT_SPACING * (n - 1 - i) as f64)
        .collect()
}

impl SimConfig {
    /// Replaces the vehicle list with the given drivers at the default
    /// spacing.
    pub fn with_drivers(mut self, drivers: &[DriverKind]) -> Self {
        let params = self
            .vehicles
            .first()
            .map(|v| v.params.clone())
            .unwrap_or_default();
        self.vehicles = drivers
            .iter()
            .zip(default_starts(drivers.len()))
            .map(|(&driver, start_offset)| VehicleSpec {
                driver,
                start_offset,
                params: params.clone(),
            })
            .collect();
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if self.max_steps == 0 {
            return Err(ConfigError::Invalid("steps must be positive".into()));
        }
        if self.vehicles.is_empty() {
            return Err(ConfigError::Invalid(
                "at least one vehicle is required".into(),
            ));
        }
        for (i, v) in self.vehicles.iter().enumerate() {
            v.params
                .validate()
                .map_err(|e| ConfigError::Invalid(format!("vehicle {i}: {e}")))?;
            if !v.start_offset.is_finite() {
                return Err(ConfigError::Invalid(format!(
                    "vehicle {i}: bad start offset"
                )));
            }
            if self.vehicles[..i]
                .iter()
                .any(|o| o.start_offset == v.start_offset)
            {
                return Err(ConfigError::Invalid(format!(
                    "vehicle {i}: start offset {} is already taken",
                    v.start_offset
                )));
            }
        }
        if let BusMode::Lossy {
            drop_probability,
            range_limit,
            ..
        } = self.bus
        {
            if !(0.0..=1.0).contains(&drop_probability) {
                return Err(ConfigError::Invalid(format!(
                    "drop probability {drop_probability} is outside [0, 1]"
                )));
            }
            if range_limit.is_some_and(|r| !(r.is_finite() && r > 0.0)) {
                return Err(ConfigError::Invalid("range limit must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        SimConfig::parse(&text, base)
    }

    /// Parses the `key = value` config format. `#` starts a comment. Relative
    /// track and log paths are resolved against `base_dir`.
    ///
    /// Keys: `dt`, `steps`, `laps`, `seed`, `parallel`, `track` (`oval` or a
    /// track file path), `oval.straight`, `oval.radius`, `oval.half_width`,
    /// `oval.vertices_per_arc`, `drivers` (comma list), `starts` (comma list
    /// of meters), `bus` (`lossless` or `lossy`), `drop_prob`, `range_limit`,
    /// `log`, `log_format` (`csv` or `jsonl`), and `vehicle.<param>` for any
    /// of `wheelbase`, `max_accel`, `max_brake`, `drag_coeff`,
    /// `max_steer_angle`, `idle_rpm`, `max_rpm`, `body_radius`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut cfg = SimConfig::default();
        let mut drivers: Option<Vec<DriverKind>> = None;
        let mut starts: Option<Vec<f64>> = None;
        let mut params = VehicleParams::default();
        let mut lossy = false;
        let mut drop_probability = 0.0;
        let mut range_limit = None;
        let mut oval = match TrackSpec::default() {
            TrackSpec::Oval {
                straight,
                radius,
                half_width,
                vertices_per_arc,
            } => (straight, radius, half_width, vertices_per_arc),
            TrackSpec::File(_) => unreachable!(),
        };
        let mut track_file = None;

        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax {
                line: k + 1,
                reason: "expected `key = value`".into(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = || ConfigError::BadValue {
                key: key.to_string(),
                value: value.to_string(),
            };
            let real = || value.parse::<f64>().map_err(|_| bad());
            match key {
                "dt" => cfg.dt = real()?,
                "steps" => cfg.max_steps = value.parse().map_err(|_| bad())?,
                "laps" => cfg.laps = Some(value.parse().map_err(|_| bad())?),
                "seed" => cfg.seed = value.parse().map_err(|_| bad())?,
                "parallel" => cfg.parallel = value.parse().map_err(|_| bad())?,
                "track" => {
                    track_file = match value {
                        "oval" => None,
                        path => Some(base_dir.join(path)),
                    }
                }
                "oval.straight" => oval.0 = real()?,
                "oval.radius" => oval.1 = real()?,
                "oval.half_width" => oval.2 = real()?,
                "oval.vertices_per_arc" => oval.3 = value.parse().map_err(|_| bad())?,
                "drivers" => {
                    drivers = Some(value.split(',').map(str::parse).collect::<Result<_, _>>()?)
                }
                "starts" => {
                    starts = Some(
                        value
                            .split(',')
                            .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
                            .collect::<Result<_, _>>()?,
                    )
                }
                "bus" => {
                    lossy = match value {
                        "lossless" => false,
                        "lossy" => true,
                        _ => return Err(bad()),
                    }
                }
                "drop_prob" => {
                    drop_probability = real()?;
                    lossy = true;
                }
                "range_limit" => {
                    range_limit = Some(real()?);
                    lossy = true;
                }
                "log" => cfg.log_path = Some(base_dir.join(value)),
                "log_format" => cfg.log_format = value.parse()?,
                "vehicle.wheelbase" => params.wheelbase = real()?,
                "vehicle.max_accel" => params.max_accel = real()?,
                "vehicle.max_brake" => params.max_brake = real()?,
                "vehicle.drag_coeff" => params.drag_coeff = real()?,
                "vehicle.max_steer_angle" => params.max_steer_angle = real()?,
                "vehicle.idle_rpm" => params.idle_rpm = real()?,
                "vehicle.max_rpm" => params.max_rpm = real()?,
                "vehicle.body_radius" => params.body_radius = real()?,
                other => return Err(ConfigError::UnknownKey(other.to_string())),
            }
        }

        cfg.track = match track_file {
            Some(path) => TrackSpec::File(path),
            None => TrackSpec::Oval {
                straight: oval.0,
                radius: oval.1,
                half_width: oval.2,
                vertices_per_arc: oval.3,
            },
        };
        let drivers = drivers.unwrap_or_else(|| vec![DriverKind::Solo]);
        let starts = starts.unwrap_or_else(|| default_starts(drivers.len()));
        if starts.len() != drivers.len() {
            return Err(ConfigError::Invalid(format!(
                "{} drivers but {} start offsets",
                drivers.len(),
                starts.len()
            )));
        }
        cfg.vehicles = drivers
            .into_iter()
            .zip(starts)
            .map(|(driver, start_offset)| VehicleSpec {
                driver,
                start_offset,
                params: params.clone(),
            })
            .collect();
        if lossy {
            cfg.bus = BusMode::Lossy {
                drop_probability,
                range_limit,
                seed: cfg.seed,
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
