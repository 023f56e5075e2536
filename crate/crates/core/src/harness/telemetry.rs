use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::config::LogFormat;

/// One vehicle at one step: the sensed pose and readings that went into the
/// driver, and the command that came out.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TelemetryRow {
    pub step: u64,
    pub vehicle_id: usize,
    pub sim_time: f64,
    pub x: f64,
    pub y: f64,
    pub speed_x: f64,
    pub rpm: f64,
    pub gear: i32,
    pub steer: f64,
    pub accel: f64,
    pub track_pos: f64,
    pub angle: f64,
    pub min_forward_range: f64,
    pub broadcast: String,
    pub lap_count: u32,
}

pub const CSV_HEADER: [&str; 15] = [
    "step",
    "vehicleId",
    "simTime",
    "x",
    "y",
    "speedX",
    "rpm",
    "gear",
    "steer",
    "accel",
    "trackPos",
    "angle",
    "minForwardRange",
    "broadcast",
    "lapCount",
];

impl TelemetryRow {
    /// Fields in header order, reals in shortest round-trip form.
    pub fn csv_fields(&self) -> [String; 15] {
        [
            self.step.to_string(),
            self.vehicle_id.to_string(),
            self.sim_time.to_string(),
            self.x.to_string(),
            self.y.to_string(),
            self.speed_x.to_string(),
            self.rpm.to_string(),
            self.gear.to_string(),
            self.steer.to_string(),
            self.accel.to_string(),
            self.track_pos.to_string(),
            self.angle.to_string(),
            self.min_forward_range.to_string(),
            self.broadcast.clone(),
            self.lap_count.to_string(),
        ]
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TelemetryError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[allow(clippy::large_enum_variant)]
pub enum TelemetryWriter<W: Write> {
    Csv(csv::Writer<W>),
    JsonLines(W),
}

impl TelemetryWriter<BufWriter<File>> {
    pub fn create(path: &Path, format: LogFormat) -> Result<Self, TelemetryError> {
        let file = BufWriter::new(File::create(path)?);
        TelemetryWriter::new(file, format)
    }
}

impl<W: Write> TelemetryWriter<W> {
    pub fn new(out: W, format: LogFormat) -> Result<Self, TelemetryError> {
        Ok(match format {
            LogFormat::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(CSV_HEADER)?;
                TelemetryWriter::Csv(w)
            }
            LogFormat::JsonLines => TelemetryWriter::JsonLines(out),
        })
    }

    pub fn write(&mut self, row: &TelemetryRow) -> Result<(), TelemetryError> {
        match self {
            TelemetryWriter::Csv(w) => w.write_record(row.csv_fields())?,
            TelemetryWriter::JsonLines(w) => {
                serde_json::to_writer(&mut *w, row)?;
                w.write_all(b"\n")?;
            }
        }
        Ok(())
    }

    pub fn flush(&mut self) -> Result<(), TelemetryError> {
        match self {
            TelemetryWriter::Csv(w) => w.flush()?,
            TelemetryWriter::JsonLines(w) => w.flush()?,
        }
        Ok(())
    }
}

/// Reads a CSV telemetry file back into rows.
pub fn read_csv(path: &Path) -> Result<Vec<TelemetryRow>, TelemetryError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let f = |i: usize| rec.get(i).unwrap_or("");
        let bad = |i: usize| {
            TelemetryError::Io(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("bad `{}` value `{}`", CSV_HEADER[i], f(i)),
            ))
        };
        let real = |i: usize| f(i).parse::<f64>().map_err(|_| bad(i));
        rows.push(TelemetryRow {
            step: f(0).parse().map_err(|_| bad(0))?,
            vehicle_id: f(1).parse().map_err(|_| bad(1))?,
            sim_time: real(2)?,
            x: real(3)?,
            y: real(4)?,
            speed_x: real(5)?,
            rpm: real(6)?,
            gear: f(7).parse().map_err(|_| bad(7))?,
            steer: real(8)?,
            accel: real(9)?,
            track_pos: real(10)?,
            angle: real(11)?,
            min_forward_range: real(12)?,
            broadcast: f(13).to_string(),
            lap_count: f(14).parse().map_err(|_| bad(14))?,
        });
    }
    Ok(rows)
}
