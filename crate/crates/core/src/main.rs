use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::error;

use reactive_platoon::codec::{
    looks_like_actions, parse_actions, parse_sensors, serialize_actions, serialize_sensors,
};
use reactive_platoon::harness::{
    configured_drivers, run_scrc_client, start_drivers, BusMode, ConfigError, DriverKind,
    LogFormat, RunReport, ScrcClientConfig, SimConfig, TrackSpec,
};
use reactive_platoon::sim::make_oval;

const LOG_ENV: &str = "REACTIVE_PLATOON_LOG_LEVEL";

#[derive(Parser)]
#[command(
    name = "reactive-platoon",
    version,
    about = "Platoon simulation and SCRC tooling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one driver around the track.
    RunSolo(RunArgs),
    /// Run several drivers in lockstep, connected by the broadcast bus.
    RunPlatoon(RunArgs),
    /// Drive a car on an SCRC server over UDP.
    ScrcClient(ClientArgs),
    /// Round-trip every message in a file through the codec.
    CodecCheck(CodecArgs),
    /// Write an oval track file.
    MakeTrack(TrackArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Key-value config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    steps: Option<u64>,
    /// Stop once every vehicle has done this many laps; fewer is a failure.
    #[arg(long)]
    laps: Option<u32>,
    /// Telemetry output file.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long, value_enum)]
    log_format: Option<FormatArg>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated driver names: my, platoon, platoon:<km/h>, parked.
    #[arg(long)]
    drivers: Option<String>,
    /// Track file to drive on instead of the default oval.
    #[arg(long)]
    track: Option<PathBuf>,
    #[arg(long)]
    drop_prob: Option<f64>,
    #[arg(long)]
    range_limit: Option<f64>,
    /// Run per-vehicle phases on a thread pool.
    #[arg(long)]
    parallel: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
}

#[derive(Args)]
struct ClientArgs {
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, default_value_t = 3001)]
    port: u16,
    #[arg(long, default_value = "SCR")]
    id: String,
    #[arg(long, default_value = "my")]
    driver: String,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    max_cycles: Option<u64>,
    /// Receive timeout in milliseconds.
    #[arg(long, default_value_t = 1000)]
    timeout_ms: u64,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Kind {
    Auto,
    Sensors,
    Actions,
}

#[derive(Args)]
struct CodecArgs {
    /// One message per line; blank lines and `#` lines are skipped.
    file: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    kind: Kind,
}

#[derive(Args)]
struct TrackArgs {
    #[arg(long, default_value_t = 200.0)]
    straight: f64,
    #[arg(long, default_value_t = 50.0)]
    radius: f64,
    #[arg(long, default_value_t = 5.0)]
    half_width: f64,
    #[arg(long, default_value_t = 64)]
    vertices: usize,
    /// Output path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Run(String),
    Config(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn build_config(args: &RunArgs, solo: bool) -> Result<SimConfig, ConfigError> {
    let mut cfg = match &args.config {
        Some(path) => SimConfig::load(path)?,
        None if solo => SimConfig::default(),
        None => SimConfig::default().with_drivers(
            &[DriverKind::Platoon {
                target_speed: reactive_platoon::harness::DEFAULT_PLATOON_SPEED,
            }; 3],
        ),
    };
    if let Some(names) = &args.drivers {
        let kinds = names
            .split(',')
            .map(str::parse)
            .collect::<Result<Vec<DriverKind>, _>>()?;
        if kinds.len() == cfg.vehicles.len() {
            for (v, k) in cfg.vehicles.iter_mut().zip(kinds) {
                v.driver = k;
            }
        } else {
            cfg = cfg.with_drivers(&kinds);
        }
    }
    if solo && cfg.vehicles.len() != 1 {
        return Err(ConfigError::Invalid(format!(
            "run-solo takes one driver, got {}",
            cfg.vehicles.len()
        )));
    }
    if let Some(dt) = args.dt {
        cfg.dt = dt;
    }
    if let Some(steps) = args.steps {
        cfg.max_steps = steps;
    }
    if args.laps.is_some() {
        cfg.laps = args.laps;
    }
    if let Some(log) = &args.log {
        cfg.log_path = Some(log.clone());
    }
    if let Some(f) = args.log_format {
        cfg.log_format = match f {
            FormatArg::Csv => LogFormat::Csv,
            FormatArg::Jsonl => LogFormat::JsonLines,
        };
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
        if let BusMode::Lossy { seed: s, .. } = &mut cfg.bus {
            *s = seed;
        }
    }
    if let Some(track) = &args.track {
        cfg.track = TrackSpec::File(track.clone());
    }
    if args.drop_prob.is_some() || args.range_limit.is_some() {
        let (mut p, mut r) = match cfg.bus {
            BusMode::Lossy {
                drop_probability,
                range_limit,
                ..
            } => (drop_probability, range_limit),
            BusMode::Lossless => (0.0, None),
        };
        if let Some(dp) = args.drop_prob {
            p = dp;
        }
        if args.range_limit.is_some() {
            r = args.range_limit;
        }
        cfg.bus = BusMode::Lossy {
            drop_probability: p,
            range_limit: r,
            seed: cfg.seed,
        };
    }
    cfg.parallel |= args.parallel;
    cfg.validate()?;
    Ok(cfg)
}

fn print_report(report: &RunReport) {
    println!("steps: {}", report.steps);
    for (i, v) in report.vehicles.iter().enumerate() {
        println!(
            "vehicle {i}: laps {} max|trackPos| {:.4} off-track steps {} distance {:.1} m",
            v.laps, v.max_abs_track_pos, v.off_track_steps, v.dist_raced
        );
    }
    println!(
        "bus: {} published, {} delivered",
        report.bus.published, report.bus.delivered
    );
    println!("telemetry rows: {}", report.telemetry_rows);
    println!("wall time: {:.3} s", report.wall_time.as_secs_f64());
}

fn run_sim(args: &RunArgs, solo: bool) -> Result<(), Failure> {
    let cfg = build_config(args, solo)?;
    let report = start_drivers(configured_drivers(&cfg), &cfg).map_err(|e| {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Run(e.to_string())
        }
    })?;
    print_report(&report);
    if report.off_track_steps() > 0 {
        return Err(Failure::Run(format!(
            "left the track for {} vehicle-steps",
            report.off_track_steps()
        )));
    }
    if let Some(laps) = cfg.laps {
        if report.laps_completed() < laps {
            return Err(Failure::Run(format!(
                "completed {} of {laps} laps",
                report.laps_completed()
            )));
        }
    }
    Ok(())
}

fn run_client(args: &ClientArgs) -> Result<(), Failure> {
    let kind: DriverKind = args.driver.parse()?;
    let cfg = ScrcClientConfig {
        host: args.host.clone(),
        port: args.port,
        client_id: args.id.clone(),
        dt: args.dt.unwrap_or(reactive_platoon::harness::DEFAULT_DT),
        recv_timeout: Duration::from_millis(args.timeout_ms.max(1)),
        max_cycles: args.max_cycles,
        ..ScrcClientConfig::default()
    };
    let report = run_scrc_client(|| kind.build(), &cfg).map_err(|e| Failure::Run(e.to_string()))?;
    println!(
        "cycles: {} parse errors: {} restarts: {} exit: {:?}",
        report.cycles, report.parse_errors, report.restarts, report.exit
    );
    Ok(())
}

fn codec_check(path: &Path, kind: Kind) -> Result<(), Failure> {
    let text = std::fs::read(path)
        .map_err(|e| Failure::Config(format!("reading {}: {e}", path.display())))?;
    let mut checked = 0usize;
    let mut failures = 0usize;
    for (k, line) in text.split(|&b| b == b'\n').enumerate() {
        let line = line.strip_suffix(b"\r").unwrap_or(line);
        if line.iter().all(u8::is_ascii_whitespace) || line.first() == Some(&b'#') {
            continue;
        }
        checked += 1;
        let actions = match kind {
            Kind::Actions => true,
            Kind::Sensors => false,
            Kind::Auto => looks_like_actions(line),
        };
        let outcome = if actions {
            parse_actions(line).map(|p| {
                let again = parse_actions(serialize_actions(&p.value)).map(|q| q.value);
                again.as_ref() == Ok(&p.value)
            })
        } else {
            parse_sensors(line).map(|p| {
                let again = parse_sensors(serialize_sensors(&p.value)).map(|q| q.value);
                again.as_ref() == Ok(&p.value)
            })
        };
        match outcome {
            Ok(true) => {}
            Ok(false) => {
                failures += 1;
                println!("line {}: round trip changed the value", k + 1);
            }
            Err(e) => {
                failures += 1;
                println!("line {}: {e}", k + 1);
            }
        }
    }
    println!("{checked} messages checked, {failures} failed");
    if failures > 0 {
        Err(Failure::Run(format!("{failures} messages failed")))
    } else {
        Ok(())
    }
}

fn make_track(args: &TrackArgs) -> Result<(), Failure> {
    let track = make_oval(args.straight, args.radius, args.half_width, args.vertices)
        .map_err(|e| Failure::Config(e.to_string()))?;
    let text = track.to_file_string();
    match &args.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Run(format!("writing {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::RunSolo(args) => run_sim(args, true),
        Command::RunPlatoon(args) => run_sim(args, false),
        Command::ScrcClient(args) => run_client(args),
        Command::CodecCheck(args) => codec_check(&args.file, args.kind),
        Command::MakeTrack(args) => make_track(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Run(msg)) => {
            error!("{msg}");
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
    }
}
