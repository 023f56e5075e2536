//! Acceptance checks. Runs as a plain binary so each criterion prints a
//! single PASS/FAIL line regardless of output capture.

mod common;

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use reactive_platoon::bus::{Broadcast, PlatoonBus};
use reactive_platoon::codec::{parse_actions, parse_sensors, serialize_actions, serialize_sensors};
use reactive_platoon::controllers::{gas, my_driver, shifting, steering};
use reactive_platoon::frp::{
    compose, delay_one, feedback, identity, lift_pure, run, SampleStream, SignalFunction, TimeDelta,
};
use reactive_platoon::harness::{
    configured_drivers, read_csv, start_driver, DriverKind, SimConfig, Simulation, TelemetryRow,
    DEFAULT_DT,
};
use reactive_platoon::model::{Message, VehicleId};

type Outcome = Result<String, String>;
type Check<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn ensure(ok: bool, why: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(why())
    }
}

fn within(limit: Duration, took: Duration) -> Result<(), String> {
    ensure(took < limit, || format!("took {took:?}, limit {limit:?}"))
}

fn arrow_laws() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let streams = 1000;
    for k in 0..streams {
        let len = rng.gen_range(0..=200);
        let stream: SampleStream<i64> = (0..len)
            .map(|_| {
                let dt = if rng.gen() {
                    0.02
                } else {
                    rng.gen_range(1e-4..1.0)
                };
                (TimeDelta::new(dt).unwrap(), rng.gen())
            })
            .collect();
        let inputs: Vec<i64> = stream.values().copied().collect();
        let (a, b, c) = (rng.gen::<i64>(), rng.gen::<i64>() | 1, rng.gen::<i64>());
        let f = move |x: i64| x.wrapping_add(a);
        let g = move |x: i64| x.wrapping_mul(b);
        let h = move |x: i64| x ^ c;
        let init = rng.gen::<i64>();

        let plain = run(&mut lift_pure(f), stream.clone());
        ensure(
            run(&mut compose(identity(), lift_pure(f)), stream.clone()) == plain,
            || format!("left identity, stream {k}"),
        )?;
        ensure(
            run(&mut compose(lift_pure(f), identity()), stream.clone()) == plain,
            || format!("right identity, stream {k}"),
        )?;
        ensure(
            run(&mut compose(lift_pure(f), lift_pure(g)), stream.clone())
                == run(&mut lift_pure(move |x| g(f(x))), stream.clone()),
            || format!("functor law, stream {k}"),
        )?;
        ensure(
            run(
                &mut compose(compose(lift_pure(f), delay_one(init)), lift_pure(h)),
                stream.clone(),
            ) == run(
                &mut compose(lift_pure(f), compose(delay_one(init), lift_pure(h))),
                stream.clone(),
            ),
            || format!("associativity, stream {k}"),
        )?;

        let delayed = run(&mut delay_one(init), stream.clone());
        let want: Vec<i64> = std::iter::once(init)
            .chain(inputs.iter().copied())
            .take(len)
            .collect();
        ensure(delayed == want, || format!("unit delay, stream {k}"))?;

        let body = lift_pure(move |(x, st): (i64, i64)| {
            let out = f(x).wrapping_add(st);
            (out, g(out))
        });
        let looped = run(&mut feedback(init, body), stream);
        let mut st = init;
        let unrolled: Vec<i64> = inputs
            .iter()
            .map(|&x| {
                let out = f(x).wrapping_add(st);
                st = g(out);
                out
            })
            .collect();
        ensure(looped == unrolled, || {
            format!("feedback unroll, stream {k}")
        })?;
    }
    within(Duration::from_secs(5), start.elapsed())?;
    Ok(format!("{streams} streams in {:.2?}", start.elapsed()))
}

fn decision_examples() -> Outcome {
    let cases = [
        (shifting(6500.0, 3), 4),
        (shifting(6500.0, 6), 6),
        (shifting(2500.0, 1), 1),
        (shifting(4000.0, 3), 3),
    ];
    for (k, (got, want)) in cases.iter().enumerate() {
        ensure(got == want, || {
            format!("shifting case {k}: {got} != {want}")
        })?;
    }
    ensure(gas(50.0, 0.0) == 1.0, || "gas(50, 0)".into())?;
    ensure(gas(120.0, 0.0) == 0.0, || "gas(120, 0)".into())?;
    ensure(gas(80.0, 0.5) == 0.0, || "gas(80, 0.5)".into())?;
    let steer = [
        (steering(0.0, 0.0), 0.0),
        (steering(PI / 14.0, 0.0), 1.0),
        (steering(0.1, 0.5), 0.1 * 14.0 / PI - 0.05),
    ];
    for (k, (got, want)) in steer.iter().enumerate() {
        ensure((got - want).abs() <= 1e-9, || {
            format!("steering case {k}: {got} vs {want}")
        })?;
    }
    ensure((steering(0.1, 0.5) - 0.395_634).abs() < 5e-7, || {
        "steering(0.1, 0.5)".into()
    })?;
    Ok("shifting, gas and steering examples hold".into())
}

fn solo_lap() -> Outcome {
    let start = Instant::now();
    let cfg = SimConfig {
        dt: DEFAULT_DT,
        max_steps: 60_000,
        laps: Some(1),
        ..SimConfig::default()
    };
    let report = start_driver(my_driver(), &cfg).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    ensure(report.laps_completed() >= 1, || {
        format!("{} laps in {} steps", report.laps_completed(), report.steps)
    })?;
    ensure(report.max_abs_track_pos() <= 1.0, || {
        format!("max |trackPos| {}", report.max_abs_track_pos())
    })?;
    within(Duration::from_secs(10), took)?;
    Ok(format!(
        "lap in {} steps, max |trackPos| {:.4}, {took:.2?}",
        report.steps,
        report.max_abs_track_pos()
    ))
}

fn reference_equivalence() -> Outcome {
    let dt = TimeDelta::new(DEFAULT_DT).unwrap();
    let streams = 5;
    for seed in 0..streams {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let mut sf = my_driver();
        let mut reference = common::ReferenceDriver::new();
        for t in 0..10_000 {
            let cs = common::car_state(&mut rng);
            let got = sf.step(dt, cs.clone());
            let want = reference.step(&cs);
            let same = got == want
                && got.accel.to_bits() == want.accel.to_bits()
                && got.steer.to_bits() == want.steer.to_bits();
            ensure(same, || {
                format!("stream {seed}, step {t}: {got:?} vs {want:?}")
            })?;
        }
    }
    Ok(format!("{streams} streams of 10000 steps, bit-exact"))
}

fn codec() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for k in 0..10_000 {
        let cs = common::car_state(&mut rng);
        let back =
            parse_sensors(serialize_sensors(&cs)).map_err(|e| format!("sensors {k}: {e}"))?;
        ensure(back.value == cs, || format!("sensor round trip {k}"))?;
        let ds = common::drive_state(&mut rng);
        let back =
            parse_actions(serialize_actions(&ds)).map_err(|e| format!("actions {k}: {e}"))?;
        ensure(back.value == ds, || format!("action round trip {k}"))?;
    }
    let mut rejected = 0;
    for _ in 0..10_000 {
        let bytes = common::fuzz_bytes(&mut rng);
        let outcome = std::panic::catch_unwind(|| {
            (
                parse_sensors(&bytes).is_err(),
                parse_actions(&bytes).is_err(),
            )
        })
        .map_err(|_| format!("parser panicked on {bytes:?}"))?;
        rejected += outcome.0 as u32 + outcome.1 as u32;
    }
    within(Duration::from_secs(5), start.elapsed())?;
    Ok(format!(
        "10000+10000 round trips, 10000 fuzz inputs ({rejected} rejections), {:.2?}",
        start.elapsed()
    ))
}

fn bus_delivery() -> Outcome {
    const N: usize = 3;
    const TARGET: u64 = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut bus = PlatoonBus::new(N).unwrap();
    let published = AtomicU64::new(0);
    let delivered = AtomicU64::new(0);
    let problems = Mutex::new(Vec::<String>::new());
    let mut step: u64 = 0;
    loop {
        let remaining = TARGET - published.load(Ordering::Relaxed);
        // each vehicle reads once and maybe publishes once, in a random
        // interleaving on the thread pool
        let mut plan: Vec<(usize, bool, bool, u64)> = (0..N)
            .map(|id| (id, rng.gen_bool(0.8), rng.gen(), rng.gen()))
            .collect();
        plan.shuffle(&mut rng);
        let mut budget = remaining;
        for p in plan.iter_mut() {
            p.1 &= budget > 0;
            budget -= p.1 as u64;
        }
        let bus_ref = &bus;
        plan.par_iter()
            .for_each(|&(id, publish, read_first, jitter)| {
                let read = || {
                    let snap = bus_ref.snapshot(VehicleId(id)).unwrap();
                    for (from, m) in snap {
                        if from.0 == id {
                            problems
                                .lock()
                                .unwrap()
                                .push(format!("self delivery at {step}"));
                        }
                        if m.is_empty() {
                            continue;
                        }
                        delivered.fetch_add(1, Ordering::Relaxed);
                        let sent: u64 = m.as_str().split(':').next().unwrap().parse().unwrap();
                        if sent + 1 != step {
                            problems
                                .lock()
                                .unwrap()
                                .push(format!("message from step {sent} read at {step}"));
                        }
                    }
                };
                let write = || {
                    if publish {
                        let m = Message::new(format!("{step}:{id}")).unwrap();
                        bus_ref.publish(VehicleId(id), m).unwrap();
                        published.fetch_add(1, Ordering::Relaxed);
                    }
                };
                for _ in 0..(jitter % 64) {
                    std::hint::spin_loop();
                }
                if read_first {
                    read();
                    write();
                } else {
                    write();
                    read();
                }
            });
        bus.advance();
        step += 1;
        if published.load(Ordering::Relaxed) == TARGET && remaining == 0 {
            break;
        }
    }
    let problems = problems.into_inner().unwrap();
    ensure(problems.is_empty(), || {
        format!("{} problems, first: {}", problems.len(), problems[0])
    })?;
    let (p, d) = (published.into_inner(), delivered.into_inner());
    ensure(d == p * (N as u64 - 1), || {
        format!("{d} deliveries for {p} publishes")
    })?;
    let stats = bus.stats();
    ensure(stats.published == p && stats.delivered == d, || {
        format!("bus counted {stats:?}")
    })?;
    Ok(format!("{p} publishes, {d} deliveries over {step} steps"))
}

fn platoon_behavior(dir: &Path) -> Outcome {
    let log = dir.join("platoon.csv");
    let base = 50.0;
    let mut cfg = SimConfig::default().with_drivers(&[
        DriverKind::Platoon { target_speed: base },
        DriverKind::Platoon { target_speed: 80.0 },
        DriverKind::Platoon { target_speed: 80.0 },
    ]);
    // follower 2 m behind the slow leader, third car further back
    for (v, s) in cfg.vehicles.iter_mut().zip([20.0, 18.0, 8.0]) {
        v.start_offset = s;
    }
    cfg.max_steps = 3000;
    cfg.log_path = Some(log.clone());
    let mut sim = Simulation::new(&cfg, configured_drivers(&cfg)).map_err(|e| e.to_string())?;
    sim.run(cfg.max_steps, None).map_err(|e| e.to_string())?;
    drop(sim);

    let rows = read_csv(&log).map_err(|e| e.to_string())?;
    let at = |step: usize, id: usize| -> &TelemetryRow { &rows[step * 3 + id] };
    let steps = rows.len() / 3;
    let asked = |step: usize| (1..3).any(|id| at(step, id).broadcast == "faster");
    ensure(at(0, 1).broadcast == "faster", || {
        "follower did not ask at step 0".into()
    })?;

    let mut raised = 0;
    for t in 1..steps {
        let lead = at(t, 0);
        let threshold = if asked(t - 1) { base + 10.0 } else { base };
        let want = if lead.speed_x < threshold { 1.0 } else { 0.0 };
        ensure(lead.accel == want, || {
            format!(
                "step {t}: leader at {} km/h, threshold {threshold}, accel {}",
                lead.speed_x, lead.accel
            )
        })?;
        if asked(t - 1) && (base..base + 10.0).contains(&lead.speed_x) {
            raised += 1;
        }
    }
    ensure(raised > 0, || {
        "leader never drove under a raised threshold".into()
    })?;
    Ok(format!(
        "{raised} steps where the raised threshold changed the leader's throttle"
    ))
}

fn determinism(dir: &Path) -> Outcome {
    let run_once = |name: &str, parallel: bool| -> Result<Vec<u8>, String> {
        let log = dir.join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_reactive-platoon"));
        cmd.args([
            "run-platoon",
            "--steps",
            "20000",
            "--seed",
            "42",
            "--drop-prob",
            "0.3",
        ])
        .arg("--log")
        .arg(&log);
        if parallel {
            cmd.arg("--parallel");
        }
        let out = cmd.output().map_err(|e| e.to_string())?;
        ensure(out.status.success(), || {
            format!("{name}: {}", String::from_utf8_lossy(&out.stderr))
        })?;
        std::fs::read(&log).map_err(|e| e.to_string())
    };
    let a = run_once("a.csv", false)?;
    let b = run_once("b.csv", false)?;
    let c = run_once("c.csv", true)?;
    ensure(a == b, || "repeated runs differ".into())?;
    ensure(a == c, || "parallel run differs".into())?;
    let rows = a.iter().filter(|&&b| b == b'\n').count() - 1;
    ensure(rows == 60_000, || format!("{rows} rows"))?;
    Ok(format!("3 runs, {} bytes each, identical", a.len()))
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let checks: Vec<Check> = vec![
        ("arrow laws", Box::new(arrow_laws)),
        ("decision function examples", Box::new(decision_examples)),
        ("solo lap", Box::new(solo_lap)),
        ("reference equivalence", Box::new(reference_equivalence)),
        ("codec round trip and fuzz", Box::new(codec)),
        ("platoon delivery", Box::new(bus_delivery)),
        (
            "platoon behavior",
            Box::new(|| platoon_behavior(dir.path())),
        ),
        ("determinism", Box::new(|| determinism(dir.path()))),
    ];
    let mut failed = 0;
    for (k, (name, check)) in checks.iter().enumerate() {
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check))
            .unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {why}", k + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
