use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use reactive_platoon_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(rp_last_error()) }
        .to_string_lossy()
        .into_owned()
}

fn take(s: *mut c_char) -> String {
    let text = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    unsafe { rp_string_free(s) };
    text
}

#[test]
fn actions_round_trip_through_c_structs() {
    let text = CString::new("(accel 0.75)(steer -2)(gear 4)(bcast hello there)").unwrap();
    let mut ds = std::mem::MaybeUninit::<RpDriveState>::uninit();
    let mut clamped = false;
    let status = unsafe { rp_parse_actions(text.as_ptr(), ds.as_mut_ptr(), &mut clamped) };
    assert_eq!(status, RpStatus::Ok);
    assert!(clamped);
    let ds = unsafe { ds.assume_init() };
    assert_eq!(ds.accel, 0.75);
    assert_eq!(ds.steer, -1.0);
    assert_eq!(ds.gear, 4);

    let mut out = ptr::null_mut();
    assert_eq!(unsafe { rp_serialize_actions(&ds, &mut out) }, RpStatus::Ok);
    assert_eq!(
        take(out),
        "(accel 0.75)(brake 0)(clutch 0)(gear 4)(steer -1)(meta 0)(bcast hello there)"
    );
}

#[test]
fn sensors_round_trip_through_c_structs() {
    let mut cs = std::mem::MaybeUninit::<RpCarState>::uninit();
    assert_eq!(
        unsafe { rp_car_state_default(cs.as_mut_ptr()) },
        RpStatus::Ok
    );
    let mut cs = unsafe { cs.assume_init() };
    cs.angle = 0.125;
    cs.track[3] = 17.5;
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { rp_serialize_sensors(&cs, &mut out) }, RpStatus::Ok);
    let text = CString::new(take(out)).unwrap();
    let mut back = cs;
    back.angle = 0.0;
    assert_eq!(
        unsafe { rp_parse_sensors(text.as_ptr(), &mut back, ptr::null_mut()) },
        RpStatus::Ok
    );
    assert_eq!(back, cs);
}

#[test]
fn errors_are_reported_with_status_and_message() {
    let bad = CString::new("(accel nope)").unwrap();
    let mut ds = std::mem::MaybeUninit::<RpDriveState>::uninit();
    assert_eq!(
        unsafe { rp_parse_actions(bad.as_ptr(), ds.as_mut_ptr(), ptr::null_mut()) },
        RpStatus::Parse
    );
    assert!(last_error().contains("byte"), "{}", last_error());
    assert_eq!(
        unsafe { rp_parse_actions(ptr::null(), ds.as_mut_ptr(), ptr::null_mut()) },
        RpStatus::NullPointer
    );
    let mut driver = ptr::null_mut();
    let kind = CString::new("nobody").unwrap();
    assert_eq!(
        unsafe { rp_driver_new(kind.as_ptr(), &mut driver) },
        RpStatus::InvalidArgument
    );
    assert!(driver.is_null());
}

#[test]
fn platoon_driver_reacts_to_messages() {
    let kind = CString::new("platoon:60").unwrap();
    let mut driver = ptr::null_mut();
    assert_eq!(
        unsafe { rp_driver_new(kind.as_ptr(), &mut driver) },
        RpStatus::Ok
    );
    let mut cs = std::mem::MaybeUninit::<RpCarState>::uninit();
    unsafe { rp_car_state_default(cs.as_mut_ptr()) };
    let mut cs = unsafe { cs.assume_init() };
    cs.speed_x = 65.0;
    let mut out = std::mem::MaybeUninit::<RpDriveState>::uninit();

    let status = unsafe {
        rp_driver_step(
            driver,
            0.02,
            &cs,
            ptr::null(),
            ptr::null(),
            0,
            out.as_mut_ptr(),
        )
    };
    assert_eq!(status, RpStatus::Ok);
    assert_eq!(unsafe { out.assume_init() }.accel, 0.0);

    let faster = CString::new("faster").unwrap();
    let ids = [1usize];
    let msgs = [faster.as_ptr()];
    let status = unsafe {
        rp_driver_step(
            driver,
            0.02,
            &cs,
            ids.as_ptr(),
            msgs.as_ptr(),
            1,
            out.as_mut_ptr(),
        )
    };
    assert_eq!(status, RpStatus::Ok);
    assert_eq!(unsafe { out.assume_init() }.accel, 1.0);

    assert_eq!(
        unsafe {
            rp_driver_step(
                driver,
                0.0,
                &cs,
                ptr::null(),
                ptr::null(),
                0,
                out.as_mut_ptr(),
            )
        },
        RpStatus::InvalidArgument
    );
    unsafe { rp_driver_free(driver) };
}

#[test]
fn bus_handle_delivers_one_step_late() {
    let mut bus = ptr::null_mut();
    assert_eq!(unsafe { rp_bus_new(3, &mut bus) }, RpStatus::Ok);
    let hi = CString::new("hi").unwrap();
    assert_eq!(unsafe { rp_bus_publish(bus, 2, hi.as_ptr()) }, RpStatus::Ok);
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { rp_bus_receive(bus, 0, 2, &mut out) }, RpStatus::Ok);
    assert_eq!(take(out), "");
    assert_eq!(unsafe { rp_bus_advance(bus) }, RpStatus::Ok);
    assert_eq!(unsafe { rp_bus_receive(bus, 0, 2, &mut out) }, RpStatus::Ok);
    assert_eq!(take(out), "hi");
    assert_eq!(
        unsafe { rp_bus_publish(bus, 7, hi.as_ptr()) },
        RpStatus::UnknownVehicle
    );
    let (mut p, mut d) = (0u64, 0u64);
    assert_eq!(unsafe { rp_bus_stats(bus, &mut p, &mut d) }, RpStatus::Ok);
    assert_eq!((p, d), (1, 1));
    unsafe { rp_bus_free(bus) };
    unsafe { rp_bus_free(ptr::null_mut()) };
}

#[test]
fn simulation_handle_runs_a_lap() {
    let drivers = CString::new("my").unwrap();
    let mut sim = ptr::null_mut();
    assert_eq!(
        unsafe { rp_sim_new(drivers.as_ptr(), &mut sim) },
        RpStatus::Ok
    );
    assert_eq!(unsafe { rp_sim_vehicle_count(sim) }, 1);
    assert_eq!(unsafe { rp_sim_step(sim, 2000) }, RpStatus::Ok);
    let mut pose = std::mem::MaybeUninit::<RpPose>::uninit();
    assert_eq!(
        unsafe { rp_sim_pose(sim, 0, pose.as_mut_ptr()) },
        RpStatus::Ok
    );
    let pose = unsafe { pose.assume_init() };
    assert!(pose.lap_count >= 1);
    assert!(pose.track_pos.abs() <= 1.0);
    assert_eq!(
        unsafe { rp_sim_pose(sim, 1, &mut std::mem::zeroed()) },
        RpStatus::UnknownVehicle
    );
    unsafe { rp_sim_free(sim) };

    let missing = CString::new("/nonexistent/run.cfg").unwrap();
    assert_eq!(
        unsafe { rp_sim_from_config(missing.as_ptr(), &mut sim) },
        RpStatus::Io
    );
}

/// Directory holding this crate's build artifacts for the current profile.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_header() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let lib = artifact_dir().join("libreactive_platoon_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let out_dir = tempfile::tempdir().unwrap();
    let exe = out_dir.path().join("smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let build = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(dir.join("include"))
        .arg(dir.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output();
    let build = match build {
        Ok(b) => b,
        Err(e) => {
            eprintln!("skipping: no C compiler ({cc}): {e}");
            return;
        }
    };
    assert!(
        build.status.success(),
        "{}",
        String::from_utf8_lossy(&build.stderr)
    );
    let run = Command::new(&exe).output().unwrap();
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "ok");
}
