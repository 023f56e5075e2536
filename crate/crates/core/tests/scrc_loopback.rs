use std::time::Duration;

use reactive_platoon::codec::default_rangefinder_angles;
use reactive_platoon::controllers::my_driver;
use reactive_platoon::frp::TimeDelta;
use reactive_platoon::harness::loopback::{scripted_sensors, LoopbackScript, LoopbackServer};
use reactive_platoon::harness::{run_scrc_client, ClientExit, ScrcClientConfig};

fn client_for(server: &LoopbackServer) -> ScrcClientConfig {
    ScrcClientConfig {
        port: server.port(),
        client_id: "SCR".into(),
        recv_timeout: Duration::from_millis(200),
        ..ScrcClientConfig::default()
    }
}

fn expected_actions(cycles: usize) -> Vec<reactive_platoon::DriveState> {
    let mut d = my_driver();
    let dt = TimeDelta::new(0.02).unwrap();
    (0..cycles)
        .map(|k| d.step(dt, scripted_sensors(k)))
        .collect()
}

#[test]
fn hundred_cycles_then_shutdown() {
    let server = LoopbackServer::start(LoopbackScript {
        cycles: 100,
        ..LoopbackScript::default()
    })
    .unwrap();
    let report = run_scrc_client(my_driver, &client_for(&server)).unwrap();
    let log = server.join().unwrap();

    assert_eq!(report.cycles, 100);
    assert_eq!(report.exit, ClientExit::Shutdown);
    assert_eq!(report.parse_errors, 0);
    assert_eq!(log.inits.len(), 1);
    assert_eq!(log.inits[0].0, "SCR");
    assert_eq!(log.inits[0].1, default_rangefinder_angles().to_vec());
    assert_eq!(log.actions, expected_actions(100));
}

#[test]
fn malformed_datagram_is_skipped() {
    let server = LoopbackServer::start(LoopbackScript {
        cycles: 20,
        malformed_at: Some(7),
        ..LoopbackScript::default()
    })
    .unwrap();
    let report = run_scrc_client(my_driver, &client_for(&server)).unwrap();
    let log = server.join().unwrap();
    assert_eq!(report.parse_errors, 1);
    assert_eq!(report.cycles, 20);
    assert_eq!(log.actions, expected_actions(20));
}

#[test]
fn restart_rebuilds_the_driver() {
    let server = LoopbackServer::start(LoopbackScript {
        cycles: 30,
        restart_at: Some(10),
        ..LoopbackScript::default()
    })
    .unwrap();
    let report = run_scrc_client(my_driver, &client_for(&server)).unwrap();
    let log = server.join().unwrap();
    assert_eq!(report.restarts, 1);
    assert_eq!(log.inits.len(), 2);

    // the gear memory starts over after the restart
    let mut d = my_driver();
    let dt = TimeDelta::new(0.02).unwrap();
    let after: Vec<_> = (10..30).map(|k| d.step(dt, scripted_sensors(k))).collect();
    assert_eq!(&log.actions[..10], &expected_actions(10)[..]);
    assert_eq!(&log.actions[10..], &after[..]);
}

#[test]
fn unanswered_init_is_resent() {
    let server = LoopbackServer::start(LoopbackScript {
        cycles: 5,
        ignore_inits: 2,
        ..LoopbackScript::default()
    })
    .unwrap();
    let report = run_scrc_client(my_driver, &client_for(&server)).unwrap();
    let log = server.join().unwrap();
    assert_eq!(log.inits.len(), 3);
    assert_eq!(report.cycles, 5);
}

#[test]
fn cycle_limit_stops_the_client() {
    let server = LoopbackServer::start(LoopbackScript {
        cycles: 50,
        ..LoopbackScript::default()
    })
    .unwrap();
    let cfg = ScrcClientConfig {
        max_cycles: Some(10),
        ..client_for(&server)
    };
    let report = run_scrc_client(my_driver, &cfg).unwrap();
    assert_eq!(report.exit, ClientExit::CycleLimit);
    assert_eq!(report.cycles, 10);
    // the server is left waiting for an answer and times out on its own
    assert!(server.join().is_err());
}

#[test]
fn no_server_is_an_error() {
    let sock = std::net::UdpSocket::bind("127.0.0.1:0").unwrap();
    let port = sock.local_addr().unwrap().port();
    drop(sock);
    let cfg = ScrcClientConfig {
        port,
        recv_timeout: Duration::from_millis(20),
        max_timeouts: 2,
        ..ScrcClientConfig::default()
    };
    assert!(run_scrc_client(my_driver, &cfg).is_err());
}
