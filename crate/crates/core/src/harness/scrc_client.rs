use std::io::ErrorKind;
use std::net::UdpSocket;
use std::time::Duration;

use log::{info, warn};
use thiserror::Error;

use crate::codec::{
    default_rangefinder_angles, init_message, parse_control, parse_sensors, serialize_actions,
    Control, InitError,
};
use crate::controllers::Driver;
use crate::frp::TimeDelta;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("socket: {0}")]
    Socket(#[from] std::io::Error),
    #[error(transparent)]
    Init(#[from] InitError),
    #[error("no datagram from {addr} after {timeouts} consecutive timeouts")]
    ServerSilent { addr: String, timeouts: u32 },
    #[error("control period must be positive")]
    BadPeriod,
}

#[derive(Debug, Clone)]
pub struct ScrcClientConfig {
    pub host: String,
    pub port: u16,
    pub client_id: String,
    /// Time step handed to the driver for each sensor datagram.
    pub dt: f64,
    pub angles_deg: [f64; 19],
    pub recv_timeout: Duration,
    /// Consecutive timeouts tolerated before giving up.
    pub max_timeouts: u32,
    /// Stop after this many control cycles.
    pub max_cycles: Option<u64>,
}

impl Default for ScrcClientConfig {
    fn default() -> Self {
        ScrcClientConfig {
            host: "127.0.0.1".into(),
            port: 3001,
            client_id: "SCR".into(),
            dt: super::config::DEFAULT_DT,
            angles_deg: default_rangefinder_angles(),
            recv_timeout: Duration::from_secs(1),
            max_timeouts: 5,
            max_cycles: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClientExit {
    Shutdown,
    CycleLimit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientReport {
    pub cycles: u64,
    pub parse_errors: u64,
    pub restarts: u32,
    pub exit: ClientExit,
}

enum Recv {
    Data(usize),
    Timeout,
}

fn recv(sock: &UdpSocket, buf: &mut [u8]) -> Result<Recv, std::io::Error> {
    match sock.recv(buf) {
        Ok(n) => Ok(Recv::Data(n)),
        Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {
            Ok(Recv::Timeout)
        }
        Err(e) => Err(e),
    }
}

/// Drives one car on an SCRC-speaking server over UDP.
///
/// Sends the init datagram until the server answers `***identified***`, then
/// answers every sensor datagram with the driver's action datagram.
/// `***restart***` rebuilds the driver with `make_driver` and repeats the
/// handshake; `***shutdown***` ends the session. A receive timeout resends the
/// handshake; too many in a row end the session with an error. Sensor
/// datagrams that fail to parse are logged and skipped.
pub fn run_scrc_client<F>(
    mut make_driver: F,
    cfg: &ScrcClientConfig,
) -> Result<ClientReport, ClientError>
where
    F: FnMut() -> Driver,
{
    let dt = TimeDelta::new(cfg.dt).map_err(|_| ClientError::BadPeriod)?;
    let init = init_message(&cfg.client_id, &cfg.angles_deg)?;
    let addr = format!("{}:{}", cfg.host, cfg.port);
    let sock = UdpSocket::bind(("0.0.0.0", 0))?;
    sock.connect(&addr)?;
    sock.set_read_timeout(Some(cfg.recv_timeout))?;

    let mut buf = vec![0u8; 65_536];
    let mut driver = make_driver();
    let mut report = ClientReport {
        cycles: 0,
        parse_errors: 0,
        restarts: 0,
        exit: ClientExit::Shutdown,
    };
    let mut identified = false;
    let mut timeouts = 0u32;
    sock.send(init.as_bytes())?;

    loop {
        if cfg.max_cycles.is_some_and(|m| report.cycles >= m) {
            report.exit = ClientExit::CycleLimit;
            return Ok(report);
        }
        let n = match recv(&sock, &mut buf)? {
            Recv::Timeout => {
                timeouts += 1;
                if timeouts > cfg.max_timeouts {
                    return Err(ClientError::ServerSilent { addr, timeouts });
                }
                warn!("no datagram within {:?}, resending init", cfg.recv_timeout);
                identified = false;
                sock.send(init.as_bytes())?;
                continue;
            }
            Recv::Data(n) => n,
        };
        timeouts = 0;
        let datagram = &buf[..n];
        match parse_control(datagram) {
            Control::Identified => {
                info!("identified by {addr}");
                identified = true;
                continue;
            }
            Control::Shutdown => {
                info!(
                    "server shut the session down after {} cycles",
                    report.cycles
                );
                report.exit = ClientExit::Shutdown;
                return Ok(report);
            }
            Control::Restart => {
                info!("server restarted the race");
                report.restarts += 1;
                driver = make_driver();
                identified = false;
                sock.send(init.as_bytes())?;
                continue;
            }
            Control::NotControl => {}
        }
        if !identified {
            continue;
        }
        match parse_sensors(datagram) {
            Ok(parsed) => {
                let cmd = driver.step(dt, parsed.value).clamped();
                sock.send(serialize_actions(&cmd).as_bytes())?;
                report.cycles += 1;
            }
            Err(e) => {
                report.parse_errors += 1;
                warn!("dropping sensor datagram: {e} (byte offset {})", e.offset());
            }
        }
    }
}
