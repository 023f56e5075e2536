//! Scripted stand-in for an SCRC race server, for exercising the UDP client
//! without a simulator.

use std::io;
use std::net::{SocketAddr, UdpSocket};
use std::thread::JoinHandle;
use std::time::Duration;

use crate::codec::{parse_actions, parse_init, serialize_sensors};
use crate::model::{CarState, DriveState};

#[derive(Debug, Clone, Default)]
pub struct LoopbackScript {
    /// Sensor datagrams to send after identification.
    pub cycles: usize,
    /// Send a garbled datagram instead of sensors before this cycle.
    pub malformed_at: Option<usize>,
    /// Send `***restart***` before this cycle and redo the handshake.
    pub restart_at: Option<usize>,
    /// Stay silent for this many init datagrams before answering.
    pub ignore_inits: u32,
}

#[derive(Debug, Default)]
pub struct LoopbackLog {
    pub inits: Vec<(String, Vec<f64>)>,
    pub actions: Vec<DriveState>,
    pub sensors_sent: Vec<CarState>,
}

pub struct LoopbackServer {
    addr: SocketAddr,
    handle: JoinHandle<io::Result<LoopbackLog>>,
}

impl LoopbackServer {
    pub fn start(script: LoopbackScript) -> io::Result<Self> {
        let sock = UdpSocket::bind(("127.0.0.1", 0))?;
        sock.set_read_timeout(Some(Duration::from_secs(3)))?;
        let addr = sock.local_addr()?;
        let handle = std::thread::spawn(move || serve(sock, script));
        Ok(LoopbackServer { addr, handle })
    }

    pub fn port(&self) -> u16 {
        self.addr.port()
    }

    pub fn join(self) -> io::Result<LoopbackLog> {
        self.handle
            .join()
            .map_err(|_| io::Error::other("loopback server panicked"))?
    }
}

/// Sensor sample for cycle `k`: engine speed sweeps through the shift
/// thresholds and the car drifts left of center.
pub fn scripted_sensors(k: usize) -> CarState {
    CarState {
        rpm: 2000.0 + 100.0 * k as f64,
        speed_x: k as f64,
        track_pos: 0.01 * (k % 50) as f64,
        angle: 0.001 * k as f64,
        gear: 1,
        ..CarState::default()
    }
}

fn handshake(
    sock: &UdpSocket,
    buf: &mut [u8],
    ignore: &mut u32,
    log: &mut LoopbackLog,
) -> io::Result<SocketAddr> {
    loop {
        let (n, peer) = sock.recv_from(buf)?;
        if let Some(init) = parse_init(&buf[..n]) {
            log.inits.push(init);
            if *ignore > 0 {
                *ignore -= 1;
                continue;
            }
            sock.send_to(b"***identified***", peer)?;
            return Ok(peer);
        }
    }
}

fn serve(sock: UdpSocket, script: LoopbackScript) -> io::Result<LoopbackLog> {
    let mut buf = vec![0u8; 65_536];
    let mut log = LoopbackLog::default();
    let mut ignore = script.ignore_inits;
    let mut peer = handshake(&sock, &mut buf, &mut ignore, &mut log)?;
    for k in 0..script.cycles {
        if script.restart_at == Some(k) {
            sock.send_to(b"***restart***", peer)?;
            peer = handshake(&sock, &mut buf, &mut ignore, &mut log)?;
        }
        if script.malformed_at == Some(k) {
            sock.send_to(b"(angle 0.1)(rpm 12x4)", peer)?;
        }
        let cs = scripted_sensors(k);
        sock.send_to(serialize_sensors(&cs).as_bytes(), peer)?;
        log.sensors_sent.push(cs);
        let (n, _) = sock.recv_from(&mut buf)?;
        let parsed = parse_actions(&buf[..n])
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?;
        log.actions.push(parsed.value);
    }
    sock.send_to(b"***shutdown***", peer)?;
    Ok(log)
}
