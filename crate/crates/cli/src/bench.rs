//! Wall-clock and communication measurements behind `trinfer bench`.

use anyhow::{ensure, Result};
use serde::{Deserialize, Serialize};
use trinfer_core::harness::Backend;

use crate::verify::{verify_timed, Protocol};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub protocol: String,
    pub n: usize,
    pub mode: String,
    pub repeat: usize,
    pub wall_secs: Vec<f64>,
    pub mean_secs: f64,
    pub min_secs: f64,
    pub bytes_per_party: [u64; 3],
    pub total_bytes: u64,
    pub rounds: u64,
}

pub fn mode_name(backend: Backend) -> &'static str {
    match backend {
        Backend::Simulated => "sim",
        Backend::TcpLocal => "tcp",
    }
}

/// Run `protocol` `repeat` times on the same inputs. Byte and round counts
/// must agree across repetitions.
pub fn bench(protocol: Protocol, n: usize, repeat: usize, seed: u64, backend: Backend) -> Result<BenchReport> {
    ensure!(repeat > 0, "repeat must be at least 1");
    let mut wall = Vec::with_capacity(repeat);
    let mut first: Option<([u64; 3], u64)> = None;
    let mut n_used = n;
    for _ in 0..repeat {
        let (rep, t) = verify_timed(protocol, n, seed, backend)?;
        let comm = (rep.bytes_per_party, rep.rounds);
        match first {
            None => first = Some(comm),
            Some(f) => ensure!(
                f == comm,
                "communication differs between repetitions: {f:?} vs {comm:?}"
            ),
        }
        n_used = rep.n;
        wall.push(t.as_secs_f64());
    }
    let (bytes, rounds) = first.expect("at least one repetition");
    Ok(BenchReport {
        protocol: protocol.name().to_string(),
        n: n_used,
        mode: mode_name(backend).to_string(),
        repeat,
        mean_secs: wall.iter().sum::<f64>() / repeat as f64,
        min_secs: wall.iter().copied().fold(f64::INFINITY, f64::min),
        wall_secs: wall,
        bytes_per_party: bytes,
        total_bytes: bytes.iter().sum(),
        rounds,
    })
}
