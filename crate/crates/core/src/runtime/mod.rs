//! Party identity, channels, correlated randomness and communication
//! accounting.
//!
//! Each party runs its protocol code on one logical thread. All interaction
//! goes through a [`Transport`]; the in-memory simulator and the TCP transport
//! carry identical payloads, so outputs and statistics do not depend on the
//! transport.
//!
//! A protocol step that moves data is one round. Every party counts the round
//! when the step completes, including parties that only send or only receive
//! in it, so all parties agree on the round count.

mod config;
mod prf;
mod sim;
mod tcp;

use std::fmt;
use std::ops::{Add, Sub};
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use config::NetConfig;
pub use prf::{Correlated, Prf, PrfKey, PrfSetup};
pub use sim::{run_simulated, run_simulated_with, sim_mesh, SimTransport};
pub use tcp::{run_tcp, run_tcp_local, run_tcp_local_with_chunk, TcpTransport, MAX_FRAME};

use crate::error::{Error, Result};
use crate::ring::RingElem;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PartyId(u8);

impl PartyId {
    pub const P0: PartyId = PartyId(0);
    pub const P1: PartyId = PartyId(1);
    pub const P2: PartyId = PartyId(2);
    pub const ALL: [PartyId; 3] = [PartyId::P0, PartyId::P1, PartyId::P2];

    pub fn new(id: usize) -> Result<Self> {
        match id {
            0..=2 => Ok(PartyId(id as u8)),
            _ => Err(Error::InvalidParty(id)),
        }
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn next(self) -> PartyId {
        PartyId((self.0 + 1) % 3)
    }

    #[inline]
    pub fn prev(self) -> PartyId {
        PartyId((self.0 + 2) % 3)
    }
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.0)
    }
}

/// Ordered, reliable, exactly-once message stream to the two other parties.
pub trait Transport: Send {
    fn send(&mut self, to: PartyId, payload: Vec<u8>) -> Result<()>;
    fn recv(&mut self, from: PartyId) -> Result<Vec<u8>>;
}

/// One party's communication counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartyStats {
    pub bytes_sent: u64,
    pub bytes_received: u64,
    pub messages: u64,
    pub rounds: u64,
}

impl Add for PartyStats {
    type Output = PartyStats;
    fn add(self, rhs: PartyStats) -> PartyStats {
        PartyStats {
            bytes_sent: self.bytes_sent + rhs.bytes_sent,
            bytes_received: self.bytes_received + rhs.bytes_received,
            messages: self.messages + rhs.messages,
            rounds: self.rounds + rhs.rounds,
        }
    }
}

impl Sub for PartyStats {
    type Output = PartyStats;
    fn sub(self, rhs: PartyStats) -> PartyStats {
        PartyStats {
            bytes_sent: self.bytes_sent - rhs.bytes_sent,
            bytes_received: self.bytes_received - rhs.bytes_received,
            messages: self.messages - rhs.messages,
            rounds: self.rounds - rhs.rounds,
        }
    }
}

/// Statistics of one protocol execution across the three parties.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommStats {
    pub label: String,
    pub parties: [PartyStats; 3],
}

impl CommStats {
    pub fn new(label: impl Into<String>, parties: [PartyStats; 3]) -> Self {
        CommStats {
            label: label.into(),
            parties,
        }
    }

    pub fn bytes_per_party(&self) -> [u64; 3] {
        self.parties.map(|p| p.bytes_sent)
    }

    pub fn total_bytes(&self) -> u64 {
        self.parties.iter().map(|p| p.bytes_sent).sum()
    }

    pub fn messages(&self) -> u64 {
        self.parties.iter().map(|p| p.messages).sum()
    }

    /// Protocol round count: the maximum over parties.
    pub fn rounds(&self) -> u64 {
        self.parties.iter().map(|p| p.rounds).max().unwrap_or(0)
    }
}

pub struct Party {
    id: PartyId,
    transport: Box<dyn Transport>,
    prf: PrfSetup,
    stats: PartyStats,
}

impl Party {
    pub fn new(id: PartyId, transport: Box<dyn Transport>, prf: PrfSetup) -> Self {
        Party {
            id,
            transport,
            prf,
            stats: PartyStats::default(),
        }
    }

    pub fn id(&self) -> PartyId {
        self.id
    }

    pub fn stats(&self) -> PartyStats {
        self.stats
    }

    pub fn prf(&mut self) -> &mut PrfSetup {
        &mut self.prf
    }

    /// Run `f` and return its result with the communication it caused.
    pub fn measure<T>(&mut self, f: impl FnOnce(&mut Party) -> Result<T>) -> Result<(T, PartyStats)> {
        let before = self.stats;
        let out = f(self)?;
        Ok((out, self.stats - before))
    }

    pub fn send_bytes(&mut self, to: PartyId, payload: Vec<u8>) -> Result<()> {
        self.stats.bytes_sent += payload.len() as u64;
        self.stats.messages += 1;
        self.transport.send(to, payload)
    }

    pub fn recv_bytes(&mut self, from: PartyId, expected: usize) -> Result<Vec<u8>> {
        let payload = self.transport.recv(from)?;
        if payload.len() != expected {
            return Err(Error::MessageLength {
                party: self.id,
                peer: from,
                expected,
                actual: payload.len(),
            });
        }
        self.stats.bytes_received += payload.len() as u64;
        Ok(payload)
    }

    pub fn send_ring(&mut self, to: PartyId, values: &[RingElem]) -> Result<()> {
        let mut buf = Vec::with_capacity(values.len() * 8);
        for v in values {
            buf.extend_from_slice(&v.0.to_le_bytes());
        }
        self.send_bytes(to, buf)
    }

    pub fn recv_ring(&mut self, from: PartyId, n: usize) -> Result<Vec<RingElem>> {
        let buf = self.recv_bytes(from, n * 8)?;
        Ok(buf
            .chunks_exact(8)
            .map(|c| RingElem(u64::from_le_bytes(c.try_into().unwrap())))
            .collect())
    }

    /// Send the low `width` bits of each word, packed LSB-first.
    pub fn send_bits(&mut self, to: PartyId, words: &[u64], width: u32) -> Result<()> {
        self.send_bytes(to, pack_bits(words, width))
    }

    pub fn recv_bits(&mut self, from: PartyId, n: usize, width: u32) -> Result<Vec<u64>> {
        let buf = self.recv_bytes(from, packed_len(n, width))?;
        Ok(unpack_bits(&buf, n, width))
    }

    /// Mark the end of one communication step.
    pub fn end_round(&mut self) {
        self.stats.rounds += 1;
    }
}

pub fn packed_len(n: usize, width: u32) -> usize {
    (n * width as usize).div_ceil(8)
}

pub fn pack_bits(words: &[u64], width: u32) -> Vec<u8> {
    if width == 64 {
        return words.iter().flat_map(|w| w.to_le_bytes()).collect();
    }
    let mut out = vec![0u8; packed_len(words.len(), width)];
    let mut pos = 0usize;
    for &w in words {
        for b in 0..width {
            if (w >> b) & 1 == 1 {
                out[pos / 8] |= 1 << (pos % 8);
            }
            pos += 1;
        }
    }
    out
}

pub fn unpack_bits(buf: &[u8], n: usize, width: u32) -> Vec<u64> {
    if width == 64 {
        return buf
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect();
    }
    let mut out = vec![0u64; n];
    let mut pos = 0usize;
    for w in out.iter_mut() {
        for b in 0..width {
            if (buf[pos / 8] >> (pos % 8)) & 1 == 1 {
                *w |= 1 << b;
            }
            pos += 1;
        }
    }
    out
}

/// Outputs of all three parties together with the run's statistics.
#[derive(Debug)]
pub struct RunOutput<T> {
    pub outputs: [T; 3],
    pub stats: CommStats,
}

/// Pick the most informative error when several parties fail: a closed
/// channel is usually a consequence of another party's failure.
pub(crate) fn root_cause(errors: Vec<Error>) -> Error {
    let mut errors = errors;
    let idx = errors
        .iter()
        .position(|e| !matches!(e, Error::ChannelClosed { .. }))
        .unwrap_or(0);
    errors.swap_remove(idx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn neighbours() {
        assert_eq!(PartyId::P0.next(), PartyId::P1);
        assert_eq!(PartyId::P0.prev(), PartyId::P2);
        assert_eq!(PartyId::P2.next(), PartyId::P0);
        assert!(PartyId::new(3).is_err());
    }

    #[test]
    fn bit_packing_is_lsb_first() {
        assert_eq!(pack_bits(&[1, 0, 1, 1], 1), vec![0b1101]);
        assert_eq!(pack_bits(&[0b10, 0b11], 2), vec![0b1110]);
        assert_eq!(packed_len(9, 1), 2);
    }

    proptest! {
        #[test]
        fn packing_round_trips(words in proptest::collection::vec(any::<u64>(), 0..40), width in 1u32..=64) {
            let mask = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };
            let masked: Vec<u64> = words.iter().map(|w| w & mask).collect();
            let packed = pack_bits(&masked, width);
            prop_assert_eq!(packed.len(), packed_len(words.len(), width));
            prop_assert_eq!(unpack_bits(&packed, words.len(), width), masked);
        }
    }
}
