//! Analytic communication model.
//!
//! Each function returns the bytes every party sends and the round count of
//! the matching protocol, built from the same primitive invocations the
//! protocol performs. Tests compare these against measured [`CommStats`].
//!
//! [`CommStats`]: crate::runtime::CommStats

use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul};

use serde::Serialize;

use crate::nonlinear::LayerNormMode;
use crate::primitives::{EXP_T, RECIP_ITERATIONS, RECIP_POSITIONS, RSQRT_ITERATIONS, RSQRT_POSITIONS};
use crate::runtime::{packed_len, CommStats};
use crate::transformer::ModelConfig;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Cost {
    /// Bytes sent by each party.
    pub bytes: [u64; 3],
    pub rounds: u64,
}

impl Add for Cost {
    type Output = Cost;
    fn add(self, o: Cost) -> Cost {
        Cost {
            bytes: [0, 1, 2].map(|i| self.bytes[i] + o.bytes[i]),
            rounds: self.rounds + o.rounds,
        }
    }
}

impl AddAssign for Cost {
    fn add_assign(&mut self, o: Cost) {
        *self = *self + o;
    }
}

impl Mul<u64> for Cost {
    type Output = Cost;
    fn mul(self, k: u64) -> Cost {
        Cost {
            bytes: self.bytes.map(|b| b * k),
            rounds: self.rounds * k,
        }
    }
}

impl Sum for Cost {
    fn sum<I: Iterator<Item = Cost>>(iter: I) -> Cost {
        iter.fold(Cost::default(), Add::add)
    }
}

impl Cost {
    pub fn total_bytes(&self) -> u64 {
        self.bytes.iter().sum()
    }

    /// Whether a measurement matches this cost exactly.
    pub fn matches(&self, stats: &CommStats) -> bool {
        stats.bytes_per_party() == self.bytes && stats.rounds() == self.rounds
    }

    fn all(bytes: u64) -> Cost {
        Cost {
            bytes: [bytes; 3],
            rounds: 1,
        }
    }
}

fn n64(n: usize) -> u64 {
    n as u64
}

/// One ring element per value to one neighbour.
pub fn reshare(n: usize) -> Cost {
    Cost::all(8 * n64(n))
}

pub fn mul(n: usize) -> Cost {
    reshare(n)
}

pub fn open(n: usize) -> Cost {
    Cost::all(8 * n64(n))
}

/// Only party 0 sends.
pub fn trunc(n: usize) -> Cost {
    Cost {
        bytes: [8 * n64(n), 0, 0],
        rounds: 1,
    }
}

pub fn mul_fixed(n: usize) -> Cost {
    mul(n) + trunc(n)
}

pub fn square(n: usize) -> Cost {
    mul_fixed(n)
}

/// Boolean AND of `n` words, `width` bits each.
pub fn and(n: usize, width: u32) -> Cost {
    Cost::all(n64(packed_len(n, width)))
}

pub fn a2b(n: usize) -> Cost {
    // Carry-save step, generate bits, five paired prefix levels, last level.
    and(n, 64) + and(n, 64) + and(2 * n, 64) * 5 + and(n, 64)
}

pub fn lt(n: usize) -> Cost {
    a2b(n)
}

pub fn eq(n: usize) -> Cost {
    a2b(n) + [32, 16, 8, 4, 2, 1].into_iter().map(|w| and(n, w)).sum()
}

pub fn b2a(n: usize) -> Cost {
    mul(n) * 2
}

pub fn mul_ba(n: usize) -> Cost {
    b2a(n) + mul(n)
}

/// Row-wise maximum of `rows` rows of length `m`.
pub fn max_rows(rows: usize, m: usize) -> Cost {
    let mut c = Cost::default();
    let mut m = m;
    while m > 1 {
        let pairs = rows * (m / 2);
        c += lt(pairs) + mul_ba(pairs);
        m = m / 2 + m % 2;
    }
    c
}

pub fn onehot_msb(n: usize, positions: usize) -> Cost {
    a2b(n) + and(n, 64) * 6 + b2a(n * positions)
}

pub fn recip(n: usize) -> Cost {
    let iters = RECIP_ITERATIONS as u64;
    onehot_msb(n, RECIP_POSITIONS)
        + mul(n)
        + trunc(n)
        + mul_fixed(n)
        + mul_fixed(2 * n) * (iters - 1)
        + mul_fixed(n)
        + mul(n)
        + trunc(n)
}

pub fn rsqrt(n: usize) -> Cost {
    let newton = square(n) + mul_fixed(n) + mul(n) + trunc(n);
    onehot_msb(n, RSQRT_POSITIONS)
        + mul(n)
        + trunc(n)
        + trunc(n)
        + newton * (RSQRT_ITERATIONS as u64 - 1)
        + mul(n)
        + trunc(n)
}

pub fn neg_exp(n: usize) -> Cost {
    lt(n) + trunc(n) + square(n) * u64::from(EXP_T) + mul_ba(n)
}

pub fn gelu(n: usize) -> Cost {
    lt(3 * n) + square(n) + mul_fixed(2 * n) + square(n) + trunc(2 * n) + mul_ba(3 * n)
}

pub fn softmax(rows: usize, m: usize) -> Cost {
    let n = rows * m;
    max_rows(rows, m) + neg_exp(n) + recip(rows) + mul_fixed(n) + mul_ba(n)
}

pub fn layernorm(rows: usize, m: usize, mode: LayerNormMode) -> Cost {
    let n = rows * m;
    let var = match mode {
        LayerNormMode::Standard => trunc(rows),
        LayerNormMode::SumOfSquares => Cost::default(),
    };
    trunc(rows) + square(n) + var + rsqrt(rows) + mul_fixed(n) + mul_fixed(n)
}

/// Lookup of `s` ids in a `[vocab, d]` table.
pub fn embedding(s: usize, vocab: usize, d: usize) -> Cost {
    eq(s * vocab) + b2a(s * vocab) + reshare(s * d)
}

/// Fixed-point product with `out` output elements.
pub fn matmul(out: usize) -> Cost {
    reshare(out) + trunc(out)
}

pub fn matmul_public(out: usize) -> Cost {
    trunc(out)
}

pub fn attention(s: usize, d_head: usize, scale: bool) -> Cost {
    matmul(s * s) + if scale { trunc(s * s) } else { Cost::default() } + softmax(s, s) + matmul(s * d_head)
}

pub fn multihead(s: usize, cfg: &ModelConfig) -> Cost {
    let (d, h) = (cfg.d_model, cfg.n_heads);
    let scale = if cfg.attn_scale {
        trunc(h * s * s)
    } else {
        Cost::default()
    };
    matmul(3 * s * d) + matmul(h * s * s) + scale + softmax(h * s, s) + matmul(s * d) + matmul(s * d)
}

pub fn ffn(s: usize, cfg: &ModelConfig) -> Cost {
    matmul(s * cfg.d_ff) + gelu(s * cfg.d_ff) + matmul(s * cfg.d_model)
}

pub fn block(s: usize, cfg: &ModelConfig) -> Cost {
    // Pre- and post-norm run the same operations in a different order.
    multihead(s, cfg) + ffn(s, cfg) + layernorm(s, cfg.d_model, cfg.ln_mode) * 2
}

/// Forward pass over `s` tokens; `checks` adds one consistency check per
/// block.
pub fn forward(s: usize, cfg: &ModelConfig, checks: bool) -> Cost {
    let check = if checks {
        Cost::all(16 * n64(s * cfg.d_model))
    } else {
        Cost::default()
    };
    embedding(s, cfg.vocab_size, cfg.d_model)
        + (block(s, cfg) + check) * n64(cfg.n_layers)
        + layernorm(s, cfg.d_model, cfg.ln_mode)
        + matmul(s * cfg.vocab_size)
}
