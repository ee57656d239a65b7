//! Oracle checks behind `trinfer verify`.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use trinfer_core::cost::{self, Cost};
use trinfer_core::error::Result;
use trinfer_core::harness::{eval, eval_bool, run_local, secure_logits, Backend};
use trinfer_core::nonlinear::{secure_embedding, secure_gelu, secure_layernorm, secure_softmax, LayerNormMode, LN_EPS};
use trinfer_core::oracle::{
    attention_ref, causal_mask_ref, forward_ref, gelu_piecewise, layernorm_ref, neg_exp_ref, softmax_clipped_ref,
    OracleMode, MIRROR_CLIP, MIRROR_EPS, MIRROR_T,
};
use trinfer_core::primitives::{a2b, eq, lt, max, mul, mul_ba, mul_fixed, neg_exp, recip, rsqrt, square, trunc};
use trinfer_core::ring::{decode_fixed, encode_fixed, RingElem, FRAC_BITS};
use trinfer_core::runtime::CommStats;
use trinfer_core::tensor::{reconstruct_tensor, share_bool_tensor, share_fixed, share_tensor, SharedTensor};
use trinfer_core::transformer::{causal_mask, secure_attention, ForwardOptions, ModelConfig, ModelWeights};

const ULP: f64 = 1.0 / (1u64 << FRAC_BITS) as f64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Protocol {
    Mul,
    Trunc,
    MulFixed,
    Square,
    A2b,
    Lt,
    Eq,
    MulBa,
    Max,
    Recip,
    Rsqrt,
    NegExp,
    Gelu,
    Softmax,
    Layernorm,
    Embedding,
    Attention,
    Forward,
}

impl Protocol {
    pub const ALL: [Protocol; 18] = [
        Protocol::Mul,
        Protocol::Trunc,
        Protocol::MulFixed,
        Protocol::Square,
        Protocol::A2b,
        Protocol::Lt,
        Protocol::Eq,
        Protocol::MulBa,
        Protocol::Max,
        Protocol::Recip,
        Protocol::Rsqrt,
        Protocol::NegExp,
        Protocol::Gelu,
        Protocol::Softmax,
        Protocol::Layernorm,
        Protocol::Embedding,
        Protocol::Attention,
        Protocol::Forward,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Mul => "mul",
            Protocol::Trunc => "trunc",
            Protocol::MulFixed => "mul_fixed",
            Protocol::Square => "square",
            Protocol::A2b => "a2b",
            Protocol::Lt => "lt",
            Protocol::Eq => "eq",
            Protocol::MulBa => "mul_ba",
            Protocol::Max => "max",
            Protocol::Recip => "recip",
            Protocol::Rsqrt => "rsqrt",
            Protocol::NegExp => "neg_exp",
            Protocol::Gelu => "gelu",
            Protocol::Softmax => "softmax",
            Protocol::Layernorm => "layernorm",
            Protocol::Embedding => "embedding",
            Protocol::Attention => "attention",
            Protocol::Forward => "forward",
        }
    }

    /// Size used when `--n` is not given. For `softmax` and `layernorm` this
    /// is the row length, for `attention` and `forward` the sequence length.
    /// `forward` caps it at the tiny model's context of 16.
    pub fn default_n(self) -> usize {
        match self {
            Protocol::Gelu => 4096,
            Protocol::Softmax => 128,
            Protocol::Layernorm => 64,
            Protocol::Attention => 16,
            Protocol::Forward => 8,
            _ => 1024,
        }
    }

    /// What `max_err` measures and the bound it must meet.
    pub fn tolerance(self) -> (&'static str, f64) {
        match self {
            Protocol::Mul | Protocol::A2b | Protocol::Lt | Protocol::Eq | Protocol::MulBa | Protocol::Embedding => {
                ("mismatches", 0.0)
            }
            Protocol::Max => ("abs", 0.0),
            Protocol::Trunc => ("ring units above floor", 1.0),
            Protocol::MulFixed | Protocol::Square => ("abs", 2.0 * ULP),
            Protocol::Recip => ("abs / max(y, 2^-8)", 2f64.powi(-10)),
            Protocol::Rsqrt => ("abs / max(y, 2^-7)", 2f64.powi(-9)),
            Protocol::NegExp | Protocol::Gelu | Protocol::Softmax => ("abs", 2f64.powi(-10)),
            Protocol::Layernorm => ("abs", 2f64.powi(-8)),
            Protocol::Attention => ("abs", 2f64.powi(-6)),
            Protocol::Forward => ("abs", 1e-2),
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown protocol {s:?}"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub protocol: String,
    pub n: usize,
    pub metric: String,
    pub max_err: f64,
    pub mean_err: f64,
    pub tolerance: f64,
    pub bytes_per_party: [u64; 3],
    pub rounds: u64,
    /// Measured bytes and rounds equal the analytic model.
    pub cost_model_match: bool,
    pub passed: bool,
}

struct Outcome {
    errs: Vec<f64>,
    stats: CommStats,
    model: Cost,
}

fn uniform(r: &mut ChaCha20Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| r.random_range(lo..hi)).collect()
}

/// Log-uniform values in `[2^lo, 2^hi)`, rounded onto the fixed-point grid.
fn log_uniform(r: &mut ChaCha20Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| quantize(2f64.powf(r.random_range(lo..hi)))).collect()
}

fn quantize(v: f64) -> f64 {
    decode_fixed(encode_fixed(v).expect("value within the fixed-point range"))
}

fn shared(r: &mut ChaCha20Rng, v: &[f64], shape: Vec<usize>) -> Result<[SharedTensor; 3]> {
    share_fixed(v, shape, r)
}

fn ring_shared(r: &mut ChaCha20Rng, v: &[RingElem]) -> Result<[SharedTensor; 3]> {
    share_tensor(v, vec![v.len()], r)
}

fn mismatches<T: PartialEq>(got: &[T], want: &[T]) -> Vec<f64> {
    got.iter().zip(want).map(|(g, w)| f64::from(u8::from(g != w))).collect()
}

fn abs_errs(got: &[f64], want: &[f64]) -> Vec<f64> {
    got.iter().zip(want).map(|(g, w)| (g - w).abs()).collect()
}

fn decode_all(v: &[RingElem]) -> Vec<f64> {
    v.iter().copied().map(decode_fixed).collect()
}

fn timed<T>(acc: &mut Duration, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let t0 = Instant::now();
    let out = f();
    *acc += t0.elapsed();
    out
}

/// Run `protocol` on `n` random inputs drawn from `seed` and compare it with
/// its plaintext oracle.
pub fn verify(protocol: Protocol, n: usize, seed: u64, backend: Backend) -> Result<VerifyReport> {
    Ok(verify_timed(protocol, n, seed, backend)?.0)
}

/// As [`verify`], also returning the wall-clock time of the secure
/// execution alone, excluding input sharing and the oracle.
pub fn verify_timed(protocol: Protocol, n: usize, seed: u64, backend: Backend) -> Result<(VerifyReport, Duration)> {
    // The forward pass runs the tiny model, whose context is bounded.
    let n = match protocol {
        Protocol::Forward => n.min(ModelConfig::tiny().max_seq_len),
        _ => n,
    }
    .max(1);
    let mut r = ChaCha20Rng::seed_from_u64(seed);
    let run_seed = seed.wrapping_add(1);
    let mut elapsed = Duration::ZERO;
    let out = match protocol {
        Protocol::Mul => {
            let a: Vec<RingElem> = (0..n).map(|_| RingElem(r.random())).collect();
            let b: Vec<RingElem> = (0..n).map(|_| RingElem(r.random())).collect();
            let inputs = [ring_shared(&mut r, &a)?, ring_shared(&mut r, &b)?];
            let (z, stats) = timed(&mut elapsed, || {
                eval(backend, run_seed, &inputs, |p, t| mul(p, t[0], t[1]))
            })?;
            let want: Vec<RingElem> = a.iter().zip(&b).map(|(&x, &y)| x * y).collect();
            Outcome {
                errs: mismatches(&z, &want),
                stats,
                model: cost::mul(n),
            }
        }
        Protocol::Trunc => {
            let bound = 1i64 << 42;
            let x: Vec<i64> = (0..n).map(|_| r.random_range(-bound..bound)).collect();
            let xr: Vec<RingElem> = x.iter().map(|&v| RingElem::from_signed(v)).collect();
            let inputs = [ring_shared(&mut r, &xr)?];
            let (z, stats) = timed(&mut elapsed, || {
                eval(backend, run_seed, &inputs, |p, t| trunc(p, t[0], FRAC_BITS))
            })?;
            let errs = z
                .iter()
                .zip(&x)
                .map(|(g, &v)| (g.as_signed().wrapping_sub(v >> FRAC_BITS) as f64).abs())
                .collect();
            Outcome {
                errs,
                stats,
                model: cost::trunc(n),
            }
        }
        Protocol::MulFixed | Protocol::Square => {
            let x: Vec<f64> = uniform(&mut r, n, -32.0, 32.0).into_iter().map(quantize).collect();
            let y: Vec<f64> = if protocol == Protocol::Square {
                x.clone()
            } else {
                uniform(&mut r, n, -32.0, 32.0).into_iter().map(quantize).collect()
            };
            let inputs = [shared(&mut r, &x, vec![n])?, shared(&mut r, &y, vec![n])?];
            let (z, stats) = if protocol == Protocol::Square {
                timed(&mut elapsed, || {
                    eval(backend, run_seed, &inputs, |p, t| square(p, t[0]))
                })?
            } else {
                timed(&mut elapsed, || {
                    eval(backend, run_seed, &inputs, |p, t| mul_fixed(p, t[0], t[1]))
                })?
            };
            let want: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a * b).collect();
            Outcome {
                errs: abs_errs(&decode_all(&z), &want),
                stats,
                model: cost::mul_fixed(n),
            }
        }
        Protocol::A2b => {
            let a: Vec<RingElem> = (0..n).map(|_| RingElem(r.random())).collect();
            let inputs = [ring_shared(&mut r, &a)?];
            let (bits, stats) = timed(&mut elapsed, || {
                eval_bool(backend, run_seed, &inputs, |p, t| a2b(p, t[0]))
            })?;
            let want: Vec<u64> = a.iter().map(|v| v.0).collect();
            Outcome {
                errs: mismatches(&bits, &want),
                stats,
                model: cost::a2b(n),
            }
        }
        Protocol::Lt | Protocol::Eq => {
            let bound = 1i64 << 40;
            let x: Vec<i64> = (0..n).map(|_| r.random_range(-bound..bound)).collect();
            let y: Vec<i64> = x
                .iter()
                .map(|&v| match r.random_range(0..4) {
                    0 => v,
                    1 => v + 1,
                    _ => r.random_range(-bound..bound),
                })
                .collect();
            let xr: Vec<RingElem> = x.iter().map(|&v| RingElem::from_signed(v)).collect();
            let yr: Vec<RingElem> = y.iter().map(|&v| RingElem::from_signed(v)).collect();
            let inputs = [ring_shared(&mut r, &xr)?, ring_shared(&mut r, &yr)?];
            let (got, stats, want, model): (Vec<u64>, _, Vec<u64>, _) = if protocol == Protocol::Lt {
                let (g, s) = timed(&mut elapsed, || {
                    eval_bool(backend, run_seed, &inputs, |p, t| lt(p, t[0], t[1]))
                })?;
                (
                    g,
                    s,
                    x.iter().zip(&y).map(|(a, b)| u64::from(a < b)).collect(),
                    cost::lt(n),
                )
            } else {
                let (g, s) = timed(&mut elapsed, || {
                    eval_bool(backend, run_seed, &inputs, |p, t| eq(p, t[0], t[1]))
                })?;
                (
                    g,
                    s,
                    x.iter().zip(&y).map(|(a, b)| u64::from(a == b)).collect(),
                    cost::eq(n),
                )
            };
            Outcome {
                errs: mismatches(&got, &want),
                stats,
                model,
            }
        }
        Protocol::MulBa => {
            let bits: Vec<u64> = (0..n).map(|_| r.random_range(0..2)).collect();
            let a: Vec<RingElem> = (0..n).map(|_| RingElem(r.random())).collect();
            let b = share_bool_tensor(&bits, &mut r);
            let x = ring_shared(&mut r, &a)?;
            let out = timed(&mut elapsed, || {
                run_local(backend, run_seed, |p| {
                    let i = p.id().index();
                    mul_ba(p, &b[i], &x[i])
                })
            })?;
            let z = reconstruct_tensor(&out.outputs)?;
            let want: Vec<RingElem> = bits
                .iter()
                .zip(&a)
                .map(|(&b, &v)| if b == 1 { v } else { RingElem::ZERO })
                .collect();
            Outcome {
                errs: mismatches(&z, &want),
                stats: out.stats,
                model: cost::mul_ba(n),
            }
        }
        Protocol::Max => {
            let x: Vec<f64> = uniform(&mut r, n, -100.0, 100.0).into_iter().map(quantize).collect();
            let inputs = [shared(&mut r, &x, vec![n])?];
            let (z, stats) = timed(&mut elapsed, || eval(backend, run_seed, &inputs, |p, t| max(p, t[0])))?;
            let want = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Outcome {
                errs: abs_errs(&decode_all(&z), &[want]),
                stats,
                model: cost::max_rows(1, n),
            }
        }
        Protocol::Recip | Protocol::Rsqrt => {
            let (x, floor) = if protocol == Protocol::Recip {
                (log_uniform(&mut r, n, -9.0, 18.0), 2f64.powi(-8))
            } else {
                (log_uniform(&mut r, n, -10.0, 20.0), 2f64.powi(-7))
            };
            let inputs = [shared(&mut r, &x, vec![n])?];
            let (z, stats, want, model) = if protocol == Protocol::Recip {
                let (z, s) = timed(&mut elapsed, || eval(backend, run_seed, &inputs, |p, t| recip(p, t[0])))?;
                (z, s, x.iter().map(|v| 1.0 / v).collect::<Vec<_>>(), cost::recip(n))
            } else {
                let (z, s) = timed(&mut elapsed, || eval(backend, run_seed, &inputs, |p, t| rsqrt(p, t[0])))?;
                (z, s, x.iter().map(|v| v.powf(-0.5)).collect::<Vec<_>>(), cost::rsqrt(n))
            };
            let errs = decode_all(&z)
                .iter()
                .zip(&want)
                .map(|(g, w)| (g - w).abs() / w.max(floor))
                .collect();
            Outcome { errs, stats, model }
        }
        Protocol::NegExp => {
            let x: Vec<f64> = uniform(&mut r, n, -16.0, 0.0).into_iter().map(quantize).collect();
            let inputs = [shared(&mut r, &x, vec![n])?];
            let (z, stats) = timed(&mut elapsed, || {
                eval(backend, run_seed, &inputs, |p, t| neg_exp(p, t[0]))
            })?;
            let want: Vec<f64> = x.iter().map(|&v| neg_exp_ref(v, MIRROR_T, MIRROR_CLIP)).collect();
            Outcome {
                errs: abs_errs(&decode_all(&z), &want),
                stats,
                model: cost::neg_exp(n),
            }
        }
        Protocol::Gelu => {
            let x: Vec<f64> = uniform(&mut r, n, -6.0, 5.0).into_iter().map(quantize).collect();
            let inputs = [shared(&mut r, &x, vec![n])?];
            let (z, stats) = timed(&mut elapsed, || {
                eval(backend, run_seed, &inputs, |p, t| secure_gelu(p, t[0]))
            })?;
            let want: Vec<f64> = x.iter().map(|&v| gelu_piecewise(v)).collect();
            Outcome {
                errs: abs_errs(&decode_all(&z), &want),
                stats,
                model: cost::gelu(n),
            }
        }
        Protocol::Softmax => {
            let rows = 32;
            let x: Vec<f64> = uniform(&mut r, rows * n, -10.0, 10.0)
                .into_iter()
                .map(quantize)
                .collect();
            let inputs = [shared(&mut r, &x, vec![rows, n])?];
            let (z, stats) = timed(&mut elapsed, || {
                eval(backend, run_seed, &inputs, |p, t| secure_softmax(p, t[0]))
            })?;
            let want: Vec<f64> = x
                .chunks(n)
                .flat_map(|row| softmax_clipped_ref(row, MIRROR_EPS, MIRROR_T, MIRROR_CLIP))
                .collect();
            Outcome {
                errs: abs_errs(&decode_all(&z), &want),
                stats,
                model: cost::softmax(rows, n),
            }
        }
        Protocol::Layernorm => {
            let (rows, m) = (32, n.max(2));
            let q = |v: Vec<f64>| v.into_iter().map(quantize).collect::<Vec<_>>();
            let x = q(uniform(&mut r, rows * m, -4.0, 4.0));
            let g = q(uniform(&mut r, m, 0.5, 1.5));
            let b = q(uniform(&mut r, m, -0.5, 0.5));
            let inputs = [
                shared(&mut r, &x, vec![rows, m])?,
                shared(&mut r, &g, vec![m])?,
                shared(&mut r, &b, vec![m])?,
            ];
            let mode = LayerNormMode::Standard;
            let (z, stats) = timed(&mut elapsed, || {
                eval(backend, run_seed, &inputs, |p, t| {
                    secure_layernorm(p, t[0], t[1], t[2], mode)
                })
            })?;
            let want: Vec<f64> = x
                .chunks(m)
                .flat_map(|row| layernorm_ref(row, &g, &b, mode, LN_EPS))
                .collect();
            Outcome {
                errs: abs_errs(&decode_all(&z), &want),
                stats,
                model: cost::layernorm(rows, m, mode),
            }
        }
        Protocol::Embedding => {
            let (vocab, d) = (32, 8);
            let table: Vec<RingElem> = (0..vocab * d).map(|_| RingElem(r.random())).collect();
            let ids: Vec<usize> = (0..n).map(|_| r.random_range(0..vocab)).collect();
            let id_ring: Vec<RingElem> = ids.iter().map(|&i| RingElem(i as u64)).collect();
            let inputs = [
                ring_shared(&mut r, &id_ring)?,
                share_tensor(&table, vec![vocab, d], &mut r)?,
            ];
            let (z, stats) = timed(&mut elapsed, || {
                eval(backend, run_seed, &inputs, |p, t| secure_embedding(p, t[0], t[1]))
            })?;
            let errs = ids
                .iter()
                .zip(z.chunks(d))
                .map(|(&i, row)| f64::from(u8::from(row != &table[i * d..(i + 1) * d])))
                .collect();
            Outcome {
                errs,
                stats,
                model: cost::embedding(n, vocab, d),
            }
        }
        Protocol::Attention => {
            let (s, dh) = (n, 8);
            let q = |v: Vec<f64>| v.into_iter().map(quantize).collect::<Vec<_>>();
            let qkv: Vec<Vec<f64>> = (0..3).map(|_| q(uniform(&mut r, s * dh, -1.0, 1.0))).collect();
            let inputs: Vec<[SharedTensor; 3]> = qkv
                .iter()
                .map(|v| shared(&mut r, v, vec![s, dh]))
                .collect::<Result<_>>()?;
            let mask = causal_mask(s);
            let (z, stats) = timed(&mut elapsed, || {
                eval(backend, run_seed, &inputs, |p, t| {
                    secure_attention(p, t[0], t[1], t[2], Some(&mask), true)
                })
            })?;
            let mask_f = causal_mask_ref(s);
            let want = attention_ref(
                &qkv[0],
                &qkv[1],
                &qkv[2],
                s,
                dh,
                Some(&mask_f),
                true,
                OracleMode::Mirrored,
            );
            Outcome {
                errs: abs_errs(&decode_all(&z), &want),
                stats,
                model: cost::attention(s, dh, true),
            }
        }
        Protocol::Forward => {
            let cfg = ModelConfig::tiny();
            let w = ModelWeights::random(&cfg, seed)?;
            let tokens: Vec<usize> = (0..n).map(|_| r.random_range(0..cfg.vocab_size)).collect();
            let (got, stats) = timed(&mut elapsed, || {
                secure_logits(backend, run_seed, seed, &w, &cfg, &tokens, ForwardOptions::default())
            })?;
            let want = forward_ref(&w, &cfg, &tokens, OracleMode::Mirrored)?;
            Outcome {
                errs: abs_errs(&got, &want),
                stats,
                model: cost::forward(n, &cfg, false),
            }
        }
    };

    let (metric, tolerance) = protocol.tolerance();
    let max_err = out.errs.iter().copied().fold(0.0, f64::max);
    let mean_err = out.errs.iter().sum::<f64>() / out.errs.len().max(1) as f64;
    let cost_model_match = out.model.matches(&out.stats);
    let report = VerifyReport {
        protocol: protocol.name().to_string(),
        n,
        metric: metric.to_string(),
        max_err,
        mean_err,
        tolerance,
        bytes_per_party: out.stats.bytes_per_party(),
        rounds: out.stats.rounds(),
        cost_model_match,
        passed: max_err <= tolerance && cost_model_match,
    };
    Ok((report, elapsed))
}
