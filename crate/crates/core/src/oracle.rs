//! Double-precision reference implementations.
//!
//! Everything here is plain float code, written independently of the secure
//! protocols so tests can compare the two.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::nonlinear::LayerNormMode;
use crate::transformer::{layer_name, ModelConfig, ModelWeights, NormPlacement};

pub fn gelu_exact(x: f64) -> f64 {
    let c = (2.0 / std::f64::consts::PI).sqrt();
    0.5 * x * (1.0 + (c * (x + 0.044715 * x * x * x)).tanh())
}

/// Piecewise polynomial GeLU: zero below -4, cubic on [-4, -1.95),
/// degree six on [-1.95, 3], identity above.
pub fn gelu_piecewise(x: f64) -> f64 {
    if x < -4.0 {
        0.0
    } else if x < -1.95 {
        let x2 = x * x;
        -0.5054031199708174 - 0.42226581151983866 * x - 0.11807612951181953 * x2 - 0.011034134030615728 * x2 * x
    } else if x <= 3.0 {
        let x2 = x * x;
        let x4 = x2 * x2;
        0.008526321541038084 + 0.5 * x + 0.3603292692789629 * x2 - 0.037688200365904236 * x4
            + 0.0018067462606141187 * x4 * x2
    } else {
        x
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorStats {
    pub name: String,
    pub max_err: f64,
    pub mean_err: f64,
    pub median_err: f64,
    pub n_points: usize,
}

impl ErrorStats {
    /// Statistics of `|a_i - b_i|`.
    pub fn from_pairs(name: &str, reference: &[f64], approx: &[f64]) -> Self {
        let errs: Vec<f64> = reference.iter().zip(approx).map(|(a, b)| (a - b).abs()).collect();
        Self::from_errors(name, errs)
    }

    pub fn from_errors(name: &str, mut errs: Vec<f64>) -> Self {
        let n = errs.len();
        if n == 0 {
            return ErrorStats {
                name: name.to_string(),
                max_err: 0.0,
                mean_err: 0.0,
                median_err: 0.0,
                n_points: 0,
            };
        }
        errs.sort_by(f64::total_cmp);
        let median = if n % 2 == 1 {
            errs[n / 2]
        } else {
            0.5 * (errs[n / 2 - 1] + errs[n / 2])
        };
        ErrorStats {
            name: name.to_string(),
            max_err: errs[n - 1],
            mean_err: errs.iter().sum::<f64>() / n as f64,
            median_err: median,
            n_points: n,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain struct serializes")
    }
}

/// Error statistics of `f_approx` against `f_ref` on a uniform grid of
/// `points` points covering `[lo, hi]` inclusive.
pub fn approx_error_stats(
    name: &str,
    f_ref: impl Fn(f64) -> f64,
    f_approx: impl Fn(f64) -> f64,
    interval: (f64, f64),
    points: usize,
) -> ErrorStats {
    let (lo, hi) = interval;
    let step = if points > 1 {
        (hi - lo) / (points - 1) as f64
    } else {
        0.0
    };
    let errs = (0..points)
        .map(|i| {
            let x = lo + step * i as f64;
            (f_ref(x) - f_approx(x)).abs()
        })
        .collect();
    ErrorStats::from_errors(name, errs)
}

/// `(1 + x / 2^t)^(2^t)` for `x > clip`, else zero.
pub fn neg_exp_ref(x: f64, t: u32, clip: f64) -> f64 {
    if x <= clip {
        return 0.0;
    }
    let mut y = 1.0 + x / f64::from(1u32 << t);
    for _ in 0..t {
        y *= y;
    }
    y
}

pub fn softmax_ref(row: &[f64]) -> Vec<f64> {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = row.iter().map(|&v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Softmax with the max shifted by an extra `eps` and the exponential
/// replaced by [`neg_exp_ref`].
pub fn softmax_clipped_ref(row: &[f64], eps: f64, t: u32, clip: f64) -> Vec<f64> {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = row.iter().map(|&v| neg_exp_ref(v - m - eps, t, clip)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub fn layernorm_ref(row: &[f64], gamma: &[f64], beta: &[f64], mode: LayerNormMode, eps: f64) -> Vec<f64> {
    let n = row.len() as f64;
    let mu = row.iter().sum::<f64>() / n;
    let ss: f64 = row.iter().map(|v| (v - mu) * (v - mu)).sum();
    let denom = match mode {
        LayerNormMode::Standard => (ss / n + eps).sqrt(),
        LayerNormMode::SumOfSquares => ss.sqrt(),
    };
    row.iter()
        .zip(gamma.iter().zip(beta))
        .map(|(v, (g, b))| g * (v - mu) / denom + b)
        .collect()
}

/// Which approximations the float model uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OracleMode {
    /// tanh GeLU and true softmax.
    #[default]
    Exact,
    /// The same approximations the secure protocols evaluate: piecewise
    /// GeLU and clipped-Taylor softmax with a one-unit max shift.
    Mirrored,
}

/// Constants the mirrored softmax uses.
pub const MIRROR_EPS: f64 = 1.0 / (1u64 << 18) as f64;
pub const MIRROR_T: u32 = 5;
pub const MIRROR_CLIP: f64 = -14.0;
pub const MIRROR_MASK: f64 = -30.0;
pub const LN_EPSILON: f64 = 1e-5;

impl OracleMode {
    pub fn gelu(self, x: f64) -> f64 {
        match self {
            OracleMode::Exact => gelu_exact(x),
            OracleMode::Mirrored => gelu_piecewise(x),
        }
    }

    pub fn softmax(self, row: &[f64]) -> Vec<f64> {
        match self {
            OracleMode::Exact => softmax_ref(row),
            OracleMode::Mirrored => softmax_clipped_ref(row, MIRROR_EPS, MIRROR_T, MIRROR_CLIP),
        }
    }
}

/// Dense row-major matrix product `[m, k] x [k, n]`.
pub fn matmul_ref(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    assert_eq!(a.len(), m * k);
    assert_eq!(b.len(), k * n);
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for t in 0..k {
            let av = a[i * k + t];
            for j in 0..n {
                out[i * n + j] += av * b[t * n + j];
            }
        }
    }
    out
}

/// Single-head attention on `[s, d_h]` row-major inputs.
#[allow(clippy::too_many_arguments)]
pub fn attention_ref(
    q: &[f64],
    k: &[f64],
    v: &[f64],
    s: usize,
    d_h: usize,
    mask: Option<&[f64]>,
    scale: bool,
    mode: OracleMode,
) -> Vec<f64> {
    let c = if scale { 1.0 / (d_h as f64).sqrt() } else { 1.0 };
    let mut probs = Vec::with_capacity(s * s);
    for i in 0..s {
        let row: Vec<f64> = (0..s)
            .map(|j| {
                let dot: f64 = (0..d_h).map(|t| q[i * d_h + t] * k[j * d_h + t]).sum();
                dot * c + mask.map_or(0.0, |m| m[i * s + j])
            })
            .collect();
        probs.extend(mode.softmax(&row));
    }
    matmul_ref(&probs, v, s, s, d_h)
}

/// Causal mask with `MIRROR_MASK` above the diagonal.
pub fn causal_mask_ref(s: usize) -> Vec<f64> {
    (0..s * s)
        .map(|k| if k % s > k / s { MIRROR_MASK } else { 0.0 })
        .collect()
}

struct FloatModel<'a> {
    w: &'a ModelWeights,
    cfg: &'a ModelConfig,
    mode: OracleMode,
}

impl FloatModel<'_> {
    fn t(&self, name: &str) -> Result<Vec<f64>> {
        Ok(self.w.get(name)?.to_f64())
    }

    fn layernorm(&self, x: &[f64], d: usize, g: &str, b: &str) -> Result<Vec<f64>> {
        let (g, b) = (self.t(g)?, self.t(b)?);
        Ok(x.chunks(d)
            .flat_map(|r| layernorm_ref(r, &g, &b, self.cfg.ln_mode, LN_EPSILON))
            .collect())
    }

    fn multihead(&self, x: &[f64], s: usize, l: usize, mask: &[f64]) -> Result<Vec<f64>> {
        let (d, h, dh) = (self.cfg.d_model, self.cfg.n_heads, self.cfg.d_head());
        let q = matmul_ref(x, &self.t(&layer_name(l, "wq"))?, s, d, d);
        let k = matmul_ref(x, &self.t(&layer_name(l, "wk"))?, s, d, d);
        let v = matmul_ref(x, &self.t(&layer_name(l, "wv"))?, s, d, d);
        let cols = |m: &[f64], i: usize| -> Vec<f64> {
            (0..s)
                .flat_map(|r| m[r * d + i * dh..r * d + (i + 1) * dh].to_vec())
                .collect()
        };
        let mut concat = vec![0.0; s * d];
        for i in 0..h {
            let o = attention_ref(
                &cols(&q, i),
                &cols(&k, i),
                &cols(&v, i),
                s,
                dh,
                Some(mask),
                self.cfg.attn_scale,
                self.mode,
            );
            for r in 0..s {
                concat[r * d + i * dh..r * d + (i + 1) * dh].copy_from_slice(&o[r * dh..(r + 1) * dh]);
            }
        }
        Ok(matmul_ref(&concat, &self.t(&layer_name(l, "wo"))?, s, d, d))
    }

    fn ffn(&self, x: &[f64], s: usize, l: usize) -> Result<Vec<f64>> {
        let (d, f) = (self.cfg.d_model, self.cfg.d_ff);
        let b1 = self.t(&layer_name(l, "b1"))?;
        let b2 = self.t(&layer_name(l, "b2"))?;
        let mut h = matmul_ref(x, &self.t(&layer_name(l, "w1"))?, s, d, f);
        for (i, v) in h.iter_mut().enumerate() {
            *v = self.mode.gelu(*v + b1[i % f]);
        }
        let mut o = matmul_ref(&h, &self.t(&layer_name(l, "w2"))?, s, f, d);
        for (i, v) in o.iter_mut().enumerate() {
            *v += b2[i % d];
        }
        Ok(o)
    }

    fn block(&self, x: &[f64], s: usize, l: usize, mask: &[f64]) -> Result<Vec<f64>> {
        let d = self.cfg.d_model;
        let add = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(p, q)| p + q).collect() };
        let (g1, b1) = (layer_name(l, "ln1_gamma"), layer_name(l, "ln1_beta"));
        let (g2, b2) = (layer_name(l, "ln2_gamma"), layer_name(l, "ln2_beta"));
        Ok(match self.cfg.norm_placement {
            NormPlacement::Post => {
                let h = self.layernorm(&add(x, &self.multihead(x, s, l, mask)?), d, &g1, &b1)?;
                self.layernorm(&add(&h, &self.ffn(&h, s, l)?), d, &g2, &b2)?
            }
            NormPlacement::Pre => {
                let n1 = self.layernorm(x, d, &g1, &b1)?;
                let h = add(x, &self.multihead(&n1, s, l, mask)?);
                let n2 = self.layernorm(&h, d, &g2, &b2)?;
                add(&h, &self.ffn(&n2, s, l)?)
            }
        })
    }
}

/// Float forward pass returning `[s, vocab]` logits, row-major.
pub fn forward_ref(weights: &ModelWeights, cfg: &ModelConfig, tokens: &[usize], mode: OracleMode) -> Result<Vec<f64>> {
    weights.validate(cfg)?;
    let s = tokens.len();
    if s == 0 {
        return Err(Error::EmptyInput("forward pass"));
    }
    if s > cfg.max_seq_len {
        return Err(Error::SequenceTooLong {
            len: s,
            max: cfg.max_seq_len,
        });
    }
    let m = FloatModel { w: weights, cfg, mode };
    let d = cfg.d_model;
    let emb = m.t("token_embedding")?;
    let pos = m.t("position_embedding")?;
    let mut x = Vec::with_capacity(s * d);
    for (i, &tok) in tokens.iter().enumerate() {
        for j in 0..d {
            // Out-of-range ids select the zero row, as in the secure lookup.
            let e = if tok < cfg.vocab_size { emb[tok * d + j] } else { 0.0 };
            x.push(e + pos[i * d + j]);
        }
    }
    let mask = causal_mask_ref(s);
    for l in 0..cfg.n_layers {
        x = m.block(&x, s, l, &mask)?;
    }
    let x = m.layernorm(&x, d, "final_ln_gamma", "final_ln_beta")?;
    Ok(matmul_ref(&x, &m.t("lm_head")?, s, d, cfg.vocab_size))
}

/// Index of the largest element; ties go to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}
