use super::config::{ModelConfig, NormPlacement};
use super::weights::{SharedLayer, SharedModel};
use crate::error::{Error, Result};
use crate::nonlinear::{secure_embedding, secure_gelu, secure_layernorm, secure_softmax};
use crate::primitives::{check_consistency, matmul_public_ring, matmul_ring, matmul_ring_many, scale_fixed, trunc};
use crate::ring::{fixed_const, RingElem, FRAC_BITS};
use crate::runtime::Party;
use crate::tensor::SharedTensor;

/// Additive causal mask value for future positions.
pub const MASK_VALUE: f64 = -30.0;

/// Fixed-point matrix product: one ring product and one truncation.
pub fn secure_matmul(p: &mut Party, a: &SharedTensor, b: &SharedTensor) -> Result<SharedTensor> {
    let z = matmul_ring(p, a, b)?;
    trunc(p, &z, FRAC_BITS)
}

/// Several fixed-point products sharing one reshare round and one truncation.
pub fn secure_matmul_many(p: &mut Party, pairs: &[(&SharedTensor, &SharedTensor)]) -> Result<Vec<SharedTensor>> {
    let z = matmul_ring_many(p, pairs)?;
    let shapes: Vec<Vec<usize>> = z.iter().map(|t| t.shape().to_vec()).collect();
    let refs: Vec<&SharedTensor> = z.iter().collect();
    trunc(p, &SharedTensor::concat_flat(&refs), FRAC_BITS)?.split_flat(&shapes)
}

/// Product with a public fixed-point matrix.
pub fn secure_matmul_public(
    p: &mut Party,
    a: &SharedTensor,
    b: &[RingElem],
    b_shape: [usize; 2],
) -> Result<SharedTensor> {
    let z = matmul_public_ring(a, b, b_shape)?;
    trunc(p, &z, FRAC_BITS)
}

/// Public additive causal mask, `MASK_VALUE` where `j > i`.
pub fn causal_mask(s: usize) -> Vec<RingElem> {
    let m = fixed_const(MASK_VALUE, FRAC_BITS);
    (0..s * s)
        .map(|k| if k % s > k / s { m } else { RingElem::ZERO })
        .collect()
}

fn scores_to_probs(
    p: &mut Party,
    scores: SharedTensor,
    d_head: usize,
    mask: Option<&[RingElem]>,
    scale: bool,
) -> Result<SharedTensor> {
    let mut s = scores;
    if scale {
        s = scale_fixed(p, &s, fixed_const(1.0 / (d_head as f64).sqrt(), FRAC_BITS))?;
    }
    if let Some(mask) = mask {
        let per_head = mask.len();
        let tiled: Vec<RingElem> = (0..s.len()).map(|i| mask[i % per_head]).collect();
        s = s.add_public(p.id(), &tiled)?;
    }
    secure_softmax(p, &s)
}

/// Single-head attention `softmax(Q K^T * scale + M) V` on `[s, d_h]` inputs.
pub fn secure_attention(
    p: &mut Party,
    q: &SharedTensor,
    k: &SharedTensor,
    v: &SharedTensor,
    mask: Option<&[RingElem]>,
    scale: bool,
) -> Result<SharedTensor> {
    let d_head = q.dims2()?[1];
    let scores = secure_matmul(p, q, &k.transpose()?)?;
    let probs = scores_to_probs(p, scores, d_head, mask, scale)?;
    secure_matmul(p, &probs, v)
}

/// Multi-head attention with output projection. All heads are evaluated
/// together, so the round count does not depend on the head count.
pub fn secure_multihead(
    p: &mut Party,
    x: &SharedTensor,
    layer: &SharedLayer,
    cfg: &ModelConfig,
    mask: Option<&[RingElem]>,
) -> Result<SharedTensor> {
    let [s, d] = x.dims2()?;
    let h = cfg.n_heads;
    let dh = cfg.d_head();
    let qkv = secure_matmul_many(p, &[(x, &layer.wq), (x, &layer.wk), (x, &layer.wv)])?;
    let head = |t: &SharedTensor, i: usize| t.slice_cols(i * dh, (i + 1) * dh);
    let mut qs = Vec::with_capacity(h);
    let mut kts = Vec::with_capacity(h);
    let mut vs = Vec::with_capacity(h);
    for i in 0..h {
        qs.push(head(&qkv[0], i)?);
        kts.push(head(&qkv[1], i)?.transpose()?);
        vs.push(head(&qkv[2], i)?);
    }
    let pairs: Vec<_> = qs.iter().zip(&kts).collect();
    let scores = secure_matmul_many(p, &pairs)?;
    let refs: Vec<&SharedTensor> = scores.iter().collect();
    let stacked = SharedTensor::concat_flat(&refs).reshape(vec![h * s, s])?;
    let probs = scores_to_probs(p, stacked, dh, mask, cfg.attn_scale)?;
    let probs = probs.split_flat(&vec![vec![s, s]; h])?;
    let pairs: Vec<_> = probs.iter().zip(&vs).collect();
    let heads = secure_matmul_many(p, &pairs)?;
    let concat = SharedTensor::concat_cols(&heads)?;
    debug_assert_eq!(concat.shape(), &[s, d]);
    secure_matmul(p, &concat, &layer.wo)
}

/// `GeLU(x W1 + b1) W2 + b2`.
pub fn secure_ffn(p: &mut Party, x: &SharedTensor, layer: &SharedLayer) -> Result<SharedTensor> {
    let h = secure_matmul(p, x, &layer.w1)?.add_col_broadcast(&layer.b1)?;
    let g = secure_gelu(p, &h)?;
    secure_matmul(p, &g, &layer.w2)?.add_col_broadcast(&layer.b2)
}

pub fn secure_block(
    p: &mut Party,
    x: &SharedTensor,
    layer: &SharedLayer,
    cfg: &ModelConfig,
    mask: Option<&[RingElem]>,
) -> Result<SharedTensor> {
    let ln =
        |p: &mut Party, t: &SharedTensor, g: &SharedTensor, b: &SharedTensor| secure_layernorm(p, t, g, b, cfg.ln_mode);
    match cfg.norm_placement {
        NormPlacement::Post => {
            let a = secure_multihead(p, x, layer, cfg, mask)?;
            let h = ln(p, &x.add(&a)?, &layer.ln1_gamma, &layer.ln1_beta)?;
            let f = secure_ffn(p, &h, layer)?;
            ln(p, &h.add(&f)?, &layer.ln2_gamma, &layer.ln2_beta)
        }
        NormPlacement::Pre => {
            let n1 = ln(p, x, &layer.ln1_gamma, &layer.ln1_beta)?;
            let h = x.add(&secure_multihead(p, &n1, layer, cfg, mask)?)?;
            let n2 = ln(p, &h, &layer.ln2_gamma, &layer.ln2_beta)?;
            h.add(&secure_ffn(p, &n2, layer)?)
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ForwardOptions {
    /// Verify replicated-share consistency after every block. Costs one
    /// extra round per check.
    pub check_consistency: bool,
}

/// Causal forward pass on secret-shared token ids (integers, not fixed
/// point). Returns `[s, vocab]` logits.
pub fn secure_forward(p: &mut Party, model: &SharedModel, tokens: &SharedTensor) -> Result<SharedTensor> {
    secure_forward_with(p, model, tokens, ForwardOptions::default())
}

pub fn secure_forward_with(
    p: &mut Party,
    model: &SharedModel,
    tokens: &SharedTensor,
    opts: ForwardOptions,
) -> Result<SharedTensor> {
    let cfg = &model.config;
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
    let mask = causal_mask(s);
    let mask = Some(mask.as_slice());
    let tokens = tokens.clone().reshape(vec![s])?;
    let mut x = secure_embedding(p, &tokens, &model.token_embedding)?;
    x = x.add(&model.position_embedding.slice_rows(0, s)?)?;
    for layer in &model.layers {
        x = secure_block(p, &x, layer, cfg, mask)?;
        if opts.check_consistency {
            check_consistency(p, &x)?;
        }
    }
    let x = secure_layernorm(p, &x, &model.final_ln_gamma, &model.final_ln_beta, cfg.ln_mode)?;
    secure_matmul(p, &x, &model.lm_head)
}
