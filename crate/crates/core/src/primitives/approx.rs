//! Reciprocal, inverse square root and the clipped exponential.
//!
//! `recip` and `rsqrt` first locate the most significant set bit of the input
//! with a prefix-OR over its binary representation. The one-hot position
//! vector selects public power-of-two scale factors, so both functions reduce
//! to a fixed iteration on a mantissa in `[0.5, 1)`.

use super::arith::{mul, mul_fixed, mul_fixed_many, square, trunc};
use super::boolean::{a2b, and_words, b2a, lt, mul_ba};
use crate::error::Result;
use crate::ring::{fixed_const, RingElem, FRAC_BITS};
use crate::runtime::Party;
use crate::share::{ArithShare, BoolShare};
use crate::tensor::{BoolTensor, SharedTensor};

/// Bit positions examined by `recip`; inputs up to `2^37` ring units.
pub const RECIP_POSITIONS: usize = 38;
/// Bit positions examined by `rsqrt`; inputs up to `2^40` ring units.
pub const RSQRT_POSITIONS: usize = 41;

pub const RECIP_ITERATIONS: usize = 4;
pub const RSQRT_ITERATIONS: usize = 3;

/// Initial reciprocal estimate `W0_A - 2u` on `[0.5, 1)`.
const RECIP_W0_A: f64 = 2.9142;
/// Initial inverse square root estimate on `[0.5, 1)`.
const RSQRT_Y0: f64 = 1.1716;

pub const EXP_T: u32 = 5;
pub const EXP_CLIP: f64 = -14.0;

/// Arithmetic one-hot encoding of the most significant set bit, restricted to
/// positions `0..positions`. Output is `[n, positions]`, row-major.
pub fn onehot_msb(p: &mut Party, x: &SharedTensor, positions: usize) -> Result<SharedTensor> {
    let id = p.id();
    let n = x.len();
    let mut pre = a2b(p, x)?.into_data();
    for s in [1u32, 2, 4, 8, 16, 32] {
        let na: Vec<BoolShare> = pre.iter().map(|b| b.xor_public(id, u64::MAX)).collect();
        let nb: Vec<BoolShare> = pre.iter().map(|b| b.shr(s).xor_public(id, u64::MAX)).collect();
        pre = and_words(p, &na, &nb, 64)?
            .into_iter()
            .map(|b| b.xor_public(id, u64::MAX))
            .collect();
    }
    let mut bits = Vec::with_capacity(n * positions);
    for b in &pre {
        let one = b.xor(b.shr(1));
        bits.extend((0..positions as u32).map(|k| one.shr(k).and_public(1)));
    }
    let onehot = b2a(p, &BoolTensor::from_vec(bits))?;
    onehot.reshape(vec![n, positions])
}

/// `sum_k onehot[j, k] * table[k]` for each row `j`; local.
pub fn select_public(onehot: &SharedTensor, table: &[RingElem]) -> SharedTensor {
    let rows = onehot.num_rows();
    let data = (0..rows)
        .map(|j| {
            onehot
                .row(j)
                .iter()
                .zip(table)
                .fold(ArithShare::ZERO, |acc, (&o, &c)| acc + o.scale(c))
        })
        .collect();
    SharedTensor::from_vec(data)
}

/// Fixed-point reciprocal for inputs in `[2^-9, 2^18]`.
///
/// With `m = x * 2^(17-k)` in `[0.5, 1)` for MSB position `k`, Goldschmidt
/// iterations refine `1/m` from a linear estimate; the result is scaled back
/// by `2^(17-k)`.
pub fn recip(p: &mut Party, x: &SharedTensor) -> Result<SharedTensor> {
    let id = p.id();
    let shape = x.shape().to_vec();
    let flat = x.clone().reshape(vec![x.len()])?;
    let onehot = onehot_msb(p, &flat, RECIP_POSITIONS)?;
    let table: Vec<RingElem> = (0..RECIP_POSITIONS)
        .map(|k| RingElem(1u64 << (RECIP_POSITIONS - 1 - k)))
        .collect();
    let g = select_public(&onehot, &table);
    // x * 2^(37-k) carries 38 - 18 = 20 extra bits.
    let xg = mul(p, &flat, &g)?;
    let u = trunc(p, &xg, 20)?;
    let w0 = u
        .scale(RingElem::from_signed(-2))
        .add_public_scalar(id, fixed_const(RECIP_W0_A, FRAC_BITS));
    let mut num = w0.clone();
    let mut den = mul_fixed(p, &u, &w0)?;
    let two = fixed_const(2.0, FRAC_BITS);
    for it in 0..RECIP_ITERATIONS {
        let c = den.neg().add_public_scalar(id, two);
        if it + 1 < RECIP_ITERATIONS {
            let mut out = mul_fixed_many(p, &[(&num, &c), (&den, &c)])?;
            den = out.pop().unwrap();
            num = out.pop().unwrap();
        } else {
            num = mul_fixed(p, &num, &c)?;
        }
    }
    let ng = mul(p, &num, &g)?;
    let r = trunc(p, &ng, 20)?;
    r.reshape(shape)
}

/// Fixed-point inverse square root for positive inputs below `2^23`.
///
/// Normalises to `m` in `[0.5, 1)` as in [`recip`], runs Newton steps
/// `y <- y (3 - m y^2) / 2`, and rescales by `2^((17-k)/2)` from a public
/// table, which absorbs the odd-exponent `sqrt(2)` factor.
pub fn rsqrt(p: &mut Party, x: &SharedTensor) -> Result<SharedTensor> {
    let id = p.id();
    let shape = x.shape().to_vec();
    let flat = x.clone().reshape(vec![x.len()])?;
    let onehot = onehot_msb(p, &flat, RSQRT_POSITIONS)?;
    let norm: Vec<RingElem> = (0..RSQRT_POSITIONS)
        .map(|k| RingElem(1u64 << (RSQRT_POSITIONS - 1 - k)))
        .collect();
    let g = select_public(&onehot, &norm);
    let xg = mul(p, &flat, &g)?;
    let u = trunc(p, &xg, 23)?;

    // The first step has a public starting point and is affine in u.
    let y0 = RSQRT_Y0;
    let mut y = trunc(p, &u.scale(fixed_const(-0.5 * y0 * y0 * y0, FRAC_BITS)), FRAC_BITS)?
        .add_public_scalar(id, fixed_const(1.5 * y0, FRAC_BITS));
    let three = fixed_const(3.0, FRAC_BITS);
    for _ in 1..RSQRT_ITERATIONS {
        let y2 = square(p, &y)?;
        let t = mul_fixed(p, &u, &y2)?;
        let h = t.neg().add_public_scalar(id, three);
        let yh = mul(p, &y, &h)?;
        y = trunc(p, &yh, FRAC_BITS + 1)?;
    }

    let scale: Vec<RingElem> = (0..RSQRT_POSITIONS)
        .map(|k| {
            let v = 2f64.powf((17.0 - k as f64) / 2.0) * (1u64 << 20) as f64;
            RingElem(v.round() as u64)
        })
        .collect();
    let s = select_public(&onehot, &scale);
    let ys = mul(p, &y, &s)?;
    let r = trunc(p, &ys, 20)?;
    r.reshape(shape)
}

/// `exp(x)` for `x <= 0` as `(1 + x/2^t)^(2^t)`, with outputs for
/// `x < -14` forced to zero. Also returns the clip bit `1{-14 < x}`.
pub fn neg_exp_with_bit(p: &mut Party, x: &SharedTensor) -> Result<(SharedTensor, BoolTensor)> {
    let id = p.id();
    let keep = lt(p, fixed_const(EXP_CLIP, FRAC_BITS), x)?;
    let mut z = trunc(p, x, EXP_T)?.add_public_scalar(id, fixed_const(1.0, FRAC_BITS));
    for _ in 0..EXP_T {
        z = square(p, &z)?;
    }
    let z = mul_ba(p, &keep, &z)?;
    Ok((z, keep))
}

pub fn neg_exp(p: &mut Party, x: &SharedTensor) -> Result<SharedTensor> {
    Ok(neg_exp_with_bit(p, x)?.0)
}
