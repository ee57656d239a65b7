use crate::error::{Error, Result};
use crate::primitives::{max_rows, mul_ba, mul_fixed, neg_exp_with_bit, recip, EXP_CLIP, EXP_T};
use crate::ring::RingElem;
use crate::runtime::Party;
use crate::tensor::SharedTensor;

#[derive(Clone, Debug, PartialEq)]
pub struct SoftmaxConstants {
    /// Offset subtracted after the row maximum. Below one fixed-point unit it
    /// is applied as exactly one unit.
    pub epsilon: f64,
    /// Number of squarings in the exponential.
    pub t: u32,
    /// Inputs to the exponential below this are mapped to zero.
    pub t_exp: f64,
}

impl Default for SoftmaxConstants {
    fn default() -> Self {
        SoftmaxConstants {
            epsilon: 1e-6,
            t: EXP_T,
            t_exp: EXP_CLIP,
        }
    }
}

/// Ring units added to each row sum before the reciprocal. Without it the
/// reciprocal's small overestimate plus a truncation carry can push the
/// largest probability one unit past 1.
pub const SUM_BIAS: u64 = 16;

/// Row-wise softmax over the last axis.
///
/// Subtracts the row maximum (and one unit), takes the clipped exponential,
/// and multiplies by one reciprocal of the row sum per row.
pub fn secure_softmax(p: &mut Party, x: &SharedTensor) -> Result<SharedTensor> {
    if x.is_empty() || x.row_len() == 0 {
        return Err(Error::EmptyInput("softmax of an empty row"));
    }
    let id = p.id();
    let n = x.row_len();
    let m = max_rows(p, x)?;
    let shifted = x.sub_row_broadcast(&m)?.add_public_scalar(id, -RingElem::ONE);
    let (z, keep) = neg_exp_with_bit(p, &shifted)?;
    let z = z.reshape(x.shape().to_vec())?;
    let sum = z.sum_rows().add_public_scalar(id, RingElem(SUM_BIAS));
    let r = recip(p, &sum)?;
    let r = r.repeat_each(n).reshape(x.shape().to_vec())?;
    let q = mul_fixed(p, &z, &r)?;
    mul_ba(p, &keep, &q)
}
