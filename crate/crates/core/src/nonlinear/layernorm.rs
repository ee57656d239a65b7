use crate::error::{Error, Result};
use crate::primitives::{mul_fixed, rsqrt, square, trunc};
use crate::ring::{fixed_const, FRAC_BITS};
use crate::runtime::Party;
use crate::tensor::SharedTensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerNormMode {
    /// `(x - mean) / sqrt(var + eps)` with `var` the mean squared deviation.
    #[default]
    Standard,
    /// `(x - mean) / sqrt(sum of squared deviations)`, no division by `n`
    /// and no epsilon.
    SumOfSquares,
}

pub const LN_EPS: f64 = 1e-5;

/// LayerNorm over the last axis with per-column `gamma` and `beta`.
pub fn secure_layernorm(
    p: &mut Party,
    x: &SharedTensor,
    gamma: &SharedTensor,
    beta: &SharedTensor,
    mode: LayerNormMode,
) -> Result<SharedTensor> {
    let n = x.row_len();
    if n < 2 {
        return Err(Error::EmptyInput("layer norm needs rows of length two or more"));
    }
    let id = p.id();
    let inv_n = fixed_const(1.0 / n as f64, FRAC_BITS);
    let mu = trunc(p, &x.sum_rows().scale(inv_n), FRAC_BITS)?;
    let d = x.sub_row_broadcast(&mu)?;
    let sigma = square(p, &d)?.sum_rows();
    let v = match mode {
        LayerNormMode::Standard => {
            trunc(p, &sigma.scale(inv_n), FRAC_BITS)?.add_public_scalar(id, fixed_const(LN_EPS, FRAC_BITS))
        }
        LayerNormMode::SumOfSquares => sigma,
    };
    let r = rsqrt(p, &v)?;
    let r = r.repeat_each(n).reshape(x.shape().to_vec())?;
    let c = mul_fixed(p, &d, &r)?;
    let g = gamma.tile_rows(x.num_rows()).reshape(x.shape().to_vec())?;
    mul_fixed(p, &g, &c)?.add_col_broadcast(beta)
}
