use crate::error::Result;
use crate::primitives::{lt, mul_ba, mul_fixed_many, square, trunc};
use crate::ring::{fixed_const, RingElem, FRAC_BITS};
use crate::runtime::Party;
use crate::share::ArithShare;
use crate::tensor::{BoolTensor, SharedTensor};

/// Piecewise GeLU: zero below `breakpoints[0]`, cubic `f0` up to
/// `breakpoints[1]`, degree-6 `f1` up to `breakpoints[2]`, identity above.
#[derive(Clone, Debug, PartialEq)]
pub struct GeluConstants {
    pub breakpoints: [f64; 3],
    /// Coefficients of `x^0..x^3`.
    pub f0: [f64; 4],
    /// Coefficients of `x^0..x^6`. The `x^5` coefficient must be zero.
    pub f1: [f64; 7],
}

impl Default for GeluConstants {
    fn default() -> Self {
        GeluConstants {
            breakpoints: [-4.0, -1.95, 3.0],
            f0: [
                -0.5054031199708174,
                -0.42226581151983866,
                -0.11807612951181953,
                -0.011034134030615728,
            ],
            f1: [
                0.008526321541038084,
                0.5,
                0.3603292692789629,
                0.0,
                -0.037688200365904236,
                0.0,
                0.0018067462606141187,
            ],
        }
    }
}

impl GeluConstants {
    pub fn f0(&self, x: f64) -> f64 {
        self.f0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn f1(&self, x: f64) -> f64 {
        self.f1.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let [a, b, c] = self.breakpoints;
        if x < a {
            0.0
        } else if x < b {
            self.f0(x)
        } else if x <= c {
            self.f1(x)
        } else {
            x
        }
    }
}

/// Extra fractional bits carried by polynomial coefficients.
const COEFF_EXTRA_BITS: u32 = 4;

/// Interval bits `[z0, z1, z2]` (flattened) and the raw comparison bit
/// `b0 = 1{x < a}`.
pub fn gelu_interval_bits(p: &mut Party, x: &SharedTensor, k: &GeluConstants) -> Result<(BoolTensor, BoolTensor)> {
    let n = x.len();
    let id = p.id();
    let flat = x.clone().reshape(vec![n])?;
    // Comparisons b0 = x < a, b1 = x < b, b2 = c < x, as one batch of x' < t'.
    let lhs = SharedTensor::concat_flat(&[&flat, &flat, &flat.neg()]);
    let [a, b, c] = k.breakpoints.map(|v| fixed_const(v, FRAC_BITS));
    let rhs: Vec<RingElem> = std::iter::repeat_n(a, n)
        .chain(std::iter::repeat_n(b, n))
        .chain(std::iter::repeat_n(-c, n))
        .collect();
    let bits = lt(p, &lhs, &rhs)?.split_flat(&[n, n, n])?;
    let (b0, b1, b2) = (&bits[0], &bits[1], &bits[2]);
    let z0 = b0.xor(b1)?;
    let z1 = b1.xor(b2)?.map(|s| s.xor_public(id, 1));
    let z = BoolTensor::concat_flat(&[&z0, &z1, b2]);
    Ok((z, b0.clone()))
}

/// Secure piecewise GeLU.
pub fn secure_gelu(p: &mut Party, x: &SharedTensor) -> Result<SharedTensor> {
    secure_gelu_with(p, x, &GeluConstants::default())
}

pub fn secure_gelu_with(p: &mut Party, x: &SharedTensor, k: &GeluConstants) -> Result<SharedTensor> {
    let n = x.len();
    let id = p.id();
    let shape = x.shape().to_vec();
    let xf = x.clone().reshape(vec![n])?;
    let (z, _) = gelu_interval_bits(p, &xf, k)?;

    let x2 = square(p, &xf)?;
    let mut x34 = mul_fixed_many(p, &[(&xf, &x2), (&x2, &x2)])?;
    let x4 = x34.pop().unwrap();
    let x3 = x34.pop().unwrap();
    let x6 = square(p, &x3)?;

    // Terms carry FRAC_BITS + COEFF_EXTRA_BITS extra bits, removed by one
    // truncation per polynomial.
    let cb = FRAC_BITS + COEFF_EXTRA_BITS;
    let c = |v: f64| fixed_const(v, cb);
    let c0 = |v: f64| fixed_const(v, FRAC_BITS + cb);
    let powers: [(usize, &SharedTensor); 5] = [(1, &xf), (2, &x2), (3, &x3), (4, &x4), (6, &x6)];
    let poly = |coef: &[f64]| -> SharedTensor {
        let terms: Vec<(&SharedTensor, RingElem)> = powers
            .iter()
            .filter(|(k, _)| *k < coef.len() && coef[*k] != 0.0)
            .map(|&(k, t)| (t, c(coef[k])))
            .collect();
        let data = (0..n)
            .map(|i| {
                terms
                    .iter()
                    .fold(ArithShare::ZERO, |acc, (t, w)| acc + t.data()[i].scale(*w))
            })
            .collect();
        SharedTensor::from_vec(data).add_public_scalar(id, c0(coef[0]))
    };
    let f0 = poly(&k.f0);
    let f1 = poly(&k.f1);
    let both = trunc(p, &SharedTensor::concat_flat(&[&f0, &f1]), cb)?;

    let branches = SharedTensor::concat_flat(&[&both, &xf]);
    let sel = mul_ba(p, &z, &branches)?.split_flat(&[vec![n], vec![n], vec![n]])?;
    sel[0].add(&sel[1])?.add(&sel[2])?.reshape(shape)
}
