//! Arithmetic in the ring of integers modulo 2^64 and the fixed-point codec
//! that embeds reals into it.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bit width of the ring.
pub const RING_BITS: u32 = 64;

/// Fractional bits of the default fixed-point encoding.
pub const FRAC_BITS: u32 = 18;

/// Default bound on representable plaintext magnitudes.
pub const MAX_MAGNITUDE: f64 = (1u64 << 20) as f64;

/// An element of Z_{2^64}. All arithmetic wraps.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(transparent)]
pub struct RingElem(pub u64);

impl RingElem {
    pub const ZERO: RingElem = RingElem(0);
    pub const ONE: RingElem = RingElem(1);

    /// Two's-complement view: residues >= 2^63 are negative.
    #[inline]
    pub fn as_signed(self) -> i64 {
        self.0 as i64
    }

    #[inline]
    pub fn from_signed(v: i64) -> Self {
        RingElem(v as u64)
    }

    #[inline]
    pub fn msb(self) -> bool {
        self.0 >> 63 == 1
    }

    #[inline]
    pub fn bit(self, i: u32) -> bool {
        (self.0 >> i) & 1 == 1
    }
}

impl fmt::Debug for RingElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R({})", self.0)
    }
}

impl fmt::Display for RingElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u64> for RingElem {
    fn from(v: u64) -> Self {
        RingElem(v)
    }
}

impl Add for RingElem {
    type Output = RingElem;
    #[inline]
    fn add(self, rhs: RingElem) -> RingElem {
        RingElem(self.0.wrapping_add(rhs.0))
    }
}

impl Sub for RingElem {
    type Output = RingElem;
    #[inline]
    fn sub(self, rhs: RingElem) -> RingElem {
        RingElem(self.0.wrapping_sub(rhs.0))
    }
}

impl Mul for RingElem {
    type Output = RingElem;
    #[inline]
    fn mul(self, rhs: RingElem) -> RingElem {
        RingElem(self.0.wrapping_mul(rhs.0))
    }
}

impl Neg for RingElem {
    type Output = RingElem;
    #[inline]
    fn neg(self) -> RingElem {
        RingElem(self.0.wrapping_neg())
    }
}

impl AddAssign for RingElem {
    #[inline]
    fn add_assign(&mut self, rhs: RingElem) {
        *self = *self + rhs;
    }
}

impl SubAssign for RingElem {
    #[inline]
    fn sub_assign(&mut self, rhs: RingElem) {
        *self = *self - rhs;
    }
}

impl MulAssign for RingElem {
    #[inline]
    fn mul_assign(&mut self, rhs: RingElem) {
        *self = *self * rhs;
    }
}

impl Sum for RingElem {
    fn sum<I: Iterator<Item = RingElem>>(iter: I) -> RingElem {
        iter.fold(RingElem::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a RingElem> for RingElem {
    fn sum<I: Iterator<Item = &'a RingElem>>(iter: I) -> RingElem {
        iter.copied().sum()
    }
}

/// Fixed-point encoding of reals: `v` maps to `round(v * 2^frac_bits) mod 2^64`,
/// rounding half away from zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedCodec {
    frac_bits: u32,
    max_magnitude: f64,
}

impl Default for FixedCodec {
    fn default() -> Self {
        FixedCodec {
            frac_bits: FRAC_BITS,
            max_magnitude: MAX_MAGNITUDE,
        }
    }
}

impl FixedCodec {
    pub fn new(frac_bits: u32, max_magnitude: f64) -> Self {
        assert!(frac_bits < RING_BITS - 1, "frac_bits must leave room for sign");
        FixedCodec {
            frac_bits,
            max_magnitude,
        }
    }

    /// Codec with `frac_bits` fractional bits and the default magnitude bound.
    pub fn with_frac_bits(frac_bits: u32) -> Self {
        Self::new(frac_bits, MAX_MAGNITUDE)
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    pub fn max_magnitude(&self) -> f64 {
        self.max_magnitude
    }

    pub fn scale(&self) -> f64 {
        (1u64 << self.frac_bits) as f64
    }

    /// Size of one unit in the last place.
    pub fn ulp(&self) -> f64 {
        1.0 / self.scale()
    }

    pub fn encode(&self, v: f64) -> Result<RingElem> {
        if v.is_nan() || v.abs() >= self.max_magnitude {
            return Err(Error::MagnitudeOverflow {
                value: v,
                bound: self.max_magnitude,
            });
        }
        Ok(RingElem::from_signed((v * self.scale()).round() as i64))
    }

    pub fn decode(&self, r: RingElem) -> f64 {
        r.as_signed() as f64 / self.scale()
    }

    pub fn encode_slice(&self, vs: &[f64]) -> Result<Vec<RingElem>> {
        vs.iter().map(|&v| self.encode(v)).collect()
    }

    pub fn decode_slice(&self, rs: &[RingElem]) -> Vec<f64> {
        rs.iter().map(|&r| self.decode(r)).collect()
    }
}

/// Encode with the default codec.
pub fn encode_fixed(v: f64) -> Result<RingElem> {
    FixedCodec::default().encode(v)
}

/// Decode with the default codec.
pub fn decode_fixed(r: RingElem) -> f64 {
    FixedCodec::default().decode(r)
}

/// Encoding of a protocol constant known to be in range.
pub(crate) fn fixed_const(v: f64, frac_bits: u32) -> RingElem {
    FixedCodec::with_frac_bits(frac_bits)
        .encode(v)
        .expect("protocol constant within fixed-point range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn encode_examples() {
        assert_eq!(encode_fixed(1.0).unwrap(), RingElem(262_144));
        assert_eq!(encode_fixed(0.0).unwrap(), RingElem(0));
        assert_eq!(encode_fixed(-1.0).unwrap(), RingElem(0u64.wrapping_sub(262_144)));
    }

    #[test]
    fn decode_examples() {
        assert_eq!(decode_fixed(RingElem(262_144)), 1.0);
        assert_eq!(decode_fixed(RingElem(0u64.wrapping_sub(262_144))), -1.0);
        assert_eq!(decode_fixed(RingElem(131_072)), 0.5);
    }

    #[test]
    fn encode_rejects_out_of_range() {
        assert!(matches!(
            encode_fixed(MAX_MAGNITUDE),
            Err(Error::MagnitudeOverflow { .. })
        ));
        assert!(encode_fixed(-2e6).is_err());
        assert!(encode_fixed(f64::NAN).is_err());
        assert!(encode_fixed(MAX_MAGNITUDE - 1.0).is_ok());
    }

    #[test]
    fn rounding_is_half_away_from_zero() {
        let half_ulp = 0.5 / (1u64 << FRAC_BITS) as f64;
        assert_eq!(encode_fixed(half_ulp).unwrap(), RingElem(1));
        assert_eq!(encode_fixed(-half_ulp).unwrap(), RingElem::from_signed(-1));
    }

    #[test]
    fn ring_wraps() {
        let a = RingElem(u64::MAX);
        assert_eq!(a + RingElem::ONE, RingElem::ZERO);
        assert_eq!(-RingElem(5), RingElem(u64::MAX - 4));
        assert_eq!(RingElem(1 << 63) * RingElem(2), RingElem::ZERO);
    }

    proptest! {
        #[test]
        fn fixed_point_error_within_half_ulp(v in -1_048_575.0f64..1_048_575.0) {
            let err = (decode_fixed(encode_fixed(v).unwrap()) - v).abs();
            prop_assert!(err <= 2f64.powi(-19));
        }

        #[test]
        fn negation_is_complement(v in any::<u64>()) {
            prop_assert_eq!((-RingElem(v)).0, 0u64.wrapping_sub(v));
            prop_assert_eq!(RingElem(v) + -RingElem(v), RingElem::ZERO);
        }
    }
}
