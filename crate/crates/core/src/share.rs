//! 2-out-of-3 replicated shares and their communication-free algebra.
//!
//! A secret `x = x_0 + x_1 + x_2 (mod 2^64)` is held so that party `i` owns the
//! pair `(x_i, x_{i+1})`, indices taken mod 3. The `lo` field of a share is the
//! party's own component, `hi` the one it has in common with the next party.
//! Boolean shares follow the same layout with XOR in place of addition, one
//! 64-bit word per element.

use std::ops::{Add, Neg, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ring::RingElem;
use crate::runtime::PartyId;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArithShare {
    pub lo: RingElem,
    pub hi: RingElem,
}

impl ArithShare {
    pub const ZERO: ArithShare = ArithShare {
        lo: RingElem::ZERO,
        hi: RingElem::ZERO,
    };

    pub fn new(lo: RingElem, hi: RingElem) -> Self {
        ArithShare { lo, hi }
    }

    /// Multiply by a public ring constant.
    #[inline]
    pub fn scale(self, c: RingElem) -> Self {
        ArithShare {
            lo: self.lo * c,
            hi: self.hi * c,
        }
    }

    /// Add a public constant. The constant lands in component `x_0`, held by
    /// party 0 (as `lo`) and party 2 (as `hi`).
    #[inline]
    pub fn add_public(self, party: PartyId, c: RingElem) -> Self {
        match party.index() {
            0 => ArithShare {
                lo: self.lo + c,
                hi: self.hi,
            },
            2 => ArithShare {
                lo: self.lo,
                hi: self.hi + c,
            },
            _ => self,
        }
    }

    /// Sharing of a value whose only nonzero component is `x_j = v`, built
    /// locally by the two parties that know `v`.
    #[inline]
    pub fn from_component(party: PartyId, j: usize, v: RingElem) -> Self {
        let i = party.index();
        if j == i {
            ArithShare::new(v, RingElem::ZERO)
        } else if j == (i + 1) % 3 {
            ArithShare::new(RingElem::ZERO, v)
        } else {
            ArithShare::ZERO
        }
    }
}

impl Add for ArithShare {
    type Output = ArithShare;
    #[inline]
    fn add(self, rhs: ArithShare) -> ArithShare {
        ArithShare {
            lo: self.lo + rhs.lo,
            hi: self.hi + rhs.hi,
        }
    }
}

impl Sub for ArithShare {
    type Output = ArithShare;
    #[inline]
    fn sub(self, rhs: ArithShare) -> ArithShare {
        ArithShare {
            lo: self.lo - rhs.lo,
            hi: self.hi - rhs.hi,
        }
    }
}

impl Neg for ArithShare {
    type Output = ArithShare;
    #[inline]
    fn neg(self) -> ArithShare {
        ArithShare {
            lo: -self.lo,
            hi: -self.hi,
        }
    }
}

/// Boolean replicated share of a 64-bit word; bit `k` of the secret is the XOR
/// of bit `k` across the three components.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoolShare {
    pub lo: u64,
    pub hi: u64,
}

impl BoolShare {
    pub const ZERO: BoolShare = BoolShare { lo: 0, hi: 0 };

    pub fn new(lo: u64, hi: u64) -> Self {
        BoolShare { lo, hi }
    }

    #[inline]
    pub fn xor(self, rhs: BoolShare) -> BoolShare {
        BoolShare {
            lo: self.lo ^ rhs.lo,
            hi: self.hi ^ rhs.hi,
        }
    }

    /// XOR a public word into component 0.
    #[inline]
    pub fn xor_public(self, party: PartyId, c: u64) -> BoolShare {
        match party.index() {
            0 => BoolShare {
                lo: self.lo ^ c,
                hi: self.hi,
            },
            2 => BoolShare {
                lo: self.lo,
                hi: self.hi ^ c,
            },
            _ => self,
        }
    }

    #[inline]
    pub fn and_public(self, c: u64) -> BoolShare {
        BoolShare {
            lo: self.lo & c,
            hi: self.hi & c,
        }
    }

    #[inline]
    #[allow(clippy::should_implement_trait)]
    pub fn shl(self, k: u32) -> BoolShare {
        BoolShare {
            lo: self.lo << k,
            hi: self.hi << k,
        }
    }

    #[inline]
    #[allow(clippy::should_implement_trait)]
    pub fn shr(self, k: u32) -> BoolShare {
        BoolShare {
            lo: self.lo >> k,
            hi: self.hi >> k,
        }
    }

    #[inline]
    pub fn from_component(party: PartyId, j: usize, v: u64) -> Self {
        let i = party.index();
        if j == i {
            BoolShare::new(v, 0)
        } else if j == (i + 1) % 3 {
            BoolShare::new(0, v)
        } else {
            BoolShare::ZERO
        }
    }
}

/// Replicated shares from explicit components `(x_0, x_1, x_2)`.
pub fn shares_from_components(x: [RingElem; 3]) -> [ArithShare; 3] {
    [0, 1, 2].map(|i| ArithShare::new(x[i], x[(i + 1) % 3]))
}

/// Split `x` into three replicated shares with `x_0`, `x_1` uniform.
pub fn make_shares<R: Rng + ?Sized>(x: RingElem, rng: &mut R) -> [ArithShare; 3] {
    let x0 = RingElem(rng.random());
    let x1 = RingElem(rng.random());
    shares_from_components([x0, x1, x - x0 - x1])
}

/// Recombine three shares, checking that every overlapping component agrees.
pub fn reconstruct(s0: ArithShare, s1: ArithShare, s2: ArithShare) -> Result<RingElem> {
    let s = [s0, s1, s2];
    for i in 0..3 {
        if s[i].hi != s[(i + 1) % 3].lo {
            return Err(Error::ShareConsistency { component: (i + 1) % 3 });
        }
    }
    Ok(s0.lo + s1.lo + s2.lo)
}

pub fn make_bool_shares<R: Rng + ?Sized>(x: u64, rng: &mut R) -> [BoolShare; 3] {
    let x0: u64 = rng.random();
    let x1: u64 = rng.random();
    let c = [x0, x1, x ^ x0 ^ x1];
    [0, 1, 2].map(|i| BoolShare::new(c[i], c[(i + 1) % 3]))
}

pub fn reconstruct_bool(s0: BoolShare, s1: BoolShare, s2: BoolShare) -> Result<u64> {
    let s = [s0, s1, s2];
    for i in 0..3 {
        if s[i].hi != s[(i + 1) % 3].lo {
            return Err(Error::ShareConsistency { component: (i + 1) % 3 });
        }
    }
    Ok(s0.lo ^ s1.lo ^ s2.lo)
}

#[inline]
pub fn local_add(a: ArithShare, b: ArithShare) -> ArithShare {
    a + b
}

/// Share of `c1*x + c2*y + c3` from shares of `x` and `y`; no communication.
#[inline]
pub fn local_affine(
    party: PartyId,
    c1: RingElem,
    c2: RingElem,
    c3: RingElem,
    a: ArithShare,
    b: ArithShare,
) -> ArithShare {
    (a.scale(c1) + b.scale(c2)).add_public(party, c3)
}
