use super::arith::mul;
use crate::error::{Error, Result};
use crate::ring::RingElem;
use crate::runtime::{Party, PartyId};
use crate::share::{ArithShare, BoolShare};
use crate::tensor::{width_mask, BoolTensor, SharedTensor};

/// Operand of a comparison: a shared tensor, per-element public values, or
/// one public constant broadcast to every element.
#[derive(Clone, Copy, Debug)]
pub enum Operand<'a> {
    Shared(&'a SharedTensor),
    Public(&'a [RingElem]),
    Const(RingElem),
}

impl<'a> From<&'a SharedTensor> for Operand<'a> {
    fn from(t: &'a SharedTensor) -> Self {
        Operand::Shared(t)
    }
}

impl<'a> From<&'a [RingElem]> for Operand<'a> {
    fn from(v: &'a [RingElem]) -> Self {
        Operand::Public(v)
    }
}

impl<'a> From<&'a Vec<RingElem>> for Operand<'a> {
    fn from(v: &'a Vec<RingElem>) -> Self {
        Operand::Public(v)
    }
}

impl From<RingElem> for Operand<'_> {
    fn from(c: RingElem) -> Self {
        Operand::Const(c)
    }
}

/// Shared `x - y`.
pub(crate) fn difference(id: PartyId, x: Operand<'_>, y: Operand<'_>) -> Result<SharedTensor> {
    use Operand::*;
    match (x, y) {
        (Shared(a), Shared(b)) => a.sub(b),
        (Shared(a), Public(c)) => a.add_public(id, &c.iter().map(|&v| -v).collect::<Vec<_>>()),
        (Shared(a), Const(c)) => Ok(a.add_public_scalar(id, -c)),
        (Public(c), Shared(b)) => b.neg().add_public(id, c),
        (Const(c), Shared(b)) => Ok(b.neg().add_public_scalar(id, c)),
        (Public(a), Public(b)) => {
            if a.len() != b.len() {
                return Err(Error::ShapeMismatch {
                    expected: vec![a.len()],
                    actual: vec![b.len()],
                });
            }
            let d: Vec<RingElem> = a.iter().zip(b).map(|(&u, &v)| u - v).collect();
            SharedTensor::from_public(id, vec![d.len()], &d)
        }
        (Public(a), Const(c)) => {
            let d: Vec<RingElem> = a.iter().map(|&u| u - c).collect();
            SharedTensor::from_public(id, vec![d.len()], &d)
        }
        (Const(c), Public(b)) => {
            let d: Vec<RingElem> = b.iter().map(|&v| c - v).collect();
            SharedTensor::from_public(id, vec![d.len()], &d)
        }
        (Const(_), Const(_)) => Err(Error::EmptyInput("comparison of two scalars has no shape")),
    }
}

/// Bitwise AND of the low `width` bits. One round; each party sends
/// `ceil(n * width / 8)` bytes to the previous party.
pub fn and_words(p: &mut Party, a: &[BoolShare], b: &[BoolShare], width: u32) -> Result<Vec<BoolShare>> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch {
            expected: vec![a.len()],
            actual: vec![b.len()],
        });
    }
    let n = a.len();
    let mask = width_mask(width);
    let alpha = p.prf().zero_share_bool(n);
    let z: Vec<u64> = a
        .iter()
        .zip(b)
        .zip(&alpha)
        .map(|((x, y), &m)| ((x.lo & y.lo) ^ (x.hi & y.lo) ^ (x.lo & y.hi) ^ m) & mask)
        .collect();
    let id = p.id();
    p.send_bits(id.prev(), &z, width)?;
    let hi = p.recv_bits(id.next(), n, width)?;
    p.end_round();
    Ok(z.into_iter().zip(hi).map(|(l, h)| BoolShare::new(l, h)).collect())
}

pub fn and_bits(p: &mut Party, a: &BoolTensor, b: &BoolTensor, width: u32) -> Result<BoolTensor> {
    let out = and_words(p, a.data(), b.data(), width)?;
    BoolTensor::new(a.shape().to_vec(), out)
}

fn component_bits(id: PartyId, s: ArithShare, j: usize) -> BoolShare {
    let i = id.index();
    let v = if j == i {
        s.lo.0
    } else if j == (i + 1) % 3 {
        s.hi.0
    } else {
        0
    };
    BoolShare::from_component(id, j, v)
}

fn xor_words(a: &[BoolShare], b: &[BoolShare]) -> Vec<BoolShare> {
    a.iter().zip(b).map(|(&x, &y)| x.xor(y)).collect()
}

fn shl_words(a: &[BoolShare], k: u32) -> Vec<BoolShare> {
    a.iter().map(|x| x.shl(k)).collect()
}

/// Arithmetic to boolean conversion.
///
/// The three additive components are boolean-shared locally, reduced to two
/// addends by a carry-save step, and added with a Kogge-Stone prefix
/// circuit. Eight rounds.
pub fn a2b(p: &mut Party, x: &SharedTensor) -> Result<BoolTensor> {
    let id = p.id();
    let [a, b, c]: [Vec<BoolShare>; 3] =
        [0, 1, 2].map(|j| x.data().iter().map(|&s| component_bits(id, s, j)).collect());

    let s = xor_words(&xor_words(&a, &b), &c);
    let maj = and_words(p, &xor_words(&a, &c), &xor_words(&b, &c), 64)?;
    let carry = shl_words(&xor_words(&maj, &c), 1);

    let prop = xor_words(&s, &carry);
    let mut g = and_words(p, &s, &carry, 64)?;
    let mut pk = prop.clone();
    let n = x.len();
    for k in [1u32, 2, 4, 8, 16, 32] {
        let g_shift = shl_words(&g, k);
        if k < 32 {
            let lhs: Vec<BoolShare> = pk.iter().chain(&pk).copied().collect();
            let rhs: Vec<BoolShare> = g_shift.iter().copied().chain(shl_words(&pk, k)).collect();
            let both = and_words(p, &lhs, &rhs, 64)?;
            g = xor_words(&g, &both[..n]);
            pk = both[n..].to_vec();
        } else {
            let pg = and_words(p, &pk, &g_shift, 64)?;
            g = xor_words(&g, &pg);
        }
    }
    let sum = xor_words(&prop, &shl_words(&g, 1));
    BoolTensor::new(x.shape().to_vec(), sum)
}

/// Shared bit `1{x < y}` under the signed interpretation, in bit position 0.
pub fn lt<'a>(p: &mut Party, x: impl Into<Operand<'a>>, y: impl Into<Operand<'a>>) -> Result<BoolTensor> {
    let d = difference(p.id(), x.into(), y.into())?;
    Ok(a2b(p, &d)?.bit(63))
}

/// Shared bit `1{x = y}` (exact ring equality), in bit position 0.
pub fn eq<'a>(p: &mut Party, x: impl Into<Operand<'a>>, y: impl Into<Operand<'a>>) -> Result<BoolTensor> {
    let id = p.id();
    let d = difference(id, x.into(), y.into())?;
    let zero_bits = a2b(p, &d)?.not(id, 64);
    let shape = zero_bits.shape().to_vec();
    let mut v = zero_bits.into_data();
    for w in [32u32, 16, 8, 4, 2, 1] {
        let mask = width_mask(w);
        let lo: Vec<BoolShare> = v.iter().map(|s| s.and_public(mask)).collect();
        let hi: Vec<BoolShare> = v.iter().map(|s| s.shr(w).and_public(mask)).collect();
        v = and_words(p, &lo, &hi, w)?;
    }
    BoolTensor::new(shape, v)
}

/// Bit injection: arithmetic sharing of bit 0 of each boolean share. The
/// three boolean components are combined with two sequential products,
/// `a XOR b = a + b - 2ab`. Two rounds.
pub fn b2a(p: &mut Party, bits: &BoolTensor) -> Result<SharedTensor> {
    let id = p.id();
    let shape = bits.shape().to_vec();
    let comp = |j: usize| -> Result<SharedTensor> {
        let data = bits
            .data()
            .iter()
            .map(|b| {
                let i = id.index();
                let v = if j == i {
                    b.lo & 1
                } else if j == (i + 1) % 3 {
                    b.hi & 1
                } else {
                    0
                };
                ArithShare::from_component(id, j, RingElem(v))
            })
            .collect();
        SharedTensor::new(shape.clone(), data)
    };
    let (b0, b1, b2) = (comp(0)?, comp(1)?, comp(2)?);
    let two = RingElem(2);
    let c = b0.add(&b1)?.sub(&mul(p, &b0, &b1)?.scale(two))?;
    c.add(&b2)?.sub(&mul(p, &c, &b2)?.scale(two))
}

/// `b * x` for a shared bit `b` (bit position 0). Exact; three rounds.
pub fn mul_ba(p: &mut Party, b: &BoolTensor, x: &SharedTensor) -> Result<SharedTensor> {
    if b.len() != x.len() {
        return Err(Error::ShapeMismatch {
            expected: x.shape().to_vec(),
            actual: b.shape().to_vec(),
        });
    }
    let a = b2a(p, b)?.reshape(x.shape().to_vec())?;
    mul(p, &a, x)
}

/// Reveal boolean words to all parties.
pub fn open_bool(p: &mut Party, b: &BoolTensor) -> Result<Vec<u64>> {
    let id = p.id();
    let hi: Vec<u64> = b.data().iter().map(|s| s.hi).collect();
    p.send_bits(id.prev(), &hi, 64)?;
    let third = p.recv_bits(id.next(), b.len(), 64)?;
    p.end_round();
    Ok(b.data().iter().zip(third).map(|(s, t)| s.lo ^ s.hi ^ t).collect())
}
