use crate::error::{Error, Result};
use crate::ring::{RingElem, FRAC_BITS};
use crate::runtime::{Party, PartyId};
use crate::share::ArithShare;
use crate::tensor::SharedTensor;

/// Turn one additive component per party (`z_i` at party `i`, summing to the
/// target) into a replicated sharing. One round; each party masks its
/// component with a zero share and sends it to the previous party.
pub fn reshare(p: &mut Party, z: Vec<RingElem>, shape: Vec<usize>) -> Result<SharedTensor> {
    let n = z.len();
    let alpha = p.prf().zero_share(n);
    let lo: Vec<RingElem> = z.iter().zip(&alpha).map(|(&a, &b)| a + b).collect();
    let id = p.id();
    p.send_ring(id.prev(), &lo)?;
    let hi = p.recv_ring(id.next(), n)?;
    p.end_round();
    SharedTensor::new(
        shape,
        lo.into_iter().zip(hi).map(|(l, h)| ArithShare::new(l, h)).collect(),
    )
}

#[inline]
pub(crate) fn cross(a: ArithShare, b: ArithShare) -> RingElem {
    a.lo * b.lo + a.hi * b.lo + a.lo * b.hi
}

/// Elementwise ring product, no truncation.
pub fn mul(p: &mut Party, x: &SharedTensor, y: &SharedTensor) -> Result<SharedTensor> {
    x.ensure_same_shape(y)?;
    let z = x.data().iter().zip(y.data()).map(|(&a, &b)| cross(a, b)).collect();
    reshare(p, z, x.shape().to_vec())
}

/// Ring product of several independent pairs in one round.
pub fn mul_many(p: &mut Party, pairs: &[(&SharedTensor, &SharedTensor)]) -> Result<Vec<SharedTensor>> {
    let mut z = Vec::new();
    let mut shapes = Vec::with_capacity(pairs.len());
    for (x, y) in pairs {
        x.ensure_same_shape(y)?;
        z.extend(x.data().iter().zip(y.data()).map(|(&a, &b)| cross(a, b)));
        shapes.push(x.shape().to_vec());
    }
    let n = z.len();
    reshare(p, z, vec![n])?.split_flat(&shapes)
}

/// Truncate `f` fractional bits.
///
/// Party 0 holds `x_0 + x_1` and parties 1 and 2 hold `x_2`. Reading both as
/// signed integers, party 0 takes the floor of its part over `2^f`, the others
/// the ceiling, and party 0 reshares its half with a fresh mask shared with
/// party 2. The result is `floor(x / 2^f)` or one more, except with
/// probability about `|x| / 2^64` over the share randomness; it is exact
/// whenever `x_2` is zero. One round; only party 0 sends.
pub fn trunc(p: &mut Party, x: &SharedTensor, f: u32) -> Result<SharedTensor> {
    let n = x.len();
    let r = p.prf().correlated(n);
    let id = p.id();
    let down = |v: RingElem| RingElem::from_signed(v.as_signed() >> f);
    let up = |v: RingElem| RingElem(((v.as_signed() as i128 + (1i128 << f) - 1) >> f) as u64);
    let data: Vec<ArithShare> = match id.index() {
        0 => {
            let y1: Vec<RingElem> = x
                .data()
                .iter()
                .zip(&r.with_prev)
                .map(|(s, &m)| down(s.lo + s.hi) - RingElem(m))
                .collect();
            p.send_ring(PartyId::P1, &y1)?;
            r.with_prev
                .iter()
                .zip(y1)
                .map(|(&m, y)| ArithShare::new(RingElem(m), y))
                .collect()
        }
        1 => {
            let y1 = p.recv_ring(PartyId::P0, n)?;
            y1.into_iter()
                .zip(x.data())
                .map(|(y, s)| ArithShare::new(y, up(s.hi)))
                .collect()
        }
        _ => x
            .data()
            .iter()
            .zip(&r.with_next)
            .map(|(s, &m)| ArithShare::new(up(s.lo), RingElem(m)))
            .collect(),
    };
    p.end_round();
    SharedTensor::new(x.shape().to_vec(), data)
}

/// Fixed-point product: `mul` followed by `trunc(FRAC_BITS)`.
pub fn mul_fixed(p: &mut Party, x: &SharedTensor, y: &SharedTensor) -> Result<SharedTensor> {
    let z = mul(p, x, y)?;
    trunc(p, &z, FRAC_BITS)
}

/// Fixed-point products of several pairs, batched into two rounds.
pub fn mul_fixed_many(p: &mut Party, pairs: &[(&SharedTensor, &SharedTensor)]) -> Result<Vec<SharedTensor>> {
    let prods = mul_many(p, pairs)?;
    let shapes: Vec<Vec<usize>> = prods.iter().map(|t| t.shape().to_vec()).collect();
    let flat = SharedTensor::concat_flat(&prods.iter().collect::<Vec<_>>());
    trunc(p, &flat, FRAC_BITS)?.split_flat(&shapes)
}

/// Fixed-point square.
pub fn square(p: &mut Party, x: &SharedTensor) -> Result<SharedTensor> {
    let z = x
        .data()
        .iter()
        .map(|s| s.lo * s.lo + RingElem(2) * s.lo * s.hi)
        .collect();
    let sq = reshare(p, z, x.shape().to_vec())?;
    trunc(p, &sq, FRAC_BITS)
}

/// Multiply elementwise by public ring values, without truncation.
pub fn mul_public(x: &SharedTensor, c: &[RingElem]) -> Result<SharedTensor> {
    if c.len() != x.len() {
        return Err(Error::ShapeMismatch {
            expected: x.shape().to_vec(),
            actual: vec![c.len()],
        });
    }
    SharedTensor::new(
        x.shape().to_vec(),
        x.data().iter().zip(c).map(|(&s, &k)| s.scale(k)).collect(),
    )
}

/// Multiply by a public fixed-point scalar and truncate.
pub fn scale_fixed(p: &mut Party, x: &SharedTensor, c: RingElem) -> Result<SharedTensor> {
    trunc(p, &x.scale(c), FRAC_BITS)
}

/// Reveal to all parties. Each party sends its `hi` to the previous party,
/// which is the one component that party lacks.
pub fn open(p: &mut Party, x: &SharedTensor) -> Result<Vec<RingElem>> {
    let id = p.id();
    let hi: Vec<RingElem> = x.data().iter().map(|s| s.hi).collect();
    p.send_ring(id.prev(), &hi)?;
    let third = p.recv_ring(id.next(), x.len())?;
    p.end_round();
    Ok(x.data().iter().zip(third).map(|(s, t)| s.lo + s.hi + t).collect())
}

/// Check that neighbouring parties agree on the component they both hold.
/// Debug aid; reveals nothing beyond what the parties already share.
pub fn check_consistency(p: &mut Party, x: &SharedTensor) -> Result<()> {
    let id = p.id();
    let lo: Vec<RingElem> = x.data().iter().map(|s| s.lo).collect();
    let hi: Vec<RingElem> = x.data().iter().map(|s| s.hi).collect();
    p.send_ring(id.prev(), &lo)?;
    p.send_ring(id.next(), &hi)?;
    let from_next = p.recv_ring(id.next(), x.len())?;
    let from_prev = p.recv_ring(id.prev(), x.len())?;
    p.end_round();
    if from_next != hi {
        return Err(Error::ShareConsistency {
            component: id.next().index(),
        });
    }
    if from_prev != lo {
        return Err(Error::ShareConsistency { component: id.index() });
    }
    Ok(())
}
