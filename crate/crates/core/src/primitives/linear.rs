use super::arith::reshare;
use crate::error::{Error, Result};
use crate::ring::RingElem;
use crate::runtime::Party;
use crate::share::ArithShare;
use crate::tensor::SharedTensor;

fn inner_dims(a: &SharedTensor, b_shape: &[usize]) -> Result<(usize, usize, usize)> {
    let [m, k] = a.dims2()?;
    if b_shape.len() != 2 || b_shape[0] != k {
        return Err(Error::ShapeMismatch {
            expected: vec![k, b_shape.last().copied().unwrap_or(0)],
            actual: b_shape.to_vec(),
        });
    }
    Ok((m, k, b_shape[1]))
}

/// This party's additive component of `A * B`.
fn matmul_component(a: &SharedTensor, b: &SharedTensor) -> Result<Vec<RingElem>> {
    let (m, k, n) = inner_dims(a, b.shape())?;
    // a.lo*b.lo + a.hi*b.lo + a.lo*b.hi = a.lo*(b.lo + b.hi) + a.hi*b.lo
    let b_sum: Vec<u64> = b.data().iter().map(|s| s.lo.0.wrapping_add(s.hi.0)).collect();
    let b_lo: Vec<u64> = b.data().iter().map(|s| s.lo.0).collect();
    let mut z = vec![0u64; m * n];
    for i in 0..m {
        let out = &mut z[i * n..(i + 1) * n];
        for t in 0..k {
            let s = a.data()[i * k + t];
            let (al, ah) = (s.lo.0, s.hi.0);
            let bs = &b_sum[t * n..(t + 1) * n];
            let bl = &b_lo[t * n..(t + 1) * n];
            for j in 0..n {
                out[j] = out[j]
                    .wrapping_add(al.wrapping_mul(bs[j]))
                    .wrapping_add(ah.wrapping_mul(bl[j]));
            }
        }
    }
    Ok(z.into_iter().map(RingElem).collect())
}

/// Ring matrix product `[m, k] x [k, n]`, no truncation. One round.
pub fn matmul_ring(p: &mut Party, a: &SharedTensor, b: &SharedTensor) -> Result<SharedTensor> {
    let z = matmul_component(a, b)?;
    let n = b.shape()[1];
    reshare(p, z, vec![a.shape()[0], n])
}

/// Several independent ring matrix products in one round.
pub fn matmul_ring_many(p: &mut Party, pairs: &[(&SharedTensor, &SharedTensor)]) -> Result<Vec<SharedTensor>> {
    let mut z = Vec::new();
    let mut shapes = Vec::with_capacity(pairs.len());
    for (a, b) in pairs {
        z.extend(matmul_component(a, b)?);
        shapes.push(vec![a.shape()[0], b.shape()[1]]);
    }
    let total = z.len();
    reshare(p, z, vec![total])?.split_flat(&shapes)
}

/// Product with a public `[k, n]` matrix; local, no truncation.
pub fn matmul_public_ring(a: &SharedTensor, b: &[RingElem], b_shape: [usize; 2]) -> Result<SharedTensor> {
    let (m, k, n) = inner_dims(a, &b_shape)?;
    if b.len() != k * n {
        return Err(Error::ShapeMismatch {
            expected: b_shape.to_vec(),
            actual: vec![b.len()],
        });
    }
    let mut out = vec![ArithShare::ZERO; m * n];
    for i in 0..m {
        for t in 0..k {
            let s = a.data()[i * k + t];
            for j in 0..n {
                out[i * n + j] = out[i * n + j] + s.scale(b[t * n + j]);
            }
        }
    }
    SharedTensor::new(vec![m, n], out)
}
