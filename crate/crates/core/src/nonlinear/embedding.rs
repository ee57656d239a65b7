use crate::error::Result;
use crate::primitives::{b2a, eq, matmul_ring};
use crate::ring::RingElem;
use crate::runtime::Party;
use crate::tensor::SharedTensor;

/// Look up rows of a shared table `[vocab, d]` at shared integer ids `[s]`.
///
/// Builds the one-hot matrix `o[j][i] = 1{id_j = i}` with equality tests and
/// multiplies it with the table in the ring, so the selected rows come out
/// bit-exact. Out-of-range ids select the zero vector.
pub fn secure_embedding(p: &mut Party, ids: &SharedTensor, table: &SharedTensor) -> Result<SharedTensor> {
    let [vocab, _] = table.dims2()?;
    let s = ids.len();
    let lhs = ids.repeat_each(vocab).reshape(vec![s * vocab])?;
    let idx: Vec<RingElem> = (0..s).flat_map(|_| (0..vocab as u64).map(RingElem)).collect();
    let onehot = eq(p, &lhs, &idx)?;
    let onehot = b2a(p, &onehot)?.reshape(vec![s, vocab])?;
    matmul_ring(p, &onehot, table)
}
