//! Shaped collections of shares. Layouts are row-major; "rows" always means
//! the last axis.

use rand::Rng;

use crate::error::{Error, Result};
use crate::ring::{FixedCodec, RingElem};
use crate::runtime::PartyId;
use crate::share::{make_bool_shares, make_shares, reconstruct, reconstruct_bool, ArithShare, BoolShare};

fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharedTensor {
    shape: Vec<usize>,
    data: Vec<ArithShare>,
}

impl SharedTensor {
    pub fn new(shape: Vec<usize>, data: Vec<ArithShare>) -> Result<Self> {
        if numel(&shape) != data.len() {
            return Err(Error::ShapeMismatch {
                expected: shape,
                actual: vec![data.len()],
            });
        }
        Ok(SharedTensor { shape, data })
    }

    pub fn from_vec(data: Vec<ArithShare>) -> Self {
        SharedTensor {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = numel(&shape);
        SharedTensor {
            shape,
            data: vec![ArithShare::ZERO; n],
        }
    }

    /// A tensor whose value is the public `values`, shared without randomness.
    pub fn from_public(party: PartyId, shape: Vec<usize>, values: &[RingElem]) -> Result<Self> {
        let data = values.iter().map(|&v| ArithShare::ZERO.add_public(party, v)).collect();
        SharedTensor::new(shape, data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[ArithShare] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [ArithShare] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<ArithShare> {
        self.data
    }

    pub fn reshape(mut self, shape: Vec<usize>) -> Result<Self> {
        if numel(&shape) != self.data.len() {
            return Err(Error::ShapeMismatch {
                expected: shape,
                actual: self.shape,
            });
        }
        self.shape = shape;
        Ok(self)
    }

    /// Length of the last axis.
    pub fn row_len(&self) -> usize {
        self.shape.last().copied().unwrap_or(1)
    }

    pub fn num_rows(&self) -> usize {
        if self.data.is_empty() {
            0
        } else {
            self.data.len() / self.row_len()
        }
    }

    pub fn row(&self, r: usize) -> &[ArithShare] {
        let n = self.row_len();
        &self.data[r * n..(r + 1) * n]
    }

    pub fn ensure_same_shape(&self, other: &SharedTensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                expected: self.shape.clone(),
                actual: other.shape.clone(),
            });
        }
        Ok(())
    }

    fn zip_with(&self, other: &SharedTensor, f: impl Fn(ArithShare, ArithShare) -> ArithShare) -> Result<Self> {
        self.ensure_same_shape(other)?;
        Ok(SharedTensor {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, other: &SharedTensor) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SharedTensor) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn neg(&self) -> Self {
        self.map(|a| -a)
    }

    pub fn map(&self, f: impl Fn(ArithShare) -> ArithShare) -> Self {
        SharedTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&a| f(a)).collect(),
        }
    }

    /// Multiply every element by a public ring integer.
    pub fn scale(&self, c: RingElem) -> Self {
        self.map(|a| a.scale(c))
    }

    pub fn add_public_scalar(&self, party: PartyId, c: RingElem) -> Self {
        self.map(|a| a.add_public(party, c))
    }

    /// Add a public tensor of identical shape.
    pub fn add_public(&self, party: PartyId, c: &[RingElem]) -> Result<Self> {
        if c.len() != self.data.len() {
            return Err(Error::ShapeMismatch {
                expected: self.shape.clone(),
                actual: vec![c.len()],
            });
        }
        Ok(SharedTensor {
            shape: self.shape.clone(),
            data: self.data.iter().zip(c).map(|(&a, &v)| a.add_public(party, v)).collect(),
        })
    }

    /// Add a per-row value (one share per row) to every element of that row.
    pub fn sub_row_broadcast(&self, per_row: &SharedTensor) -> Result<Self> {
        self.row_broadcast(per_row, |a, b| a - b)
    }

    pub fn add_row_broadcast(&self, per_row: &SharedTensor) -> Result<Self> {
        self.row_broadcast(per_row, |a, b| a + b)
    }

    fn row_broadcast(&self, per_row: &SharedTensor, f: impl Fn(ArithShare, ArithShare) -> ArithShare) -> Result<Self> {
        if per_row.len() != self.num_rows() {
            return Err(Error::ShapeMismatch {
                expected: vec![self.num_rows()],
                actual: per_row.shape.clone(),
            });
        }
        let n = self.row_len();
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(i, &a)| f(a, per_row.data[i / n]))
            .collect();
        Ok(SharedTensor {
            shape: self.shape.clone(),
            data,
        })
    }

    /// Broadcast a vector of the last-axis length over every row and add it.
    pub fn add_col_broadcast(&self, bias: &SharedTensor) -> Result<Self> {
        let n = self.row_len();
        if bias.len() != n {
            return Err(Error::ShapeMismatch {
                expected: vec![n],
                actual: bias.shape.clone(),
            });
        }
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(i, &a)| a + bias.data[i % n])
            .collect();
        Ok(SharedTensor {
            shape: self.shape.clone(),
            data,
        })
    }

    /// Repeat a vector `rows` times, giving a `rows x len` tensor.
    pub fn tile_rows(&self, rows: usize) -> Self {
        let mut data = Vec::with_capacity(rows * self.len());
        for _ in 0..rows {
            data.extend_from_slice(&self.data);
        }
        SharedTensor {
            shape: vec![rows, self.len()],
            data,
        }
    }

    /// Expand one share per row to a full row.
    pub fn repeat_each(&self, times: usize) -> Self {
        let data = self.data.iter().flat_map(|&a| std::iter::repeat_n(a, times)).collect();
        SharedTensor {
            shape: vec![self.len(), times],
            data,
        }
    }

    /// Row sums along the last axis.
    pub fn sum_rows(&self) -> Self {
        let n = self.row_len();
        let rows = self.num_rows();
        let data = (0..rows)
            .map(|r| self.row(r).iter().fold(ArithShare::ZERO, |acc, &a| acc + a))
            .collect();
        let mut shape = self.shape.clone();
        shape.pop();
        if shape.is_empty() {
            shape.push(1);
        }
        debug_assert!(n > 0 || rows == 0);
        SharedTensor { shape, data }
    }

    pub fn transpose(&self) -> Result<Self> {
        let [r, c] = self.dims2()?;
        let mut data = Vec::with_capacity(self.len());
        for j in 0..c {
            for i in 0..r {
                data.push(self.data[i * c + j]);
            }
        }
        Ok(SharedTensor {
            shape: vec![c, r],
            data,
        })
    }

    pub fn dims2(&self) -> Result<[usize; 2]> {
        match self.shape.as_slice() {
            [r, c] => Ok([*r, *c]),
            [n] => Ok([1, *n]),
            _ => Err(Error::ShapeMismatch {
                expected: vec![0, 0],
                actual: self.shape.clone(),
            }),
        }
    }

    /// Columns `start..end` of a matrix.
    pub fn slice_cols(&self, start: usize, end: usize) -> Result<Self> {
        let [r, c] = self.dims2()?;
        if start > end || end > c {
            return Err(Error::ShapeMismatch {
                expected: vec![r, c],
                actual: vec![r, end],
            });
        }
        let mut data = Vec::with_capacity(r * (end - start));
        for i in 0..r {
            data.extend_from_slice(&self.data[i * c + start..i * c + end]);
        }
        Ok(SharedTensor {
            shape: vec![r, end - start],
            data,
        })
    }

    /// Rows `start..end` along the first axis.
    pub fn slice_rows(&self, start: usize, end: usize) -> Result<Self> {
        let [r, c] = self.dims2()?;
        if start > end || end > r {
            return Err(Error::ShapeMismatch {
                expected: vec![r, c],
                actual: vec![end, c],
            });
        }
        Ok(SharedTensor {
            shape: vec![end - start, c],
            data: self.data[start * c..end * c].to_vec(),
        })
    }

    /// Concatenate matrices with equal row counts along the column axis.
    pub fn concat_cols(parts: &[SharedTensor]) -> Result<Self> {
        let first = parts.first().ok_or(Error::EmptyInput("concat_cols"))?;
        let [r, _] = first.dims2()?;
        let mut widths = Vec::with_capacity(parts.len());
        for p in parts {
            let [pr, pc] = p.dims2()?;
            if pr != r {
                return Err(Error::ShapeMismatch {
                    expected: vec![r, pc],
                    actual: vec![pr, pc],
                });
            }
            widths.push(pc);
        }
        let total: usize = widths.iter().sum();
        let mut data = Vec::with_capacity(r * total);
        for i in 0..r {
            for (p, &w) in parts.iter().zip(&widths) {
                data.extend_from_slice(&p.data[i * w..(i + 1) * w]);
            }
        }
        Ok(SharedTensor {
            shape: vec![r, total],
            data,
        })
    }

    /// Flat concatenation; the result is one-dimensional.
    pub fn concat_flat(parts: &[&SharedTensor]) -> Self {
        let data: Vec<_> = parts.iter().flat_map(|p| p.data.iter().copied()).collect();
        SharedTensor::from_vec(data)
    }

    /// Split a flat tensor into pieces shaped like `shapes`.
    pub fn split_flat(self, shapes: &[Vec<usize>]) -> Result<Vec<SharedTensor>> {
        let total: usize = shapes.iter().map(|s| numel(s)).sum();
        if total != self.len() {
            return Err(Error::ShapeMismatch {
                expected: vec![total],
                actual: self.shape,
            });
        }
        let mut out = Vec::with_capacity(shapes.len());
        let mut it = self.data.into_iter();
        for s in shapes {
            let piece: Vec<_> = it.by_ref().take(numel(s)).collect();
            out.push(SharedTensor {
                shape: s.clone(),
                data: piece,
            });
        }
        Ok(out)
    }
}

/// Boolean-shared tensor; one 64-bit word per element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoolTensor {
    shape: Vec<usize>,
    data: Vec<BoolShare>,
}

impl BoolTensor {
    pub fn new(shape: Vec<usize>, data: Vec<BoolShare>) -> Result<Self> {
        if numel(&shape) != data.len() {
            return Err(Error::ShapeMismatch {
                expected: shape,
                actual: vec![data.len()],
            });
        }
        Ok(BoolTensor { shape, data })
    }

    pub fn from_vec(data: Vec<BoolShare>) -> Self {
        BoolTensor {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[BoolShare] {
        &self.data
    }

    pub fn into_data(self) -> Vec<BoolShare> {
        self.data
    }

    pub fn reshape(mut self, shape: Vec<usize>) -> Result<Self> {
        if numel(&shape) != self.data.len() {
            return Err(Error::ShapeMismatch {
                expected: shape,
                actual: self.shape,
            });
        }
        self.shape = shape;
        Ok(self)
    }

    pub fn map(&self, f: impl Fn(BoolShare) -> BoolShare) -> Self {
        BoolTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&b| f(b)).collect(),
        }
    }

    pub fn xor(&self, other: &BoolTensor) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                expected: self.shape.clone(),
                actual: other.shape.clone(),
            });
        }
        Ok(BoolTensor {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a.xor(b)).collect(),
        })
    }

    /// Bitwise complement of the low `width` bits.
    pub fn not(&self, party: PartyId, width: u32) -> Self {
        let mask = width_mask(width);
        self.map(|b| b.xor_public(party, mask))
    }

    /// Keep bit `k` only, moved to position 0.
    pub fn bit(&self, k: u32) -> Self {
        self.map(|b| b.shr(k).and_public(1))
    }

    pub fn concat_flat(parts: &[&BoolTensor]) -> Self {
        BoolTensor::from_vec(parts.iter().flat_map(|p| p.data.iter().copied()).collect())
    }

    pub fn split_flat(self, lens: &[usize]) -> Result<Vec<BoolTensor>> {
        let total: usize = lens.iter().sum();
        if total != self.len() {
            return Err(Error::ShapeMismatch {
                expected: vec![total],
                actual: self.shape,
            });
        }
        let mut it = self.data.into_iter();
        Ok(lens
            .iter()
            .map(|&n| BoolTensor::from_vec(it.by_ref().take(n).collect()))
            .collect())
    }
}

pub(crate) fn width_mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// Dealer-side sharing of a ring tensor; returns one tensor per party.
pub fn share_tensor<R: Rng + ?Sized>(values: &[RingElem], shape: Vec<usize>, rng: &mut R) -> Result<[SharedTensor; 3]> {
    if numel(&shape) != values.len() {
        return Err(Error::ShapeMismatch {
            expected: shape,
            actual: vec![values.len()],
        });
    }
    let mut parts: [Vec<ArithShare>; 3] = Default::default();
    for &v in values {
        let s = make_shares(v, rng);
        for p in 0..3 {
            parts[p].push(s[p]);
        }
    }
    Ok(parts.map(|data| SharedTensor {
        shape: shape.clone(),
        data,
    }))
}

/// Dealer-side sharing of reals under the default fixed-point codec.
pub fn share_fixed<R: Rng + ?Sized>(values: &[f64], shape: Vec<usize>, rng: &mut R) -> Result<[SharedTensor; 3]> {
    let enc = FixedCodec::default().encode_slice(values)?;
    share_tensor(&enc, shape, rng)
}

pub fn share_bool_tensor<R: Rng + ?Sized>(values: &[u64], rng: &mut R) -> [BoolTensor; 3] {
    let mut parts: [Vec<BoolShare>; 3] = Default::default();
    for &v in values {
        let s = make_bool_shares(v, rng);
        for p in 0..3 {
            parts[p].push(s[p]);
        }
    }
    parts.map(BoolTensor::from_vec)
}

/// Recombine the three parties' tensors, checking replication consistency.
pub fn reconstruct_tensor(t: &[SharedTensor; 3]) -> Result<Vec<RingElem>> {
    t[0].ensure_same_shape(&t[1])?;
    t[0].ensure_same_shape(&t[2])?;
    (0..t[0].len())
        .map(|i| reconstruct(t[0].data[i], t[1].data[i], t[2].data[i]))
        .collect()
}

pub fn reconstruct_fixed(t: &[SharedTensor; 3]) -> Result<Vec<f64>> {
    Ok(FixedCodec::default().decode_slice(&reconstruct_tensor(t)?))
}

pub fn reconstruct_bool_tensor(t: &[BoolTensor; 3]) -> Result<Vec<u64>> {
    (0..t[0].len())
        .map(|i| reconstruct_bool(t[0].data[i], t[1].data[i], t[2].data[i]))
        .collect()
}
