use super::boolean::{lt, mul_ba};
use crate::error::{Error, Result};
use crate::runtime::Party;
use crate::share::ArithShare;
use crate::tensor::SharedTensor;

/// Maximum along the last axis; result has one element per row.
///
/// Binary tournament, all rows in lockstep: each level compares neighbours
/// with `lt` and selects with `mul_ba`. On ties the earlier element wins. An
/// odd element out moves up a level unchanged.
pub fn max_rows(p: &mut Party, x: &SharedTensor) -> Result<SharedTensor> {
    if x.is_empty() || x.row_len() == 0 {
        return Err(Error::EmptyInput("max of an empty vector"));
    }
    let rows = x.num_rows();
    let mut m = x.row_len();
    let mut cur: Vec<ArithShare> = x.data().to_vec();
    while m > 1 {
        let h = m / 2;
        let mut a = Vec::with_capacity(rows * h);
        let mut c = Vec::with_capacity(rows * h);
        for r in 0..rows {
            let row = &cur[r * m..(r + 1) * m];
            for j in 0..h {
                a.push(row[2 * j]);
                c.push(row[2 * j + 1]);
            }
        }
        let a = SharedTensor::from_vec(a);
        let c = SharedTensor::from_vec(c);
        let b = lt(p, &a, &c)?;
        let sel = a.add(&mul_ba(p, &b, &c.sub(&a)?)?)?;
        let next_m = h + m % 2;
        let mut next = Vec::with_capacity(rows * next_m);
        for r in 0..rows {
            next.extend_from_slice(&sel.data()[r * h..(r + 1) * h]);
            if m % 2 == 1 {
                next.push(cur[(r + 1) * m - 1]);
            }
        }
        cur = next;
        m = next_m;
    }
    let mut shape = x.shape().to_vec();
    shape.pop();
    if shape.is_empty() {
        shape.push(1);
    }
    SharedTensor::new(shape, cur)
}

/// Maximum of a vector, as a one-element tensor.
pub fn max(p: &mut Party, x: &SharedTensor) -> Result<SharedTensor> {
    let flat = x.clone().reshape(vec![x.len()])?;
    max_rows(p, &flat)
}
