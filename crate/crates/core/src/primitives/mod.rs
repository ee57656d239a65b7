//! Interactive building blocks over replicated shares.
//!
//! Every function takes the calling party and that party's shares; all three
//! parties must call the same functions with tensors of the same shapes.
//! Communication depends only on shapes.

mod approx;
mod arith;
mod boolean;
mod linear;
mod select;

pub use approx::{
    neg_exp, neg_exp_with_bit, onehot_msb, recip, rsqrt, select_public, EXP_CLIP, EXP_T, RECIP_ITERATIONS,
    RECIP_POSITIONS, RSQRT_ITERATIONS, RSQRT_POSITIONS,
};
pub use arith::{
    check_consistency, mul, mul_fixed, mul_fixed_many, mul_many, mul_public, open, reshare, scale_fixed, square, trunc,
};
pub use boolean::{a2b, and_bits, and_words, b2a, eq, lt, mul_ba, open_bool, Operand};
pub use linear::{matmul_public_ring, matmul_ring, matmul_ring_many};
pub use select::{max, max_rows};

#[cfg(test)]
mod tests;
