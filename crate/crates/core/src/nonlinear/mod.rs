//! Secure GeLU, softmax, LayerNorm and embedding lookup.

mod embedding;
mod gelu;
mod layernorm;
mod softmax;

pub use embedding::secure_embedding;
pub use gelu::{gelu_interval_bits, secure_gelu, secure_gelu_with, GeluConstants};
pub use layernorm::{secure_layernorm, LayerNormMode, LN_EPS};
pub use softmax::{secure_softmax, SoftmaxConstants, SUM_BIAS};
