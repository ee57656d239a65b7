//! Transformer layers and the end-to-end forward pass over shared weights.

mod config;
mod layers;
mod weights;

pub use config::{ModelConfig, NormPlacement};
pub use layers::{
    causal_mask, secure_attention, secure_block, secure_ffn, secure_forward, secure_forward_with, secure_matmul,
    secure_matmul_many, secure_matmul_public, secure_multihead, ForwardOptions, MASK_VALUE,
};
pub use weights::{expected_shapes, layer_name, FloatTensor, ModelWeights, SharedLayer, SharedModel};
