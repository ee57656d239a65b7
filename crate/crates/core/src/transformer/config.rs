use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinear::LayerNormMode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormPlacement {
    Pre,
    #[default]
    Post,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n_layers: usize,
    pub d_model: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    pub vocab_size: usize,
    pub max_seq_len: usize,
    #[serde(default)]
    pub norm_placement: NormPlacement,
    /// Scale attention scores by `1/sqrt(d_head)`.
    #[serde(default = "default_true")]
    pub attn_scale: bool,
    #[serde(default)]
    pub ln_mode: LayerNormMode,
}

fn default_true() -> bool {
    true
}

impl ModelConfig {
    /// Two layers, width 64, four heads, vocabulary of 100.
    pub fn tiny() -> Self {
        ModelConfig {
            n_layers: 2,
            d_model: 64,
            n_heads: 4,
            d_ff: 256,
            vocab_size: 100,
            max_seq_len: 16,
            norm_placement: NormPlacement::Post,
            attn_scale: true,
            ln_mode: LayerNormMode::Standard,
        }
    }

    pub fn d_head(&self) -> usize {
        self.d_model / self.n_heads
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("n_layers", self.n_layers),
            ("d_model", self.d_model),
            ("n_heads", self.n_heads),
            ("d_ff", self.d_ff),
            ("vocab_size", self.vocab_size),
            ("max_seq_len", self.max_seq_len),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Model(format!("{name} must be positive")));
        }
        if !self.d_model.is_multiple_of(self.n_heads) {
            return Err(Error::Model(format!(
                "d_model {} is not divisible by n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        Ok(())
    }
}
