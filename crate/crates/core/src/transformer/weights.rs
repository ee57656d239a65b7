use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use super::config::{ModelConfig, NormPlacement};
use crate::error::{Error, Result};
use crate::nonlinear::LayerNormMode;
use crate::ring::FixedCodec;
use crate::runtime::PartyId;
use crate::tensor::{share_tensor, SharedTensor};

/// Plaintext float32 tensor, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatTensor {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl FloatTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        if shape.iter().product::<usize>() != data.len() {
            return Err(Error::ShapeMismatch {
                expected: shape,
                actual: vec![data.len()],
            });
        }
        Ok(FloatTensor { shape, data })
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&v| v as f64).collect()
    }
}

/// Named plaintext weights, as held by the model owner.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModelWeights {
    pub tensors: BTreeMap<String, FloatTensor>,
}

pub fn layer_name(l: usize, name: &str) -> String {
    format!("layers.{l}.{name}")
}

/// Every tensor a model with this configuration needs, with its shape.
pub fn expected_shapes(cfg: &ModelConfig) -> Vec<(String, Vec<usize>)> {
    let (d, f, v) = (cfg.d_model, cfg.d_ff, cfg.vocab_size);
    let mut out = vec![
        ("token_embedding".to_string(), vec![v, d]),
        ("position_embedding".to_string(), vec![cfg.max_seq_len, d]),
    ];
    for l in 0..cfg.n_layers {
        for (name, shape) in [
            ("wq", vec![d, d]),
            ("wk", vec![d, d]),
            ("wv", vec![d, d]),
            ("wo", vec![d, d]),
            ("w1", vec![d, f]),
            ("b1", vec![f]),
            ("w2", vec![f, d]),
            ("b2", vec![d]),
            ("ln1_gamma", vec![d]),
            ("ln1_beta", vec![d]),
            ("ln2_gamma", vec![d]),
            ("ln2_beta", vec![d]),
        ] {
            out.push((layer_name(l, name), shape));
        }
    }
    out.push(("final_ln_gamma".to_string(), vec![d]));
    out.push(("final_ln_beta".to_string(), vec![d]));
    out.push(("lm_head".to_string(), vec![d, v]));
    out
}

impl ModelWeights {
    /// Random weights with roughly unit-scale activations.
    pub fn random(cfg: &ModelConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut tensors = BTreeMap::new();
        for (name, shape) in expected_shapes(cfg) {
            let n: usize = shape.iter().product();
            let leaf = name.rsplit('.').next().unwrap_or(&name);
            let (mean, std) = match leaf {
                "token_embedding" => (0.0, 1.0),
                "position_embedding" => (0.0, 0.5),
                "w2" => (0.0, (1.0 / cfg.d_ff as f64).sqrt()),
                "ln1_gamma" | "ln2_gamma" | "final_ln_gamma" => (1.0, 0.1),
                "ln1_beta" | "ln2_beta" | "final_ln_beta" | "b1" | "b2" => (0.0, 0.1),
                _ => (0.0, (1.0 / cfg.d_model as f64).sqrt()),
            };
            let dist = Normal::new(mean, std).expect("valid normal");
            let data = (0..n).map(|_| dist.sample(&mut rng) as f32).collect();
            tensors.insert(name, FloatTensor { shape, data });
        }
        Ok(ModelWeights { tensors })
    }

    pub fn get(&self, name: &str) -> Result<&FloatTensor> {
        self.tensors
            .get(name)
            .ok_or_else(|| Error::Model(format!("missing tensor {name}")))
    }

    /// Check names and shapes against `cfg`; extra tensors are rejected.
    pub fn validate(&self, cfg: &ModelConfig) -> Result<()> {
        cfg.validate()?;
        let expected = expected_shapes(cfg);
        for (name, shape) in &expected {
            let t = self.get(name)?;
            if &t.shape != shape {
                return Err(Error::Model(format!(
                    "tensor {name} has shape {:?}, expected {:?}",
                    t.shape, shape
                )));
            }
        }
        if self.tensors.len() != expected.len() {
            let known: std::collections::BTreeSet<&str> = expected.iter().map(|(n, _)| n.as_str()).collect();
            let extra = self.tensors.keys().find(|k| !known.contains(k.as_str()));
            return Err(Error::Model(format!("unexpected tensor {}", extra.map_or("?", |s| s))));
        }
        Ok(())
    }

    /// Derive the configuration from tensor shapes. Head count, norm
    /// placement and attention scaling are not recoverable from shapes.
    pub fn infer_config(
        &self,
        n_heads: usize,
        norm_placement: NormPlacement,
        attn_scale: bool,
        ln_mode: LayerNormMode,
    ) -> Result<ModelConfig> {
        let dims2 = |name: &str| -> Result<[usize; 2]> {
            let t = self.get(name)?;
            match t.shape[..] {
                [a, b] => Ok([a, b]),
                _ => Err(Error::Model(format!(
                    "tensor {name} must be a matrix, has shape {:?}",
                    t.shape
                ))),
            }
        };
        let [vocab_size, d_model] = dims2("token_embedding")?;
        let [max_seq_len, _] = dims2("position_embedding")?;
        let n_layers = (0..)
            .take_while(|&l| self.tensors.contains_key(&layer_name(l, "wq")))
            .count();
        if n_layers == 0 {
            return Err(Error::Model("no layers found".into()));
        }
        let [_, d_ff] = dims2(&layer_name(0, "w1"))?;
        let cfg = ModelConfig {
            n_layers,
            d_model,
            n_heads,
            d_ff,
            vocab_size,
            max_seq_len,
            norm_placement,
            attn_scale,
            ln_mode,
        };
        self.validate(&cfg)?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug)]
pub struct SharedLayer {
    pub wq: SharedTensor,
    pub wk: SharedTensor,
    pub wv: SharedTensor,
    pub wo: SharedTensor,
    pub w1: SharedTensor,
    pub b1: SharedTensor,
    pub w2: SharedTensor,
    pub b2: SharedTensor,
    pub ln1_gamma: SharedTensor,
    pub ln1_beta: SharedTensor,
    pub ln2_gamma: SharedTensor,
    pub ln2_beta: SharedTensor,
}

/// One party's shares of every model tensor.
#[derive(Clone, Debug)]
pub struct SharedModel {
    pub config: ModelConfig,
    pub token_embedding: SharedTensor,
    pub position_embedding: SharedTensor,
    pub layers: Vec<SharedLayer>,
    pub final_ln_gamma: SharedTensor,
    pub final_ln_beta: SharedTensor,
    pub lm_head: SharedTensor,
}

impl SharedModel {
    /// Encode and secret-share all weights, as the model owner would before
    /// handing one share set to each party.
    pub fn share<R: Rng + ?Sized>(weights: &ModelWeights, cfg: &ModelConfig, rng: &mut R) -> Result<[SharedModel; 3]> {
        weights.validate(cfg)?;
        let codec = FixedCodec::default();
        let mut share = |name: &str| -> Result<[SharedTensor; 3]> {
            let t = weights.get(name)?;
            let enc = codec.encode_slice(&t.to_f64())?;
            share_tensor(&enc, t.shape.clone(), rng)
        };
        let token_embedding = share("token_embedding")?;
        let position_embedding = share("position_embedding")?;
        let mut layers: [Vec<SharedLayer>; 3] = Default::default();
        for l in 0..cfg.n_layers {
            let mut get = |n: &str| share(&layer_name(l, n));
            let [wq, wk, wv, wo, w1, b1, w2, b2, g1, be1, g2, be2] = [
                get("wq")?,
                get("wk")?,
                get("wv")?,
                get("wo")?,
                get("w1")?,
                get("b1")?,
                get("w2")?,
                get("b2")?,
                get("ln1_gamma")?,
                get("ln1_beta")?,
                get("ln2_gamma")?,
                get("ln2_beta")?,
            ];
            for p in PartyId::ALL {
                let i = p.index();
                layers[i].push(SharedLayer {
                    wq: wq[i].clone(),
                    wk: wk[i].clone(),
                    wv: wv[i].clone(),
                    wo: wo[i].clone(),
                    w1: w1[i].clone(),
                    b1: b1[i].clone(),
                    w2: w2[i].clone(),
                    b2: b2[i].clone(),
                    ln1_gamma: g1[i].clone(),
                    ln1_beta: be1[i].clone(),
                    ln2_gamma: g2[i].clone(),
                    ln2_beta: be2[i].clone(),
                });
            }
        }
        let final_g = share("final_ln_gamma")?;
        let final_b = share("final_ln_beta")?;
        let lm_head = share("lm_head")?;
        let mut layers = layers.into_iter();
        Ok(PartyId::ALL.map(|p| {
            let i = p.index();
            SharedModel {
                config: cfg.clone(),
                token_embedding: token_embedding[i].clone(),
                position_embedding: position_embedding[i].clone(),
                layers: layers.next().unwrap(),
                final_ln_gamma: final_g[i].clone(),
                final_ln_beta: final_b[i].clone(),
                lm_head: lm_head[i].clone(),
            }
        }))
    }
}
