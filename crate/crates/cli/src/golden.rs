//! Golden-vector files: a model configuration plus token sequences and the
//! float logits they should produce.
//!
//! ```json
//! {"config": {...}, "cases": [{"tokens": [3, 1], "logits": [["0.25", ...], ...]}]}
//! ```
//!
//! Floats are decimal strings so no precision is lost in JSON number
//! handling. `activations` is optional and carried through unchanged.

use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use trinfer_core::oracle::{forward_ref, OracleMode};
use trinfer_core::transformer::{ModelConfig, ModelWeights};

/// Agreement required between a golden file and the float oracle.
pub const GOLDEN_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoldenFile {
    pub config: ModelConfig,
    pub cases: Vec<GoldenCase>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoldenCase {
    pub tokens: Vec<usize>,
    /// `[s][vocab]` decimal strings.
    pub logits: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activations: Option<serde_json::Value>,
}

impl GoldenCase {
    /// Row-major logits, checked against the expected shape.
    pub fn logits_f64(&self, vocab: usize) -> Result<Vec<f64>> {
        ensure!(
            self.logits.len() == self.tokens.len(),
            "{} logit rows for {} tokens",
            self.logits.len(),
            self.tokens.len()
        );
        let mut out = Vec::with_capacity(self.tokens.len() * vocab);
        for (i, row) in self.logits.iter().enumerate() {
            ensure!(
                row.len() == vocab,
                "logit row {i} has {} entries, expected {vocab}",
                row.len()
            );
            for s in row {
                let v: f64 = s
                    .trim()
                    .parse()
                    .with_context(|| format!("logit {s:?} in row {i} is not a number"))?;
                ensure!(v.is_finite(), "logit {s:?} in row {i} is not finite");
                out.push(v);
            }
        }
        Ok(out)
    }
}

impl GoldenFile {
    pub fn parse(text: &str) -> Result<Self> {
        let g: GoldenFile = serde_json::from_str(text).context("invalid golden file")?;
        g.config.validate()?;
        for (i, c) in g.cases.iter().enumerate() {
            c.logits_f64(g.config.vocab_size).with_context(|| format!("case {i}"))?;
        }
        Ok(g)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| path.display().to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("golden file serializes")
    }
}

fn decimal(v: f64) -> String {
    // `Display` for f64 prints the shortest string that parses back exactly.
    format!("{v}")
}

/// Golden cases for `n_cases` random token sequences of lengths up to
/// `max_seq_len`, computed with the exact-math float model.
pub fn make_golden(weights: &ModelWeights, cfg: &ModelConfig, n_cases: usize, seed: u64) -> Result<GoldenFile> {
    weights.validate(cfg)?;
    let mut r = ChaCha20Rng::seed_from_u64(seed);
    let mut cases = Vec::with_capacity(n_cases);
    for _ in 0..n_cases {
        let s = r.random_range(1..=cfg.max_seq_len);
        let tokens: Vec<usize> = (0..s).map(|_| r.random_range(0..cfg.vocab_size)).collect();
        let logits = forward_ref(weights, cfg, &tokens, OracleMode::Exact)?;
        cases.push(GoldenCase {
            tokens,
            logits: logits
                .chunks(cfg.vocab_size)
                .map(|row| row.iter().copied().map(decimal).collect())
                .collect(),
            activations: None,
        });
    }
    Ok(GoldenFile {
        config: cfg.clone(),
        cases,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GoldenReport {
    pub cases: usize,
    pub max_err: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Recompute every case with the float oracle and report the largest
/// deviation.
pub fn check_golden(golden: &GoldenFile, weights: &ModelWeights) -> Result<GoldenReport> {
    let cfg = &golden.config;
    if golden.cases.is_empty() {
        bail!("golden file has no cases");
    }
    let mut max_err = 0.0f64;
    for (i, case) in golden.cases.iter().enumerate() {
        let want = case.logits_f64(cfg.vocab_size).with_context(|| format!("case {i}"))?;
        let got = forward_ref(weights, cfg, &case.tokens, OracleMode::Exact).with_context(|| format!("case {i}"))?;
        for (g, w) in got.iter().zip(&want) {
            max_err = max_err.max((g - w).abs());
        }
    }
    Ok(GoldenReport {
        cases: golden.cases.len(),
        max_err,
        tolerance: GOLDEN_TOLERANCE,
        passed: max_err <= GOLDEN_TOLERANCE,
    })
}
