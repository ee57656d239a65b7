//! Greedy decoding on the secure forward pass.
//!
//! Every step re-runs the whole forward pass on the tokens so far, opens the
//! last row of logits to the parties and appends its argmax.

use std::time::Instant;

use anyhow::{bail, ensure, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use trinfer_core::harness::{run_local, Backend};
use trinfer_core::oracle::argmax;
use trinfer_core::primitives::open;
use trinfer_core::ring::{decode_fixed, RingElem};
use trinfer_core::runtime::{run_tcp, NetConfig, Party, PartyId, PartyStats};
use trinfer_core::tensor::{share_tensor, SharedTensor};
use trinfer_core::transformer::{secure_forward, ModelConfig, ModelWeights, SharedModel};

use crate::bench::mode_name;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartyEntry {
    pub party: usize,
    #[serde(flatten)]
    pub stats: PartyStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InferReport {
    pub mode: String,
    pub prompt: Vec<usize>,
    pub generated: Vec<usize>,
    /// Counters of every party this process ran.
    pub parties: Vec<PartyEntry>,
    pub rounds: u64,
    pub wall_secs: f64,
}

fn check_request(cfg: &ModelConfig, prompt: &[usize], steps: usize) -> Result<()> {
    ensure!(!prompt.is_empty(), "prompt must contain at least one token");
    if let Some(&t) = prompt.iter().find(|&&t| t >= cfg.vocab_size) {
        bail!("token id {t} is outside the vocabulary of {}", cfg.vocab_size);
    }
    // The last step runs on prompt + steps - 1 tokens.
    let longest = prompt.len() + steps.saturating_sub(1);
    ensure!(
        longest <= cfg.max_seq_len,
        "prompt of {} tokens plus {steps} steps needs {longest} positions, the model has {}",
        prompt.len(),
        cfg.max_seq_len
    );
    Ok(())
}

fn share_model(weights: &ModelWeights, cfg: &ModelConfig, seed: u64) -> Result<[SharedModel; 3]> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    Ok(SharedModel::share(weights, cfg, &mut rng)?)
}

/// Token ids for step `step`, shared from their own stream of the dealer
/// seed so every process derives the same shares.
fn share_ids(tokens: &[usize], seed: u64, step: usize) -> trinfer_core::error::Result<[SharedTensor; 3]> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(step as u64 + 1);
    let ids: Vec<RingElem> = tokens.iter().map(|&t| RingElem(t as u64)).collect();
    share_tensor(&ids, vec![tokens.len()], &mut rng)
}

fn decode(
    p: &mut Party,
    model: &SharedModel,
    prompt: &[usize],
    steps: usize,
    seed: u64,
) -> trinfer_core::error::Result<Vec<usize>> {
    let mut tokens = prompt.to_vec();
    for step in 0..steps {
        let ids = share_ids(&tokens, seed, step)?;
        let logits = secure_forward(p, model, &ids[p.id().index()])?;
        let s = tokens.len();
        let last = open(p, &logits.slice_rows(s - 1, s)?)?;
        let last: Vec<f64> = last.into_iter().map(decode_fixed).collect();
        tokens.push(argmax(&last));
    }
    Ok(tokens.split_off(prompt.len()))
}

/// All three parties in this process.
pub fn infer_local(
    weights: &ModelWeights,
    cfg: &ModelConfig,
    prompt: &[usize],
    steps: usize,
    seed: u64,
    backend: Backend,
) -> Result<InferReport> {
    check_request(cfg, prompt, steps)?;
    let models = share_model(weights, cfg, seed)?;
    let t0 = Instant::now();
    let out = run_local(backend, seed.wrapping_add(1), |p| {
        decode(p, &models[p.id().index()], prompt, steps, seed)
    })?;
    let wall_secs = t0.elapsed().as_secs_f64();
    let [a, b, c] = out.outputs;
    ensure!(a == b && b == c, "parties disagree on the generated tokens");
    Ok(InferReport {
        mode: mode_name(backend).to_string(),
        prompt: prompt.to_vec(),
        generated: a,
        parties: (0..3)
            .map(|i| PartyEntry {
                party: i,
                stats: out.stats.parties[i],
            })
            .collect(),
        rounds: out.stats.rounds(),
        wall_secs,
    })
}

/// One party over TCP. The other two run the same command with their own
/// `me` and the same weights, prompt, steps and seed.
pub fn infer_party(
    weights: &ModelWeights,
    cfg: &ModelConfig,
    prompt: &[usize],
    steps: usize,
    seed: u64,
    net: &NetConfig,
    me: PartyId,
) -> Result<InferReport> {
    check_request(cfg, prompt, steps)?;
    let mine = share_model(weights, cfg, seed)?
        .into_iter()
        .nth(me.index())
        .expect("party index below three");
    let t0 = Instant::now();
    let (generated, stats) = run_tcp(net, me, |p| decode(p, &mine, prompt, steps, seed))?;
    Ok(InferReport {
        mode: "tcp".to_string(),
        prompt: prompt.to_vec(),
        generated,
        parties: vec![PartyEntry {
            party: me.index(),
            stats,
        }],
        rounds: stats.rounds,
        wall_secs: t0.elapsed().as_secs_f64(),
    })
}
