//! Helpers for running a protocol on dealer-shared inputs inside one process.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::Result;
use crate::ring::{decode_fixed, RingElem};
use crate::runtime::{run_simulated, run_tcp_local, CommStats, Party, RunOutput};
use crate::tensor::{reconstruct_bool_tensor, reconstruct_tensor, share_tensor, BoolTensor, SharedTensor};
use crate::transformer::{secure_forward_with, ForwardOptions, ModelConfig, ModelWeights, SharedModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Backend {
    #[default]
    Simulated,
    /// Three parties on loopback TCP sockets.
    TcpLocal,
}

pub fn run_local<T, F>(backend: Backend, seed: u64, f: F) -> Result<RunOutput<T>>
where
    T: Send,
    F: Fn(&mut Party) -> Result<T> + Sync,
{
    match backend {
        Backend::Simulated => run_simulated(seed, f),
        Backend::TcpLocal => run_tcp_local(seed, f),
    }
}

/// Run `f` on each party's slice of `inputs` and reconstruct the output.
pub fn eval<F>(backend: Backend, seed: u64, inputs: &[[SharedTensor; 3]], f: F) -> Result<(Vec<RingElem>, CommStats)>
where
    F: Fn(&mut Party, &[&SharedTensor]) -> Result<SharedTensor> + Sync,
{
    let out = run_local(backend, seed, |p| {
        let mine: Vec<&SharedTensor> = inputs.iter().map(|t| &t[p.id().index()]).collect();
        f(p, &mine)
    })?;
    Ok((reconstruct_tensor(&out.outputs)?, out.stats))
}

pub fn eval_bool<F>(backend: Backend, seed: u64, inputs: &[[SharedTensor; 3]], f: F) -> Result<(Vec<u64>, CommStats)>
where
    F: Fn(&mut Party, &[&SharedTensor]) -> Result<BoolTensor> + Sync,
{
    let out = run_local(backend, seed, |p| {
        let mine: Vec<&SharedTensor> = inputs.iter().map(|t| &t[p.id().index()]).collect();
        f(p, &mine)
    })?;
    Ok((reconstruct_bool_tensor(&out.outputs)?, out.stats))
}

/// Share `weights` and token ids with a dealer seeded by `share_seed`, run
/// the secure forward pass, and return decoded `[s, vocab]` logits.
pub fn secure_logits(
    backend: Backend,
    seed: u64,
    share_seed: u64,
    weights: &ModelWeights,
    cfg: &ModelConfig,
    tokens: &[usize],
    opts: ForwardOptions,
) -> Result<(Vec<f64>, CommStats)> {
    let mut rng = ChaCha20Rng::seed_from_u64(share_seed);
    let models = SharedModel::share(weights, cfg, &mut rng)?;
    let ids: Vec<RingElem> = tokens.iter().map(|&t| RingElem(t as u64)).collect();
    let ids = share_tensor(&ids, vec![tokens.len()], &mut rng)?;
    let out = run_local(backend, seed, |p| {
        let i = p.id().index();
        secure_forward_with(p, &models[i], &ids[i], opts)
    })?;
    let logits = reconstruct_tensor(&out.outputs)?
        .into_iter()
        .map(decode_fixed)
        .collect();
    Ok((logits, out.stats))
}
