//! Prepared workloads for the criterion benches: inputs are shared once so
//! the timed closure runs only the protocol.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use trinfer_core::cost::{self, Cost};
use trinfer_core::error::Result;
use trinfer_core::harness::{eval, eval_bool, run_local, Backend};
use trinfer_core::nonlinear::{secure_gelu, secure_layernorm, secure_softmax, LayerNormMode};
use trinfer_core::primitives::{a2b, lt, mul};
use trinfer_core::ring::RingElem;
use trinfer_core::runtime::CommStats;
use trinfer_core::tensor::{share_fixed, share_tensor, SharedTensor};
use trinfer_core::transformer::{secure_forward, ModelConfig, ModelWeights, SharedModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Workload {
    Mul(usize),
    A2b(usize),
    Lt(usize),
    Gelu(usize),
    /// `rows` rows of length `cols`.
    Softmax(usize, usize),
    Layernorm(usize, usize),
    /// Tiny model forward pass over this many tokens.
    Forward(usize),
}

pub struct Prepared {
    workload: Workload,
    backend: Backend,
    inputs: Vec<[SharedTensor; 3]>,
    model: Option<(ModelConfig, [SharedModel; 3])>,
}

fn fixed(r: &mut ChaCha20Rng, shape: Vec<usize>, lo: f64, hi: f64) -> Result<[SharedTensor; 3]> {
    let n = shape.iter().product();
    let v: Vec<f64> = (0..n).map(|_| r.random_range(lo..hi)).collect();
    share_fixed(&v, shape, r)
}

impl Prepared {
    pub fn new(workload: Workload, backend: Backend, seed: u64) -> Result<Self> {
        let mut r = ChaCha20Rng::seed_from_u64(seed);
        let mut model = None;
        let inputs = match workload {
            Workload::Mul(n) | Workload::A2b(n) | Workload::Lt(n) => {
                vec![
                    fixed(&mut r, vec![n], -100.0, 100.0)?,
                    fixed(&mut r, vec![n], -100.0, 100.0)?,
                ]
            }
            Workload::Gelu(n) => vec![fixed(&mut r, vec![n], -6.0, 5.0)?],
            Workload::Softmax(rows, cols) => vec![fixed(&mut r, vec![rows, cols], -10.0, 10.0)?],
            Workload::Layernorm(rows, cols) => vec![
                fixed(&mut r, vec![rows, cols], -4.0, 4.0)?,
                fixed(&mut r, vec![cols], 0.5, 1.5)?,
                fixed(&mut r, vec![cols], -0.5, 0.5)?,
            ],
            Workload::Forward(s) => {
                let cfg = ModelConfig::tiny();
                let w = ModelWeights::random(&cfg, seed)?;
                let shared = SharedModel::share(&w, &cfg, &mut r)?;
                let ids: Vec<RingElem> = (0..s)
                    .map(|_| RingElem(r.random_range(0..cfg.vocab_size as u64)))
                    .collect();
                model = Some((cfg, shared));
                vec![share_tensor(&ids, vec![s], &mut r)?]
            }
        };
        Ok(Prepared {
            workload,
            backend,
            inputs,
            model,
        })
    }

    /// Execute the protocol once.
    pub fn run(&self) -> Result<CommStats> {
        let (b, x) = (self.backend, &self.inputs);
        Ok(match self.workload {
            Workload::Mul(_) => eval(b, 1, x, |p, t| mul(p, t[0], t[1]))?.1,
            Workload::A2b(_) => eval_bool(b, 1, x, |p, t| a2b(p, t[0]))?.1,
            Workload::Lt(_) => eval_bool(b, 1, x, |p, t| lt(p, t[0], t[1]))?.1,
            Workload::Gelu(_) => eval(b, 1, x, |p, t| secure_gelu(p, t[0]))?.1,
            Workload::Softmax(..) => eval(b, 1, x, |p, t| secure_softmax(p, t[0]))?.1,
            Workload::Layernorm(..) => {
                eval(b, 1, x, |p, t| {
                    secure_layernorm(p, t[0], t[1], t[2], LayerNormMode::Standard)
                })?
                .1
            }
            Workload::Forward(_) => {
                let (_, models) = self.model.as_ref().expect("forward workload carries a model");
                run_local(b, 1, |p| {
                    let i = p.id().index();
                    secure_forward(p, &models[i], &x[0][i])
                })?
                .stats
            }
        })
    }

    /// Communication the analytic model predicts for one run.
    pub fn expected(&self) -> Cost {
        match self.workload {
            Workload::Mul(n) => cost::mul(n),
            Workload::A2b(n) => cost::a2b(n),
            Workload::Lt(n) => cost::lt(n),
            Workload::Gelu(n) => cost::gelu(n),
            Workload::Softmax(rows, cols) => cost::softmax(rows, cols),
            Workload::Layernorm(rows, cols) => cost::layernorm(rows, cols, LayerNormMode::Standard),
            Workload::Forward(s) => {
                let (cfg, _) = self.model.as_ref().expect("forward workload carries a model");
                cost::forward(s, cfg, false)
            }
        }
    }
}
