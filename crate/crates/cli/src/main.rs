use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{builder::PossibleValuesParser, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use trinfer_cli::bench::bench;
use trinfer_cli::golden::{check_golden, make_golden, GoldenFile};
use trinfer_cli::infer::{infer_local, infer_party};
use trinfer_cli::verify::{verify, Protocol};
use trinfer_cli::{load_weights, save_weights};
use trinfer_core::harness::Backend;
use trinfer_core::nonlinear::LayerNormMode;
use trinfer_core::runtime::{NetConfig, PartyId};
use trinfer_core::transformer::{ModelConfig, ModelWeights, NormPlacement};

#[derive(Parser)]
#[command(name = "trinfer", version, about = "Three-party secret-shared transformer inference")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a protocol against its plaintext oracle.
    Verify {
        #[arg(value_parser = protocol_names(true))]
        protocol: String,
        /// Input size; row length for softmax and layernorm, sequence
        /// length for attention and forward.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Mode::Sim)]
        mode: Mode,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Time a protocol and report its communication.
    Bench {
        #[arg(value_parser = protocol_names(false))]
        protocol: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 5)]
        repeat: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Mode::Sim)]
        mode: Mode,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Greedy decoding with the secure forward pass.
    Infer {
        /// PUMAW1 weight file.
        #[arg(long)]
        weights: PathBuf,
        /// Prompt token ids, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        tokens: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = Mode::Sim)]
        mode: Mode,
        /// Run only this party; needs `--config`.
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..3))]
        party: Option<u8>,
        /// Network configuration file for a multi-process run.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seed of the dealer that shares weights and inputs.
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        json: Option<PathBuf>,
        #[command(flatten)]
        model: ModelFlags,
    },
    /// Write random weights in PUMAW1 format.
    InitWeights {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[command(flatten)]
        shape: ShapeFlags,
        #[command(flatten)]
        model: ModelFlags,
    },
    /// Golden-vector files.
    #[command(subcommand)]
    Golden(GoldenCommand),
}

#[derive(Subcommand)]
enum GoldenCommand {
    /// Recompute a golden file with the float model.
    Check {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        golden: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Write a golden file for random token sequences.
    Make {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 8)]
        cases: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[command(flatten)]
        model: ModelFlags,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Sim,
    Tcp,
}

impl Mode {
    fn backend(self) -> Backend {
        match self {
            Mode::Sim => Backend::Simulated,
            Mode::Tcp => Backend::TcpLocal,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Norm {
    Pre,
    Post,
}

#[derive(Clone, Copy, ValueEnum)]
enum LnMode {
    Standard,
    SumOfSquares,
}

/// Settings a weight file cannot express.
#[derive(Args)]
struct ModelFlags {
    /// JSON model configuration; overrides the flags below.
    #[arg(long)]
    model_config: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    heads: usize,
    #[arg(long, value_enum, default_value_t = Norm::Post)]
    norm: Norm,
    #[arg(long)]
    no_attn_scale: bool,
    #[arg(long, value_enum, default_value_t = LnMode::Standard)]
    ln_mode: LnMode,
}

#[derive(Args)]
struct ShapeFlags {
    #[arg(long, default_value_t = 2)]
    layers: usize,
    #[arg(long, default_value_t = 64)]
    d_model: usize,
    #[arg(long, default_value_t = 256)]
    d_ff: usize,
    #[arg(long, default_value_t = 100)]
    vocab: usize,
    #[arg(long, default_value_t = 16)]
    max_seq: usize,
}

impl ModelFlags {
    fn explicit(&self) -> Result<Option<ModelConfig>> {
        let Some(path) = &self.model_config else {
            return Ok(None);
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: ModelConfig = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.validate()?;
        Ok(Some(cfg))
    }

    fn norm(&self) -> NormPlacement {
        match self.norm {
            Norm::Pre => NormPlacement::Pre,
            Norm::Post => NormPlacement::Post,
        }
    }

    fn ln_mode(&self) -> LayerNormMode {
        match self.ln_mode {
            LnMode::Standard => LayerNormMode::Standard,
            LnMode::SumOfSquares => LayerNormMode::SumOfSquares,
        }
    }

    /// Configuration for `weights`, checked against its tensors.
    fn resolve(&self, weights: &ModelWeights) -> Result<ModelConfig> {
        let cfg = match self.explicit()? {
            Some(cfg) => cfg,
            None => weights.infer_config(self.heads, self.norm(), !self.no_attn_scale, self.ln_mode())?,
        };
        weights.validate(&cfg)?;
        Ok(cfg)
    }

    fn build(&self, shape: &ShapeFlags) -> Result<ModelConfig> {
        if let Some(cfg) = self.explicit()? {
            return Ok(cfg);
        }
        let cfg = ModelConfig {
            n_layers: shape.layers,
            d_model: shape.d_model,
            n_heads: self.heads,
            d_ff: shape.d_ff,
            vocab_size: shape.vocab,
            max_seq_len: shape.max_seq,
            norm_placement: self.norm(),
            attn_scale: !self.no_attn_scale,
            ln_mode: self.ln_mode(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn protocol_names(with_all: bool) -> PossibleValuesParser {
    let mut names: Vec<&'static str> = Protocol::ALL.iter().map(|p| p.name()).collect();
    if with_all {
        names.push("all");
    }
    PossibleValuesParser::new(names)
}

fn emit<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    println!("{text}");
    if let Some(path) = path {
        std::fs::write(path, format!("{text}\n")).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Verify {
            protocol,
            n,
            seed,
            mode,
            json,
        } => {
            let targets: Vec<Protocol> = if protocol == "all" {
                Protocol::ALL.to_vec()
            } else {
                vec![protocol.parse().map_err(anyhow::Error::msg)?]
            };
            let mut reports = Vec::with_capacity(targets.len());
            for p in targets {
                let rep = verify(p, n.unwrap_or(p.default_n()), seed, mode.backend())?;
                log::info!("{}: max_err {:.3e}, passed {}", rep.protocol, rep.max_err, rep.passed);
                reports.push(rep);
            }
            let ok = reports.iter().all(|r| r.passed);
            if reports.len() == 1 {
                emit(&reports[0], json.as_deref())?;
            } else {
                emit(&reports, json.as_deref())?;
            }
            Ok(ok)
        }
        Command::Bench {
            protocol,
            n,
            repeat,
            seed,
            mode,
            json,
        } => {
            let p: Protocol = protocol.parse().map_err(anyhow::Error::msg)?;
            let rep = bench(p, n.unwrap_or(p.default_n()), repeat, seed, mode.backend())?;
            emit(&rep, json.as_deref())?;
            Ok(true)
        }
        Command::Infer {
            weights,
            tokens,
            steps,
            mode,
            party,
            config,
            seed,
            json,
            model,
        } => {
            let w = load_weights(&weights).with_context(|| weights.display().to_string())?;
            let cfg = model.resolve(&w)?;
            log::info!("loaded {} tensors, {} layers", w.tensors.len(), cfg.n_layers);
            let report = match (config, party) {
                (Some(path), party) => {
                    if mode != Mode::Tcp {
                        bail!("--config is only used with --mode tcp");
                    }
                    let net = NetConfig::load(&path)?;
                    let me = match (party, net.id) {
                        (Some(i), _) => PartyId::new(usize::from(i))?,
                        (None, Some(id)) => id,
                        (None, None) => bail!("--config needs --party or an id line in the file"),
                    };
                    infer_party(&w, &cfg, &tokens, steps, seed, &net, me)?
                }
                (None, Some(_)) => bail!("--party needs --config"),
                (None, None) => infer_local(&w, &cfg, &tokens, steps, seed, mode.backend())?,
            };
            emit(&report, json.as_deref())?;
            Ok(true)
        }
        Command::InitWeights {
            out,
            seed,
            shape,
            model,
        } => {
            let cfg = model.build(&shape)?;
            let w = ModelWeights::random(&cfg, seed)?;
            save_weights(&w, &out)?;
            emit(&cfg, None)?;
            Ok(true)
        }
        Command::Golden(GoldenCommand::Check { weights, golden, json }) => {
            let w = load_weights(&weights).with_context(|| weights.display().to_string())?;
            let g = GoldenFile::load(&golden)?;
            let rep = check_golden(&g, &w)?;
            emit(&rep, json.as_deref())?;
            Ok(rep.passed)
        }
        Command::Golden(GoldenCommand::Make {
            weights,
            out,
            cases,
            seed,
            model,
        }) => {
            let w = load_weights(&weights).with_context(|| weights.display().to_string())?;
            let cfg = model.resolve(&w)?;
            let g = make_golden(&w, &cfg, cases, seed)?;
            std::fs::write(&out, g.to_json() + "\n").with_context(|| format!("writing {}", out.display()))?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
