use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use icy_core::rng::RNG_ID;
use icy_core::{Geometry, GrammarKind};
use icy_metrics::Metric;
use icy_neural::{Arch, CellKind};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "icy", version, about = "Grammar generation, compositionality metrics and acquisition benchmarks")]
pub struct Cli {
    /// Generator algorithm id; runs refuse any other value.
    #[arg(long, global = true, default_value = RNG_ID)]
    pub rng_id: String,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Generate a grammar table.
    Gen(GenArgs),
    /// Compute metrics over grammar files.
    Metrics(MetricsArgs),
    /// Acquisition ratios against concat.
    Bench(BenchArgs),
    /// Accuracy after concat's step budget.
    Fixedstep(BenchArgs),
    /// Finite-difference checks of model gradients.
    Gradcheck(GradcheckArgs),
    /// Write a dataset for the human game.
    ExportGame(ExportGameArgs),
    /// Rerun a command from its manifest.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Metrics(_) => "metrics",
            Command::Bench(_) => "bench",
            Command::Fixedstep(_) => "fixedstep",
            Command::Gradcheck(_) => "gradcheck",
            Command::ExportGame(_) => "export-game",
            Command::Replay(_) => "replay",
        }
    }

    pub fn set_out(&mut self, out: PathBuf) {
        match self {
            Command::Gen(a) => a.out = out,
            Command::Metrics(a) => a.out = out,
            Command::Bench(a) | Command::Fixedstep(a) => a.out = out,
            Command::Gradcheck(a) => a.out = out,
            Command::ExportGame(a) => a.out = out,
            Command::Replay(a) => a.manifest = out,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GeometryArgs {
    /// paper, small, reduced or custom(natt,nval,clen,vocab); single flags override it.
    #[arg(long, default_value = "paper")]
    pub geometry: String,
    #[arg(long)]
    pub natt: Option<usize>,
    #[arg(long)]
    pub nval: Option<usize>,
    #[arg(long)]
    pub clen: Option<usize>,
    #[arg(long)]
    pub vocab: Option<usize>,
}

impl GeometryArgs {
    pub fn resolve(&self) -> Result<Geometry, CliError> {
        let base = named_geometry(&self.geometry)?;
        Geometry::new(
            self.natt.unwrap_or(base.0),
            self.nval.unwrap_or(base.1),
            self.clen.unwrap_or(base.2),
            self.vocab.unwrap_or(base.3),
        )
        .map_err(|e| CliError::Usage(format!("invalid geometry: {e}")))
    }

    /// Same geometry with every field spelled out.
    pub fn explicit(g: &Geometry) -> Self {
        GeometryArgs {
            geometry: format!("custom({},{},{},{})", g.n_att, g.n_val, g.c_len, g.vocab_size),
            natt: Some(g.n_att),
            nval: Some(g.n_val),
            clen: Some(g.c_len),
            vocab: Some(g.vocab_size),
        }
    }
}

fn named_geometry(name: &str) -> Result<(usize, usize, usize, usize), CliError> {
    let tuple = |g: Geometry| (g.n_att, g.n_val, g.c_len, g.vocab_size);
    match name.trim().to_ascii_lowercase().as_str() {
        "paper" => Ok(tuple(Geometry::paper())),
        "small" => Ok(tuple(Geometry::small())),
        "reduced" => Ok(tuple(Geometry::reduced())),
        other => {
            let bad = || CliError::Usage(format!("unknown geometry `{name}`"));
            let inner = other
                .strip_prefix("custom(")
                .and_then(|s| s.strip_suffix(')'))
                .ok_or_else(bad)?;
            let v: Vec<usize> = inner
                .split(',')
                .map(|x| x.trim().parse().map_err(|_| bad()))
                .collect::<Result<_, _>>()?;
            match v[..] {
                [a, b, c, d] => Ok((a, b, c, d)),
                _ => Err(bad()),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GenArgs {
    #[arg(long)]
    pub kind: GrammarKind,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Add a letter rendering to every table row.
    #[arg(long)]
    pub letters: bool,
    #[arg(long, default_value = "grammar.json")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct MetricsArgs {
    /// Grammar files.
    #[arg(required = true)]
    pub grammars: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = [Metric::Topsim, Metric::Posdis, Metric::Bosdis, Metric::Hce, Metric::ResentRelax, Metric::Tre7])]
    pub metrics: Vec<Metric>,
    /// Normalize residual entropies by attribute entropy.
    #[arg(long)]
    pub normalize: bool,
    #[arg(long, default_value_t = icy_metrics::DEFAULT_PAIR_BUDGET)]
    pub pair_budget: usize,
    #[arg(long, default_value_t = 0)]
    pub pair_seed: u64,
    #[arg(long, default_value_t = icy_metrics::resent::EXACT_BUDGET)]
    pub exact_budget: u64,
    #[arg(long, default_value_t = 2000)]
    pub tre_steps: usize,
    #[arg(long, default_value_t = 0)]
    pub tre_seed: u64,
    #[arg(long, default_value = "metrics.tsv")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BenchArgs {
    /// `hashtable` or an architecture name such as FC2L or LSTM_A.
    #[arg(long)]
    pub model: String,
    #[arg(long, value_delimiter = ',', default_values_t = [GrammarKind::Concat, GrammarKind::Perm, GrammarKind::Proj, GrammarKind::Rot, GrammarKind::Shufdet, GrammarKind::Hol])]
    pub grammars: Vec<GrammarKind>,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[arg(long, value_delimiter = ',', default_values_t = [0, 1, 2, 3, 4])]
    pub seeds: Vec<u64>,
    /// Target token accuracy (default 0.8 for bench, 0.99 for fixedstep).
    #[arg(long)]
    pub acc_tgt: Option<f64>,
    #[arg(long, default_value_t = 20.0)]
    pub cap_ratio: f64,
    #[arg(long, default_value_t = 128)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 10)]
    pub eval_interval: u64,
    #[arg(long, default_value_t = 2048)]
    pub eval_sample: usize,
    #[arg(long, default_value_t = 200_000)]
    pub max_steps: u64,
    #[arg(long, default_value_t = 128)]
    pub emb_size: usize,
    /// Recurrent layers (default 2 for LSTM2_A, else 1).
    #[arg(long)]
    pub layers: Option<usize>,
    /// Inner cell of the HU models.
    #[arg(long, default_value_t = CellKind::Rnn)]
    pub inner_rnn: CellKind,
    #[arg(long, default_value_t = 0.0)]
    pub dropout: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 5.0)]
    pub clip: f64,
    /// Hashtable direction: sender or receiver.
    #[arg(long, default_value = "sender")]
    pub direction: String,
    /// Output directory.
    #[arg(long, default_value = "bench-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GradcheckArgs {
    #[arg(long, value_delimiter = ',', default_values_t = Arch::ALL.to_vec())]
    pub archs: Vec<Arch>,
    /// Inner cells tried for the HU models.
    #[arg(long, value_delimiter = ',', default_values_t = [CellKind::Rnn, CellKind::Gru, CellKind::Lstm])]
    pub inner_rnn: Vec<CellKind>,
    #[arg(long, default_value_t = 8)]
    pub emb_size: usize,
    #[arg(long, default_value_t = 12)]
    pub entries: usize,
    #[arg(long, default_value_t = icy_neural::GRADCHECK_TOLERANCE)]
    pub tolerance: f64,
    /// Test fixture: run with a deliberately wrong tanh backward rule.
    #[arg(long, hide = true)]
    pub corrupt_tanh: bool,
    #[arg(long, default_value = "gradcheck.tsv")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ExportGameArgs {
    /// eng or synth.
    #[arg(long)]
    pub dataset: String,
    #[arg(long, default_value_t = GrammarKind::Concat)]
    pub kind: GrammarKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = icy_core::game::DEFAULT_HOLDOUT)]
    pub holdout: usize,
    #[arg(long, default_value = "game.json")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Write outputs here instead of the recorded path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
