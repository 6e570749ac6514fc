use std::fmt;
use std::str::FromStr;

use icy_core::Grammar;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::resent::{resent_exact, resent_relax, ExactOptions, EXACT_BUDGET};
use crate::topsim::DEFAULT_PAIR_BUDGET;
use crate::tre::{tre7, TreConfig};
use crate::{bosdis, hce, posdis, topsim, MetricError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Topsim,
    Posdis,
    Bosdis,
    Hce,
    ResentExact,
    ResentRelax,
    Tre7,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::Topsim,
        Metric::Posdis,
        Metric::Bosdis,
        Metric::Hce,
        Metric::ResentExact,
        Metric::ResentRelax,
        Metric::Tre7,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Topsim => "topsim",
            Metric::Posdis => "posdis",
            Metric::Bosdis => "bosdis",
            Metric::Hce => "hce",
            Metric::ResentExact => "resent_exact",
            Metric::ResentRelax => "resent_relax",
            Metric::Tre7 => "tre7",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, MetricError> {
        let s = s.replace('-', "_");
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| MetricError::Domain(format!("unknown metric {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub pair_budget: usize,
    pub pair_seed: u64,
    /// Normalization for resent_exact and resent_relax.
    pub normalize: bool,
    pub exact_budget: u64,
    pub tre: TreConfig,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            pair_budget: DEFAULT_PAIR_BUDGET,
            pair_seed: 0,
            normalize: false,
            exact_budget: EXACT_BUDGET,
            tre: TreConfig::default(),
        }
    }
}

impl MetricConfig {
    /// Parameters that affect `metric`, as `key=value` pairs.
    pub fn describe(&self, metric: Metric) -> String {
        match metric {
            Metric::Topsim => format!("pairs={};pair_seed={}", self.pair_budget, self.pair_seed),
            Metric::Posdis | Metric::Bosdis | Metric::Hce => "-".into(),
            Metric::ResentExact => {
                format!("normalize={};budget={}", self.normalize, self.exact_budget)
            }
            Metric::ResentRelax => format!("normalize={}", self.normalize),
            Metric::Tre7 => {
                let t = &self.tre;
                format!(
                    "steps={};lr={};sinkhorn={};temp={};batch={};restarts={};seed={}",
                    t.steps,
                    t.learning_rate,
                    t.sinkhorn_iters,
                    t.temperature,
                    t.batch_size,
                    t.restarts,
                    t.seed
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub kind: String,
    pub seed: u64,
    pub metric: Metric,
    /// `Err` holds the message for metrics that are undefined on this table.
    pub value: Result<f64, String>,
    pub config: String,
}

impl MetricRow {
    pub const HEADER: &'static str = "kind\tseed\tmetric\tvalue\tconfig";

    pub fn to_line(&self) -> String {
        let value = match &self.value {
            Ok(v) => format!("{v:.6}"),
            Err(e) => format!("error: {e}"),
        };
        format!("{}\t{}\t{}\t{}\t{}", self.kind, self.seed, self.metric, value, self.config)
    }
}

pub fn compute_metric(corpus: &Corpus, metric: Metric, cfg: &MetricConfig) -> Result<f64, MetricError> {
    match metric {
        Metric::Topsim => topsim(corpus, cfg.pair_budget, cfg.pair_seed),
        Metric::Posdis => posdis(corpus),
        Metric::Bosdis => bosdis(corpus),
        Metric::Hce => hce(corpus),
        Metric::ResentExact => resent_exact(
            corpus,
            ExactOptions {
                normalize: cfg.normalize,
                budget: cfg.exact_budget,
                ..ExactOptions::default()
            },
        )
        .map(|r| r.value),
        Metric::ResentRelax => resent_relax(corpus, cfg.normalize),
        Metric::Tre7 => tre7(corpus, &cfg.tre),
    }
}

pub fn compute_metrics(grammar: &Grammar, metrics: &[Metric], cfg: &MetricConfig) -> Vec<MetricRow> {
    let corpus = Corpus::from_grammar(grammar);
    metrics
        .iter()
        .map(|&m| MetricRow {
            kind: grammar.kind.to_string(),
            seed: grammar.seed,
            metric: m,
            value: compute_metric(&corpus, m, cfg).map_err(|e| e.to_string()),
            config: cfg.describe(m),
        })
        .collect()
}
