//! Compositionality metrics: topsim, posdis, bosdis, HCE, residual entropy
//! (exhaustive and greedy) and TRE7. Entropies are in bits.

pub mod corpus;
pub mod disent;
pub mod info;
pub mod report;
pub mod resent;
pub mod topsim;
pub mod tre;

pub use corpus::Corpus;
pub use disent::{bosdis, posdis};
pub use info::{conditional_entropy, entropy, mi_position_attribute, mutual_information, MiMatrix};
pub use report::{compute_metrics, Metric, MetricConfig, MetricRow};
pub use resent::{
    greedy_partition, hce, resent_exact, resent_relax, ExactOptions, ExactResult, PositionPartition,
};
pub use topsim::{spearman, topsim, DEFAULT_PAIR_BUDGET};
pub use tre::{tre7, TreConfig};

#[derive(Debug, thiserror::Error)]
pub enum MetricError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("resource limit: {0}")]
    Resource(String),
}

pub type Result<T> = std::result::Result<T, MetricError>;
