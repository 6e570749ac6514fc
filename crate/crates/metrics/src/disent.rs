//! Positional and bag-of-symbols disentanglement.

use crate::corpus::Corpus;
use crate::info::{entropy_of, mutual_information};
use crate::{MetricError, Result};

const MIN_ENTROPY: f64 = 1e-12;

/// `(top MI - second MI) / H(feature)`, or `None` when the feature is constant.
fn gap_score(feature: &[usize], attrs: &[Vec<usize>]) -> Option<f64> {
    let h = entropy_of(feature.iter().copied());
    if h <= MIN_ENTROPY {
        return None;
    }
    let mut mis: Vec<f64> = attrs.iter().map(|a| mutual_information(feature, a)).collect();
    mis.sort_by(|a, b| b.total_cmp(a));
    let second = mis.get(1).copied().unwrap_or(0.0);
    Some(((mis[0] - second) / h).clamp(0.0, 1.0))
}

fn mean_gap(features: impl Iterator<Item = Vec<usize>>, corpus: &Corpus, what: &str) -> Result<f64> {
    let attrs: Vec<Vec<usize>> = (0..corpus.n_att).map(|i| corpus.attribute(i)).collect();
    let scores: Vec<f64> = features.filter_map(|f| gap_score(&f, &attrs)).collect();
    if scores.is_empty() {
        return Err(MetricError::Domain(format!("every {what} is constant")));
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

pub fn posdis(corpus: &Corpus) -> Result<f64> {
    mean_gap((0..corpus.c_len).map(|j| corpus.position(j)), corpus, "position")
}

pub fn bosdis(corpus: &Corpus) -> Result<f64> {
    let counts = (0..corpus.vocab_size).map(|v| {
        (0..corpus.len())
            .map(|n| corpus.message(n).iter().filter(|&&s| s == v).count())
            .collect()
    });
    mean_gap(counts, corpus, "symbol count")
}
