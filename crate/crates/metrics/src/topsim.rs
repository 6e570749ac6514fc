use icy_core::rng::{stream, Stream};
use rand::Rng;

use crate::corpus::Corpus;
use crate::{MetricError, Result};

pub const DEFAULT_PAIR_BUDGET: usize = 10_000;

pub fn hamming(a: &[usize], b: &[usize]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

pub fn levenshtein(a: &[usize], b: &[usize]) -> usize {
    strsim::generic_levenshtein(&a.to_vec(), &b.to_vec())
}

/// Ranks starting at 1, ties get the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = rank;
        }
        start = end;
    }
    ranks
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(MetricError::Domain("zero variance in a distance list".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Spearman correlation of object Hamming distance and message edit distance.
/// Exhaustive when the pair count fits `pair_budget`, else `pair_budget`
/// uniform pairs drawn from `seed`.
pub fn topsim(corpus: &Corpus, pair_budget: usize, seed: u64) -> Result<f64> {
    let n = corpus.len();
    if n < 2 {
        return Err(MetricError::Domain("topsim needs at least two objects".into()));
    }
    let all_pairs = n * (n - 1) / 2;
    let pairs: Vec<(usize, usize)> = if all_pairs <= pair_budget {
        (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect()
    } else {
        let mut rng = stream(seed, Stream::PairSample);
        (0..pair_budget)
            .map(|_| {
                let a = rng.random_range(0..n);
                let mut b = rng.random_range(0..n - 1);
                if b >= a {
                    b += 1;
                }
                (a, b)
            })
            .collect()
    };
    if pairs.len() == 1 {
        return Ok(1.0);
    }
    let (od, md): (Vec<f64>, Vec<f64>) = pairs
        .iter()
        .map(|&(a, b)| {
            (
                hamming(corpus.object(a), corpus.object(b)) as f64,
                levenshtein(corpus.message(a), corpus.message(b)) as f64,
            )
        })
        .unzip();
    spearman(&od, &md)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_with_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 5.0]), vec![2.5, 4.0, 2.5, 1.0]);
    }

    #[test]
    fn edit_distance_examples() {
        assert_eq!(levenshtein(&[0, 1, 2], &[0, 1, 2]), 0);
        assert_eq!(levenshtein(&[0, 1, 2], &[1, 2, 0]), 2);
        assert_eq!(levenshtein(&[0, 0, 0, 0], &[1, 1, 1, 1]), 4);
    }
}
