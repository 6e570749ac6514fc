//! Residual entropy (exhaustive) and its greedy relaxation, HCE.

use std::collections::HashMap;

use crate::corpus::Corpus;
use crate::info::{conditional_entropy, entropy_of, mi_position_attribute};
use crate::{MetricError, Result};

/// Default cap on `n_att^c_len` assignments for [`resent_exact`].
pub const EXACT_BUDGET: u64 = 10_000_000;

/// MI values closer than this count as tied.
const TIE_EPS: f64 = 1e-10;

/// `assign[j]` is the attribute that position `j` belongs to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositionPartition {
    pub assign: Vec<usize>,
    pub n_att: usize,
}

impl PositionPartition {
    pub fn block(&self, i: usize) -> Vec<usize> {
        (0..self.assign.len()).filter(|&j| self.assign[j] == i).collect()
    }
}

/// Each position goes to the attribute it shares the most information with.
/// Positions with no information go to attribute 0; an informative position
/// tied between attributes goes to the highest tied index.
pub fn greedy_partition(corpus: &Corpus) -> PositionPartition {
    let mi = mi_position_attribute(corpus);
    let assign = (0..corpus.c_len)
        .map(|j| {
            let row = mi.row(j);
            let mut best = 0;
            for (i, &v) in row.iter().enumerate() {
                let tied = (v - row[best]).abs() <= TIE_EPS;
                if v > row[best] + TIE_EPS || (tied && v > TIE_EPS) {
                    best = i;
                }
            }
            best
        })
        .collect();
    PositionPartition {
        assign,
        n_att: corpus.n_att,
    }
}

struct Scorer<'a> {
    corpus: &'a Corpus,
    attrs: Vec<Vec<usize>>,
    norms: Vec<f64>,
}

impl<'a> Scorer<'a> {
    fn new(corpus: &'a Corpus, normalize: bool) -> Result<Self> {
        let attrs: Vec<Vec<usize>> = (0..corpus.n_att).map(|i| corpus.attribute(i)).collect();
        let norms = attrs
            .iter()
            .enumerate()
            .map(|(i, a)| {
                if !normalize {
                    return Ok(1.0);
                }
                let h = entropy_of(a.iter().copied());
                if h > 0.0 {
                    Ok(h)
                } else {
                    Err(MetricError::Domain(format!(
                        "attribute {i} has zero entropy; normalization undefined"
                    )))
                }
            })
            .collect::<Result<_>>()?;
        Ok(Scorer { corpus, attrs, norms })
    }

    /// `H(o_i | z[block])`, divided by `H(o_i)` when normalizing.
    fn term(&self, i: usize, block: &[usize]) -> f64 {
        let z = self.corpus.sub_messages(block);
        conditional_entropy(&self.attrs[i], &z) / self.norms[i]
    }

    fn mean(&self, p: &PositionPartition) -> f64 {
        let total: f64 = (0..self.corpus.n_att).map(|i| self.term(i, &p.block(i))).sum();
        total / self.corpus.n_att as f64
    }
}

/// Mean (optionally normalized) conditional entropy over the greedy partition.
pub fn resent_relax(corpus: &Corpus, normalize: bool) -> Result<f64> {
    let scorer = Scorer::new(corpus, normalize)?;
    Ok(scorer.mean(&greedy_partition(corpus)))
}

/// `1 - resent_relax(normalized)`: 1 for perfectly compositional tables.
pub fn hce(corpus: &Corpus) -> Result<f64> {
    Ok(1.0 - resent_relax(corpus, true)?)
}

#[derive(Debug, Clone, Copy)]
pub struct ExactOptions {
    pub normalize: bool,
    /// Only consider partitions where every attribute gets at least one position.
    pub surjective: bool,
    pub budget: u64,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions {
            normalize: false,
            surjective: false,
            budget: EXACT_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    pub value: f64,
    pub partition: PositionPartition,
}

/// Minimum over all assignments of positions to attributes.
pub fn resent_exact(corpus: &Corpus, opts: ExactOptions) -> Result<ExactResult> {
    let (n_att, c_len) = (corpus.n_att, corpus.c_len);
    let total = (n_att as u64).checked_pow(c_len as u32).filter(|&t| t <= opts.budget);
    let Some(total) = total.filter(|_| c_len < 64) else {
        return Err(MetricError::Resource(format!(
            "{n_att}^{c_len} assignments exceed the enumeration budget {}; use resent_relax",
            opts.budget
        )));
    };
    let scorer = Scorer::new(corpus, opts.normalize)?;
    let mut memo: HashMap<(usize, u64), f64> = HashMap::new();
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut assign = vec![0usize; c_len];
    for code in 0..total {
        let mut c = code;
        for slot in assign.iter_mut() {
            *slot = (c % n_att as u64) as usize;
            c /= n_att as u64;
        }
        let mut masks = vec![0u64; n_att];
        for (j, &i) in assign.iter().enumerate() {
            masks[i] |= 1 << j;
        }
        if opts.surjective && masks.contains(&0) {
            continue;
        }
        let mut sum = 0.0;
        for (i, &mask) in masks.iter().enumerate() {
            sum += *memo.entry((i, mask)).or_insert_with(|| {
                let block: Vec<usize> = (0..c_len).filter(|&j| mask >> j & 1 == 1).collect();
                scorer.term(i, &block)
            });
        }
        let value = sum / n_att as f64;
        if best.as_ref().is_none_or(|b| value < b.0) {
            best = Some((value, assign.clone()));
        }
    }
    let (value, assign) = best.ok_or_else(|| {
        MetricError::Domain("no surjective assignment exists (c_len < n_att)".into())
    })?;
    Ok(ExactResult {
        value,
        partition: PositionPartition { assign, n_att },
    })
}
