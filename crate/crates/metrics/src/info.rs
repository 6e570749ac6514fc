//! Plug-in entropy and mutual information over complete tables, in bits.
//!
//! Counts are sorted before summation so results are exactly invariant to
//! relabeling of symbols and attribute values.

use std::collections::HashMap;
use std::hash::Hash;

use crate::corpus::Corpus;
use crate::{MetricError, Result};

pub fn entropy(counts: &[u64]) -> Result<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(MetricError::Domain("entropy of an all-zero histogram".into()));
    }
    let mut sorted: Vec<u64> = counts.iter().copied().filter(|&c| c > 0).collect();
    sorted.sort_unstable();
    let n = total as f64;
    let h: f64 = sorted
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    Ok(h.max(0.0))
}

fn histogram<K: Hash + Eq>(values: impl IntoIterator<Item = K>) -> Vec<u64> {
    let mut map: HashMap<K, u64> = HashMap::new();
    for v in values {
        *map.entry(v).or_default() += 1;
    }
    map.into_values().collect()
}

/// Entropy of the empirical distribution of `values`.
pub fn entropy_of<K: Hash + Eq>(values: impl IntoIterator<Item = K>) -> f64 {
    entropy(&histogram(values)).unwrap_or(0.0)
}

/// `I(X; Y) = H(X) + H(Y) - H(X, Y)`, clamped at 0.
pub fn mutual_information<X: Hash + Eq + Clone, Y: Hash + Eq + Clone>(x: &[X], y: &[Y]) -> f64 {
    assert_eq!(x.len(), y.len());
    let hx = entropy_of(x.iter().cloned());
    let hy = entropy_of(y.iter().cloned());
    let hxy = entropy_of(x.iter().cloned().zip(y.iter().cloned()));
    (hx + hy - hxy).max(0.0)
}

/// `H(A | Z) = sum_z p(z) H(A | Z = z)`, exactly 0 when `z` determines `a`.
pub fn conditional_entropy<Z: Hash + Eq>(a: &[usize], z: &[Z]) -> f64 {
    assert_eq!(a.len(), z.len());
    let n = a.len() as f64;
    let mut groups: HashMap<&Z, HashMap<usize, u64>> = HashMap::new();
    for (ai, zi) in a.iter().zip(z) {
        *groups.entry(zi).or_default().entry(*ai).or_default() += 1;
    }
    let mut terms: Vec<f64> = groups
        .into_values()
        .map(|h| {
            let counts: Vec<u64> = h.into_values().collect();
            let nz: u64 = counts.iter().sum();
            nz as f64 / n * entropy(&counts).expect("non-empty group")
        })
        .collect();
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

/// `c_len x n_att` matrix with entry `(j, i) = I(m^(j); o^(i))`.
#[derive(Debug, Clone, PartialEq)]
pub struct MiMatrix {
    pub c_len: usize,
    pub n_att: usize,
    pub values: Vec<f64>,
}

impl MiMatrix {
    pub fn get(&self, j: usize, i: usize) -> f64 {
        self.values[j * self.n_att + i]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.n_att..(j + 1) * self.n_att]
    }
}

pub fn mi_position_attribute(corpus: &Corpus) -> MiMatrix {
    let attrs: Vec<Vec<usize>> = (0..corpus.n_att).map(|i| corpus.attribute(i)).collect();
    let mut values = Vec::with_capacity(corpus.c_len * corpus.n_att);
    for j in 0..corpus.c_len {
        let pos = corpus.position(j);
        for a in &attrs {
            values.push(mutual_information(&pos, a));
        }
    }
    MiMatrix {
        c_len: corpus.c_len,
        n_att: corpus.n_att,
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&[1, 1]).unwrap(), 1.0);
        assert_eq!(entropy(&[4]).unwrap(), 0.0);
        assert_eq!(entropy(&[1, 1, 1, 1]).unwrap(), 2.0);
        assert_eq!(entropy(&[0, 3, 0]).unwrap(), 0.0);
        assert!(matches!(entropy(&[0, 0]), Err(MetricError::Domain(_))));
        assert!(entropy(&[]).is_err());
    }

    #[test]
    fn entropy_is_order_invariant() {
        assert_eq!(entropy(&[3, 1, 7, 2]).unwrap(), entropy(&[7, 2, 3, 1]).unwrap());
    }

    #[test]
    fn conditional_entropy_cases() {
        let a = [0, 0, 1, 1];
        assert_eq!(conditional_entropy(&a, &[5, 5, 6, 6]), 0.0);
        assert_eq!(conditional_entropy(&a, &[0, 0, 0, 0]), 1.0);
        // z splits {0,1} and {0,1}: one bit remains in each group
        assert_eq!(conditional_entropy(&a, &[0, 1, 0, 1]), 1.0);
    }

    #[test]
    fn mi_of_copy_and_independent() {
        let x = [0, 1, 2, 3, 0, 1, 2, 3];
        let y = [0, 0, 0, 0, 1, 1, 1, 1];
        assert!((mutual_information(&x, &x) - 2.0).abs() < 1e-12);
        assert_eq!(mutual_information(&x, &y), 0.0);
    }
}
