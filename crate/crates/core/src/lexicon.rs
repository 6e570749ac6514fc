use std::collections::HashSet;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GrammarError, Result};
use crate::geometry::{Geometry, ObjectVec};
use crate::rng::{stream, Stream};

/// Word table `(attribute, value) -> c_w symbols`, pairwise distinct across the
/// whole table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicon {
    /// `words[i][v]` is the word for value `v` of attribute `i`.
    pub words: Vec<Vec<Vec<usize>>>,
}

impl Lexicon {
    pub fn word(&self, attribute: usize, value: usize) -> &[usize] {
        &self.words[attribute][value]
    }

    pub fn validate(&self, geometry: &Geometry) -> Result<()> {
        if self.words.len() != geometry.n_att {
            return Err(GrammarError::Validation(format!(
                "lexicon has {} attributes, geometry has {}",
                self.words.len(),
                geometry.n_att
            )));
        }
        let mut seen = HashSet::new();
        for (i, row) in self.words.iter().enumerate() {
            if row.len() != geometry.n_val {
                return Err(GrammarError::Validation(format!(
                    "lexicon attribute {i} has {} values, expected {}",
                    row.len(),
                    geometry.n_val
                )));
            }
            for (v, w) in row.iter().enumerate() {
                if w.len() != geometry.word_len() || w.iter().any(|&s| s >= geometry.vocab_size) {
                    return Err(GrammarError::Validation(format!(
                        "word ({i},{v}) = {w:?} is not a length-{} word over |V|={}",
                        geometry.word_len(),
                        geometry.vocab_size
                    )));
                }
                if !seen.insert(w.clone()) {
                    return Err(GrammarError::Validation(format!(
                        "word ({i},{v}) = {w:?} is not unique"
                    )));
                }
            }
        }
        Ok(())
    }

    /// The `n_att` words of an object, in attribute order.
    pub fn words_of<'a>(&'a self, object: &'a ObjectVec) -> impl Iterator<Item = &'a [usize]> + 'a {
        object
            .0
            .iter()
            .enumerate()
            .map(move |(i, &v)| self.word(i, v))
    }
}

const ENUMERATE_LIMIT: usize = 1 << 16;

/// Sample a bijective lexicon from the `Lexicon` stream of `seed`.
pub fn sample_lexicon(geometry: &Geometry, seed: u64) -> Result<Lexicon> {
    geometry.validate()?;
    let needed = geometry.n_att * geometry.n_val;
    let c_w = geometry.word_len();
    let v = geometry.vocab_size;
    let mut rng = stream(seed, Stream::Lexicon);

    let capacity = (0..c_w).try_fold(1usize, |acc, _| acc.checked_mul(v));
    let flat: Vec<Vec<usize>> = match capacity {
        Some(cap) if cap <= ENUMERATE_LIMIT => index::sample(&mut rng, cap, needed)
            .into_iter()
            .map(|code| digits(code, v, c_w))
            .collect(),
        _ => {
            let mut seen = HashSet::with_capacity(needed);
            let mut out = Vec::with_capacity(needed);
            while out.len() < needed {
                let w: Vec<usize> = (0..c_w).map(|_| rng.random_range(0..v)).collect();
                if seen.insert(w.clone()) {
                    out.push(w);
                }
            }
            out
        }
    };

    let words = flat
        .chunks(geometry.n_val)
        .map(|c| c.to_vec())
        .collect();
    Ok(Lexicon { words })
}

/// Base-`radix` digits of `code`, most significant first.
pub(crate) fn digits(mut code: usize, radix: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = code % radix;
        code /= radix;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lexicon_is_distinct() {
        let g = Geometry::small();
        let lex = sample_lexicon(&g, 7).unwrap();
        lex.validate(&g).unwrap();
        let all: HashSet<_> = lex.words.iter().flatten().collect();
        assert_eq!(all.len(), 6);
        assert!(all.iter().all(|w| w.len() == 2));
    }

    #[test]
    fn paper_lexicon_is_distinct() {
        let g = Geometry::paper();
        let lex = sample_lexicon(&g, 1).unwrap();
        lex.validate(&g).unwrap();
        let all: HashSet<_> = lex.words.iter().flatten().collect();
        assert_eq!(all.len(), 50);
        assert!(all.iter().all(|w| w.len() == 4));
    }

    #[test]
    fn same_seed_same_lexicon() {
        let g = Geometry::reduced();
        assert_eq!(sample_lexicon(&g, 11).unwrap(), sample_lexicon(&g, 11).unwrap());
        assert_ne!(sample_lexicon(&g, 11).unwrap(), sample_lexicon(&g, 12).unwrap());
    }

    #[test]
    fn capacity_violation_is_config_error() {
        let g = Geometry {
            n_att: 2,
            n_val: 3,
            c_len: 2,
            vocab_size: 2,
        };
        assert!(matches!(sample_lexicon(&g, 0), Err(GrammarError::Config(_))));
    }

    #[test]
    fn exact_capacity_uses_every_word() {
        // 2^2 = 4 words for 2x2 slots.
        let g = Geometry::new(2, 2, 4, 2).unwrap();
        let lex = sample_lexicon(&g, 3).unwrap();
        lex.validate(&g).unwrap();
    }

    #[test]
    fn large_capacity_rejection_path() {
        // 4^10 > 2^16 forces the rejection sampler.
        let g = Geometry::new(2, 50, 20, 4).unwrap();
        let lex = sample_lexicon(&g, 5).unwrap();
        lex.validate(&g).unwrap();
    }
}
