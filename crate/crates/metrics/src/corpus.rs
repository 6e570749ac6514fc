use icy_core::Grammar;

use crate::{MetricError, Result};

/// Flat `(object, message)` table the metrics operate on.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub n_att: usize,
    pub c_len: usize,
    pub vocab_size: usize,
    objects: Vec<usize>,
    messages: Vec<usize>,
}

impl Corpus {
    pub fn from_grammar(g: &Grammar) -> Self {
        let n = g.len();
        let mut objects = vec![0; n * g.geometry.n_att];
        for (i, chunk) in objects.chunks_mut(g.geometry.n_att).enumerate() {
            g.geometry.object_values_into(i, chunk);
        }
        Corpus {
            n_att: g.geometry.n_att,
            c_len: g.geometry.c_len,
            vocab_size: g.geometry.vocab_size,
            objects,
            messages: g.symbols().to_vec(),
        }
    }

    /// Build from explicit rows; all objects and all messages must have equal length.
    pub fn new(objects: &[Vec<usize>], messages: &[Vec<usize>], vocab_size: usize) -> Result<Self> {
        if objects.is_empty() || objects.len() != messages.len() {
            return Err(MetricError::Domain(format!(
                "{} objects vs {} messages",
                objects.len(),
                messages.len()
            )));
        }
        let n_att = objects[0].len();
        let c_len = messages[0].len();
        if objects.iter().any(|o| o.len() != n_att) || messages.iter().any(|m| m.len() != c_len) {
            return Err(MetricError::Domain("ragged objects or messages".into()));
        }
        if messages.iter().flatten().any(|&s| s >= vocab_size) {
            return Err(MetricError::Domain(format!("symbol outside vocabulary {vocab_size}")));
        }
        Ok(Corpus {
            n_att,
            c_len,
            vocab_size,
            objects: objects.concat(),
            messages: messages.concat(),
        })
    }

    pub fn len(&self) -> usize {
        self.messages.len() / self.c_len
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn object(&self, n: usize) -> &[usize] {
        &self.objects[n * self.n_att..(n + 1) * self.n_att]
    }

    pub fn message(&self, n: usize) -> &[usize] {
        &self.messages[n * self.c_len..(n + 1) * self.c_len]
    }

    /// Column `i` of the object table.
    pub fn attribute(&self, i: usize) -> Vec<usize> {
        (0..self.len()).map(|n| self.objects[n * self.n_att + i]).collect()
    }

    /// Column `j` of the message table.
    pub fn position(&self, j: usize) -> Vec<usize> {
        (0..self.len()).map(|n| self.messages[n * self.c_len + j]).collect()
    }

    /// Sub-message at `positions` for every row.
    pub fn sub_messages(&self, positions: &[usize]) -> Vec<Vec<usize>> {
        (0..self.len())
            .map(|n| {
                let m = self.message(n);
                positions.iter().map(|&j| m[j]).collect()
            })
            .collect()
    }
}
