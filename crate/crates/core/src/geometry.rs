use serde::{Deserialize, Serialize};

use crate::error::{GrammarError, Result};

/// Largest object space that is fully materialized.
pub const MAX_OBJECTS: usize = 1_000_000;

/// Object-space and message-space dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Geometry {
    pub n_att: usize,
    pub n_val: usize,
    pub c_len: usize,
    pub vocab_size: usize,
}

impl Geometry {
    /// Validated constructor. Checks integral word length and lexicon capacity.
    pub fn new(n_att: usize, n_val: usize, c_len: usize, vocab_size: usize) -> Result<Self> {
        let g = Geometry {
            n_att,
            n_val,
            c_len,
            vocab_size,
        };
        g.validate()?;
        Ok(g)
    }

    /// `n_att=5, n_val=10, c_len=20, |V|=4`.
    pub fn paper() -> Self {
        Geometry::new(5, 10, 20, 4).expect("valid")
    }

    /// `n_att=2, n_val=3, c_len=4, |V|=4`, nine objects.
    pub fn small() -> Self {
        Geometry::new(2, 3, 4, 4).expect("valid")
    }

    /// Desk-scale benchmark geometry: `n_att=3, n_val=6, c_len=12, |V|=4`.
    pub fn reduced() -> Self {
        Geometry::new(3, 6, 12, 4).expect("valid")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_att == 0 || self.n_val == 0 || self.c_len == 0 || self.vocab_size == 0 {
            return Err(GrammarError::Config(format!(
                "all geometry fields must be positive: {self:?}"
            )));
        }
        if !self.c_len.is_multiple_of(self.n_att) {
            return Err(GrammarError::Config(format!(
                "c_len={} is not a multiple of n_att={}",
                self.c_len, self.n_att
            )));
        }
        let words = self.n_att * self.n_val;
        if !capacity_at_least(self.vocab_size, self.word_len(), words) {
            return Err(GrammarError::Config(format!(
                "vocab_size^c_w = {}^{} < n_att*n_val = {words}: not enough distinct words",
                self.vocab_size,
                self.word_len()
            )));
        }
        Ok(())
    }

    /// Word length `c_w = c_len / n_att`.
    pub fn word_len(&self) -> usize {
        self.c_len / self.n_att
    }

    /// Number of objects `N = n_val^n_att`, or `None` on overflow.
    pub fn checked_num_objects(&self) -> Option<usize> {
        let mut n: usize = 1;
        for _ in 0..self.n_att {
            n = n.checked_mul(self.n_val)?;
        }
        Some(n)
    }

    pub fn num_objects(&self) -> usize {
        self.checked_num_objects().expect("object space overflows usize")
    }

    /// Whether `vocab_size^c_len >= n`.
    pub fn message_space_at_least(&self, n: usize) -> bool {
        capacity_at_least(self.vocab_size, self.c_len, n)
    }

    /// Object at lexicographic position `index` (attribute 0 slowest-varying).
    pub fn object_at(&self, index: usize) -> ObjectVec {
        let mut values = vec![0; self.n_att];
        self.object_values_into(index, &mut values);
        ObjectVec(values)
    }

    pub fn object_values_into(&self, mut index: usize, out: &mut [usize]) {
        for slot in out.iter_mut().rev() {
            *slot = index % self.n_val;
            index /= self.n_val;
        }
    }

    /// Inverse of [`Geometry::object_at`].
    pub fn index_of(&self, object: &ObjectVec) -> usize {
        object.0.iter().fold(0, |acc, &v| acc * self.n_val + v)
    }

    pub fn check_object(&self, object: &ObjectVec) -> Result<()> {
        if object.0.len() != self.n_att || object.0.iter().any(|&v| v >= self.n_val) {
            return Err(GrammarError::Validation(format!(
                "object {:?} does not fit n_att={} n_val={}",
                object.0, self.n_att, self.n_val
            )));
        }
        Ok(())
    }

    pub fn check_message(&self, message: &[usize]) -> Result<()> {
        if message.len() != self.c_len {
            return Err(GrammarError::Validation(format!(
                "message length {} != c_len {}",
                message.len(),
                self.c_len
            )));
        }
        if let Some(s) = message.iter().find(|&&s| s >= self.vocab_size) {
            return Err(GrammarError::Validation(format!(
                "symbol {s} outside vocabulary of size {}",
                self.vocab_size
            )));
        }
        Ok(())
    }
}

fn capacity_at_least(base: usize, exp: usize, n: usize) -> bool {
    let mut cap: usize = 1;
    for _ in 0..exp {
        cap = match cap.checked_mul(base) {
            Some(c) => c,
            None => return true,
        };
        if cap >= n {
            return true;
        }
    }
    cap >= n
}

/// One object: a value in `[0, n_val)` for each attribute.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObjectVec(pub Vec<usize>);

impl ObjectVec {
    pub fn values(&self) -> &[usize] {
        &self.0
    }
}

/// One utterance of `c_len` symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Message(pub Vec<usize>);

impl Message {
    pub fn symbols(&self) -> &[usize] {
        &self.0
    }
}

/// All `N` objects in lexicographic order.
pub fn object_space(geometry: &Geometry) -> Vec<ObjectVec> {
    (0..geometry.num_objects())
        .map(|i| geometry.object_at(i))
        .collect()
}
