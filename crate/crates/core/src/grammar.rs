use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{GrammarError, Result};
use crate::geometry::{Geometry, Message, ObjectVec, MAX_OBJECTS};
use crate::lexicon::{sample_lexicon, Lexicon};
use crate::rng::{stream, Stream, RNG_ID};
use crate::transform::{self, ProjectionKernel, VEC_LAYOUT};

/// Kernels sampled when looking for an injective `proj` table.
pub const PROJ_KERNEL_BUDGET: u64 = 10;

/// What `proj` generation does when none of the budgeted kernels gives an
/// injective table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjPolicy {
    /// Keep the kernel with the fewest colliding objects.
    #[default]
    Fewest,
    /// Fail with a generation error.
    Strict,
}

impl FromStr for ProjPolicy {
    type Err = GrammarError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fewest" => Ok(ProjPolicy::Fewest),
            "strict" => Ok(ProjPolicy::Strict),
            other => Err(GrammarError::Config(format!(
                "unknown proj policy {other:?} (expected fewest or strict)"
            ))),
        }
    }
}

/// Per-object rejection attempts before `hol` generation gives up.
const HOL_ATTEMPT_LIMIT: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GrammarKind {
    Concat,
    Hol,
    Perm,
    Proj,
    Rot,
    Shuf,
    Shufdet,
}

impl GrammarKind {
    pub const ALL: [GrammarKind; 7] = [
        GrammarKind::Concat,
        GrammarKind::Perm,
        GrammarKind::Proj,
        GrammarKind::Rot,
        GrammarKind::Shufdet,
        GrammarKind::Shuf,
        GrammarKind::Hol,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GrammarKind::Concat => "concat",
            GrammarKind::Hol => "hol",
            GrammarKind::Perm => "perm",
            GrammarKind::Proj => "proj",
            GrammarKind::Rot => "rot",
            GrammarKind::Shuf => "shuf",
            GrammarKind::Shufdet => "shufdet",
        }
    }
}

impl fmt::Display for GrammarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GrammarKind {
    type Err = GrammarError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "concat" | "comp" => Ok(GrammarKind::Concat),
            "hol" => Ok(GrammarKind::Hol),
            "perm" => Ok(GrammarKind::Perm),
            "proj" => Ok(GrammarKind::Proj),
            "rot" => Ok(GrammarKind::Rot),
            "shuf" => Ok(GrammarKind::Shuf),
            "shufdet" => Ok(GrammarKind::Shufdet),
            other => Err(GrammarError::Config(format!("unknown grammar kind '{other}'"))),
        }
    }
}

/// Which attribute's value selects the word order in `shufdet`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeyAttribute {
    #[default]
    Last,
    First,
}

impl KeyAttribute {
    pub fn index(self, n_att: usize) -> usize {
        match self {
            KeyAttribute::Last => n_att - 1,
            KeyAttribute::First => 0,
        }
    }
}

/// Kind-specific parameters, enough to rebuild the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GrammarParams {
    Concat {
        lexicon: Lexicon,
    },
    Hol,
    Perm {
        lexicon: Lexicon,
        position_perm: Vec<usize>,
    },
    Proj {
        lexicon: Lexicon,
        kernel: ProjectionKernel,
        vec_layout: String,
        /// Zero-based index of the accepted kernel among those sampled.
        kernel_attempt: u64,
        /// Objects whose message repeats an earlier object's (0 when injective).
        #[serde(default)]
        collisions: usize,
    },
    Rot {
        lexicon: Lexicon,
    },
    Shufdet {
        lexicon: Lexicon,
        key_attribute: KeyAttribute,
        /// `word_orders[v]` is the block order for key value `v`.
        word_orders: Vec<Vec<usize>>,
    },
    Shuf {
        lexicon: Lexicon,
        /// Block order per object, in object order.
        object_orders: Vec<Vec<usize>>,
    },
}

impl GrammarParams {
    pub fn kind(&self) -> GrammarKind {
        match self {
            GrammarParams::Concat { .. } => GrammarKind::Concat,
            GrammarParams::Hol => GrammarKind::Hol,
            GrammarParams::Perm { .. } => GrammarKind::Perm,
            GrammarParams::Proj { .. } => GrammarKind::Proj,
            GrammarParams::Rot { .. } => GrammarKind::Rot,
            GrammarParams::Shufdet { .. } => GrammarKind::Shufdet,
            GrammarParams::Shuf { .. } => GrammarKind::Shuf,
        }
    }

    pub fn lexicon(&self) -> Option<&Lexicon> {
        match self {
            GrammarParams::Hol => None,
            GrammarParams::Concat { lexicon }
            | GrammarParams::Perm { lexicon, .. }
            | GrammarParams::Proj { lexicon, .. }
            | GrammarParams::Rot { lexicon }
            | GrammarParams::Shufdet { lexicon, .. }
            | GrammarParams::Shuf { lexicon, .. } => Some(lexicon),
        }
    }
}

/// Generation options beyond `(kind, geometry, seed)`.
#[derive(Debug, Clone, Default)]
pub struct GenerateOptions {
    pub key_attribute: KeyAttribute,
    /// Use this lexicon instead of sampling one (game datasets).
    pub lexicon: Option<Lexicon>,
    pub proj_policy: ProjPolicy,
}

/// A fully materialized object -> message table.
#[derive(Debug, Clone, PartialEq)]
pub struct Grammar {
    pub kind: GrammarKind,
    pub geometry: Geometry,
    pub seed: u64,
    pub rng_id: String,
    pub params: GrammarParams,
    /// `N * c_len` symbols; row `n` is the message of `geometry.object_at(n)`.
    messages: Vec<usize>,
}

impl Grammar {
    /// Assemble and validate a grammar from parts.
    pub fn from_parts(
        kind: GrammarKind,
        geometry: Geometry,
        seed: u64,
        rng_id: String,
        params: GrammarParams,
        messages: Vec<usize>,
    ) -> Result<Self> {
        let g = Grammar {
            kind,
            geometry,
            seed,
            rng_id,
            params,
            messages,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry
            .validate()
            .map_err(|e| GrammarError::Validation(e.to_string()))?;
        if self.params.kind() != self.kind {
            return Err(GrammarError::Validation(format!(
                "params are for '{}' but kind is '{}'",
                self.params.kind(),
                self.kind
            )));
        }
        let n = self.geometry.num_objects();
        if self.messages.len() != n * self.geometry.c_len {
            return Err(GrammarError::Validation(format!(
                "table has {} symbols, expected {} objects x c_len {}",
                self.messages.len(),
                n,
                self.geometry.c_len
            )));
        }
        if let Some(s) = self.messages.iter().find(|&&s| s >= self.geometry.vocab_size) {
            return Err(GrammarError::Validation(format!(
                "symbol {s} outside vocabulary of size {}",
                self.geometry.vocab_size
            )));
        }
        if let Some(lex) = self.params.lexicon() {
            lex.validate(&self.geometry)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.geometry.num_objects()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Message symbols of object `index`.
    pub fn message(&self, index: usize) -> &[usize] {
        let c = self.geometry.c_len;
        &self.messages[index * c..(index + 1) * c]
    }

    pub fn object(&self, index: usize) -> ObjectVec {
        self.geometry.object_at(index)
    }

    /// Flat symbol table, row-major by object.
    pub fn symbols(&self) -> &[usize] {
        &self.messages
    }

    /// `(object, message)` pairs in object order.
    pub fn pairs(&self) -> impl Iterator<Item = (ObjectVec, &[usize])> + '_ {
        (0..self.len()).map(move |i| (self.object(i), self.message(i)))
    }

    pub fn encode(&self, object: &ObjectVec) -> Result<Message> {
        self.geometry.check_object(object)?;
        Ok(Message(self.message(self.geometry.index_of(object)).to_vec()))
    }

    /// Whether no two objects share a message.
    pub fn is_injective(&self) -> bool {
        table_is_injective(&self.messages, self.geometry.c_len)
    }
}

fn table_is_injective(messages: &[usize], c_len: usize) -> bool {
    let mut seen = HashSet::with_capacity(messages.len() / c_len.max(1));
    messages.chunks(c_len).all(|m| seen.insert(m))
}

/// Number of rows equal to some earlier row.
pub fn count_collisions(messages: &[usize], c_len: usize) -> usize {
    let mut seen = HashSet::with_capacity(messages.len() / c_len.max(1));
    messages.chunks(c_len).filter(|m| !seen.insert(*m)).count()
}

pub fn generate_grammar(kind: GrammarKind, geometry: Geometry, seed: u64) -> Result<Grammar> {
    generate_grammar_with(kind, geometry, seed, &GenerateOptions::default())
}

/// Generate a grammar; all randomness comes from streams of `seed`. Every
/// lexicon-based kind shares the concat lexicon of the same seed.
pub fn generate_grammar_with(
    kind: GrammarKind,
    geometry: Geometry,
    seed: u64,
    options: &GenerateOptions,
) -> Result<Grammar> {
    geometry.validate()?;
    let n = geometry
        .checked_num_objects()
        .filter(|&n| n <= MAX_OBJECTS)
        .ok_or_else(|| {
            GrammarError::Config(format!(
                "object space n_val^n_att = {}^{} exceeds the materialization limit {MAX_OBJECTS}",
                geometry.n_val, geometry.n_att
            ))
        })?;
    let c_len = geometry.c_len;

    if kind == GrammarKind::Hol {
        if !geometry.message_space_at_least(n) {
            return Err(GrammarError::Config(format!(
                "{n} objects cannot map injectively into {}^{} messages",
                geometry.vocab_size, c_len
            )));
        }
        let messages = holistic_table(&geometry, seed, n)?;
        return Grammar::from_parts(kind, geometry, seed, RNG_ID.into(), GrammarParams::Hol, messages);
    }

    let lexicon = match &options.lexicon {
        Some(l) => {
            l.validate(&geometry)?;
            l.clone()
        }
        None => sample_lexicon(&geometry, seed)?,
    };
    let concat: Vec<usize> = (0..n)
        .flat_map(|i| transform::encode_concat(&lexicon, &geometry.object_at(i)).0)
        .collect();
    let mut rng = stream(seed, Stream::Transform);

    let (params, messages) = match kind {
        GrammarKind::Concat => (GrammarParams::Concat { lexicon }, concat),
        GrammarKind::Perm => {
            let mut perm: Vec<usize> = (0..c_len).collect();
            perm.shuffle(&mut rng);
            let messages = concat
                .chunks(c_len)
                .flat_map(|m| perm.iter().map(move |&p| m[p]))
                .collect();
            (
                GrammarParams::Perm {
                    lexicon,
                    position_perm: perm,
                },
                messages,
            )
        }
        GrammarKind::Rot => {
            let messages = concat
                .chunks(c_len)
                .flat_map(|m| transform::encode_rot(&Message(m.to_vec()), geometry.vocab_size).0)
                .collect();
            (GrammarParams::Rot { lexicon }, messages)
        }
        GrammarKind::Proj => {
            let side = c_len * geometry.vocab_size;
            let mut best: Option<(ProjectionKernel, u64, Vec<usize>, usize)> = None;
            for attempt in 0..PROJ_KERNEL_BUDGET {
                let kernel = ProjectionKernel::sample_gaussian(side, seed, attempt);
                if !kernel.is_nonsingular() {
                    continue;
                }
                let messages: Vec<usize> = concat
                    .chunks(c_len)
                    .flat_map(|m| {
                        transform::encode_proj(&kernel, &Message(m.to_vec()), geometry.vocab_size).0
                    })
                    .collect();
                let collisions = count_collisions(&messages, c_len);
                if best.as_ref().is_none_or(|b| collisions < b.3) {
                    best = Some((kernel, attempt, messages, collisions));
                }
                if collisions == 0 {
                    break;
                }
            }
            let (kernel, kernel_attempt, messages, collisions) = match best {
                Some(b) if b.3 == 0 || options.proj_policy == ProjPolicy::Fewest => b,
                _ => {
                    return Err(GrammarError::Generation(format!(
                        "proj: no non-singular kernel giving an injective table within {PROJ_KERNEL_BUDGET} samples (seed {seed})"
                    )))
                }
            };
            (
                GrammarParams::Proj {
                    lexicon,
                    kernel,
                    vec_layout: VEC_LAYOUT.into(),
                    kernel_attempt,
                    collisions,
                },
                messages,
            )
        }
        GrammarKind::Shufdet => {
            let key = options.key_attribute;
            let word_orders: Vec<Vec<usize>> = (0..geometry.n_val)
                .map(|_| {
                    let mut p: Vec<usize> = (0..geometry.n_att).collect();
                    p.shuffle(&mut rng);
                    p
                })
                .collect();
            let key_idx = key.index(geometry.n_att);
            let messages = (0..n)
                .flat_map(|i| {
                    let o = geometry.object_at(i);
                    transform::encode_shufdet(&lexicon, &word_orders, key_idx, &o).0
                })
                .collect();
            (
                GrammarParams::Shufdet {
                    lexicon,
                    key_attribute: key,
                    word_orders,
                },
                messages,
            )
        }
        GrammarKind::Shuf => {
            let object_orders: Vec<Vec<usize>> = (0..n)
                .map(|_| {
                    let mut p: Vec<usize> = (0..geometry.n_att).collect();
                    p.shuffle(&mut rng);
                    p
                })
                .collect();
            let messages = object_orders
                .iter()
                .enumerate()
                .flat_map(|(i, order)| {
                    transform::encode_shuf(&lexicon, order, &geometry.object_at(i)).0
                })
                .collect();
            (
                GrammarParams::Shuf {
                    lexicon,
                    object_orders,
                },
                messages,
            )
        }
        GrammarKind::Hol => unreachable!("handled above"),
    };

    Grammar::from_parts(kind, geometry, seed, RNG_ID.into(), params, messages)
}

fn holistic_table(geometry: &Geometry, seed: u64, n: usize) -> Result<Vec<usize>> {
    let mut seen: HashSet<Vec<usize>> = HashSet::with_capacity(n);
    let mut out = Vec::with_capacity(n * geometry.c_len);
    for i in 0..n {
        let mut attempt = 0;
        loop {
            let m = transform::encode_hol(geometry, seed, i, attempt).0;
            if seen.insert(m.clone()) {
                out.extend_from_slice(&m);
                break;
            }
            attempt += 1;
            if attempt >= HOL_ATTEMPT_LIMIT {
                return Err(GrammarError::Generation(format!(
                    "hol: object {i} found no unused message in {HOL_ATTEMPT_LIMIT} draws (seed {seed})"
                )));
            }
        }
    }
    Ok(out)
}

/// Rebuild the table from stored parameters (used to cross-check loaded files).
pub fn rebuild_table(geometry: &Geometry, seed: u64, params: &GrammarParams) -> Result<Vec<usize>> {
    let n = geometry.num_objects();
    let objects = (0..n).map(|i| geometry.object_at(i));
    let out = match params {
        GrammarParams::Hol => holistic_table(geometry, seed, n)?,
        GrammarParams::Concat { lexicon } => objects
            .flat_map(|o| transform::encode_concat(lexicon, &o).0)
            .collect(),
        GrammarParams::Perm {
            lexicon,
            position_perm,
        } => objects
            .flat_map(|o| transform::encode_perm(position_perm, &transform::encode_concat(lexicon, &o)).0)
            .collect(),
        GrammarParams::Proj { lexicon, kernel, .. } => objects
            .flat_map(|o| {
                transform::encode_proj(kernel, &transform::encode_concat(lexicon, &o), geometry.vocab_size).0
            })
            .collect(),
        GrammarParams::Rot { lexicon } => objects
            .flat_map(|o| transform::encode_rot(&transform::encode_concat(lexicon, &o), geometry.vocab_size).0)
            .collect(),
        GrammarParams::Shufdet {
            lexicon,
            key_attribute,
            word_orders,
        } => {
            let key = key_attribute.index(geometry.n_att);
            objects
                .flat_map(|o| transform::encode_shufdet(lexicon, word_orders, key, &o).0)
                .collect()
        }
        GrammarParams::Shuf {
            lexicon,
            object_orders,
        } => objects
            .zip(object_orders)
            .flat_map(|(o, order)| transform::encode_shuf(lexicon, order, &o).0)
            .collect(),
    };
    Ok(out)
}
