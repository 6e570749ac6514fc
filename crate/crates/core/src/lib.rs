//! Object/message data model and the artificial grammar family.
//!
//! A [`Grammar`] maps every object of a [`Geometry`] to a fixed-length
//! message. Seven kinds are generated: the concatenative baseline and six
//! transformations of it (`hol`, `perm`, `proj`, `rot`, `shufdet`, `shuf`).
//! Generation is a pure function of `(kind, geometry, seed)`.

pub mod error;
pub mod game;
pub mod geometry;
pub mod grammar;
pub mod io;
pub mod lexicon;
pub mod rng;
pub mod transform;

pub use error::{GrammarError, Result};
pub use geometry::{object_space, Geometry, Message, ObjectVec};
pub use grammar::{
    generate_grammar, generate_grammar_with, GenerateOptions, Grammar, GrammarKind, GrammarParams,
    KeyAttribute, ProjPolicy,
};
pub use io::{load_grammar, save_grammar};
pub use lexicon::{sample_lexicon, Lexicon};
pub use transform::ProjectionKernel;

/// Render symbols as letters (`0 -> 'a'`), the style used in printed grammar dumps.
pub fn render_letters(symbols: &[usize]) -> String {
    symbols
        .iter()
        .map(|&s| {
            if s < 26 {
                (b'a' + s as u8) as char
            } else {
                '?'
            }
        })
        .collect()
}

/// Inverse of [`render_letters`]; fails on anything outside `a..=z`.
pub fn parse_letters(text: &str) -> Result<Vec<usize>> {
    text.chars()
        .map(|c| {
            if c.is_ascii_lowercase() {
                Ok((c as u8 - b'a') as usize)
            } else {
                Err(GrammarError::Validation(format!("not a lowercase letter: {c:?}")))
            }
        })
        .collect()
}
