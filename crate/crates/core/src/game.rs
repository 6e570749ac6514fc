//! Datasets for the human "Secret Spy Codes" game.
//!
//! Objects are (color, shape) pairs, color first. The code for each item is
//! produced by the requested grammar transform and rendered as letters.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{GrammarError, Result};
use crate::geometry::Geometry;
use crate::grammar::{generate_grammar_with, GenerateOptions, Grammar, GrammarKind};
use crate::lexicon::{sample_lexicon, Lexicon};
use crate::rng::{stream, Stream};
use crate::{parse_letters, render_letters};

pub const GAME_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_HOLDOUT: usize = 3;

pub const ENG_COLORS: [&str; 5] = ["red", "blu", "grn", "yel", "pur"];
pub const ENG_SHAPES: [&str; 5] = ["cir", "tri", "squ", "sta", "pen"];
const ENG_COLOR_NAMES: [&str; 5] = ["red", "blue", "green", "yellow", "purple"];
const ENG_SHAPE_NAMES: [&str; 5] = ["circle", "triangle", "square", "star", "pentagon"];
const SYNTH_COLOR_NAMES: [&str; 3] = ["red", "blue", "green"];
const SYNTH_SHAPE_NAMES: [&str; 3] = ["circle", "triangle", "square"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GameDatasetName {
    Eng,
    Synth,
}

impl GameDatasetName {
    pub fn geometry(self) -> Geometry {
        match self {
            GameDatasetName::Eng => Geometry::new(2, 5, 6, 26).expect("valid"),
            GameDatasetName::Synth => Geometry::new(2, 3, 4, 4).expect("valid"),
        }
    }
}

impl FromStr for GameDatasetName {
    type Err = GrammarError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "eng" => Ok(GameDatasetName::Eng),
            "synth" => Ok(GameDatasetName::Synth),
            other => Err(GrammarError::Config(format!(
                "unknown game dataset {other:?} (expected eng or synth)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameItem {
    pub color: String,
    pub shape: String,
    pub code: String,
    pub holdout: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameDataset {
    pub format_version: u32,
    pub dataset: GameDatasetName,
    pub grammar_kind: GrammarKind,
    pub seed: u64,
    /// Always `["color", "shape"]`.
    pub attribute_order: Vec<String>,
    pub colors: Vec<String>,
    pub shapes: Vec<String>,
    /// Letter word for each color and shape, before any transform.
    pub color_words: Vec<String>,
    pub shape_words: Vec<String>,
    pub code_length: usize,
    pub items: Vec<GameItem>,
}

impl GameDataset {
    pub fn holdout_items(&self) -> impl Iterator<Item = &GameItem> {
        self.items.iter().filter(|i| i.holdout)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(GrammarError::Validation(m));
        if self.format_version != GAME_FORMAT_VERSION {
            return invalid(format!("unsupported format_version {}", self.format_version));
        }
        if self.items.len() != self.colors.len() * self.shapes.len() {
            return invalid(format!(
                "{} items for {}x{} combinations",
                self.items.len(),
                self.colors.len(),
                self.shapes.len()
            ));
        }
        if let Some(bad) = self.items.iter().find(|i| i.code.len() != self.code_length) {
            return invalid(format!("code {:?} is not of length {}", bad.code, self.code_length));
        }
        let holdouts = self.holdout_items().count();
        if holdouts >= self.items.len() {
            return invalid("every item is a holdout".into());
        }
        Ok(())
    }
}

fn eng_lexicon() -> Lexicon {
    let words = |list: &[&str]| -> Vec<Vec<usize>> {
        list.iter()
            .map(|w| parse_letters(w).expect("lowercase constant"))
            .collect()
    };
    Lexicon {
        words: vec![words(&ENG_COLORS), words(&ENG_SHAPES)],
    }
}

/// Build a game dataset: transform the codes with `kind` and mark `holdout`
/// seeded combinations as unavailable for training.
pub fn build_game_dataset(
    dataset: GameDatasetName,
    kind: GrammarKind,
    seed: u64,
    holdout: usize,
) -> Result<GameDataset> {
    let geometry = dataset.geometry();
    let n = geometry.num_objects();
    if holdout >= n {
        return Err(GrammarError::Config(format!(
            "holdout count {holdout} must be below the {n} combinations"
        )));
    }
    let (lexicon, colors, shapes): (Lexicon, &[&str], &[&str]) = match dataset {
        GameDatasetName::Eng => (eng_lexicon(), &ENG_COLOR_NAMES, &ENG_SHAPE_NAMES),
        GameDatasetName::Synth => (
            sample_lexicon(&geometry, seed)?,
            &SYNTH_COLOR_NAMES,
            &SYNTH_SHAPE_NAMES,
        ),
    };
    let opts = GenerateOptions {
        lexicon: Some(lexicon.clone()),
        ..GenerateOptions::default()
    };
    let grammar: Grammar = generate_grammar_with(kind, geometry, seed, &opts)?;

    let mut rng = stream(seed, Stream::Holdout);
    let mut held = vec![false; n];
    for i in index::sample(&mut rng, n, holdout) {
        held[i] = true;
    }

    let items = (0..n)
        .map(|i| {
            let obj = grammar.object(i);
            GameItem {
                color: colors[obj.0[0]].to_string(),
                shape: shapes[obj.0[1]].to_string(),
                code: render_letters(grammar.message(i)),
                holdout: held[i],
            }
        })
        .collect();
    let word_strings = |a: usize| lexicon.words[a].iter().map(|w| render_letters(w)).collect();
    let out = GameDataset {
        format_version: GAME_FORMAT_VERSION,
        dataset,
        grammar_kind: kind,
        seed,
        attribute_order: vec!["color".into(), "shape".into()],
        colors: colors.iter().map(|s| s.to_string()).collect(),
        shapes: shapes.iter().map(|s| s.to_string()).collect(),
        color_words: word_strings(0),
        shape_words: word_strings(1),
        code_length: geometry.c_len,
        items,
    };
    out.validate()?;
    Ok(out)
}

pub fn save_game_dataset(data: &GameDataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path.as_ref())?);
    serde_json::to_writer_pretty(&mut w, data)
        .map_err(|e| GrammarError::Validation(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn load_game_dataset(path: impl AsRef<Path>) -> Result<GameDataset> {
    let path = path.as_ref();
    let data: GameDataset = serde_json::from_reader(BufReader::new(File::open(path)?))
        .map_err(|e| GrammarError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
    data.validate()?;
    Ok(data)
}
