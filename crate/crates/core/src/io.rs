//! Grammar file format.
//!
//! A single JSON document:
//!
//! ```text
//! {
//!   "format_version": 1,
//!   "kind": "perm",
//!   "geometry": {"n_att": 2, "n_val": 3, "c_len": 4, "vocab_size": 4},
//!   "seed": 1,
//!   "rng_id": "chacha8-stream/rand_chacha-0.9",
//!   "params": {"kind": "perm", "lexicon": {...}, "position_perm": [...]},
//!   "table": [
//!     [[0,0],[1,3,0,2]],
//!     [[0,1],[1,3,2,2],"bdcc"],
//!     ...
//!   ]
//! }
//! ```
//!
//! Table rows are sorted by object order, one per line. The optional third
//! element is a letter rendering (`0 -> 'a'`) and is ignored on load.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::Deserialize;

use crate::error::{GrammarError, Result};
use crate::geometry::Geometry;
use crate::grammar::{Grammar, GrammarKind, GrammarParams};
use crate::render_letters;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, Default)]
pub struct SaveOptions {
    /// Append a letter rendering to each table row.
    pub letters: bool,
}

pub fn save_grammar(grammar: &Grammar, path: impl AsRef<Path>) -> Result<()> {
    save_grammar_with(grammar, path, SaveOptions::default())
}

pub fn save_grammar_with(grammar: &Grammar, path: impl AsRef<Path>, opts: SaveOptions) -> Result<()> {
    let file = File::create(path.as_ref())?;
    let mut w = BufWriter::new(file);
    write_grammar(grammar, &mut w, opts)?;
    w.flush()?;
    Ok(())
}

fn json<T: serde::Serialize + ?Sized>(value: &T) -> Result<String> {
    serde_json::to_string(value).map_err(|e| GrammarError::Validation(e.to_string()))
}

pub fn write_grammar(grammar: &Grammar, w: &mut impl Write, opts: SaveOptions) -> Result<()> {
    writeln!(w, "{{")?;
    writeln!(w, "  \"format_version\": {FORMAT_VERSION},")?;
    writeln!(w, "  \"kind\": {},", json(&grammar.kind)?)?;
    writeln!(w, "  \"geometry\": {},", json(&grammar.geometry)?)?;
    writeln!(w, "  \"seed\": {},", grammar.seed)?;
    writeln!(w, "  \"rng_id\": {},", json(&grammar.rng_id)?)?;
    writeln!(w, "  \"params\": {},", json(&grammar.params)?)?;
    writeln!(w, "  \"table\": [")?;
    let n = grammar.len();
    let mut obj = vec![0; grammar.geometry.n_att];
    for i in 0..n {
        grammar.geometry.object_values_into(i, &mut obj);
        let m = grammar.message(i);
        let sep = if i + 1 == n { "" } else { "," };
        if opts.letters {
            writeln!(w, "    [{},{},{}]{sep}", json(&obj)?, json(m)?, json(&render_letters(m))?)?;
        } else {
            writeln!(w, "    [{},{}]{sep}", json(&obj)?, json(m)?)?;
        }
    }
    writeln!(w, "  ]")?;
    writeln!(w, "}}")?;
    Ok(())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Row {
    Plain(Vec<usize>, Vec<usize>),
    Lettered(Vec<usize>, Vec<usize>, #[allow(dead_code)] String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GrammarFile {
    format_version: u32,
    kind: GrammarKind,
    geometry: Geometry,
    seed: u64,
    rng_id: String,
    params: GrammarParams,
    table: Vec<Row>,
}

pub fn load_grammar(path: impl AsRef<Path>) -> Result<Grammar> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let doc: GrammarFile =
        serde_json::from_reader(BufReader::new(file)).map_err(|e| GrammarError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
    from_document(doc)
}

pub fn parse_grammar(text: &str) -> Result<Grammar> {
    let doc: GrammarFile = serde_json::from_str(text).map_err(|e| GrammarError::Parse {
        path: "<string>".into(),
        message: e.to_string(),
    })?;
    from_document(doc)
}

fn from_document(doc: GrammarFile) -> Result<Grammar> {
    if doc.format_version != FORMAT_VERSION {
        return Err(GrammarError::Validation(format!(
            "unsupported format_version {} (expected {FORMAT_VERSION})",
            doc.format_version
        )));
    }
    let geo = doc.geometry;
    geo.validate()
        .map_err(|e| GrammarError::Validation(format!("geometry: {e}")))?;
    let n = geo.num_objects();
    if doc.table.len() != n {
        return Err(GrammarError::Validation(format!(
            "table has {} rows but the object space has {n} objects",
            doc.table.len()
        )));
    }
    let mut messages = Vec::with_capacity(n * geo.c_len);
    let mut expected = vec![0; geo.n_att];
    for (i, row) in doc.table.into_iter().enumerate() {
        let (obj, msg) = match row {
            Row::Plain(o, m) | Row::Lettered(o, m, _) => (o, m),
        };
        geo.object_values_into(i, &mut expected);
        if obj != expected {
            return Err(GrammarError::Validation(format!(
                "table row {i}: object {obj:?}, expected {expected:?} (rows must cover the space in order)"
            )));
        }
        geo.check_message(&msg)
            .map_err(|e| GrammarError::Validation(format!("table row {i}: {e}")))?;
        messages.extend_from_slice(&msg);
    }
    Grammar::from_parts(doc.kind, geo, doc.seed, doc.rng_id, doc.params, messages)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::generate_grammar;

    fn to_string(g: &Grammar, letters: bool) -> String {
        let mut buf = Vec::new();
        write_grammar(g, &mut buf, SaveOptions { letters }).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn round_trip_all_kinds() {
        for kind in GrammarKind::ALL {
            let g = generate_grammar(kind, Geometry::small(), 3).unwrap();
            let text = to_string(&g, false);
            assert_eq!(parse_grammar(&text).unwrap(), g, "{kind}");
            let lettered = to_string(&g, true);
            assert_eq!(parse_grammar(&lettered).unwrap(), g, "{kind}");
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.json");
        let g = generate_grammar(GrammarKind::Proj, Geometry::small(), 1).unwrap();
        save_grammar(&g, &path).unwrap();
        assert_eq!(load_grammar(&path).unwrap(), g);
    }

    #[test]
    fn wrong_message_length_is_validation_error() {
        let g = generate_grammar(GrammarKind::Concat, Geometry::small(), 1).unwrap();
        let text = to_string(&g, false);
        let m = json(g.message(4)).unwrap();
        let short = json(&g.message(4)[..3]).unwrap();
        let bad = text.replacen(&format!("[1,1],{m}"), &format!("[1,1],{short}"), 1);
        assert_ne!(bad, text);
        let err = parse_grammar(&bad).unwrap_err();
        assert!(matches!(err, GrammarError::Validation(ref s) if s.contains("row 4")), "{err}");
    }

    #[test]
    fn missing_object_is_validation_error() {
        let g = generate_grammar(GrammarKind::Concat, Geometry::small(), 1).unwrap();
        let text = to_string(&g, false);
        let lines: Vec<&str> = text.lines().collect();
        // drop the row for object (0,1)
        let kept: Vec<&str> = lines
            .iter()
            .filter(|l| !l.trim_start().starts_with("[[0,1],"))
            .copied()
            .collect();
        let err = parse_grammar(&kept.join("\n")).unwrap_err();
        assert!(matches!(err, GrammarError::Validation(_)), "{err}");
    }

    #[test]
    fn malformed_json_is_parse_error_with_position() {
        let err = parse_grammar("{\n  \"format_version\": 1,\n  \"kind\": 7\n}").unwrap_err();
        match err {
            GrammarError::Parse { message, .. } => assert!(message.contains("line 3"), "{message}"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn geometry_mismatch_is_validation_error() {
        let g = generate_grammar(GrammarKind::Concat, Geometry::small(), 1).unwrap();
        let text = to_string(&g, false).replace("\"c_len\":4", "\"c_len\":6");
        assert!(matches!(parse_grammar(&text), Err(GrammarError::Validation(_))));
    }
}
