//! Result files: one row per run, plus an aggregated table whose cells read
//! `mean ± ci95` or `> cap`.

use std::fmt::Write as _;
use std::path::Path;

use icy_core::{Geometry, GrammarKind};
use serde::{Deserialize, Serialize};

use crate::acquire::{AcquisitionResult, FixedStepResult};
use crate::{BenchError, Result};

pub fn geometry_digest(g: &Geometry) -> String {
    format!("{}x{}x{}x{}", g.n_att, g.n_val, g.c_len, g.vocab_size)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub arch: String,
    pub grammar: String,
    pub seed: u64,
    pub geometry: String,
    pub steps: u64,
    pub ratio: f64,
    pub capped: bool,
    pub wall_seconds: f64,
}

pub fn run_records(results: &[AcquisitionResult]) -> Vec<RunRecord> {
    results
        .iter()
        .flat_map(|r| {
            r.runs.iter().map(move |run| RunRecord {
                arch: r.arch.clone(),
                grammar: r.kind.to_string(),
                seed: run.seed,
                geometry: geometry_digest(&r.geometry),
                steps: run.steps,
                ratio: run.ratio,
                capped: run.capped,
                wall_seconds: run.wall_seconds,
            })
        })
        .collect()
}

fn tsv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    Ok(csv::WriterBuilder::new().delimiter(b'\t').from_path(path)?)
}

fn tsv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    Ok(csv::ReaderBuilder::new().delimiter(b'\t').from_path(path)?)
}

pub fn write_runs(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut w = tsv_writer(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_runs(path: &Path) -> Result<Vec<RunRecord>> {
    tsv_reader(path)?
        .deserialize()
        .map(|r| r.map_err(BenchError::from))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Value { mean: f64, ci95: f64 },
    Capped { cap: f64 },
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Value { mean, ci95 } => format!("{mean} ± {ci95}"),
            Cell::Capped { cap } => format!("> {cap}"),
        }
    }

    /// Two-decimal form for terminal tables.
    pub fn render_short(&self) -> String {
        match self {
            Cell::Value { mean, ci95 } => format!("{mean:.2} ± {ci95:.2}"),
            Cell::Capped { cap } => format!("> {cap}"),
        }
    }

    pub fn parse(s: &str) -> Result<Cell> {
        let bad = || BenchError::Parse(format!("bad cell `{s}`"));
        let s = s.trim();
        if let Some(cap) = s.strip_prefix('>') {
            return Ok(Cell::Capped {
                cap: cap.trim().parse().map_err(|_| bad())?,
            });
        }
        let (m, c) = s.split_once('±').ok_or_else(bad)?;
        Ok(Cell::Value {
            mean: m.trim().parse().map_err(|_| bad())?,
            ci95: c.trim().parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub arch: String,
    pub params: Option<usize>,
    pub cells: Vec<(GrammarKind, Cell)>,
}

/// One row per arch; columns in the order kinds first appear.
pub fn aggregate(results: &[AcquisitionResult], cap: f64) -> Result<Vec<AggregateRow>> {
    if results.is_empty() {
        return Err(BenchError::Config("no results to report".into()));
    }
    let mut rows: Vec<AggregateRow> = Vec::new();
    for r in results {
        let cell = if r.all_capped() {
            Cell::Capped { cap }
        } else {
            Cell::Value {
                mean: r.mean,
                ci95: r.ci95,
            }
        };
        match rows.iter_mut().find(|row| row.arch == r.arch) {
            Some(row) => row.cells.push((r.kind, cell)),
            None => rows.push(AggregateRow {
                arch: r.arch.clone(),
                params: r.params,
                cells: vec![(r.kind, cell)],
            }),
        }
    }
    Ok(rows)
}

fn columns(rows: &[AggregateRow]) -> Vec<GrammarKind> {
    let mut kinds = Vec::new();
    for row in rows {
        for (k, _) in &row.cells {
            if !kinds.contains(k) {
                kinds.push(*k);
            }
        }
    }
    kinds
}

fn params_text(p: Option<usize>) -> String {
    p.map_or_else(|| "O(N)".to_string(), |p| p.to_string())
}

pub fn write_aggregate(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    if rows.is_empty() {
        return Err(BenchError::Config("no results to report".into()));
    }
    let kinds = columns(rows);
    let mut w = tsv_writer(path)?;
    let mut header = vec!["arch".to_string(), "params".to_string()];
    header.extend(kinds.iter().map(|k| k.to_string()));
    w.write_record(&header)?;
    for row in rows {
        let mut rec = vec![row.arch.clone(), params_text(row.params)];
        for k in &kinds {
            rec.push(
                row.cells
                    .iter()
                    .find(|(c, _)| c == k)
                    .map_or_else(String::new, |(_, cell)| cell.render()),
            );
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_aggregate(path: &Path) -> Result<Vec<AggregateRow>> {
    let mut r = tsv_reader(path)?;
    let header = r.headers()?.clone();
    let kinds: Vec<GrammarKind> = header
        .iter()
        .skip(2)
        .map(|h| h.parse().map_err(|_| BenchError::Parse(format!("unknown grammar column `{h}`"))))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let params = match &rec[1] {
            "O(N)" => None,
            p => Some(p.parse().map_err(|_| BenchError::Parse(format!("bad params `{p}`")))?),
        };
        let mut cells = Vec::new();
        for (k, text) in kinds.iter().zip(rec.iter().skip(2)) {
            if !text.is_empty() {
                cells.push((*k, Cell::parse(text)?));
            }
        }
        rows.push(AggregateRow {
            arch: rec[0].to_string(),
            params,
            cells,
        });
    }
    Ok(rows)
}

/// Aligned plain-text table for terminals.
pub fn render_table(rows: &[AggregateRow]) -> String {
    let kinds = columns(rows);
    let mut grid: Vec<Vec<String>> = vec![{
        let mut h = vec!["Model".to_string(), "Params".to_string()];
        h.extend(kinds.iter().map(|k| k.to_string()));
        h
    }];
    for row in rows {
        let mut line = vec![row.arch.clone(), params_text(row.params)];
        for k in &kinds {
            line.push(
                row.cells
                    .iter()
                    .find(|(c, _)| c == k)
                    .map_or_else(|| "-".to_string(), |(_, cell)| cell.render_short()),
            );
        }
        grid.push(line);
    }
    let widths: Vec<usize> = (0..grid[0].len())
        .map(|c| grid.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for line in &grid {
        for (c, cell) in line.iter().enumerate() {
            let pad = widths[c] - cell.chars().count();
            if c == 0 {
                let _ = write!(out, "{cell}{}", " ".repeat(pad));
            } else {
                let _ = write!(out, "  {}{cell}", " ".repeat(pad));
            }
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedStepRecord {
    pub arch: String,
    pub grammar: String,
    pub seed: u64,
    pub geometry: String,
    pub steps: u64,
    pub accuracy: f64,
}

pub fn fixed_step_records(results: &[FixedStepResult], geometry: &Geometry) -> Vec<FixedStepRecord> {
    results
        .iter()
        .flat_map(|r| {
            (0..r.seeds.len()).map(move |i| FixedStepRecord {
                arch: r.arch.clone(),
                grammar: r.kind.to_string(),
                seed: r.seeds[i],
                geometry: geometry_digest(geometry),
                steps: r.steps[i],
                accuracy: r.accuracies[i],
            })
        })
        .collect()
}

pub fn write_fixed_step(path: &Path, records: &[FixedStepRecord]) -> Result<()> {
    let mut w = tsv_writer(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn fixed_step_rows(results: &[FixedStepResult]) -> Result<Vec<AggregateRow>> {
    if results.is_empty() {
        return Err(BenchError::Config("no results to report".into()));
    }
    let mut rows: Vec<AggregateRow> = Vec::new();
    for r in results {
        let cell = Cell::Value {
            mean: r.mean,
            ci95: r.ci95,
        };
        match rows.iter_mut().find(|row| row.arch == r.arch) {
            Some(row) => row.cells.push((r.kind, cell)),
            None => rows.push(AggregateRow {
                arch: r.arch.clone(),
                params: r.params,
                cells: vec![(r.kind, cell)],
            }),
        }
    }
    Ok(rows)
}
