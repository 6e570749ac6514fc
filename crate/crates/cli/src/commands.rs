use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use icy_bench::report::{
    aggregate, fixed_step_records, fixed_step_rows, render_table, run_records, write_aggregate, write_fixed_step,
    write_runs,
};
use icy_bench::{acquisition_ratios, fixed_step_accuracy, AcquisitionConfig, BenchError, Direction, LearnerSpec};
use icy_core::game::{build_game_dataset, save_game_dataset, GameDatasetName};
use icy_core::io::{save_grammar_with, SaveOptions};
use icy_core::{generate_grammar, load_grammar, GrammarError};
use icy_metrics::{compute_metrics, MetricConfig, TreConfig};
use icy_neural::{gradcheck_model, Arch, ModelConfig, TrainConfig};
use sha2::{Digest, Sha256};

use crate::args::*;
use crate::manifest::Manifest;
use crate::{CliError, Result};

struct Outcome {
    outputs: Vec<PathBuf>,
    /// Set when the command wrote its outputs but the result is a failure.
    failure: Option<String>,
}

impl Outcome {
    fn ok(outputs: Vec<PathBuf>) -> Self {
        Outcome { outputs, failure: None }
    }
}

fn failure(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Failure(e.into())
}

fn grammar_error(e: GrammarError) -> CliError {
    match e {
        GrammarError::Config(m) => CliError::Usage(m),
        other => failure(other),
    }
}

fn bench_error(e: BenchError) -> CliError {
    match e {
        BenchError::Config(m) => CliError::Usage(m),
        BenchError::Neural(icy_neural::NeuralError::Config(m)) => CliError::Usage(m),
        other => failure(other),
    }
}

fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir)
            .with_context(|| format!("creating {}", dir.display()))
            .map_err(CliError::Failure),
        _ => Ok(()),
    }
}

/// Run one command and write its manifest.
pub fn execute(mut cmd: Command) -> Result<()> {
    let outcome = match &mut cmd {
        Command::Replay(a) => return replay(a),
        Command::Gen(a) => gen(a)?,
        Command::Metrics(a) => metrics(a)?,
        Command::Bench(a) => bench(a, false)?,
        Command::Fixedstep(a) => bench(a, true)?,
        Command::Gradcheck(a) => gradcheck(a)?,
        Command::ExportGame(a) => export_game(a)?,
    };
    let path = Manifest::new(cmd, outcome.outputs).write()?;
    eprintln!("manifest: {}", path.display());
    match outcome.failure {
        Some(m) => Err(CliError::Failure(anyhow!(m))),
        None => Ok(()),
    }
}

fn replay(a: &ReplayArgs) -> Result<()> {
    let manifest = Manifest::load(&a.manifest)?;
    if manifest.rng_id != icy_core::rng::RNG_ID {
        return Err(CliError::Usage(format!(
            "manifest was written with rng id `{}`, this build provides `{}`",
            manifest.rng_id,
            icy_core::rng::RNG_ID
        )));
    }
    let mut cmd = manifest.invocation;
    if matches!(cmd, Command::Replay(_)) {
        return Err(CliError::Usage("a manifest cannot record a replay".into()));
    }
    if let Some(out) = &a.out {
        cmd.set_out(out.clone());
    }
    execute(cmd)
}

fn short_digest(bytes: &[u8]) -> String {
    let d = Sha256::digest(bytes);
    d.iter().take(8).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn gen(a: &mut GenArgs) -> Result<Outcome> {
    let geometry = a.geometry.resolve()?;
    a.geometry = GeometryArgs::explicit(&geometry);
    let grammar = generate_grammar(a.kind, geometry, a.seed).map_err(grammar_error)?;
    create_parent(&a.out)?;
    save_grammar_with(&grammar, &a.out, SaveOptions { letters: a.letters }).map_err(failure)?;
    let params = serde_json::to_vec(&grammar.params).map_err(failure)?;
    println!(
        "{} rows, params digest {} -> {}",
        grammar.len(),
        short_digest(&params),
        a.out.display()
    );
    Ok(Outcome::ok(vec![a.out.clone()]))
}

fn mean_path(out: &Path) -> PathBuf {
    let mut name = out.file_stem().unwrap_or_default().to_os_string();
    name.push(".mean.tsv");
    out.with_file_name(name)
}

fn metrics(a: &mut MetricsArgs) -> Result<Outcome> {
    let cfg = MetricConfig {
        pair_budget: a.pair_budget,
        pair_seed: a.pair_seed,
        normalize: a.normalize,
        exact_budget: a.exact_budget,
        tre: TreConfig {
            steps: a.tre_steps,
            seed: a.tre_seed,
            ..TreConfig::default()
        },
    };
    let mut grammars = Vec::new();
    for path in &a.grammars {
        let g = load_grammar(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        grammars.push(g);
    }

    let mut rows = String::from("kind\tseed\tgeometry\tmetric\tvalue\tconfig\n");
    // (kind, geometry, metric) -> (values, errors)
    let mut groups: BTreeMap<(String, String, String), (Vec<f64>, usize)> = BTreeMap::new();
    for g in &grammars {
        let geo = icy_bench::report::geometry_digest(&g.geometry);
        for row in compute_metrics(g, &a.metrics, &cfg) {
            let value = match &row.value {
                Ok(v) => v.to_string(),
                Err(e) => format!("error: {e}"),
            };
            let _ = writeln!(
                rows,
                "{}\t{}\t{geo}\t{}\t{value}\t{}",
                row.kind, row.seed, row.metric, row.config
            );
            let entry = groups
                .entry((row.kind.clone(), geo.clone(), row.metric.to_string()))
                .or_default();
            match row.value {
                Ok(v) => entry.0.push(v),
                Err(_) => entry.1 += 1,
            }
        }
    }

    let mut means = String::from("kind\tgeometry\tmetric\tfiles\terrors\tmean\n");
    for ((kind, geo, metric), (values, errors)) in &groups {
        let mean = if values.is_empty() {
            "NA".to_string()
        } else {
            (values.iter().sum::<f64>() / values.len() as f64).to_string()
        };
        let _ = writeln!(
            means,
            "{kind}\t{geo}\t{metric}\t{}\t{errors}\t{mean}",
            values.len() + errors
        );
    }

    create_parent(&a.out)?;
    let mean_out = mean_path(&a.out);
    fs::write(&a.out, rows).map_err(failure)?;
    fs::write(&mean_out, &means).map_err(failure)?;
    print!("{means}");
    Ok(Outcome::ok(vec![a.out.clone(), mean_out]))
}

fn learner_spec(a: &BenchArgs) -> Result<LearnerSpec> {
    if a.model.eq_ignore_ascii_case("hashtable") {
        let direction = match a.direction.to_ascii_lowercase().as_str() {
            "sender" => Direction::Sender,
            "receiver" => Direction::Receiver,
            other => return Err(CliError::Usage(format!("unknown direction `{other}`"))),
        };
        return Ok(LearnerSpec::Hashtable { direction });
    }
    let arch: Arch = a
        .model
        .parse()
        .map_err(|e| CliError::Usage(format!("unknown model `{}`: {e}", a.model)))?;
    let defaults = ModelConfig::new(arch, icy_core::Geometry::small(), 0);
    Ok(LearnerSpec::Neural {
        arch,
        emb_size: a.emb_size,
        layers: a.layers.unwrap_or(defaults.layers),
        inner_rnn: a.inner_rnn,
        dropout: a.dropout,
        train: TrainConfig {
            learning_rate: a.lr,
            clip_norm: a.clip,
        },
    })
}

fn bench(a: &mut BenchArgs, fixed: bool) -> Result<Outcome> {
    let geometry = a.geometry.resolve()?;
    a.geometry = GeometryArgs::explicit(&geometry);
    let spec = learner_spec(a)?;
    if let LearnerSpec::Neural { layers, .. } = &spec {
        a.layers = Some(*layers);
    }
    if a.grammars.is_empty() {
        return Err(CliError::Usage("no grammar kinds given".into()));
    }
    let acc_tgt = *a.acc_tgt.get_or_insert(if fixed { 0.99 } else { 0.8 });
    let cfg = AcquisitionConfig {
        acc_tgt,
        cap_ratio: a.cap_ratio,
        batch_size: a.batch_size,
        eval_interval: a.eval_interval,
        eval_sample: a.eval_sample,
        max_steps_absolute: a.max_steps,
        seeds: a.seeds.clone(),
        record_curves: false,
    };
    cfg.validate().map_err(bench_error)?;
    fs::create_dir_all(&a.out)
        .with_context(|| format!("creating {}", a.out.display()))
        .map_err(CliError::Failure)?;

    let pool = icy_bench::thread_pool();
    let agg_path = a.out.join("aggregate.tsv");
    if fixed {
        let results = pool
            .install(|| fixed_step_accuracy(&spec, &a.grammars, geometry, &cfg))
            .map_err(bench_error)?;
        let runs_path = a.out.join("fixedstep.tsv");
        write_fixed_step(&runs_path, &fixed_step_records(&results, &geometry)).map_err(bench_error)?;
        let rows = fixed_step_rows(&results).map_err(bench_error)?;
        write_aggregate(&agg_path, &rows).map_err(bench_error)?;
        print!("{}", render_table(&rows));
        Ok(Outcome::ok(vec![runs_path, agg_path]))
    } else {
        let results = pool
            .install(|| acquisition_ratios(&spec, &a.grammars, geometry, &cfg))
            .map_err(bench_error)?;
        let runs_path = a.out.join("runs.tsv");
        write_runs(&runs_path, &run_records(&results)).map_err(bench_error)?;
        let rows = aggregate(&results, cfg.cap_ratio).map_err(bench_error)?;
        write_aggregate(&agg_path, &rows).map_err(bench_error)?;
        print!("{}", render_table(&rows));
        Ok(Outcome::ok(vec![runs_path, agg_path]))
    }
}

fn gradcheck(a: &mut GradcheckArgs) -> Result<Outcome> {
    if a.archs.is_empty() {
        return Err(CliError::Usage("no architectures given".into()));
    }
    if a.inner_rnn.is_empty() {
        return Err(CliError::Usage("no inner cells given".into()));
    }
    let fault = a.corrupt_tanh.then_some(icy_autograd::Fault::TanhBackward);
    let geometry = icy_neural::gradcheck::tiny_geometry();
    let mut report = String::from("model\tmax_rel_error\tentries\tresult\n");
    let mut failed = Vec::new();
    for &arch in &a.archs {
        let hu = matches!(arch, Arch::HusendA | Arch::HusendZ | Arch::RecvHu);
        let cells = if hu {
            a.inner_rnn.clone()
        } else {
            vec![icy_neural::CellKind::Rnn]
        };
        for cell in cells {
            let cfg = ModelConfig::new(arch, geometry, 3)
                .with_emb_size(a.emb_size)
                .with_inner_rnn(cell);
            let label = if hu { format!("{arch}:{cell}") } else { arch.to_string() };
            let r = gradcheck_model(cfg, a.entries, fault).map_err(|e| CliError::Usage(e.to_string()))?;
            let pass = r.passes(a.tolerance);
            if !pass {
                failed.push(label.clone());
            }
            let line = format!(
                "{label}\t{:e}\t{}\t{}",
                r.max_rel_error,
                r.entries_checked,
                if pass { "pass" } else { "FAIL" }
            );
            println!("{line}");
            report.push_str(&line);
            report.push('\n');
        }
    }
    create_parent(&a.out)?;
    fs::write(&a.out, report).map_err(failure)?;
    let failure = (!failed.is_empty()).then(|| {
        format!(
            "gradient check failed at tolerance {}: {}",
            a.tolerance,
            failed.join(", ")
        )
    });
    Ok(Outcome {
        outputs: vec![a.out.clone()],
        failure,
    })
}

fn export_game(a: &mut ExportGameArgs) -> Result<Outcome> {
    let dataset: GameDatasetName = a.dataset.parse().map_err(grammar_error)?;
    let data = build_game_dataset(dataset, a.kind, a.seed, a.holdout).map_err(grammar_error)?;
    create_parent(&a.out)?;
    save_game_dataset(&data, &a.out).map_err(failure)?;
    println!(
        "{} items, {} holdout, codes of length {} -> {}",
        data.items.len(),
        data.holdout_items().count(),
        data.code_length,
        a.out.display()
    );
    Ok(Outcome::ok(vec![a.out.clone()]))
}
