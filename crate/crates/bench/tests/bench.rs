use icy_bench::report::*;
use icy_bench::*;
use icy_core::{generate_grammar, Geometry, GrammarKind};
use icy_neural::Arch;

fn quick() -> AcquisitionConfig {
    AcquisitionConfig {
        seeds: vec![0, 1, 2],
        ..AcquisitionConfig::default()
    }
}

fn steps(results: &[AcquisitionResult]) -> Vec<Vec<u64>> {
    results.iter().map(|r| r.runs.iter().map(|x| x.steps).collect()).collect()
}

#[test]
fn vacuous_target_returns_immediately() {
    let g = generate_grammar(GrammarKind::Hol, Geometry::small(), 0).unwrap();
    let cfg = AcquisitionConfig {
        acc_tgt: 0.0,
        ..quick()
    };
    let mut learner = LearnerSpec::neural(Arch::Fc1l).build(g.geometry, 0).unwrap();
    let a = train_until(learner.as_mut(), &g, Direction::Sender, &cfg, RunSeeds::derive(0), 1000).unwrap();
    assert_eq!((a.steps, a.reached), (0, true));
}

#[test]
fn hashtable_scores_before_inserting() {
    let g = generate_grammar(GrammarKind::Rot, Geometry::small(), 1).unwrap();
    let task = Task::from_grammar(&g, Direction::Sender);
    let mut h = Hashtable::new();
    let first = h.train_step(&task.inputs, &task.targets).unwrap();
    let zeros = task.targets.iter().flatten().filter(|&&s| s == 0).count();
    assert_eq!(first, zeros as f64 / (task.len() * g.geometry.c_len) as f64);
    assert_eq!(h.len(), task.len());
    assert_eq!(h.evaluate(&task.inputs, &task.targets).unwrap(), 1.0);
    assert_eq!(h.predict(&task.inputs[3], g.geometry.c_len), task.targets[3]);
}

#[test]
fn hashtable_converges_after_an_epoch_of_distinct_batches() {
    let g = generate_grammar(GrammarKind::Hol, Geometry::small(), 2).unwrap();
    let task = Task::from_grammar(&g, Direction::Receiver);
    let mut h = Hashtable::new();
    for chunk in (0..task.len()).collect::<Vec<_>>().chunks(4) {
        let x: Vec<_> = chunk.iter().map(|&i| task.inputs[i].clone()).collect();
        let y: Vec<_> = chunk.iter().map(|&i| task.targets[i].clone()).collect();
        h.train_step(&x, &y).unwrap();
    }
    assert_eq!(h.evaluate(&task.inputs, &task.targets).unwrap(), 1.0);
}

#[test]
fn hashtable_ratios_are_near_one() {
    let cfg = quick();
    let kinds = [GrammarKind::Concat, GrammarKind::Perm, GrammarKind::Rot, GrammarKind::Hol];
    let results = acquisition_ratios(&LearnerSpec::hashtable(), &kinds, Geometry::reduced(), &cfg).unwrap();
    for r in &results {
        assert!((0.7..=1.3).contains(&r.mean), "{} {}", r.kind, r.mean);
    }
}

#[test]
fn lstm_sender_learns_concat_on_every_seed() {
    let cfg = AcquisitionConfig {
        max_steps_absolute: 5000,
        ..AcquisitionConfig::default()
    };
    let results = acquisition_ratios(
        &LearnerSpec::neural(Arch::LstmA),
        &[GrammarKind::Concat],
        Geometry::small(),
        &cfg,
    )
    .unwrap();
    assert_eq!(results[0].runs.len(), 5);
    assert!(results[0].runs.iter().all(|r| !r.capped && r.steps < 5000));
}

#[test]
fn runs_are_deterministic_and_thread_count_independent() {
    let kinds = [GrammarKind::Concat, GrammarKind::Shufdet, GrammarKind::Proj];
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| acquisition_ratios(&LearnerSpec::neural(Arch::Fc1l), &kinds, Geometry::small(), &quick()))
            .unwrap()
    };
    let a = run(1);
    let b = run(3);
    assert_eq!(steps(&a), steps(&b));
    assert_eq!(
        a.iter().map(|r| r.mean).collect::<Vec<_>>(),
        b.iter().map(|r| r.mean).collect::<Vec<_>>()
    );
}

#[test]
fn raising_the_target_never_decreases_steps() {
    let g = generate_grammar(GrammarKind::Shufdet, Geometry::small(), 3).unwrap();
    let mut last = 0;
    for tgt in [0.3, 0.5, 0.7, 0.9, 0.95] {
        let cfg = AcquisitionConfig {
            acc_tgt: tgt,
            ..quick()
        };
        let mut learner = LearnerSpec::neural(Arch::Fc2l).build(g.geometry, 5).unwrap();
        let a = train_until(learner.as_mut(), &g, Direction::Sender, &cfg, RunSeeds::derive(5), 20_000).unwrap();
        assert!(a.reached);
        assert!(a.steps >= last, "{tgt}: {} < {last}", a.steps);
        last = a.steps;
    }
}

#[test]
fn capped_runs_report_the_cap_exactly() {
    let cfg = AcquisitionConfig {
        cap_ratio: 1.5,
        acc_tgt: 0.95,
        ..quick()
    };
    let results = acquisition_ratios(
        &LearnerSpec::neural(Arch::Fc1l),
        &[GrammarKind::Concat, GrammarKind::Hol],
        Geometry::small(),
        &cfg,
    )
    .unwrap();
    let hol = &results[1];
    for (run, concat) in hol.runs.iter().zip(&results[0].runs) {
        assert!(run.ratio <= cfg.cap_ratio);
        if run.capped {
            assert_eq!(run.ratio, cfg.cap_ratio);
            assert_eq!(run.steps, (1.5 * concat.steps as f64).floor() as u64);
        }
    }
    assert!(hol.all_capped());
    let rows = aggregate(&results, cfg.cap_ratio).unwrap();
    assert_eq!(rows[0].cells[1].1, Cell::Capped { cap: 1.5 });
}

#[test]
fn concat_failure_is_a_benchmark_error() {
    let cfg = AcquisitionConfig {
        acc_tgt: 1.0,
        max_steps_absolute: 20,
        ..quick()
    };
    let err = acquisition_ratios(&LearnerSpec::neural(Arch::Fc1l), &[GrammarKind::Perm], Geometry::reduced(), &cfg)
        .unwrap_err();
    assert!(matches!(err, BenchError::ConcatDidNotConverge { seed: 0, .. }), "{err}");
}

#[test]
fn fixed_step_reevaluates_concat_at_target() {
    let cfg = quick();
    let results = fixed_step_accuracy(
        &LearnerSpec::neural(Arch::Fc1l),
        &[GrammarKind::Concat, GrammarKind::Hol],
        Geometry::small(),
        &cfg,
    )
    .unwrap();
    assert!(results[0].accuracies.iter().all(|&a| a >= cfg.acc_tgt));
    assert_eq!(results[0].steps, results[1].steps);
}

#[test]
fn config_validation() {
    let bad = [
        AcquisitionConfig {
            acc_tgt: 1.5,
            ..quick()
        },
        AcquisitionConfig {
            cap_ratio: 1.0,
            ..quick()
        },
        AcquisitionConfig {
            seeds: vec![],
            ..quick()
        },
    ];
    for cfg in bad {
        assert!(matches!(cfg.validate(), Err(BenchError::Config(_))));
    }
}

#[test]
fn ci95_matches_hand_computation() {
    // sample sd of [1, 2, 3, 4] is sqrt(5/3)
    let (m, ci) = mean_ci95(&[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(m, 2.5);
    assert!((ci - 1.96 * (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
    assert_eq!(mean_ci95(&[7.0]), (7.0, 0.0));
}

fn fake(kind: GrammarKind, ratios: &[f64], capped: bool) -> AcquisitionResult {
    let (mean, ci95) = mean_ci95(ratios);
    AcquisitionResult {
        kind,
        arch: "FC2L".into(),
        params: Some(19428),
        geometry: Geometry::paper(),
        runs: ratios
            .iter()
            .enumerate()
            .map(|(i, &r)| SeedRun {
                seed: i as u64,
                steps: (r * 100.0) as u64,
                ratio: r,
                capped,
                wall_seconds: 0.5,
                curve: vec![],
            })
            .collect(),
        mean,
        ci95,
    }
}

#[test]
fn reports_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let results = vec![
        fake(GrammarKind::Perm, &[1.0, 1.1, 0.93], false),
        fake(GrammarKind::Rot, &[20.0], true),
    ];
    let rows = aggregate(&results, 20.0).unwrap();
    assert_eq!(rows[0].cells[1].1.render(), "> 20");
    let path = dir.path().join("agg.tsv");
    write_aggregate(&path, &rows).unwrap();
    assert_eq!(read_aggregate(&path).unwrap(), rows);

    let runs = run_records(&results);
    let path = dir.path().join("runs.tsv");
    write_runs(&path, &runs).unwrap();
    assert_eq!(read_runs(&path).unwrap(), runs);
    assert!(render_table(&rows).contains("> 20"));

    assert!(aggregate(&[], 20.0).is_err());
    assert!(write_aggregate(&path, &[]).is_err());
}
