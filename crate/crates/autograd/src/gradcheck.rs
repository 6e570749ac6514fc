//! Central finite-difference gradient checks.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{Fault, Graph, Var};
use crate::mat::Mat;

#[derive(Debug, Clone)]
pub struct GradCheckOptions {
    pub step: f64,
    /// Entries checked per parameter; all when the parameter is smaller.
    pub max_entries_per_param: usize,
    pub seed: u64,
    pub fault: Option<Fault>,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            step: 1e-4,
            max_entries_per_param: 40,
            seed: 0,
            fault: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// `(parameter, flat index)` of the worst entry.
    pub worst: (usize, usize),
    pub entries_checked: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_error < tol
    }
}

/// `|a - n| / max(|a|, |n|, 1e-3)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3)
}

fn new_graph(fault: Option<Fault>) -> Graph {
    match fault {
        Some(f) => Graph::with_fault(f),
        None => Graph::new(),
    }
}

fn forward<F>(params: &[Mat], build: &F, fault: Option<Fault>) -> (Graph, Var)
where
    F: Fn(&mut Graph, &[Var]) -> Var,
{
    let mut g = new_graph(fault);
    let vars: Vec<Var> = params.iter().enumerate().map(|(i, p)| g.param(i, p)).collect();
    let out = build(&mut g, &vars);
    (g, out)
}

/// Compare backward gradients of the scalar built by `build` against central
/// differences, perturbing parameter entries one at a time.
pub fn check_gradients<F>(params: &[Mat], build: F, opts: &GradCheckOptions) -> GradCheckReport
where
    F: Fn(&mut Graph, &[Var]) -> Var,
{
    let (g, out) = forward(params, &build, opts.fault);
    let shapes: Vec<_> = params.iter().map(Mat::shape).collect();
    let analytic = g.backward(out).params(&shapes);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut work = params.to_vec();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: (0, 0),
        entries_checked: 0,
    };
    for p in 0..params.len() {
        let len = params[p].len();
        let entries: Vec<usize> = if len <= opts.max_entries_per_param {
            (0..len).collect()
        } else {
            index::sample(&mut rng, len, opts.max_entries_per_param).into_vec()
        };
        for i in entries {
            let orig = work[p].data[i];
            work[p].data[i] = orig + opts.step;
            let (gp, op) = forward(&work, &build, None);
            let plus = gp.value(op).item();
            work[p].data[i] = orig - opts.step;
            let (gm, om) = forward(&work, &build, None);
            let minus = gm.value(om).item();
            work[p].data[i] = orig;
            let numeric = (plus - minus) / (2.0 * opts.step);
            let rel = relative_error(analytic[p].data[i], numeric);
            report.entries_checked += 1;
            if rel > report.max_rel_error || rel.is_nan() {
                report.max_rel_error = if rel.is_nan() { f64::INFINITY } else { rel };
                report.worst = (p, i);
            }
        }
    }
    report
}
