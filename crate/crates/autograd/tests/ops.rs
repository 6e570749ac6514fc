use approx::assert_relative_eq;
use icy_autograd::{check_gradients, Fault, GradCheckOptions, Graph, Mat, Var};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rand_mat(rows: usize, cols: usize, seed: u64) -> Mat {
    Mat::uniform(rows, cols, 1.0, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn positive(rows: usize, cols: usize, seed: u64) -> Mat {
    rand_mat(rows, cols, seed).map(|x| 0.5 + x.abs())
}

fn check(params: &[Mat], build: impl Fn(&mut Graph, &[Var]) -> Var) -> f64 {
    check_gradients(params, build, &GradCheckOptions::default()).max_rel_error
}

/// Reduce an arbitrary matrix to a scalar with a fixed random weighting so
/// every output entry gets a distinct gradient.
fn weighted_sum(g: &mut Graph, x: Var) -> Var {
    let (r, c) = g.value(x).shape();
    let w = g.constant(rand_mat(r, c, 99));
    let p = g.mul(x, w);
    g.sum(p)
}

#[test]
fn elementwise_and_matrix_ops() {
    let params = [rand_mat(3, 4, 1), rand_mat(4, 2, 2), rand_mat(3, 4, 3), rand_mat(1, 4, 4)];
    let err = check(&params, |g, v| {
        let ab = g.matmul(v[0], v[1]);
        let t = g.tanh(ab);
        let s = g.sigmoid(v[2]);
        let m = g.mul(v[0], s);
        let d = g.sub(m, v[2]);
        let r = g.add_row(d, v[3]);
        let e = g.exp(r);
        let sc = g.scale(e, 0.3);
        let om = g.one_minus(sc);
        let a = weighted_sum(g, t);
        let b = weighted_sum(g, om);
        g.add(a, b)
    });
    assert!(err < 1e-6, "{err}");
}

#[test]
fn normalizations_and_log() {
    let params = [positive(3, 4, 5)];
    let err = check(&params, |g, v| {
        let r = g.normalize_rows(v[0]);
        let c = g.normalize_cols(r);
        let sm = g.softmax_rows(v[0]);
        let l = g.ln(c);
        let a = weighted_sum(g, l);
        let b = weighted_sum(g, sm);
        g.add(a, b)
    });
    assert!(err < 1e-6, "{err}");
}

#[test]
fn slicing_gathering_and_gates() {
    let params = [rand_mat(4, 5, 6), rand_mat(4, 1, 7), rand_mat(6, 3, 8)];
    let err = check(&params, |g, v| {
        let left = g.slice_cols(v[0], 0, 2);
        let right = g.slice_cols(v[0], 2, 5);
        let cat = g.concat_cols(&[right, left]);
        let gated = g.mul_col(cat, v[1]);
        let emb = g.embed_sum(v[2], vec![vec![0, 5], vec![1], vec![5, 5, 2], vec![]]);
        let gat = g.gather(v[0], vec![0, 0, 19, 3, 7, 7], 2, 3);
        let a = weighted_sum(g, gated);
        let b = weighted_sum(g, emb);
        let c = weighted_sum(g, gat);
        let ab = g.add(a, b);
        let abc = g.add(ab, c);
        let m = g.mean(v[0]);
        g.add(abc, m)
    });
    assert!(err < 1e-6, "{err}");
}

#[test]
fn cross_entropy_value_and_gradient() {
    // logits [0, ln 3] -> probs [1/4, 3/4]; target 1 -> loss ln(4/3)
    let mut g = Graph::new();
    let x = g.param(0, &Mat::from_vec(1, 2, vec![0.0, 3f64.ln()]));
    let l = g.cross_entropy(x, vec![1]);
    assert_relative_eq!(g.value(l).item(), (4.0f64 / 3.0).ln(), epsilon = 1e-12);
    let grads = g.backward(l).params(&[(1, 2)]);
    assert_relative_eq!(grads[0].data[0], 0.25, epsilon = 1e-12);
    assert_relative_eq!(grads[0].data[1], -0.25, epsilon = 1e-12);

    let params = [rand_mat(5, 4, 9)];
    let err = check(&params, |g, v| g.cross_entropy(v[0], vec![0, 3, 2, 2, 1]));
    assert!(err < 1e-6, "{err}");
}

#[test]
fn shared_parameter_gradients_accumulate() {
    // f(w) = sum(w * w) uses w twice -> df/dw = 2w
    let w = Mat::from_vec(1, 3, vec![1.0, -2.0, 0.5]);
    let mut g = Graph::new();
    let a = g.param(0, &w);
    let b = g.param(0, &w);
    let p = g.mul(a, b);
    let s = g.sum(p);
    let grads = g.backward(s).params(&[(1, 3)]);
    assert_eq!(grads[0].data, vec![2.0, -4.0, 1.0]);
}

#[test]
fn corrupted_tanh_backward_is_caught() {
    let params = [rand_mat(3, 3, 10)];
    let build = |g: &mut Graph, v: &[Var]| {
        let t = g.tanh(v[0]);
        weighted_sum(g, t)
    };
    let good = check_gradients(&params, build, &GradCheckOptions::default());
    assert!(good.passes(1e-4));
    let bad = check_gradients(
        &params,
        build,
        &GradCheckOptions {
            fault: Some(Fault::TanhBackward),
            ..GradCheckOptions::default()
        },
    );
    assert!(!bad.passes(1e-4), "{bad:?}");
}
