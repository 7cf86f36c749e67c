//! Test-only oracles. Nothing here calls into the prox or gradient code it checks.
#![allow(dead_code)]

/// Coarse-to-fine grid search for the minimizer of a convex function on R^n.
///
/// Each round evaluates a `(2 * half + 1)^n` lattice centered on the current
/// best point, then shrinks the spacing by `shrink`. Starts at spacing `step0`
/// and stops once the spacing falls below `final_step`.
pub fn grid_minimize<F: Fn(&[f64]) -> f64>(
    f: F,
    start: &[f64],
    step0: f64,
    half: usize,
    shrink: f64,
    final_step: f64,
) -> Vec<f64> {
    let n = start.len();
    let side = 2 * half + 1;
    let total = side.pow(n as u32);
    let mut best = start.to_vec();
    let mut best_val = f(&best);
    let mut step = step0;
    let mut point = vec![0.0; n];
    while step >= final_step {
        let center = best.clone();
        for idx in 0..total {
            let mut r = idx;
            for k in 0..n {
                let offset = (r % side) as f64 - half as f64;
                r /= side;
                point[k] = center[k] + offset * step;
            }
            let v = f(&point);
            if v < best_val {
                best_val = v;
                best.copy_from_slice(&point);
            }
        }
        step /= shrink;
    }
    best
}

fn abs_sum(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Brute-force minimizer of `|y| + (x - y)^2 / (2 t)` on the real line.
pub fn scalar_l1_prox_oracle(x: f64, t: f64) -> f64 {
    let f = |y: &[f64]| y[0].abs() + (x - y[0]).powi(2) / (2.0 * t);
    grid_minimize(f, &[x], (x.abs() + t).max(1e-3) / 50.0, 100, 10.0, 1e-10)[0]
}

pub fn tv1d_direct(y: &[f64]) -> f64 {
    y.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Written out term by term from the row/column double sums.
pub fn tv2d_direct(y: &[f64], h: usize, w: usize) -> f64 {
    let at = |i: usize, j: usize| y[i * w + j];
    let mut s = 0.0;
    for i in 0..h {
        for j in 1..w {
            s += (at(i, j) - at(i, j - 1)).abs();
        }
    }
    for j in 0..w {
        for i in 1..h {
            s += (at(i, j) - at(i - 1, j)).abs();
        }
    }
    s
}

/// Grid oracle for `argmin_y TV(y) + |x - y|^2 / (2 t)` in dimension <= 4.
pub fn tv_prox_oracle(x: &[f64], t: f64, shape: Option<(usize, usize)>) -> Vec<f64> {
    let f = |y: &[f64]| {
        let tv = match shape {
            None => tv1d_direct(y),
            Some((h, w)) => tv2d_direct(y, h, w),
        };
        tv + sq_dist(x, y) / (2.0 * t)
    };
    let spread = x.iter().fold(0.0f64, |m, v| m.max(v.abs())) + 0.5;
    grid_minimize(f, x, spread / 8.0, 10, 4.0, 1e-9)
}

pub fn central_difference<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = xp[i];
            xp[i] = orig + h;
            let fp = f(&xp);
            xp[i] = orig - h;
            let fm = f(&xp);
            xp[i] = orig;
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// `|a - b| / max(|a|, |b|, floor)` elementwise maximum.
pub fn max_rel_err(a: &[f64], b: &[f64], floor: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}

pub fn abs_sum_pub(x: &[f64]) -> f64 {
    abs_sum(x)
}

pub mod gradcheck {
    //! Finite-difference comparisons shared by the gradient tests and the
    //! acceptance suite.

    use super::{central_difference, max_rel_err};
    use myvt::divergence::{h_from_hprime, DivergenceKind, DualCritic};
    use myvt::exec::Executor;
    use myvt::nn::{Activation, Mlp};
    use myvt::rng::Rng;

    pub const FD_STEP: f64 = 1e-5;
    /// Gradients smaller than this are compared absolutely.
    pub const REL_FLOOR: f64 = 1e-3;

    const SMOOTH: [Activation; 3] = [Activation::Tanh, Activation::Sigmoid, Activation::Identity];

    /// A random architecture with at most three layers and sixteen units.
    pub fn random_mlp(rng: &mut Rng, out_dim: usize, last: Activation) -> Mlp {
        let n_layers = 1 + rng.index(3);
        let mut dims = vec![1 + rng.index(6)];
        for _ in 1..n_layers {
            dims.push(2 + rng.index(15));
        }
        dims.push(out_dim);
        let mut acts: Vec<Activation> = (0..n_layers - 1).map(|_| SMOOTH[rng.index(3)]).collect();
        acts.push(last);
        Mlp::new(&dims, &acts, rng, 1.0).unwrap()
    }

    /// Worst relative error of parameter and input gradients of `<dy, net(x)>`
    /// over `pairs` random `(x, dy)`.
    pub fn mlp_errors(net: &Mlp, rng: &mut Rng, pairs: usize) -> (f64, f64) {
        let (mut worst_p, mut worst_x) = (0.0f64, 0.0f64);
        for _ in 0..pairs {
            let x = rng.normal_vec(net.in_dim());
            let dy = rng.normal_vec(net.out_dim());
            let (_, tape) = net.forward(&x).unwrap();
            let (grads, dx) = net.backward(&tape, &dy).unwrap();
            let inner = |y: Vec<f64>| y.iter().zip(&dy).map(|(a, b)| a * b).sum::<f64>();
            let fd_x = central_difference(|v| inner(net.predict(v).unwrap()), &x, FD_STEP);
            let fd_p = central_difference(
                |p| {
                    let m = Mlp::from_params(&net.dims(), &net.activations(), p.to_vec()).unwrap();
                    inner(m.predict(&x).unwrap())
                },
                net.params(),
                FD_STEP,
            );
            worst_p = worst_p.max(max_rel_err(&grads, &fd_p, REL_FLOOR));
            worst_x = worst_x.max(max_rel_err(&dx, &fd_x, REL_FLOOR));
        }
        (worst_p, worst_x)
    }

    fn gaussian_batch(rng: &mut Rng, n: usize, d: usize, shift: f64) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| rng.normal_vec(d).into_iter().map(|v| v + shift).collect())
            .collect()
    }

    /// Relative error of the KL dual parameter gradient on one random instance.
    pub fn kl_grad_error(rng: &mut Rng) -> f64 {
        let net = random_mlp(rng, 1, Activation::Identity);
        let d = net.in_dim();
        let (nq, np) = (1 + rng.index(8), 1 + rng.index(8));
        let q = gaussian_batch(rng, nq, d, 0.5);
        let pi = gaussian_batch(rng, np, d, -0.5);
        let critic = DualCritic::new(DivergenceKind::Kl, net.clone()).unwrap();
        let grads = critic.kl_grads(&q, &pi, &Executor::sequential()).unwrap();
        let fd = central_difference(
            |p| {
                let m = Mlp::from_params(&net.dims(), &net.activations(), p.to_vec()).unwrap();
                DualCritic::new(DivergenceKind::Kl, m).unwrap().kl_objective(&q, &pi).unwrap()
            },
            net.params(),
            FD_STEP,
        );
        max_rel_err(&grads, &fd, REL_FLOOR)
    }

    /// Relative error of the JS witness gradient `grad_x h` on one random
    /// instance, with `h` recomputed from the raw discriminator output.
    pub fn js_witness_error(rng: &mut Rng) -> f64 {
        let net = random_mlp(rng, 1, Activation::Sigmoid);
        let x = rng.normal_vec(net.in_dim());
        let critic = DualCritic::new(DivergenceKind::Js, net.clone()).unwrap();
        let (_, grad) = critic.witness(&x).unwrap();
        let fd = central_difference(|v| h_from_hprime(net.predict(v).unwrap()[0]), &x, FD_STEP);
        max_rel_err(&grad, &fd, REL_FLOOR)
    }
}
