//! Variational (dual) estimates of KL and JS divergences and their gradients.
//!
//! KL uses the Donsker-Varadhan form `E_q[h] - log E_pi[exp h]`. JS is trained
//! in discriminator form over `h' in (0, 1)`,
//!
//! ```text
//! 1/2 E_q[log(1 - h')] + 1/2 E_pi[log h']
//! ```
//!
//! which equals `JS(q, pi) - log 2` at the optimum; the constant offset is kept.
//! The witness needed for transport is recovered through `h = 1/2 log((1 - h')/2)`,
//! the inverse of `h' = 1 - 2 exp(2h)`.

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::nn::{Mlp, Optimizer};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DivergenceKind {
    Kl,
    Js,
}

pub const DEFAULT_CLAMP_EPS: f64 = 1e-5;

/// A scalar network interpreted as the dual witness of a divergence.
///
/// For KL the network output is `h` itself; for JS it is the discriminator
/// `h'`, clamped into `[clamp_eps, 1 - clamp_eps]` wherever it is used.
#[derive(Clone, Debug, PartialEq)]
pub struct DualCritic {
    pub kind: DivergenceKind,
    pub net: Mlp,
    pub clamp_eps: f64,
}

/// `h = 1/2 log((1 - h') / 2)`.
pub fn h_from_hprime(hp: f64) -> f64 {
    0.5 * ((1.0 - hp) / 2.0).ln()
}

/// `h' = 1 - 2 exp(2h)`; lies in `(0, 1)` when `h < 1/2 log(1/2)`.
pub fn hprime_from_h(h: f64) -> f64 {
    1.0 - 2.0 * (2.0 * h).exp()
}

/// Numerically stable `log(mean(exp(v)))`.
pub fn log_mean_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let s: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + (s / values.len() as f64).ln()
}

fn nonempty(q: &[Vec<f64>], pi: &[Vec<f64>]) -> Result<()> {
    if q.is_empty() {
        return Err(Error::EmptyBatch("model samples"));
    }
    if pi.is_empty() {
        return Err(Error::EmptyBatch("target samples"));
    }
    Ok(())
}

impl DualCritic {
    pub fn new(kind: DivergenceKind, net: Mlp) -> Result<Self> {
        if net.out_dim() != 1 {
            return Err(Error::Shape(format!(
                "critic must have scalar output, got {}",
                net.out_dim()
            )));
        }
        Ok(Self {
            kind,
            net,
            clamp_eps: DEFAULT_CLAMP_EPS,
        })
    }

    fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.clamp_eps, 1.0 - self.clamp_eps)
    }

    fn inside_clamp(&self, v: f64) -> bool {
        v > self.clamp_eps && v < 1.0 - self.clamp_eps
    }

    fn outputs(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        xs.iter().map(|x| self.net.predict(x).map(|y| y[0])).collect()
    }

    /// Dual objective for the critic's divergence.
    pub fn objective(&self, xs_q: &[Vec<f64>], xs_pi: &[Vec<f64>]) -> Result<f64> {
        match self.kind {
            DivergenceKind::Kl => self.kl_objective(xs_q, xs_pi),
            DivergenceKind::Js => self.js_objective(xs_q, xs_pi),
        }
    }

    pub fn kl_objective(&self, xs_q: &[Vec<f64>], xs_pi: &[Vec<f64>]) -> Result<f64> {
        nonempty(xs_q, xs_pi)?;
        let hq = self.outputs(xs_q)?;
        let hp = self.outputs(xs_pi)?;
        Ok(hq.iter().sum::<f64>() / hq.len() as f64 - log_mean_exp(&hp))
    }

    pub fn js_objective(&self, xs_q: &[Vec<f64>], xs_pi: &[Vec<f64>]) -> Result<f64> {
        nonempty(xs_q, xs_pi)?;
        let q_term: f64 = self
            .outputs(xs_q)?
            .into_iter()
            .map(|v| (1.0 - self.clamp(v)).ln())
            .sum::<f64>()
            / xs_q.len() as f64;
        let pi_term: f64 = self
            .outputs(xs_pi)?
            .into_iter()
            .map(|v| self.clamp(v).ln())
            .sum::<f64>()
            / xs_pi.len() as f64;
        Ok(0.5 * q_term + 0.5 * pi_term)
    }

    /// Gradient of the dual objective w.r.t. the critic parameters, computed
    /// from per-sample output sensitivities `weight(is_target, output)`.
    fn weighted_param_grad<W>(&self, xs_q: &[Vec<f64>], xs_pi: &[Vec<f64>], weight: W, exec: &Executor) -> Result<Vec<f64>>
    where
        W: Fn(bool, usize, f64) -> f64 + Sync,
    {
        let nq = xs_q.len();
        let passes = exec.map(nq + xs_pi.len(), |i| {
            let (x, from_pi, j) = if i < nq { (&xs_q[i], false, i) } else { (&xs_pi[i - nq], true, i - nq) };
            let (y, tape) = self.net.forward(x)?;
            let w = weight(from_pi, j, y[0]);
            let bp = self.net.backprop(&tape, &[w])?;
            Ok::<_, Error>((tape, bp))
        });
        let mut grads = vec![0.0; self.net.n_params()];
        for pass in passes {
            let (tape, bp) = pass?;
            self.net.accumulate_grads(&tape, &bp, 1.0, &mut grads);
        }
        Ok(grads)
    }

    /// Gradient of `kl_objective`; the log-mean-exp term contributes the
    /// softmax-weighted average of `grad_W h` over the target batch.
    pub fn kl_grads(&self, xs_q: &[Vec<f64>], xs_pi: &[Vec<f64>], exec: &Executor) -> Result<Vec<f64>> {
        nonempty(xs_q, xs_pi)?;
        let hp = self.outputs(xs_pi)?;
        let max = hp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = hp.iter().map(|v| (v - max).exp()).collect();
        let z: f64 = e.iter().sum();
        let softmax: Vec<f64> = e.iter().map(|v| v / z).collect();
        let inv_q = 1.0 / xs_q.len() as f64;
        self.weighted_param_grad(
            xs_q,
            xs_pi,
            |from_pi, j, _| if from_pi { -softmax[j] } else { inv_q },
            exec,
        )
    }

    /// Gradient of `js_objective`; clamped outputs contribute nothing.
    pub fn js_grads(&self, xs_q: &[Vec<f64>], xs_pi: &[Vec<f64>], exec: &Executor) -> Result<Vec<f64>> {
        nonempty(xs_q, xs_pi)?;
        let half_q = 0.5 / xs_q.len() as f64;
        let half_pi = 0.5 / xs_pi.len() as f64;
        self.weighted_param_grad(
            xs_q,
            xs_pi,
            |from_pi, _, v| {
                if !self.inside_clamp(v) {
                    0.0
                } else if from_pi {
                    half_pi / v
                } else {
                    -half_q / (1.0 - v)
                }
            },
            exec,
        )
    }

    pub fn objective_grads(&self, xs_q: &[Vec<f64>], xs_pi: &[Vec<f64>], exec: &Executor) -> Result<Vec<f64>> {
        match self.kind {
            DivergenceKind::Kl => self.kl_grads(xs_q, xs_pi, exec),
            DivergenceKind::Js => self.js_grads(xs_q, xs_pi, exec),
        }
    }

    /// The witness `h(x)` and its input gradient.
    ///
    /// For JS, `h = 1/2 log((1 - h')/2)` and `grad h = -grad h' / (2 (1 - h'))`,
    /// with `h'` clamped in both places the value enters.
    pub fn witness(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (out, grad) = self.net.input_gradient(x)?;
        match self.kind {
            DivergenceKind::Kl => Ok((out, grad)),
            DivergenceKind::Js => h_from_hprime_grad(self.clamp(out), grad),
        }
    }

    /// `steps` ascent steps on the dual objective over fixed batches.
    pub fn update(
        &mut self,
        xs_q: &[Vec<f64>],
        xs_pi: &[Vec<f64>],
        steps: usize,
        optimizer: &mut Optimizer,
        eta: f64,
        exec: &Executor,
    ) -> Result<()> {
        if steps == 0 {
            return Err(Error::Config("critic update needs at least one step".into()));
        }
        for _ in 0..steps {
            let mut g = self.objective_grads(xs_q, xs_pi, exec)?;
            g.iter_mut().for_each(|v| *v = -*v);
            optimizer.descend(self.net.params_mut(), &g, eta)?;
        }
        Ok(())
    }
}

/// `(h, grad_x h)` from a clamped discriminator value and its input gradient.
pub fn h_from_hprime_grad(hp: f64, grad_hp: Vec<f64>) -> Result<(f64, Vec<f64>)> {
    if !(hp > 0.0 && hp < 1.0) {
        return Err(Error::NonFinite {
            context: format!("discriminator value {hp} outside (0, 1)"),
        });
    }
    let scale = -1.0 / (2.0 * (1.0 - hp));
    Ok((h_from_hprime(hp), grad_hp.into_iter().map(|g| g * scale).collect()))
}
