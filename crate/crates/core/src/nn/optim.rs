//! First-order parameter updates. Both take a descent direction: callers that
//! ascend pass the negated gradient.

use crate::error::{Error, Result};

fn check_shapes(params: &[f64], grads: &[f64]) -> Result<()> {
    if params.len() != grads.len() {
        return Err(Error::Shape(format!(
            "{} parameters but {} gradient entries",
            params.len(),
            grads.len()
        )));
    }
    Ok(())
}

fn check_finite(params: &[f64]) -> Result<()> {
    crate::error::ensure_finite(params, || "parameters after optimizer step".into())
}

/// `p <- p - eta * g`.
pub fn sgd_step(params: &mut [f64], grads: &[f64], eta: f64) -> Result<()> {
    check_shapes(params, grads)?;
    for (p, g) in params.iter_mut().zip(grads) {
        *p -= eta * g;
    }
    check_finite(params)
}

/// Bias-corrected Adam moments.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(n_params: usize) -> Self {
        Self {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64], eta: f64) -> Result<()> {
        check_shapes(params, grads)?;
        if self.m.len() != params.len() {
            return Err(Error::Shape(format!(
                "Adam state sized for {} parameters, got {}",
                self.m.len(),
                params.len()
            )));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= eta * m_hat / (v_hat.sqrt() + self.eps);
        }
        check_finite(params)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// Optimizer state for one parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub enum Optimizer {
    Sgd,
    Adam(AdamState),
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, n_params: usize) -> Self {
        match kind {
            OptimizerKind::Sgd => Optimizer::Sgd,
            OptimizerKind::Adam => Optimizer::Adam(AdamState::new(n_params)),
        }
    }

    pub fn descend(&mut self, params: &mut [f64], grads: &[f64], eta: f64) -> Result<()> {
        match self {
            Optimizer::Sgd => sgd_step(params, grads, eta),
            Optimizer::Adam(state) => state.step(params, grads, eta),
        }
    }
}
