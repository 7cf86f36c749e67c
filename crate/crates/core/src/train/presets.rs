//! Configurations for the synthetic case studies.

use super::{Method, TrainConfig};
use crate::data::{SyntheticSpec, TruthCase};
use crate::divergence::DivergenceKind;
use crate::nn::{Activation, OptimizerKind};
use crate::prox::Regularizer;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaseStudy {
    /// Sparse truth, l1 regularizer, 2000 iterations.
    Sparse,
    /// Piecewise-constant truth, 1-D TV regularizer, 4000 iterations.
    PiecewiseConstant,
}

/// The 100-dimensional, 500-example dataset of a case study.
pub fn dataset_spec(case: CaseStudy, seed: u64) -> SyntheticSpec {
    match case {
        CaseStudy::Sparse => SyntheticSpec {
            case: TruthCase::Sparse,
            amplitude: (2.0, 4.0),
            seed,
            ..SyntheticSpec::default()
        },
        CaseStudy::PiecewiseConstant => SyntheticSpec {
            case: TruthCase::PiecewiseConstant,
            amplitude: (-3.0, 3.0),
            seed,
            ..SyntheticSpec::default()
        },
    }
}

/// Training settings for a case study. Both networks use tanh hidden layers
/// and Adam; the VT baseline drops the envelope term and moves particles
/// directly.
pub fn case_config(case: CaseStudy, method: Method, divergence: DivergenceKind, seed: u64) -> TrainConfig {
    let (regularizer, iterations) = match case {
        CaseStudy::Sparse => (Regularizer::l1(), 2000),
        CaseStudy::PiecewiseConstant => (Regularizer::tv1d(), 4000),
    };
    let alpha = match divergence {
        DivergenceKind::Kl => 0.1,
        DivergenceKind::Js => 0.01,
    };
    let base = TrainConfig {
        method,
        divergence,
        regularizer,
        alpha,
        iterations,
        seed,
        eta_generator: 3e-5,
        eta_critic: match divergence {
            DivergenceKind::Kl => 1e-3,
            DivergenceKind::Js => 1e-4,
        },
        optimizer: OptimizerKind::Adam,
        generator_optimizer: OptimizerKind::Adam,
        hidden_activation: Activation::Tanh,
        ..TrainConfig::default()
    };
    match method {
        Method::Vt => TrainConfig {
            alpha: 0.0,
            eta_particle: match divergence {
                DivergenceKind::Kl => 0.05,
                DivergenceKind::Js => 0.1,
            },
            ..base
        },
        Method::Myvt => base,
    }
}
