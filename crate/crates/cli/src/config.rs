//! The run configuration: one flat JSON object holding the training knobs,
//! the dataset description, and output settings.
//!
//! Missing keys take their values from the case-study preset selected by
//! `case`, `method` and `divergence`. Keys given on the command line replace
//! keys read from a file.

use std::path::PathBuf;

use myvt::data::{SyntheticSpec, TruthCase};
use myvt::divergence::DivergenceKind;
use myvt::nn::{Activation, OptimizerKind};
use myvt::prox::{AdmmSettings, Penalty, RegKind, Regularizer};
use myvt::train::presets::{case_config, dataset_spec, CaseStudy};
use myvt::train::{Method, TrainConfig};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// `sparse` or `pwc`; picks the dataset and the preset defaults.
    pub case: String,
    /// `myvt` or `vt`.
    pub method: String,
    /// `kl` or `js`.
    pub divergence: String,
    /// `l1`, `tv1d` or `tv2d`.
    pub regularizer: String,
    /// Image shape for `tv2d`; `image_height * image_width` must equal `d`.
    pub image_height: usize,
    pub image_width: usize,
    pub admm_iters: usize,
    /// `per_step` (penalty `admm_rho / lambda`) or `fixed`.
    pub admm_penalty: String,
    pub admm_rho: f64,
    pub cg_iters: usize,
    pub cg_tol: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub eta_particle: f64,
    pub eta_generator: f64,
    pub eta_critic: f64,
    pub iterations: usize,
    pub particle_steps: usize,
    pub critic_steps: usize,
    pub batch_size: usize,
    pub n_particles: usize,
    pub noise_dim: usize,
    pub seed: u64,
    /// `sgd` or `adam`, for the critic.
    pub optimizer: String,
    pub generator_optimizer: String,
    pub generator_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    /// `relu`, `tanh`, `sigmoid` or `identity`.
    pub hidden_activation: String,
    pub init_scale: f64,
    pub d: usize,
    pub n_examples: usize,
    pub noise_std: f64,
    pub sparsity: usize,
    pub n_segments: usize,
    pub amplitude_low: f64,
    pub amplitude_high: f64,
    pub data_seed: u64,
    /// Read the dataset from this file instead of generating it.
    pub data_path: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// Write checkpoints every this many iterations; 0 writes only the final one.
    pub checkpoint_every: usize,
    /// Record wall-clock time in the metrics file; off keeps reruns byte-identical.
    pub record_time: bool,
}

fn parse_case(s: &str) -> Result<CaseStudy, CliError> {
    match s {
        "sparse" => Ok(CaseStudy::Sparse),
        "pwc" => Ok(CaseStudy::PiecewiseConstant),
        _ => Err(CliError::Usage(format!("unknown case {s:?} (expected sparse or pwc)"))),
    }
}

fn parse_method(s: &str) -> Result<Method, CliError> {
    match s {
        "myvt" => Ok(Method::Myvt),
        "vt" => Ok(Method::Vt),
        _ => Err(CliError::Usage(format!("unknown method {s:?} (expected myvt or vt)"))),
    }
}

fn parse_divergence(s: &str) -> Result<DivergenceKind, CliError> {
    match s {
        "kl" => Ok(DivergenceKind::Kl),
        "js" => Ok(DivergenceKind::Js),
        _ => Err(CliError::Usage(format!("unknown divergence {s:?} (expected kl or js)"))),
    }
}

fn parse_optimizer(s: &str) -> Result<OptimizerKind, CliError> {
    match s {
        "sgd" => Ok(OptimizerKind::Sgd),
        "adam" => Ok(OptimizerKind::Adam),
        _ => Err(CliError::Usage(format!("unknown optimizer {s:?} (expected sgd or adam)"))),
    }
}

fn parse_activation(s: &str) -> Result<Activation, CliError> {
    match s {
        "relu" => Ok(Activation::Relu),
        "tanh" => Ok(Activation::Tanh),
        "sigmoid" => Ok(Activation::Sigmoid),
        "identity" => Ok(Activation::Identity),
        _ => Err(CliError::Usage(format!("unknown activation {s:?}"))),
    }
}

fn optimizer_name(k: OptimizerKind) -> &'static str {
    match k {
        OptimizerKind::Sgd => "sgd",
        OptimizerKind::Adam => "adam",
    }
}

fn activation_name(a: Activation) -> &'static str {
    match a {
        Activation::Relu => "relu",
        Activation::Tanh => "tanh",
        Activation::Sigmoid => "sigmoid",
        Activation::Identity => "identity",
    }
}

pub fn regularizer_from(kind: &str, height: usize, width: usize, admm: AdmmSettings) -> Result<Regularizer, CliError> {
    let reg = match kind {
        "l1" => Regularizer::l1(),
        "tv1d" => Regularizer::tv1d(),
        "tv2d" => Regularizer::tv2d(height, width),
        _ => return Err(CliError::Usage(format!("unknown regularizer {kind:?} (expected l1, tv1d or tv2d)"))),
    };
    Ok(reg.with_admm(admm))
}

impl RunConfig {
    /// The case-study preset for `(case, method, divergence)`.
    pub fn preset(case: &str, method: &str, divergence: &str) -> Result<Self, CliError> {
        let case_study = parse_case(case)?;
        let t = case_config(case_study, parse_method(method)?, parse_divergence(divergence)?, 0);
        let s = dataset_spec(case_study, 0);
        let (regularizer, image_height, image_width) = match t.regularizer.kind {
            RegKind::L1 => ("l1", 0, 0),
            RegKind::Tv1d => ("tv1d", 0, 0),
            RegKind::Tv2d { height, width } => ("tv2d", height, width),
        };
        let (admm_penalty, admm_rho) = match t.regularizer.admm.rho {
            Penalty::PerStep(c) => ("per_step", c),
            Penalty::Fixed(r) => ("fixed", r),
        };
        Ok(Self {
            case: case.into(),
            method: method.into(),
            divergence: divergence.into(),
            regularizer: regularizer.into(),
            image_height,
            image_width,
            admm_iters: t.regularizer.admm.iters,
            admm_penalty: admm_penalty.into(),
            admm_rho,
            cg_iters: t.regularizer.admm.cg_iters,
            cg_tol: t.regularizer.admm.cg_tol,
            alpha: t.alpha,
            lambda: t.lambda,
            eta_particle: t.eta_particle,
            eta_generator: t.eta_generator,
            eta_critic: t.eta_critic,
            iterations: t.iterations,
            particle_steps: t.particle_steps,
            critic_steps: t.critic_steps,
            batch_size: t.batch_size,
            n_particles: t.n_particles,
            noise_dim: t.noise_dim,
            seed: t.seed,
            optimizer: optimizer_name(t.optimizer).into(),
            generator_optimizer: optimizer_name(t.generator_optimizer).into(),
            generator_hidden: t.generator_hidden,
            critic_hidden: t.critic_hidden,
            hidden_activation: activation_name(t.hidden_activation).into(),
            init_scale: t.init_scale,
            d: s.d,
            n_examples: s.n_examples,
            noise_std: s.noise_std,
            sparsity: s.sparsity,
            n_segments: s.n_segments,
            amplitude_low: s.amplitude.0,
            amplitude_high: s.amplitude.1,
            data_seed: s.seed,
            data_path: None,
            out_dir: PathBuf::from("myvt-run"),
            checkpoint_every: 500,
            record_time: false,
        })
    }

    /// Lays `overrides` over the preset named by the merged `case`, `method`
    /// and `divergence` keys. Unknown keys are rejected by name.
    pub fn resolve(overrides: &Map<String, Value>) -> Result<Self, CliError> {
        let pick = |key: &str, default: &str| -> Result<String, CliError> {
            match overrides.get(key) {
                None => Ok(default.to_string()),
                Some(Value::String(s)) => Ok(s.clone()),
                Some(other) => Err(CliError::Usage(format!("{key} must be a string, got {other}"))),
            }
        };
        let base = Self::preset(&pick("case", "sparse")?, &pick("method", "myvt")?, &pick("divergence", "kl")?)?;
        let mut merged = match serde_json::to_value(base)? {
            Value::Object(m) => m,
            _ => unreachable!("a struct serializes to an object"),
        };
        for (k, v) in overrides {
            merged.insert(k.clone(), v.clone());
        }
        let config: Self = serde_json::from_value(Value::Object(merged))
            .map_err(|e| CliError::Usage(format!("run configuration: {e}")))?;
        config.train_config()?;
        config.synthetic_spec()?;
        Ok(config)
    }

    pub fn admm(&self) -> Result<AdmmSettings, CliError> {
        let rho = match self.admm_penalty.as_str() {
            "per_step" => Penalty::PerStep(self.admm_rho),
            "fixed" => Penalty::Fixed(self.admm_rho),
            other => return Err(CliError::Usage(format!("unknown admm_penalty {other:?} (expected per_step or fixed)"))),
        };
        Ok(AdmmSettings {
            iters: self.admm_iters,
            rho,
            cg_iters: self.cg_iters,
            cg_tol: self.cg_tol,
        })
    }

    pub fn train_config(&self) -> Result<TrainConfig, CliError> {
        let config = TrainConfig {
            method: parse_method(&self.method)?,
            divergence: parse_divergence(&self.divergence)?,
            regularizer: regularizer_from(&self.regularizer, self.image_height, self.image_width, self.admm()?)?,
            alpha: self.alpha,
            lambda: self.lambda,
            eta_particle: self.eta_particle,
            eta_generator: self.eta_generator,
            eta_critic: self.eta_critic,
            iterations: self.iterations,
            particle_steps: self.particle_steps,
            critic_steps: self.critic_steps,
            batch_size: self.batch_size,
            n_particles: self.n_particles,
            noise_dim: self.noise_dim,
            seed: self.seed,
            optimizer: parse_optimizer(&self.optimizer)?,
            generator_optimizer: parse_optimizer(&self.generator_optimizer)?,
            generator_hidden: self.generator_hidden.clone(),
            critic_hidden: self.critic_hidden.clone(),
            hidden_activation: parse_activation(&self.hidden_activation)?,
            init_scale: self.init_scale,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn synthetic_spec(&self) -> Result<SyntheticSpec, CliError> {
        let case = match parse_case(&self.case)? {
            CaseStudy::Sparse => TruthCase::Sparse,
            CaseStudy::PiecewiseConstant => TruthCase::PiecewiseConstant,
        };
        let spec = SyntheticSpec {
            case,
            d: self.d,
            n_examples: self.n_examples,
            noise_std: self.noise_std,
            sparsity: self.sparsity,
            n_segments: self.n_segments,
            amplitude: (self.amplitude_low, self.amplitude_high),
            seed: self.data_seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}
