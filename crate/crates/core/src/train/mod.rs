//! The MYVT primal-dual loop, the VT particle baseline, and run orchestration.
//!
//! One MYVT iteration draws `m` noise vectors, pushes them through the
//! generator to get particles, and takes `T` transport steps. Each step moves
//! every particle against
//!
//! ```text
//! delta(x) = grad h(x) + (alpha / lambda) (x - prox_lambda(x))
//! ```
//!
//! and moves the generator parameters by one gradient step along the
//! vector-Jacobian products `sum_i J_theta(eps_i)^T delta_i`. The transported
//! particles then drive `T'` ascent steps of the critic against a fresh target
//! mini-batch.

mod config;
mod metrics;
pub mod presets;

use std::time::Instant;

pub use config::{Method, TrainConfig};
pub use metrics::{evaluate_metrics, read_metrics, MetricsRow, MetricsWriter, SampleStats, METRICS_HEADER};

use crate::data::Dataset;
use crate::divergence::DualCritic;
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::nn::{Mlp, Optimizer};
use crate::prox::{EnvelopeParams, RegKind, Regularizer};
use crate::rng::Rng;

/// Mutable state of a run: networks, optimizer moments, random stream.
#[derive(Clone, Debug)]
pub struct TrainState {
    /// `None` for VT, which transports particles directly.
    pub generator: Option<Mlp>,
    pub critic: DualCritic,
    pub generator_opt: Option<Optimizer>,
    pub critic_opt: Optimizer,
    pub rng: Rng,
    pub iteration: usize,
}

impl TrainState {
    /// Seeds the stream, then initializes the generator (MYVT only) and the critic.
    pub fn new(config: &TrainConfig, d: usize) -> Result<Self> {
        config.validate()?;
        let mut rng = Rng::new(config.seed);
        let generator = match config.method {
            Method::Myvt => {
                let (dims, acts) = config.generator_layout(d);
                Some(Mlp::new(&dims, &acts, &mut rng, config.init_scale)?)
            }
            Method::Vt => None,
        };
        let (dims, acts) = config.critic_layout(d);
        let critic = DualCritic::new(config.divergence, Mlp::new(&dims, &acts, &mut rng, config.init_scale)?)?;
        let generator_opt = generator
            .as_ref()
            .map(|g| Optimizer::new(config.generator_optimizer, g.n_params()));
        let critic_opt = Optimizer::new(config.optimizer, critic.net.n_params());
        Ok(Self {
            generator,
            critic,
            generator_opt,
            critic_opt,
            rng,
            iteration: 0,
        })
    }

    pub fn max_abs_param(&self) -> f64 {
        let g = self.generator.as_ref().map_or(0.0, Mlp::max_abs_param);
        g.max(self.critic.net.max_abs_param())
    }

    /// `n` generator samples from fresh noise.
    pub fn sample(&mut self, n: usize) -> Result<Vec<Vec<f64>>> {
        let gen = self
            .generator
            .as_ref()
            .ok_or_else(|| Error::Config("this state has no generator".into()))?;
        let dim = gen.in_dim();
        (0..n)
            .map(|_| {
                let eps = self.rng.normal_vec(dim);
                gen.predict(&eps)
            })
            .collect()
    }
}

/// Particle set for the VT baseline.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleSet {
    pub particles: Vec<Vec<f64>>,
}

impl ParticleSet {
    /// `n` draws from `N(0, I_d)`.
    pub fn standard_normal(n: usize, d: usize, rng: &mut Rng) -> Self {
        Self {
            particles: (0..n).map(|_| rng.normal_vec(d)).collect(),
        }
    }
}

/// The TV flavour reported as `avg_tv` for a regularizer.
fn tv_metric(reg: &Regularizer) -> Regularizer {
    match reg.kind {
        RegKind::Tv2d { .. } => *reg,
        _ => Regularizer::tv1d(),
    }
}

/// Transport direction `grad h(x) + (alpha / lambda) (x - prox_lambda(x))`.
///
/// `alpha` multiplies the envelope gradient only; the prox itself runs at
/// scale `lambda`.
pub fn particle_delta(critic: &DualCritic, g: &Regularizer, x: &[f64], alpha: f64, lambda: f64) -> Result<Vec<f64>> {
    let (_, mut delta) = critic.witness(x)?;
    if alpha != 0.0 {
        let env_grad = g.envelope_grad(x, EnvelopeParams::new(lambda)?)?;
        for (d, e) in delta.iter_mut().zip(&env_grad) {
            *d += alpha * e;
        }
    }
    if !delta.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite {
            context: "particle transport direction".into(),
        });
    }
    Ok(delta)
}

/// VT's transport direction: the witness gradient alone.
pub fn vt_direction(critic: &DualCritic, x: &[f64]) -> Result<Vec<f64>> {
    critic.witness(x).map(|(_, g)| g)
}

fn target_batch(rng: &mut Rng, examples: &[Vec<f64>], m: usize) -> Result<Vec<Vec<f64>>> {
    if examples.is_empty() {
        return Err(Error::EmptyBatch("target samples"));
    }
    Ok((0..m).map(|_| examples[rng.index(examples.len())].clone()).collect())
}

/// One outer iteration of MYVT. Metrics describe the transported particles
/// `x^(T)` and the critic after its update.
pub fn myvt_iteration(state: &mut TrainState, config: &TrainConfig, data: &Dataset, exec: &Executor) -> Result<MetricsRow> {
    let start = Instant::now();
    let m = config.batch_size;
    let generator = state
        .generator
        .as_mut()
        .ok_or_else(|| Error::Config("MYVT needs a generator".into()))?;
    let gen_opt = state
        .generator_opt
        .as_mut()
        .ok_or_else(|| Error::Config("MYVT needs a generator optimizer".into()))?;
    let noise: Vec<Vec<f64>> = (0..m).map(|_| state.rng.normal_vec(generator.in_dim())).collect();

    let mut particles: Vec<Vec<f64>> = Vec::new();
    for t in 0..config.particle_steps {
        let net = &*generator;
        let critic = &state.critic;
        let first = t == 0;
        let current = &particles;
        let passes = exec.map(m, |i| {
            let (out, tape) = net.forward(&noise[i])?;
            let x = if first { out } else { current[i].clone() };
            let delta = particle_delta(critic, &config.regularizer, &x, config.alpha, config.lambda)?;
            let bp = net.backprop(&tape, &delta)?;
            Ok::<_, Error>((x, delta, tape, bp))
        });
        let mut grads = vec![0.0; net.n_params()];
        let mut next = Vec::with_capacity(m);
        for pass in passes {
            let (mut x, delta, tape, bp) = pass?;
            net.accumulate_grads(&tape, &bp, 1.0, &mut grads);
            for (xi, di) in x.iter_mut().zip(&delta) {
                *xi -= config.eta_particle * di;
            }
            next.push(x);
        }
        particles = next;
        gen_opt.descend(generator.params_mut(), &grads, config.eta_generator)?;
    }

    let target = target_batch(&mut state.rng, &data.examples, m)?;
    let critic_opt = &mut state.critic_opt;
    state
        .critic
        .update(&particles, &target, config.critic_steps, critic_opt, config.eta_critic, exec)?;
    let dual = state.critic.objective(&particles, &target)?;
    let stats = evaluate_metrics(&particles, &data.truth, &tv_metric(&config.regularizer))?;
    let row = MetricsRow {
        iteration: state.iteration,
        mse: stats.mse,
        avg_l1: stats.avg_l1,
        avg_tv: stats.avg_tv,
        dual_objective: dual,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    state.iteration += 1;
    Ok(row)
}

/// One VT iteration: fit the critic to the current particles, then move each
/// particle along `-grad h`.
pub fn vt_iteration(
    state: &mut TrainState,
    particles: &mut ParticleSet,
    config: &TrainConfig,
    data: &Dataset,
    exec: &Executor,
) -> Result<MetricsRow> {
    let start = Instant::now();
    let target = target_batch(&mut state.rng, &data.examples, config.batch_size)?;
    state.critic.update(
        &particles.particles,
        &target,
        config.critic_steps,
        &mut state.critic_opt,
        config.eta_critic,
        exec,
    )?;
    let critic = &state.critic;
    let current = &particles.particles;
    let directions = exec.map(current.len(), |i| vt_direction(critic, &current[i]));
    for (x, dir) in particles.particles.iter_mut().zip(directions) {
        let dir = dir?;
        for (xi, di) in x.iter_mut().zip(&dir) {
            *xi -= config.eta_particle * di;
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { context: "VT particle".into() });
        }
    }
    let dual = state.critic.objective(&particles.particles, &target)?;
    let stats = evaluate_metrics(&particles.particles, &data.truth, &tv_metric(&config.regularizer))?;
    let row = MetricsRow {
        iteration: state.iteration,
        mse: stats.mse,
        avg_l1: stats.avg_l1,
        avg_tv: stats.avg_tv,
        dual_objective: dual,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    state.iteration += 1;
    Ok(row)
}

/// Diagnostic estimate of the smoothed objective: the critic's dual estimate
/// on `n_eval` fresh generator samples against `target`, plus `alpha` times
/// the mean envelope value of those samples.
pub fn smoothed_objective_estimate(
    state: &mut TrainState,
    config: &TrainConfig,
    target: &[Vec<f64>],
    n_eval: usize,
) -> Result<f64> {
    if n_eval == 0 {
        return Err(Error::Config("n_eval must be at least 1".into()));
    }
    let samples = state.sample(n_eval)?;
    let dual = state.critic.objective(&samples, target)?;
    if config.alpha == 0.0 {
        return Ok(dual);
    }
    let params = EnvelopeParams::new(config.lambda)?;
    let mut env = 0.0;
    for x in &samples {
        env += config.regularizer.envelope_value(x, params)?;
    }
    Ok(dual + config.alpha * env / n_eval as f64)
}

/// Final state of a completed run.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub state: TrainState,
    pub particles: Option<ParticleSet>,
    pub last: MetricsRow,
}

/// Runs `config.iterations` iterations of the configured method.
///
/// `observe` sees every metrics row together with the state that produced
/// it; returning an error stops the run. Numerical failures, including a
/// metrics row with a non-finite entry, surface as [`Error::NumericalAbort`]
/// carrying the failing iteration.
pub fn run<F>(config: &TrainConfig, data: &Dataset, exec: &Executor, mut observe: F) -> Result<RunOutcome>
where
    F: FnMut(&MetricsRow, &TrainState) -> Result<()>,
{
    config.validate()?;
    if data.examples.iter().any(|x| x.len() != data.dim()) {
        return Err(Error::Shape("examples do not match the truth dimension".into()));
    }
    let mut state = TrainState::new(config, data.dim())?;
    let mut particles = match config.method {
        Method::Vt => Some(ParticleSet::standard_normal(config.n_particles, data.dim(), &mut state.rng)),
        Method::Myvt => None,
    };
    let mut last = None;
    for k in 0..config.iterations {
        let row = match particles.as_mut() {
            Some(p) => vt_iteration(&mut state, p, config, data, exec),
            None => myvt_iteration(&mut state, config, data, exec),
        };
        let row = row.and_then(|row| {
            let values = [row.mse, row.avg_l1, row.avg_tv, row.dual_objective];
            crate::error::ensure_finite(&values, || "iteration metrics".into())?;
            Ok(row)
        });
        let row = row.map_err(|e| match e {
            Error::NonFinite { context } => Error::NumericalAbort {
                iteration: k,
                reason: context,
                checkpoint: None,
            },
            other => other,
        })?;
        observe(&row, &state)?;
        last = Some(row);
    }
    Ok(RunOutcome {
        state,
        particles,
        last: last.expect("at least one iteration"),
    })
}
