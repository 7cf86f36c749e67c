use crate::divergence::DivergenceKind;
use crate::error::{Error, Result};
use crate::nn::{Activation, OptimizerKind};
use crate::prox::Regularizer;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Generator network trained through smoothed particle transport.
    Myvt,
    /// Plain particle transport, no regularizer, no generator.
    Vt,
}

/// Every knob of a training run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub method: Method,
    pub divergence: DivergenceKind,
    pub regularizer: Regularizer,
    /// Weight of the regularizer.
    pub alpha: f64,
    /// Envelope smoothing parameter.
    pub lambda: f64,
    pub eta_particle: f64,
    pub eta_generator: f64,
    pub eta_critic: f64,
    /// Outer iterations `K`.
    pub iterations: usize,
    /// Particle/generator steps per iteration `T`.
    pub particle_steps: usize,
    /// Critic ascent steps per iteration `T'`.
    pub critic_steps: usize,
    /// Mini-batch size `m`.
    pub batch_size: usize,
    pub n_particles: usize,
    pub noise_dim: usize,
    pub seed: u64,
    /// Optimizer for the critic parameters.
    pub optimizer: OptimizerKind,
    /// Optimizer for the generator parameters.
    pub generator_optimizer: OptimizerKind,
    pub generator_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub hidden_activation: Activation,
    pub init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            method: Method::Myvt,
            divergence: DivergenceKind::Kl,
            regularizer: Regularizer::l1(),
            alpha: 0.1,
            lambda: 1e-4,
            eta_particle: 1e-4,
            eta_generator: 1e-4,
            eta_critic: 1e-3,
            iterations: 2000,
            particle_steps: 5,
            critic_steps: 2,
            batch_size: 100,
            n_particles: 500,
            noise_dim: 100,
            seed: 0,
            optimizer: OptimizerKind::Sgd,
            generator_optimizer: OptimizerKind::Sgd,
            generator_hidden: vec![100, 100, 100],
            critic_hidden: vec![100],
            hidden_activation: Activation::Relu,
            init_scale: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("iterations", self.iterations),
            ("particle_steps", self.particle_steps),
            ("critic_steps", self.critic_steps),
            ("batch_size", self.batch_size),
            ("n_particles", self.n_particles),
            ("noise_dim", self.noise_dim),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be nonnegative, got {}", self.alpha)));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be positive, got {}", self.lambda)));
        }
        for (name, v) in [
            ("eta_particle", self.eta_particle),
            ("eta_generator", self.eta_generator),
            ("eta_critic", self.eta_critic),
            ("init_scale", self.init_scale),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be nonnegative, got {v}")));
            }
        }
        if self.generator_hidden.contains(&0) || self.critic_hidden.contains(&0) {
            return Err(Error::Config("hidden layer widths must be positive".into()));
        }
        self.regularizer.validate()
    }

    pub fn generator_layout(&self, d: usize) -> (Vec<usize>, Vec<Activation>) {
        let mut dims = vec![self.noise_dim];
        dims.extend(&self.generator_hidden);
        dims.push(d);
        let mut acts = vec![self.hidden_activation; dims.len() - 2];
        acts.push(Activation::Identity);
        (dims, acts)
    }

    pub fn critic_layout(&self, d: usize) -> (Vec<usize>, Vec<Activation>) {
        let mut dims = vec![d];
        dims.extend(&self.critic_hidden);
        dims.push(1);
        let mut acts = vec![self.hidden_activation; dims.len() - 2];
        acts.push(match self.divergence {
            DivergenceKind::Kl => Activation::Identity,
            DivergenceKind::Js => Activation::Sigmoid,
        });
        (dims, acts)
    }
}
