//! Dense feed-forward networks with exact reverse-mode gradients.
//!
//! Parameters live in one flat vector, layer by layer: the row-major
//! `out x in` weight matrix followed by the bias. Gradients share that layout,
//! so the optimizers work on plain slices.

mod checkpoint;
mod optim;

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use optim::{sgd_step, AdamState, Optimizer, OptimizerKind};

use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
    Identity,
}

impl Activation {
    pub fn code(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Tanh => 1,
            Activation::Sigmoid => 2,
            Activation::Identity => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => Activation::Relu,
            1 => Activation::Tanh,
            2 => Activation::Sigmoid,
            3 => Activation::Identity,
            _ => return None,
        })
    }

    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => sigmoid(z),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    #[inline]
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            // subgradient 0 at the kink
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Identity => 1.0,
        }
    }
}

/// Logistic function, evaluated on the branch that cannot overflow.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Layer {
    in_dim: usize,
    out_dim: usize,
    act: Activation,
    offset: usize,
}

impl Layer {
    fn n_weights(&self) -> usize {
        self.in_dim * self.out_dim
    }
    fn n_params(&self) -> usize {
        self.n_weights() + self.out_dim
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
    params: Vec<f64>,
}

/// Cached values from one forward pass, enough for one backward pass.
#[derive(Clone, Debug)]
pub struct Tape {
    /// `inputs[k]` is the input to layer `k`; the last entry is the network output.
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

impl Tape {
    pub fn output(&self) -> &[f64] {
        self.inputs.last().expect("tape holds at least the input")
    }

    pub fn input(&self) -> &[f64] {
        &self.inputs[0]
    }
}

/// Per-layer gradients of the loss w.r.t. pre-activations plus the input gradient.
#[derive(Clone, Debug)]
pub struct Backprop {
    deltas: Vec<Vec<f64>>,
    pub dx: Vec<f64>,
}

impl Mlp {
    /// Weights drawn from `N(0, scale^2 / fan_in)`, biases zero.
    pub fn new(dims: &[usize], acts: &[Activation], rng: &mut Rng, scale: f64) -> Result<Self> {
        let mut net = Self::zeros(dims, acts)?;
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Config(format!("init scale must be positive, got {scale}")));
        }
        for layer in net.layers.clone() {
            let std = scale / (layer.in_dim as f64).sqrt();
            for w in &mut net.params[layer.offset..layer.offset + layer.n_weights()] {
                *w = std * rng.normal();
            }
        }
        Ok(net)
    }

    pub fn zeros(dims: &[usize], acts: &[Activation]) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::Shape(format!("need at least 2 layer sizes, got {}", dims.len())));
        }
        if acts.len() != dims.len() - 1 {
            return Err(Error::Shape(format!(
                "{} layer sizes need {} activations, got {}",
                dims.len(),
                dims.len() - 1,
                acts.len()
            )));
        }
        if dims.contains(&0) {
            return Err(Error::Shape("layer sizes must be positive".into()));
        }
        let mut layers = Vec::with_capacity(acts.len());
        let mut offset = 0;
        for (k, &act) in acts.iter().enumerate() {
            let layer = Layer {
                in_dim: dims[k],
                out_dim: dims[k + 1],
                act,
                offset,
            };
            offset += layer.n_params();
            layers.push(layer);
        }
        Ok(Self {
            layers,
            params: vec![0.0; offset],
        })
    }

    pub fn from_params(dims: &[usize], acts: &[Activation], params: Vec<f64>) -> Result<Self> {
        let mut net = Self::zeros(dims, acts)?;
        if params.len() != net.params.len() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                net.params.len(),
                params.len()
            )));
        }
        net.params = params;
        Ok(net)
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.in_dim())
            .chain(self.layers.iter().map(|l| l.out_dim))
            .collect()
    }

    pub fn activations(&self) -> Vec<Activation> {
        self.layers.iter().map(|l| l.act).collect()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    /// Weight matrix (row-major, `out x in`) and bias of layer `k`.
    pub fn layer_params(&self, k: usize) -> (&[f64], &[f64]) {
        let l = &self.layers[k];
        let w_end = l.offset + l.n_weights();
        (&self.params[l.offset..w_end], &self.params[w_end..w_end + l.out_dim])
    }

    pub fn layer_params_mut(&mut self, k: usize) -> (&mut [f64], &mut [f64]) {
        let l = self.layers[k];
        let (w, rest) = self.params[l.offset..].split_at_mut(l.n_weights());
        (w, &mut rest[..l.out_dim])
    }

    pub fn max_abs_param(&self) -> f64 {
        self.params.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.in_dim() {
            return Err(Error::Shape(format!(
                "network expects input of length {}, got {}",
                self.in_dim(),
                x.len()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, Tape)> {
        self.check_input(x)?;
        let mut inputs = Vec::with_capacity(self.layers.len() + 1);
        let mut pre = Vec::with_capacity(self.layers.len());
        inputs.push(x.to_vec());
        for (k, layer) in self.layers.iter().enumerate() {
            let (w, b) = self.layer_params(k);
            let a_in = &inputs[k];
            let z: Vec<f64> = (0..layer.out_dim)
                .map(|o| {
                    let row = &w[o * layer.in_dim..(o + 1) * layer.in_dim];
                    b[o] + row.iter().zip(a_in).map(|(wi, ai)| wi * ai).sum::<f64>()
                })
                .collect();
            let a: Vec<f64> = z.iter().map(|&zi| layer.act.apply(zi)).collect();
            pre.push(z);
            inputs.push(a);
        }
        let y = inputs[inputs.len() - 1].clone();
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("network output {:?}", &y[..y.len().min(4)]),
            });
        }
        Ok((y, Tape { inputs, pre }))
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.forward(x).map(|(y, _)| y)
    }

    fn check_tape(&self, tape: &Tape, dy: &[f64]) -> Result<()> {
        let matches = tape.pre.len() == self.layers.len()
            && self
                .layers
                .iter()
                .zip(&tape.pre)
                .all(|(l, z)| z.len() == l.out_dim)
            && tape.inputs[0].len() == self.in_dim();
        if !matches {
            return Err(Error::Shape("tape was not produced by this network".into()));
        }
        if dy.len() != self.out_dim() {
            return Err(Error::Shape(format!(
                "output gradient has length {}, network output is {}",
                dy.len(),
                self.out_dim()
            )));
        }
        Ok(())
    }

    /// Reverse pass without touching parameter gradients.
    pub fn backprop(&self, tape: &Tape, dy: &[f64]) -> Result<Backprop> {
        self.check_tape(tape, dy)?;
        let n = self.layers.len();
        let mut deltas = vec![Vec::new(); n];
        let mut upstream = dy.to_vec();
        for k in (0..n).rev() {
            let layer = &self.layers[k];
            let z = &tape.pre[k];
            let a = &tape.inputs[k + 1];
            let delta: Vec<f64> = (0..layer.out_dim)
                .map(|o| upstream[o] * layer.act.derivative(z[o], a[o]))
                .collect();
            let (w, _) = self.layer_params(k);
            let mut down = vec![0.0; layer.in_dim];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &w[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (acc, wi) in down.iter_mut().zip(row) {
                    *acc += d * wi;
                }
            }
            deltas[k] = delta;
            upstream = down;
        }
        Ok(Backprop { deltas, dx: upstream })
    }

    /// Adds `scale` times this sample's parameter gradient into `grads`.
    pub fn accumulate_grads(&self, tape: &Tape, bp: &Backprop, scale: f64, grads: &mut [f64]) {
        debug_assert_eq!(grads.len(), self.params.len());
        for (k, layer) in self.layers.iter().enumerate() {
            let a_in = &tape.inputs[k];
            let w_end = layer.offset + layer.n_weights();
            for (o, &d) in bp.deltas[k].iter().enumerate() {
                let sd = scale * d;
                if sd == 0.0 {
                    continue;
                }
                let row = &mut grads[layer.offset + o * layer.in_dim..layer.offset + (o + 1) * layer.in_dim];
                for (g, ai) in row.iter_mut().zip(a_in) {
                    *g += sd * ai;
                }
                grads[w_end + o] += sd;
            }
        }
    }

    /// Gradients of `<dy, output>` w.r.t. the parameters and the input.
    pub fn backward(&self, tape: &Tape, dy: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let bp = self.backprop(tape, dy)?;
        let mut grads = vec![0.0; self.params.len()];
        self.accumulate_grads(tape, &bp, 1.0, &mut grads);
        Ok((grads, bp.dx))
    }

    /// Gradient of a scalar-output network w.r.t. its input.
    pub fn input_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (y, tape) = self.forward(x)?;
        if y.len() != 1 {
            return Err(Error::Shape(format!("expected scalar output, got {}", y.len())));
        }
        let bp = self.backprop(&tape, &[1.0])?;
        Ok((y[0], bp.dx))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_identity_net() {
        let net = Mlp::from_params(&[1, 1], &[Activation::Identity], vec![2.0, 1.0]).unwrap();
        let (y, tape) = net.forward(&[3.0]).unwrap();
        assert_eq!(y, vec![7.0]);
        let (grads, dx) = net.backward(&tape, &[1.0]).unwrap();
        assert_eq!(grads, vec![3.0, 1.0]);
        assert_eq!(dx, vec![2.0]);
    }

    #[test]
    fn single_layer_init_is_linear() {
        let mut rng = Rng::new(1);
        let net = Mlp::new(&[1, 1], &[Activation::Identity], &mut rng, 0.5).unwrap();
        let w = net.params()[0];
        assert_eq!(net.params()[1], 0.0);
        assert_eq!(net.predict(&[1.5]).unwrap(), vec![w * 1.5]);
    }

    #[test]
    fn zero_weights_give_zero_output() {
        let net = Mlp::zeros(&[3, 4, 2], &[Activation::Relu, Activation::Identity]).unwrap();
        assert_eq!(net.predict(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn init_is_seeded_and_shaped() {
        let dims = [100, 100, 100, 100, 100];
        let acts = [Activation::Relu, Activation::Relu, Activation::Relu, Activation::Identity];
        let a = Mlp::new(&dims, &acts, &mut Rng::new(9), 1.0).unwrap();
        let b = Mlp::new(&dims, &acts, &mut Rng::new(9), 1.0).unwrap();
        assert_eq!(a.n_layers(), 4);
        assert_eq!(a.dims(), dims.to_vec());
        assert!(a.params().iter().zip(b.params()).all(|(x, y)| x.to_bits() == y.to_bits()));
        let x: Vec<f64> = (0..100).map(|i| (i as f64).cos()).collect();
        assert_eq!(a.predict(&x).unwrap(), a.predict(&x).unwrap());
    }

    #[test]
    fn shape_errors() {
        assert!(Mlp::zeros(&[3], &[]).is_err());
        assert!(Mlp::zeros(&[3, 2], &[Activation::Relu, Activation::Relu]).is_err());
        let net = Mlp::zeros(&[3, 2], &[Activation::Relu]).unwrap();
        assert!(net.forward(&[1.0]).is_err());
        let (_, tape) = net.forward(&[1.0, 2.0, 3.0]).unwrap();
        assert!(net.backward(&tape, &[1.0]).is_err());
        let other = Mlp::zeros(&[3, 5], &[Activation::Relu]).unwrap();
        assert!(other.backward(&tape, &[0.0; 5]).is_err());
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = Rng::new(4);
        let net = Mlp::new(&[3, 5, 2], &[Activation::Tanh, Activation::Sigmoid], &mut rng, 1.0).unwrap();
        let (_, tape) = net.forward(&[0.3, -0.2, 0.9]).unwrap();
        let (g, dx) = net.backward(&tape, &[0.0, 0.0]).unwrap();
        assert!(g.iter().chain(&dx).all(|&v| v == 0.0));
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(-800.0).is_finite());
        assert_eq!(sigmoid(800.0), 1.0);
    }

    #[test]
    fn non_finite_output_is_an_error() {
        let net = Mlp::from_params(&[1, 1], &[Activation::Identity], vec![f64::MAX, f64::MAX]).unwrap();
        assert!(matches!(net.forward(&[10.0]), Err(Error::NonFinite { .. })));
    }
}
