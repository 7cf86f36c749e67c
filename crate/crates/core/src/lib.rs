//! Moreau-Yoshida variational transport.
//!
//! Trains generators whose samples match a set of examples while staying
//! small under a nonsmooth regularizer (l1, 1-D or 2-D total variation). The
//! regularizer enters only through the gradient of its Moreau-Yoshida
//! envelope, computed from its proximal map. The divergence to the examples is
//! estimated by a dual critic network (KL or JS).
//!
//! - [`prox`]: regularizers, proximal maps, envelopes
//! - [`nn`]: multilayer perceptrons with exact gradients, SGD and Adam, checkpoints
//! - [`divergence`]: dual critics
//! - [`train`]: the MYVT loop, the VT baseline, metrics, case-study presets
//! - [`data`]: synthetic datasets and their CSV files
//!
//! The guide in `book/` walks through each piece; its code blocks run as
//! doctests of this crate.

pub mod divergence;
pub mod error;
pub mod exec;
pub mod data;
pub mod linalg;
pub mod nn;
pub mod prox;
pub mod rng;
pub mod train;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/prox.md")]
    mod prox {}
    #[doc = include_str!("../../../book/src/duality.md")]
    mod duality {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
