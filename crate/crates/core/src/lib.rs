//! Gated linear networks.
//!
//! A gated linear network (GLN) is a feed-forward stack of *gated geometric
//! mixers*. Every neuron predicts the target directly: it mixes the
//! probabilities of the previous layer in logit space with a weight row chosen
//! by a halfspace context function of the side information, and learns that row
//! by projected online gradient descent on its own log loss. There is no
//! backward pass.
//!
//! The crate is `no_std` (it needs `alloc`) and does no IO. Dataset loading,
//! model files and experiment runners live in the `gln-harness` crate.
//!
//! Module map:
//!
//! - [`mixer`]: geometric mixing, its log loss and gradient.
//! - [`gating`]: halfspace gates, context composition and signatures.
//! - [`network`]: the layered model, initialization, forward pass and the fused
//!   predict/update pass.
//! - [`tasks`]: one-vs-all classification and the autoregressive binary
//!   density model.
//! - [`interpret`]: data-dependent linear collapse and saliency maps.
//! - [`rng`]: the seeded generator every sampled quantity is drawn from.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod gating;
pub mod interpret;
pub mod mixer;
pub mod network;
pub mod rng;
pub mod tasks;

pub use crate::error::{GlnError, Result};
pub use crate::gating::{HalfspaceGate, NeuronGating};
pub use crate::interpret::{collapse, saliency, CollapsedWeights};
pub use crate::network::{
    base_layer, ContextPattern, FeatureScaler, GlnConfig, GlnModel, LayerActivations, LearningRate, Neuron,
};
pub use crate::rng::{derive_seed, seeded_rng, GlnRng};
pub use crate::tasks::{AutoregressiveDensity, IndependentBernoulli, OneVsAll, PixelModelSpec};
