//! Data-dependent linear collapse.
//!
//! Ignoring clipping, layer `i` computes `logit(p_i) = W_i(z) logit(p_{i-1})`
//! where row `k` of `W_i(z)` is neuron `k`'s active weight row. The bias slot
//! of every layer is carried as coordinate 0 with the fixed row `e_0`, which
//! reproduces `logit(beta)` from the previous layer's bias coordinate. The
//! product of these matrices is one weight vector over the base layer:
//! `output = sigmoid(w_eff . logit(p_0))`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;
use crate::network::GlnModel;

#[derive(Debug, Clone, PartialEq)]
pub struct CollapsedWeights {
    /// One entry per base slot, bias first.
    pub weights: Vec<f64>,
    /// No neuron's mixture was clipped in the forward pass on the same input,
    /// so `sigmoid(weights . logit(p_0))` reproduces the network output.
    pub clip_clean: bool,
}

/// Collapses the network at side information `z`. `p_base` is only used to
/// decide [`CollapsedWeights::clip_clean`]; the weights depend on `z` alone.
pub fn collapse(model: &GlnModel, z: &[f64], p_base: &[f64]) -> Result<CollapsedWeights> {
    let (_, acts) = model.forward(z, p_base)?;
    let layers = model.layers();
    let top = &layers[layers.len() - 1][0];
    let mut v = top.row(top.context_index(z)?).to_vec();
    for (i, neurons) in layers.iter().enumerate().rev().skip(1) {
        let mut next = vec![0.0; model.config().input_width(i)];
        next[0] = v[0];
        for (n, &coef) in neurons.iter().zip(&v[1..]) {
            if coef == 0.0 {
                continue;
            }
            for (acc, w) in next.iter_mut().zip(n.row(n.context_index(z)?)) {
                *acc += coef * w;
            }
        }
        v = next;
    }
    Ok(CollapsedWeights { weights: v, clip_clean: acts.clip_clean() })
}

/// Collapsed weights with the bias entry dropped: one value per input feature.
pub fn saliency(model: &GlnModel, z: &[f64], p_base: &[f64]) -> Result<Vec<f64>> {
    let mut w = collapse(model, z, p_base)?.weights;
    w.remove(0);
    Ok(w)
}
