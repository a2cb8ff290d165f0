//! Halfspace context functions.
//!
//! A [`HalfspaceGate`] is the indicator of the closed halfspace
//! `{z : z . v >= offset}` for a unit normal `v`. A neuron composes `m` of them
//! into a [`NeuronGating`] whose context index selects one of `2^m` weight rows.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{GlnError, Result};
use crate::mixer::dot;
use crate::rng::standard_normal;

/// Largest supported context dimension; a neuron then owns `2^24` weight rows.
pub const MAX_CONTEXT_DIM: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct HalfspaceGate {
    normal: Vec<f64>,
    offset: f64,
}

impl HalfspaceGate {
    /// Builds a gate from any nonzero normal, rescaling it to unit length.
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        let norm = libm::sqrt(dot(&normal, &normal));
        if normal.is_empty() || !(norm > 0.0 && norm.is_finite()) {
            return Err(GlnError::InvalidParameter { name: "gate normal norm", value: norm });
        }
        let normal = normal.into_iter().map(|v| v / norm).collect();
        Ok(Self { normal, offset })
    }

    /// Rebuilds a gate from stored parameters without renormalizing, so saved
    /// models reload bit for bit.
    pub fn from_raw_parts(normal: Vec<f64>, offset: f64) -> Self {
        Self { normal, offset }
    }

    /// Draws `v = x / |x|` with `x ~ N(0, I)` and `offset ~ N(0, 1)`.
    ///
    /// The normal's components are drawn first, in index order, then the
    /// offset. A zero draw for `x` is redrawn.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Self {
        assert!(dim >= 1, "side information must have at least one dimension");
        loop {
            let raw: Vec<f64> = (0..dim).map(|_| standard_normal(rng)).collect();
            let offset = standard_normal(rng);
            let norm = libm::sqrt(dot(&raw, &raw));
            if norm > 0.0 {
                let normal = raw.into_iter().map(|v| v / norm).collect();
                return Self { normal, offset };
            }
        }
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    /// `z . v >= offset`; the boundary belongs to the halfspace.
    pub fn eval(&self, z: &[f64]) -> Result<bool> {
        if z.len() != self.normal.len() {
            return Err(GlnError::DimensionMismatch { expected: self.normal.len(), actual: z.len() });
        }
        Ok(self.fires(z))
    }

    #[inline]
    pub(crate) fn fires(&self, z: &[f64]) -> bool {
        dot(z, &self.normal) >= self.offset
    }
}

/// `m` composed gates. With `m = 0` there is a single context and the neuron is
/// a plain geometric mixer.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronGating {
    gates: Vec<HalfspaceGate>,
}

impl NeuronGating {
    pub fn new(gates: Vec<HalfspaceGate>) -> Result<Self> {
        if gates.len() > MAX_CONTEXT_DIM {
            return Err(GlnError::InvalidArchitecture("context dimension above 24"));
        }
        if let Some(first) = gates.first() {
            let dim = first.dim();
            if let Some(bad) = gates.iter().find(|g| g.dim() != dim) {
                return Err(GlnError::DimensionMismatch { expected: dim, actual: bad.dim() });
            }
        }
        Ok(Self { gates })
    }

    pub fn sample<R: Rng + ?Sized>(rng: &mut R, side_dim: usize, context_dim: usize) -> Result<Self> {
        if context_dim > MAX_CONTEXT_DIM {
            return Err(GlnError::InvalidArchitecture("context dimension above 24"));
        }
        Ok(Self { gates: (0..context_dim).map(|_| HalfspaceGate::sample(rng, side_dim)).collect() })
    }

    pub fn gates(&self) -> &[HalfspaceGate] {
        &self.gates
    }

    pub fn context_dim(&self) -> usize {
        self.gates.len()
    }

    pub fn num_contexts(&self) -> usize {
        1 << self.gates.len()
    }

    /// `sum_j 2^j * gate_j(z)`: gate `j` contributes bit `j`.
    pub fn context_index(&self, z: &[f64]) -> Result<usize> {
        if let Some(g) = self.gates.first() {
            if g.dim() != z.len() {
                return Err(GlnError::DimensionMismatch { expected: g.dim(), actual: z.len() });
            }
        }
        Ok(self.context_index_unchecked(z))
    }

    #[inline]
    pub(crate) fn context_index_unchecked(&self, z: &[f64]) -> usize {
        self.gates.iter().enumerate().fold(0, |acc, (j, g)| acc | (usize::from(g.fires(z)) << j))
    }
}

/// Signature vector `(c_1(z), ..., c_m(z))` over a collection of gates.
pub fn signature(gates: &[HalfspaceGate], z: &[f64]) -> Result<Vec<bool>> {
    gates.iter().map(|g| g.eval(z)).collect()
}
