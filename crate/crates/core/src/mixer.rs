//! Geometric mixing of binary forecasts.
//!
//! Given input probabilities `p` and weights `w`, geometric mixing predicts
//! `sigmoid(w . logit(p))`, a weighted product of experts. Its log loss is
//! convex in `w` with gradient `(prediction - x) * logit(p)`, which is all a GLN
//! neuron needs to learn by online gradient descent.

use alloc::vec::Vec;

use crate::error::{GlnError, Result};

/// Default probability clip: predictions live in `[0.01, 0.99]`.
pub const DEFAULT_EPSILON: f64 = 0.01;

/// Logistic function, evaluated without overflow for either sign.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// `ln(p / (1 - p))`.
///
/// Fails for `p` outside the open unit interval; inside a model that can only
/// happen if clipping was skipped upstream.
pub fn logit(p: f64) -> Result<f64> {
    if p > 0.0 && p < 1.0 {
        Ok(logit_unchecked(p))
    } else {
        Err(GlnError::ProbabilityDomain(p))
    }
}

#[inline]
pub(crate) fn logit_unchecked(p: f64) -> f64 {
    libm::log(p / (1.0 - p))
}

/// `min(max(p, eps), 1 - eps)`.
#[inline]
pub fn clip_probability(p: f64, epsilon: f64) -> f64 {
    p.max(epsilon).min(1.0 - epsilon)
}

/// Dot product with a fixed four-lane summation order.
///
/// Every inner product in the crate goes through here, so results do not depend
/// on how the compiler chooses to vectorize.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `[dot(zs[0], v), .., dot(zs[3], v)]` in one sweep over `v`, bit-identical
/// to four separate [`dot`] calls.
#[inline]
pub(crate) fn dot4(zs: [&[f64]; 4], v: &[f64]) -> [f64; 4] {
    let n = v.len();
    let zs = zs.map(|z| &z[..n]);
    let mut acc = [[0.0f64; 4]; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let k = 4 * c;
        let w = [v[k], v[k + 1], v[k + 2], v[k + 3]];
        for (a, z) in acc.iter_mut().zip(&zs) {
            a[0] += z[k] * w[0];
            a[1] += z[k + 1] * w[1];
            a[2] += z[k + 2] * w[2];
            a[3] += z[k + 3] * w[3];
        }
    }
    let mut out = [0.0; 4];
    for ((o, a), z) in out.iter_mut().zip(&acc).zip(&zs) {
        let mut tail = 0.0;
        for k in 4 * chunks..n {
            tail += z[k] * v[k];
        }
        *o = (a[0] + a[1]) + (a[2] + a[3]) + tail;
    }
    out
}

fn check_dims(w: &[f64], p: &[f64]) -> Result<()> {
    if w.len() != p.len() {
        return Err(GlnError::DimensionMismatch { expected: w.len(), actual: p.len() });
    }
    Ok(())
}

fn logits_of(p: &[f64]) -> Result<Vec<f64>> {
    p.iter().map(|&pi| logit(pi)).collect()
}

/// Geometric mixture `sigmoid(w . logit(p))`, unclipped.
pub fn geo_predict(w: &[f64], p: &[f64]) -> Result<f64> {
    check_dims(w, p)?;
    Ok(sigmoid(dot(w, &logits_of(p)?)))
}

/// Log loss `-ln GEO_w(x; p)`.
pub fn geo_loss(w: &[f64], p: &[f64], x: bool) -> Result<f64> {
    check_dims(w, p)?;
    let a = dot(w, &logits_of(p)?);
    // -ln sigmoid(a) = softplus(-a), -ln(1 - sigmoid(a)) = softplus(a)
    Ok(if x { softplus(-a) } else { softplus(a) })
}

/// Gradient of [`geo_loss`] with respect to `w`.
pub fn geo_grad(w: &[f64], p: &[f64], x: bool) -> Result<Vec<f64>> {
    check_dims(w, p)?;
    let logits = logits_of(p)?;
    let residual = sigmoid(dot(w, &logits)) - target_value(x);
    Ok(logits.iter().map(|l| residual * l).collect())
}

/// One projected gradient step on a weight row, given the logits of its inputs
/// and the (clipped) prediction it produced:
/// `w <- clip_[-b, b](w - lr * (prediction - x) * logits)`.
#[inline]
pub fn ogd_step(
    weights: &mut [f64],
    logits: &[f64],
    prediction: f64,
    target: bool,
    learning_rate: f64,
    clip_radius: f64,
) {
    let scale = -learning_rate * (prediction - target_value(target));
    if scale == 0.0 {
        return;
    }
    for (w, l) in weights.iter_mut().zip(logits) {
        *w = (*w + scale * l).clamp(-clip_radius, clip_radius);
    }
}

#[inline]
pub(crate) fn target_value(x: bool) -> f64 {
    if x {
        1.0
    } else {
        0.0
    }
}

#[inline]
fn softplus(a: f64) -> f64 {
    if a > 0.0 {
        a + libm::log1p(libm::exp(-a))
    } else {
        libm::log1p(libm::exp(a))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use std::vec::Vec;

    /// Product-of-experts form, kept only as an oracle.
    fn product_of_experts(w: &[f64], p: &[f64]) -> f64 {
        let num: f64 = w.iter().zip(p).map(|(wi, pi)| pi.powf(*wi)).product();
        let den: f64 = w.iter().zip(p).map(|(wi, pi)| (1.0 - pi).powf(*wi)).product();
        num / (num + den)
    }

    #[test]
    fn dot4_matches_dot_bitwise() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for n in [0usize, 1, 3, 4, 7, 784, 785] {
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let zs: Vec<Vec<f64>> = (0..4).map(|_| (0..n).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
            let got = dot4([&zs[0], &zs[1], &zs[2], &zs[3]], &v);
            for (g, z) in got.iter().zip(&zs) {
                assert_eq!(g.to_bits(), dot(z, &v).to_bits());
            }
        }
    }

    #[test]
    fn logit_examples() {
        assert_eq!(logit(0.5).unwrap(), 0.0);
        assert!((logit(0.8).unwrap() - 1.386_294_361_119_890_6).abs() < 1e-12);
        for t in [-3.0, 0.0, 7.0] {
            assert!((logit(sigmoid(t)).unwrap() - t).abs() < 1e-9);
        }
    }

    #[test]
    fn logit_rejects_closed_endpoints() {
        assert!(matches!(logit(0.0), Err(GlnError::ProbabilityDomain(_))));
        assert!(matches!(logit(1.0), Err(GlnError::ProbabilityDomain(_))));
        assert!(logit(f64::NAN).is_err());
    }

    #[test]
    fn predict_examples() {
        assert_eq!(geo_predict(&[0.0, 0.0, 0.0], &[0.1, 0.7, 0.99]).unwrap(), 0.5);
        assert!((geo_predict(&[1.0], &[0.3]).unwrap() - 0.3).abs() < 1e-15);
        // 0.6 / (0.6 + sqrt(0.06)), evaluated at 30 digits.
        let got = geo_predict(&[0.5, 0.5], &[0.9, 0.4]).unwrap();
        assert!((got - 0.710_102_051_443_364_4).abs() < 1e-12, "{got}");
        assert!(matches!(
            geo_predict(&[1.0, 2.0], &[0.5]),
            Err(GlnError::DimensionMismatch { expected: 2, actual: 1 })
        ));
    }

    #[test]
    fn loss_examples() {
        let ln2 = core::f64::consts::LN_2;
        assert!((geo_loss(&[0.0, 0.0], &[0.2, 0.9], true).unwrap() - ln2).abs() < 1e-15);
        assert!((geo_loss(&[1.0], &[0.3], false).unwrap() - 0.356_674_943_938_732_4).abs() < 1e-12);
        let got = geo_loss(&[0.5, 0.5], &[0.9, 0.4], true).unwrap();
        assert!((got - 0.342_346_584_848_305_2).abs() < 1e-12, "{got}");
        assert!(geo_loss(&[0.5], &[0.9, 0.4], true).is_err());
    }

    #[test]
    fn grad_examples() {
        let g = geo_grad(&[0.0], &[0.8], true).unwrap();
        assert!((g[0] + core::f64::consts::LN_2).abs() < 1e-12);
        let g = geo_grad(&[3.0, -1.0, 0.2], &[0.5, 0.5, 0.5], false).unwrap();
        assert_eq!(g, vec![0.0, 0.0, 0.0]);
        assert!(geo_grad(&[0.0], &[0.5, 0.5], true).is_err());
    }

    #[test]
    fn grad_matches_central_differences_d5() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let w: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
            let p: Vec<f64> = (0..5).map(|_| rng.random_range(0.01..0.99)).collect();
            let x = rng.random::<bool>();
            let g = geo_grad(&w, &p, x).unwrap();
            let h = 1e-6;
            for k in 0..5 {
                let mut wp = w.clone();
                let mut wm = w.clone();
                wp[k] += h;
                wm[k] -= h;
                let fd = (geo_loss(&wp, &p, x).unwrap() - geo_loss(&wm, &p, x).unwrap()) / (2.0 * h);
                let rel = (fd - g[k]).abs() / g[k].abs().max(1e-3);
                assert!(rel <= 1e-6, "component {k}: fd {fd} vs {}", g[k]);
            }
        }
    }

    #[test]
    fn geometric_mean_case() {
        let p = [0.2, 0.7, 0.55, 0.93];
        let w = [0.25; 4];
        let num: f64 = p.iter().map(|q: &f64| q.powf(0.25)).product();
        let den: f64 = p.iter().map(|q: &f64| (1.0 - q).powf(0.25)).product();
        assert!((geo_predict(&w, &p).unwrap() - num / (num + den)).abs() <= 1e-12);
    }

    #[test]
    fn veto() {
        let eps = DEFAULT_EPSILON;
        assert!(geo_predict(&[1.0, 1.0], &[eps, 0.5]).unwrap() < 2.0 * eps);
        assert!(geo_predict(&[1.0, 1.0], &[1e-6, 0.5]).unwrap() < 2e-6);
    }

    #[test]
    fn ogd_step_clips_to_hypercube() {
        let mut w = vec![2.0, -2.0, 0.5];
        // prediction 0.9 for x = 0 pushes every weight against its logit.
        ogd_step(&mut w, &[-1.0, 1.0, 0.0], 0.9, false, 0.5, 2.0);
        assert_eq!(w, vec![2.0, -2.0, 0.5]);
    }

    fn weights_and_probs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..=8)
            .prop_flat_map(|d| (prop::collection::vec(-5.0f64..5.0, d), prop::collection::vec(0.01f64..0.99, d)))
    }

    proptest! {
        #[test]
        fn sigmoid_logit_form_is_product_of_experts((w, p) in weights_and_probs()) {
            let a = geo_predict(&w, &p).unwrap();
            let b = product_of_experts(&w, &p);
            prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b);
        }

        #[test]
        fn grad_norm_bounded((w, p) in weights_and_probs(), x in any::<bool>()) {
            let g = geo_grad(&w, &p, x).unwrap();
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            let bound = (w.len() as f64).sqrt() * (1.0 / DEFAULT_EPSILON).ln();
            prop_assert!(norm <= bound);
        }

        #[test]
        fn loss_is_convex(
            (w1, p) in weights_and_probs(),
            seed in any::<u64>(),
            x in any::<bool>(),
        ) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let w2: Vec<f64> = (0..w1.len()).map(|_| rng.random_range(-5.0..5.0)).collect();
            let l1 = geo_loss(&w1, &p, x).unwrap();
            let l2 = geo_loss(&w2, &p, x).unwrap();
            for lambda in [0.25, 0.5, 0.75] {
                let mid: Vec<f64> = w1.iter().zip(&w2).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
                let lm = geo_loss(&mid, &p, x).unwrap();
                prop_assert!(lm <= lambda * l1 + (1.0 - lambda) * l2 + 1e-12);
            }
        }

        #[test]
        fn dot_matches_naive_sum(a in prop::collection::vec(-1e3f64..1e3, 0..40)) {
            let b: Vec<f64> = a.iter().map(|v| v * 0.5 - 1.0).collect();
            let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
            prop_assert!((dot(&a, &b) - naive).abs() <= 1e-9 * (1.0 + naive.abs()));
        }
    }
}
