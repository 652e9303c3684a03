//! Scalar probability kernels of the three model layers.

use super::params::StructuralParameters;
use super::pattern::{AttributePattern, PatternSpace};

/// Numerically stable logistic function.
#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// `ln logistic(x)` without cancellation for large |x|.
#[inline]
pub fn log_logistic(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Guessing and slipping probabilities implied by the DINA log-linear form.
pub fn guess_slip_from_loglinear(lambda0: f64, lambda_k: f64) -> (f64, f64) {
    (logistic(lambda0), 1.0 - logistic(lambda0 + lambda_k))
}

/// Inverse of [`guess_slip_from_loglinear`].
pub fn loglinear_from_guess_slip(guess: f64, slip: f64) -> (f64, f64) {
    let lambda0 = logit(guess);
    (lambda0, logit(1.0 - slip) - lambda0)
}

/// Success probability of one administration: `logistic(λ₀ + λ_K·η + s·γ)`.
///
/// `eta` is the conjunctive indicator for the item's required attributes on
/// its occasion; `slope` is zero for items outside any anchor group.
#[inline]
pub fn response_probability(lambda0: f64, lambda_k: f64, eta: bool, slope: f64, gamma: f64) -> f64 {
    logistic(lambda0 + if eta { lambda_k } else { 0.0 } + slope * gamma)
}

/// Mastery probability of one attribute given the occasion's general ability.
#[inline]
pub fn attribute_mastery_probability(delta: f64, beta: f64, theta: f64) -> f64 {
    logistic(delta * theta + beta)
}

/// Prior probability of a longitudinal attribute pattern given the ability
/// vector, with attributes independent given θ.
pub fn profile_prior_given_theta(
    structural: &StructuralParameters,
    space: &PatternSpace,
    theta: &[f64],
    pattern: AttributePattern,
) -> f64 {
    let mut prob = 1.0;
    for (t, &th) in theta.iter().enumerate().take(space.occasions()) {
        for k in 0..space.attributes() {
            let p = attribute_mastery_probability(structural.delta[k], structural.beta[k], th);
            prob *= if space.has_attribute(pattern, t, k) { p } else { 1.0 - p };
        }
    }
    prob
}

/// Per-occasion prior over the `2^K` patterns of one occasion at ability `theta`.
pub fn occasion_pattern_prior(delta: &[f64], beta: &[f64], theta: f64, out: &mut [f64]) {
    let k = delta.len();
    let probs: Vec<f64> = (0..k)
        .map(|a| attribute_mastery_probability(delta[a], beta[a], theta))
        .collect();
    for (pattern, slot) in out.iter_mut().enumerate().take(1 << k) {
        let mut v = 1.0;
        for (a, &p) in probs.iter().enumerate() {
            v *= if pattern >> a & 1 == 1 { p } else { 1.0 - p };
        }
        *slot = v;
    }
}
