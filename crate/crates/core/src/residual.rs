//! Optimality residuals for the reduced problem
//! `min ½‖x − ȳ‖²  s.t.  Σ x_i^p ≤ γ, x ≥ 0`.
//!
//! A pair `(x, λ)` is first-order stationary iff `α(x, λ) = 0` and
//! `β(x) = 0`, where
//!
//! ```text
//! α(x, λ) = Σ |(ȳ_i − x_i) x_i − λ p x_i^p|
//! β(x)    = |Σ x_i^p − γ|
//! ```
//!
//! The relaxed versions replace `x_i^p` by `(x_i + ε_i)^p` and `x_i^p` inside
//! `α` by `(x_i + ε_i)^{p−1} x_i`. All sums are compensated.

use crate::error::{LpBallError, Result};
use crate::problem::lp_pow_sum;
use crate::sum::{self, CompensatedSum};

/// Stationarity residual `α(x, λ)`. Terms with `x_i = 0` contribute zero.
pub fn residual_alpha(x: &[f64], lambda: f64, y_bar: &[f64], p: f64) -> f64 {
    debug_assert_eq!(x.len(), y_bar.len());
    sum::sum(x.iter().zip(y_bar).map(|(&xi, &yi)| {
        if xi > 0.0 {
            ((yi - xi) * xi - lambda * p * xi.powf(p)).abs()
        } else {
            0.0
        }
    }))
}

/// `α(x, λ) / n`, the scale used by the stopping test.
pub fn residual_alpha_bar(x: &[f64], lambda: f64, y_bar: &[f64], p: f64) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    residual_alpha(x, lambda, y_bar, p) / x.len() as f64
}

/// Feasibility residual `β(x) = |Σ x_i^p − γ|`.
pub fn residual_beta(x: &[f64], p: f64, gamma: f64) -> f64 {
    (lp_pow_sum(x.iter().copied(), p) - gamma).abs()
}

/// Relaxed residuals `(α_ε, β_ε)` for a strictly positive perturbation `eps`.
pub fn relaxed_residuals(
    x: &[f64],
    lambda: f64,
    eps: &[f64],
    y_bar: &[f64],
    p: f64,
    gamma: f64,
) -> (f64, f64) {
    debug_assert!(x.len() == eps.len() && x.len() == y_bar.len());
    let mut alpha = CompensatedSum::new();
    let mut mass = CompensatedSum::new();
    for ((&xi, &ei), &yi) in x.iter().zip(eps).zip(y_bar) {
        let shifted = xi + ei;
        if xi > 0.0 {
            alpha.add(((yi - xi) * xi - lambda * p * shifted.powf(p - 1.0) * xi).abs());
        }
        mass.add(shifted.powf(p));
    }
    (alpha.value(), (mass.value() - gamma).abs())
}

/// Multiplier of the weighted ℓ1 subproblem recovered from its solution:
/// `λ = Σ_{i∈I}(ȳ_i − x_i) / Σ_{i∈I} w_i` over the support `I = {i : x_i > 0}`.
pub fn lambda_estimate(x: &[f64], y_bar: &[f64], w: &[f64]) -> Result<f64> {
    let mut num = CompensatedSum::new();
    let mut den = CompensatedSum::new();
    let mut support = 0usize;
    for ((&xi, &yi), &wi) in x.iter().zip(y_bar).zip(w) {
        if xi > 0.0 {
            num.add(yi - xi);
            den.add(wi);
            support += 1;
        }
    }
    if support == 0 {
        return Err(LpBallError::EmptySupport);
    }
    Ok((num.value() / den.value()).max(0.0))
}
