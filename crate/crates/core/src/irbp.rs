//! Iteratively reweighted ℓ1-ball projection (IRBP).
//!
//! Each iteration linearizes the perturbed constraint `Σ (x_i + ε_i)^p ≤ γ`
//! at the current iterate, which yields a weighted ℓ1 ball
//! `{x ≥ 0 : Σ w_i x_i ≤ γ^k}` inside the perturbed ℓp ball, and projects `ȳ`
//! onto it. The perturbation `ε` is shrunk by a factor `θ` whenever the step
//! is small relative to the weights:
//!
//! ```text
//! ‖x^{k+1} − x^k‖₂ · ‖sign(x^{k+1} − x^k) ∘ w^k‖₂^τ ≤ M
//! ```
//!
//! Runs stop when `max(α/n, β) ≤ δ_tol · max(α(x⁰, λ⁰)/n, β(x⁰), 1)`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LpBallError, Result};
use crate::problem::{
    inside_ball, lp_pow_sum, recover, split_signs, IterateSummary, ProblemInstance,
    ReducedInstance, RunReport, RunStatus,
};
use crate::residual::{lambda_estimate, residual_alpha, residual_beta};
use crate::sum::{self, CompensatedSum};
use crate::weighted_l1::project_weighted_l1_point;

/// Relative slack on `‖x + ε‖_p^p ≤ γ`.
pub const FEASIBILITY_SLACK: f64 = 1e-12;
/// Absolute slack on the per-step descent inequality.
pub const DESCENT_SLACK: f64 = 1e-12;
/// Relative slack on `Σ w_i x_i^{k+1} = γ^k`.
pub const TIGHTNESS_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Exponent on the weight norm in the trigger test; must exceed 1.
    pub tau: f64,
    /// Right-hand side `M` of the trigger test.
    pub big_m: f64,
    pub delta_tol: f64,
    pub max_iter: usize,
    /// Lower clamp on the shrink factor θ.
    pub theta_floor: f64,
    /// Upper clamp on the shrink factor θ.
    pub theta_cap: f64,
    /// Seed for the random initial perturbation.
    pub seed: u64,
    /// Check the descent, feasibility and bound invariants at every step.
    pub audit: bool,
    /// Keep `ε` fixed at its initial value (fixed-perturbation variant).
    pub freeze_epsilon: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tau: 1.1,
            big_m: 100.0,
            delta_tol: 1e-8,
            max_iter: 1000,
            theta_floor: 1e-12,
            theta_cap: 0.99,
            seed: 0,
            audit: true,
            freeze_epsilon: false,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(LpBallError::InvalidOptions(msg));
        if !(self.tau > 1.0 && self.tau.is_finite()) {
            return bad(format!("tau must exceed 1, got {}", self.tau));
        }
        if !(self.big_m > 0.0 && self.big_m.is_finite()) {
            return bad(format!("big_m must be positive, got {}", self.big_m));
        }
        if !(self.delta_tol > 0.0) {
            return bad(format!("delta_tol must be positive, got {}", self.delta_tol));
        }
        if !(0.0 < self.theta_floor && self.theta_floor < self.theta_cap && self.theta_cap < 1.0) {
            return bad(format!(
                "need 0 < theta_floor < theta_cap < 1, got {} and {}",
                self.theta_floor, self.theta_cap
            ));
        }
        Ok(())
    }
}

/// Solver state after `k` iterations.
///
/// `w` and `gamma_k` describe the subproblem whose solution is `x`; they are
/// empty (`w`) and NaN (`gamma_k`) for the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub k: usize,
    pub x: Vec<f64>,
    pub eps: Vec<f64>,
    pub w: Vec<f64>,
    pub lambda: f64,
    pub gamma_k: f64,
    pub alpha_res: f64,
    pub beta_res: f64,
    /// Whether the transition into this state shrank `ε`.
    pub triggered: bool,
}

impl IterateState {
    fn summary(&self) -> IterateSummary {
        IterateSummary {
            k: self.k,
            lambda: self.lambda,
            gamma_k: self.gamma_k,
            alpha: self.alpha_res,
            beta: self.beta_res,
            triggered: self.triggered,
            eps_max: self.eps.iter().cloned().fold(0.0, f64::max),
        }
    }
}

/// Perturbation vector together with its update history.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonSchedule {
    pub eps: Vec<f64>,
    /// Last θ applied, or 1 if the update never fired.
    pub theta_last: f64,
    /// Iterations `k` whose trigger test passed.
    pub trigger_log: Vec<usize>,
}

impl EpsilonSchedule {
    pub fn new(eps: Vec<f64>) -> Self {
        Self {
            eps,
            theta_last: 1.0,
            trigger_log: Vec::new(),
        }
    }
}

/// `ε⁰ = 0.9 (γ ν / ‖ν‖₁)^{1/p}` with `ν_i ~ U(0, 1]`, so `‖ε⁰‖_p^p = 0.9^p γ`.
pub fn initial_epsilon(n: usize, p: f64, gamma: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nu: Vec<f64> = (0..n).map(|_| 1.0 - rng.gen::<f64>()).collect();
    let total = sum::sum(nu.iter().copied());
    nu.iter()
        .map(|v| 0.9 * (gamma * v / total).powf(1.0 / p))
        .collect()
}

pub fn init_state(reduced: &ReducedInstance, opts: &SolverOptions) -> IterateState {
    let eps = initial_epsilon(reduced.dim(), reduced.p, reduced.gamma, opts.seed);
    state_at_origin(reduced, eps)
}

/// Start from `x⁰ = 0` with a caller-supplied perturbation.
pub fn init_state_with_eps(reduced: &ReducedInstance, eps0: &[f64]) -> Result<IterateState> {
    if eps0.len() != reduced.dim() {
        return Err(LpBallError::DimensionMismatch {
            expected: reduced.dim(),
            got: eps0.len(),
        });
    }
    if let Some(i) = eps0.iter().position(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(LpBallError::InvalidOptions(format!(
            "initial perturbation must be strictly positive (index {i})"
        )));
    }
    let mass = lp_pow_sum(eps0.iter().copied(), reduced.p);
    if mass >= reduced.gamma {
        return Err(LpBallError::InvalidOptions(format!(
            "initial perturbation has ‖ε‖_p^p = {mass} ≥ γ = {}",
            reduced.gamma
        )));
    }
    Ok(state_at_origin(reduced, eps0.to_vec()))
}

fn state_at_origin(reduced: &ReducedInstance, eps: Vec<f64>) -> IterateState {
    let n = reduced.dim();
    let x = vec![0.0; n];
    IterateState {
        k: 0,
        alpha_res: 0.0,
        beta_res: residual_beta(&x, reduced.p, reduced.gamma),
        x,
        eps,
        w: Vec::new(),
        lambda: 0.0,
        gamma_k: f64::NAN,
        triggered: false,
    }
}

/// `w_i = p (x_i + ε_i)^{p−1}`.
pub fn compute_weights(x: &[f64], eps: &[f64], p: f64) -> Vec<f64> {
    x.iter()
        .zip(eps)
        .map(|(&xi, &ei)| p * (xi + ei).powf(p - 1.0))
        .collect()
}

/// `γ^k = γ − Σ (x_i + ε_i)^p + Σ w_i x_i`.
pub fn subproblem_radius(x: &[f64], eps: &[f64], w: &[f64], p: f64, gamma: f64) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    acc.add(gamma);
    for ((&xi, &ei), &wi) in x.iter().zip(eps).zip(w) {
        acc.add(-(xi + ei).powf(p));
        if xi > 0.0 {
            acc.add(wi * xi);
        }
    }
    let r = acc.value();
    if r > 0.0 {
        Ok(r)
    } else {
        Err(LpBallError::InvariantViolation {
            iteration: 0,
            what: format!("subproblem radius is not positive ({r})"),
        })
    }
}

/// Weights and subproblem radius in one pass, sharing `(x_i + ε_i)^p`
/// between `w_i = p (x_i + ε_i)^p / (x_i + ε_i)` and the radius sum.
pub fn weights_and_radius(
    x: &[f64],
    eps: &[f64],
    p: f64,
    gamma: f64,
) -> Result<(Vec<f64>, f64)> {
    let mut acc = CompensatedSum::new();
    acc.add(gamma);
    let mut w = Vec::with_capacity(x.len());
    for (&xi, &ei) in x.iter().zip(eps) {
        let shifted = xi + ei;
        let pow = shifted.powf(p);
        let wi = p * pow / shifted;
        acc.add(-pow);
        if xi > 0.0 {
            acc.add(wi * xi);
        }
        w.push(wi);
    }
    let r = acc.value();
    if r > 0.0 {
        Ok((w, r))
    } else {
        Err(LpBallError::InvariantViolation {
            iteration: 0,
            what: format!("subproblem radius is not positive ({r})"),
        })
    }
}

/// Left-hand side of the perturbation-update test.
pub fn trigger_statistic(x: &[f64], x_next: &[f64], w: &[f64], tau: f64) -> f64 {
    let mut step = CompensatedSum::new();
    let mut weights = CompensatedSum::new();
    for ((&a, &b), &wi) in x.iter().zip(x_next).zip(w) {
        let d = b - a;
        if d != 0.0 {
            step.add(d * d);
            weights.add(wi * wi);
        }
    }
    step.value().sqrt() * weights.value().sqrt().powf(tau)
}

/// `θ = min(β, 1/√max(k,1))^{1/p}`, clamped to `[theta_floor, theta_cap]`.
pub fn shrink_factor(beta_next: f64, k: usize, p: f64, opts: &SolverOptions) -> f64 {
    let base = beta_next.min(1.0 / (k.max(1) as f64).sqrt());
    let theta = base.powf(1.0 / p);
    if theta.is_nan() {
        return opts.theta_floor;
    }
    theta.clamp(opts.theta_floor, opts.theta_cap)
}

/// Apply the perturbation update for the transition `x^k → x^{k+1}`.
///
/// `state` holds `x^k, ε^k` and `w` must be the weights built from them.
/// Apply the trigger test to the step `state.x → x_next` and, if it fires,
/// shrink the perturbation in place. `beta_next` is the feasibility residual
/// at `x_next`. Returns whether the trigger fired.
pub fn update_epsilon(
    schedule: &mut EpsilonSchedule,
    state: &IterateState,
    w: &[f64],
    x_next: &[f64],
    beta_next: f64,
    p: f64,
    opts: &SolverOptions,
) -> bool {
    if !(trigger_statistic(&state.x, x_next, w, opts.tau) <= opts.big_m) {
        return false;
    }
    schedule.trigger_log.push(state.k);
    if opts.freeze_epsilon {
        return true;
    }
    let theta = shrink_factor(beta_next, state.k, p, opts);
    schedule.theta_last = theta;
    for e in schedule.eps.iter_mut() {
        // Stay strictly positive once the perturbation reaches the bottom of
        // the normal range.
        *e = (theta * *e).max(f64::MIN_POSITIVE);
    }
    true
}

fn violation(iteration: usize, what: String) -> LpBallError {
    LpBallError::InvariantViolation { iteration, what }
}

/// One IRBP iteration: weights, radius, projection, multiplier, update.
pub fn step(
    state: &IterateState,
    schedule: &mut EpsilonSchedule,
    reduced: &ReducedInstance,
    opts: &SolverOptions,
) -> Result<IterateState> {
    let (p, gamma, y_bar) = (reduced.p, reduced.gamma, &reduced.y_bar);
    let k = state.k;

    let (w, r) = weights_and_radius(&state.x, &state.eps, p, gamma).map_err(|e| match e {
        LpBallError::InvariantViolation { what, .. } => violation(k, what),
        other => other,
    })?;
    let (x_next, _) = project_weighted_l1_point(y_bar, &w, r)?;
    let lambda = lambda_estimate(&x_next, y_bar, &w).map_err(|_| {
        violation(k, "subproblem solution has empty support".into())
    })?;

    let beta_res = residual_beta(&x_next, p, gamma);
    let triggered = update_epsilon(schedule, state, &w, &x_next, beta_res, p, opts);

    if opts.audit {
        audit_step(state, &w, r, &x_next, lambda, &schedule.eps, reduced)?;
    }

    let alpha_res = residual_alpha(&x_next, lambda, y_bar, p);
    Ok(IterateState {
        k: k + 1,
        x: x_next,
        eps: schedule.eps.clone(),
        w,
        lambda,
        gamma_k: r,
        alpha_res,
        beta_res,
        triggered,
    })
}

fn audit_step(
    state: &IterateState,
    w: &[f64],
    r: f64,
    x_next: &[f64],
    lambda: f64,
    eps_next: &[f64],
    reduced: &ReducedInstance,
) -> Result<()> {
    let (p, gamma, y_bar) = (reduced.p, reduced.gamma, &reduced.y_bar);
    let k = state.k;

    if let Some(i) = x_next
        .iter()
        .zip(y_bar)
        .position(|(&x, &y)| !(0.0..=y).contains(&x))
    {
        return Err(violation(k, format!("x[{i}] = {} outside [0, ȳ_i]", x_next[i])));
    }
    if x_next.iter().all(|&v| v == 0.0) {
        return Err(violation(k, "empty support".into()));
    }

    let mass = lp_pow_sum(x_next.iter().zip(eps_next).map(|(a, b)| a + b), p);
    if mass > gamma * (1.0 + FEASIBILITY_SLACK) {
        return Err(violation(k, format!("‖x + ε‖_p^p = {mass} exceeds γ = {gamma}")));
    }

    // ‖x^k − ȳ‖² − ‖x^{k+1} − ȳ‖² − ‖x^k − x^{k+1}‖² = 2⟨x^{k+1} − ȳ, x^k − x^{k+1}⟩
    let gain = 2.0
        * sum::sum(
            x_next
                .iter()
                .zip(&state.x)
                .zip(y_bar)
                .map(|((&xn, &xo), &y)| (xn - y) * (xo - xn)),
        );
    if gain < -DESCENT_SLACK {
        return Err(violation(k, format!("descent inequality fails by {}", -gain)));
    }

    let load = sum::sum(w.iter().zip(x_next).map(|(a, b)| a * b));
    if (load - r).abs() > TIGHTNESS_SLACK * r.max(1.0) {
        return Err(violation(k, format!("Σ w x = {load} but γ^k = {r}")));
    }

    let bound = lambda_upper_bound(y_bar, &state.eps, p);
    if lambda > bound {
        return Err(violation(k, format!("λ = {lambda} exceeds bound {bound}")));
    }
    Ok(())
}

/// `‖ȳ‖₁ / (p (‖ȳ‖_∞ + ‖ε‖_∞)^{p−1})`, an upper bound on every subproblem
/// multiplier built from perturbation `eps`.
pub fn lambda_upper_bound(y_bar: &[f64], eps: &[f64], p: f64) -> f64 {
    let y_inf = y_bar.iter().cloned().fold(0.0, f64::max);
    let e_inf = eps.iter().cloned().fold(0.0, f64::max);
    sum::sum(y_bar.iter().copied()) / (p * (y_inf + e_inf).powf(p - 1.0))
}

/// Right-hand side of the stopping test.
pub fn termination_threshold(initial: &IterateState, n: usize, opts: &SolverOptions) -> f64 {
    let alpha_bar0 = initial.alpha_res / n.max(1) as f64;
    opts.delta_tol * alpha_bar0.max(initial.beta_res).max(1.0)
}

/// Project `instance.y` with a seeded random initial perturbation.
pub fn solve(instance: &ProblemInstance, opts: &SolverOptions) -> Result<RunReport> {
    solve_observed(instance, opts, None, |_| {})
}

/// Project with a given initial perturbation (reduced coordinates).
pub fn solve_with_initial_eps(
    instance: &ProblemInstance,
    opts: &SolverOptions,
    eps0: &[f64],
) -> Result<RunReport> {
    solve_observed(instance, opts, Some(eps0), |_| {})
}

/// Full solver loop; `observer` sees the initial state and every iterate.
pub fn solve_observed<F>(
    instance: &ProblemInstance,
    opts: &SolverOptions,
    eps0: Option<&[f64]>,
    mut observer: F,
) -> Result<RunReport>
where
    F: FnMut(&IterateState),
{
    instance.validate()?;
    opts.validate()?;
    let start = Instant::now();
    if inside_ball(instance) {
        return Ok(RunReport::trivial(instance, start.elapsed().as_secs_f64()));
    }

    let reduced = split_signs(instance);
    let n = reduced.dim();
    let mut state = match eps0 {
        Some(e) => init_state_with_eps(&reduced, e)?,
        None => init_state(&reduced, opts),
    };
    observer(&state);
    let threshold = termination_threshold(&state, n, opts);
    let mut schedule = EpsilonSchedule::new(state.eps.clone());
    let mut history = Vec::new();
    let mut status = RunStatus::MaxIterExceeded;

    while state.k < opts.max_iter {
        state = step(&state, &mut schedule, &reduced, opts)?;
        observer(&state);
        history.push(state.summary());
        let alpha_bar = state.alpha_res / n as f64;
        if alpha_bar.max(state.beta_res) <= threshold {
            status = RunStatus::Converged;
            break;
        }
    }

    let x_final = recover(&reduced, &state.x)?;
    Ok(RunReport {
        x_final,
        lambda_final: state.lambda,
        iterations: state.k,
        status,
        history,
        wall_time: start.elapsed().as_secs_f64(),
        alpha_bar: state.alpha_res / n as f64,
        beta: state.beta_res,
        trigger_count: schedule.trigger_log.len(),
        rs: None,
    })
}
