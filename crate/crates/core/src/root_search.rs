//! Root-searching (RS) baseline: bisection on the multiplier `λ`, with every
//! coordinate obtained by Newton's method on
//!
//! ```text
//! g(x) = x − ȳ_i + p λ x^{p−1} = 0
//! ```
//!
//! started from `x_ini ~ U[(2−2p)/(2−p) ȳ_i, ȳ_i]`. A coordinate whose Newton
//! solve fails is set to zero. The map `λ ↦ ‖x(λ)‖_p^p` jumps wherever a
//! coordinate drops to zero, so the bisection can end without hitting `γ`;
//! such runs are reported as failures.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LpBallError, Result};
use crate::problem::{
    inside_ball, lp_pow_sum, recover, split_signs, IterateSummary, ProblemInstance, RsDiagnostics,
    RunReport, RunStatus,
};
use crate::residual::{residual_alpha, residual_beta};

/// Newton is declared stalled when `|g'(x)|` falls below this.
const FLAT_DERIVATIVE: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RsOptions {
    pub lambda_low_init: f64,
    /// Stop once `λ_high − λ_low` drops below this.
    pub interval_tol: f64,
    pub iter_max: usize,
    pub newton_max_iter: usize,
    /// Accept a Newton iterate once `|g(x)|` is at most this.
    pub newton_tol: f64,
    /// Success test: `(1/n)|‖x‖_p^p − γ| < success_tol`.
    pub success_tol: f64,
    /// Tolerance of the stationarity-plus-feasibility stopping test.
    pub delta_tol: f64,
    pub seed: u64,
}

impl Default for RsOptions {
    fn default() -> Self {
        Self {
            lambda_low_init: 1e-15,
            interval_tol: 1e-10,
            iter_max: 1000,
            newton_max_iter: 50,
            newton_tol: 1e-12,
            success_tol: 1e-8,
            delta_tol: 1e-8,
            seed: 0,
        }
    }
}

impl RsOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda_low_init", self.lambda_low_init),
            ("interval_tol", self.interval_tol),
            ("newton_tol", self.newton_tol),
            ("success_tol", self.success_tol),
            ("delta_tol", self.delta_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(LpBallError::InvalidOptions(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.newton_max_iter == 0 {
            return Err(LpBallError::InvalidOptions("newton_max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// Initial upper end of the bisection bracket,
/// `‖ȳ‖_∞^{2−p} / (p(1−p)(1/(1−p) + 1)^{2−p})`.
///
/// Above this value `g` has no root for any coordinate.
pub fn lambda_high_init(y_bar: &[f64], p: f64) -> f64 {
    let y_max = y_bar.iter().cloned().fold(0.0, f64::max);
    y_max.powf(2.0 - p) / (p * (1.0 - p) * (1.0 / (1.0 - p) + 1.0).powf(2.0 - p))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOutcome {
    /// The root, or 0 when Newton failed.
    pub x: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Newton's method on `g` from a given starting point.
///
/// Fails when an iterate leaves `(0, ȳ_i]`, when `g'` is numerically zero,
/// or when the iteration budget runs out.
pub fn newton_from(y_i: f64, lambda: f64, p: f64, x_init: f64, opts: &RsOptions) -> NewtonOutcome {
    let c = p * lambda;
    let g = |x: f64| x - y_i + c * x.powf(p - 1.0);
    let dg = |x: f64| 1.0 + c * (p - 1.0) * x.powf(p - 2.0);
    let failed = |iterations| NewtonOutcome {
        x: 0.0,
        iterations,
        converged: false,
    };

    let mut x = x_init;
    for it in 0..opts.newton_max_iter {
        if !(x > 0.0 && x <= y_i) {
            return failed(it);
        }
        let gx = g(x);
        let d = dg(x);
        if gx.abs() <= opts.newton_tol {
            // One polishing step; keep it only if it stays valid.
            if d.abs() >= FLAT_DERIVATIVE {
                let polished = x - gx / d;
                if polished > 0.0 && polished <= y_i && g(polished).abs() <= gx.abs() {
                    x = polished;
                }
            }
            return NewtonOutcome {
                x,
                iterations: it,
                converged: true,
            };
        }
        if d.abs() < FLAT_DERIVATIVE {
            return failed(it);
        }
        x -= gx / d;
    }
    if x > 0.0 && x <= y_i && g(x).abs() <= opts.newton_tol {
        return NewtonOutcome {
            x,
            iterations: opts.newton_max_iter,
            converged: true,
        };
    }
    failed(opts.newton_max_iter)
}

/// Lower end of the Newton starting interval, `(2−2p)/(2−p) · ȳ_i`.
pub fn newton_start_low(y_i: f64, p: f64) -> f64 {
    (2.0 - 2.0 * p) / (2.0 - p) * y_i
}

/// Newton solve from a random start in `[(2−2p)/(2−p) ȳ_i, ȳ_i]`.
pub fn newton_coordinate<R: Rng + ?Sized>(
    y_i: f64,
    lambda: f64,
    p: f64,
    rng: &mut R,
    opts: &RsOptions,
) -> NewtonOutcome {
    let lo = newton_start_low(y_i, p);
    let x_init = lo + (y_i - lo) * rng.gen::<f64>();
    newton_from(y_i, lambda, p, x_init, opts)
}

pub fn rs_solve(instance: &ProblemInstance, opts: &RsOptions) -> Result<RunReport> {
    instance.validate()?;
    opts.validate()?;
    let start = Instant::now();
    if inside_ball(instance) {
        return Ok(RunReport::trivial(instance, start.elapsed().as_secs_f64()));
    }

    let reduced = split_signs(instance);
    let (p, gamma) = (reduced.p, reduced.gamma);
    let y_bar = &reduced.y_bar;
    let n = reduced.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut lo = opts.lambda_low_init;
    let mut hi = lambda_high_init(y_bar, p);
    // x⁰ = 0 gives α = 0 and β = γ.
    let threshold = opts.delta_tol * gamma.max(1.0);

    let mut x = vec![0.0; n];
    let mut lambda = 0.0;
    let mut alpha = 0.0;
    let mut diag = RsDiagnostics::default();
    let mut history = Vec::new();
    let mut k = 0;

    while hi - lo >= opts.interval_tol && k <= opts.iter_max {
        lambda = 0.5 * (lo + hi);
        let mut failures = 0;
        let mut newton_iters = 0;
        for (xi, &yi) in x.iter_mut().zip(y_bar) {
            let out = newton_coordinate(yi, lambda, p, &mut rng, opts);
            newton_iters += out.iterations;
            if !out.converged {
                failures += 1;
            }
            *xi = out.x;
        }
        diag.newton_failures.push(failures);
        diag.newton_iterations.push(newton_iters);

        let mass = lp_pow_sum(x.iter().copied(), p);
        alpha = residual_alpha(&x, lambda, y_bar, p);
        let beta = (mass - gamma).abs();
        history.push(IterateSummary {
            k,
            lambda,
            gamma_k: mass,
            alpha,
            beta,
            triggered: false,
            eps_max: 0.0,
        });
        k += 1;

        if (alpha / n as f64).max(beta) <= threshold {
            diag.practical_termination_met = true;
            break;
        }
        if mass > gamma {
            lo = lambda;
        } else if mass < gamma {
            hi = lambda;
        }
    }

    let beta = residual_beta(&x, p, gamma);
    diag.bisection_iterations = k;
    diag.feasibility_success = beta / (n as f64) < opts.success_tol;
    diag.lambda_low = lo;
    diag.lambda_high = hi;
    let status = if diag.feasibility_success {
        RunStatus::Converged
    } else {
        RunStatus::Failed
    };

    Ok(RunReport {
        x_final: recover(&reduced, &x)?,
        lambda_final: lambda,
        iterations: k,
        status,
        history,
        wall_time: start.elapsed().as_secs_f64(),
        alpha_bar: alpha / n as f64,
        beta,
        trigger_count: 0,
        rs: Some(diag),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Larger root of `g` by bisection on `[x_min, ȳ]`, where `x_min` is the
    /// minimizer of the convex function `g`. `None` if `g > 0` throughout.
    fn bisection_root(y: f64, lambda: f64, p: f64) -> Option<f64> {
        let g = |x: f64| x - y + p * lambda * x.powf(p - 1.0);
        let x_min = (lambda * p * (1.0 - p)).powf(1.0 / (2.0 - p));
        if x_min >= y || g(x_min) > 0.0 {
            return None;
        }
        let (mut a, mut b) = (x_min, y);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if g(m) <= 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        Some(0.5 * (a + b))
    }

    #[test]
    fn lambda_high_examples() {
        let a = lambda_high_init(&[0.5, 0.1], 0.5);
        assert!((a - 0.5f64.powf(1.5) / (0.25 * 3f64.powf(1.5))).abs() < 1e-15);
        assert!((a - 0.2722).abs() < 1e-4);
        let b = lambda_high_init(&[1.0], 0.8);
        assert!((b - 0.728).abs() < 1e-3);
        assert!(lambda_high_init(&[2.0], 0.5) > lambda_high_init(&[1.0], 0.5));
    }

    #[test]
    fn tiny_multiplier_returns_nearly_y() {
        let opts = RsOptions::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = newton_coordinate(0.7, 1e-15, 0.5, &mut rng, &opts);
        assert!(out.converged);
        assert!((out.x - 0.7).abs() < 1e-13);
    }

    #[test]
    fn matches_bisection_oracle() {
        let root = bisection_root(0.5, 0.1, 0.5).unwrap();
        assert!((root - 0.42219).abs() < 1e-2);
        let opts = RsOptions::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let out = newton_coordinate(0.5, 0.1, 0.5, &mut rng, &opts);
            assert!(out.converged);
            assert!((out.x - root).abs() < 1e-12);
        }
    }

    #[test]
    fn no_root_gives_zero() {
        let (y, p) = (0.5, 0.5);
        let lambda = 2.0 * lambda_high_init(&[y], p);
        assert!(bisection_root(y, lambda, p).is_none());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let out = newton_coordinate(y, lambda, p, &mut rng, &RsOptions::default());
        assert!(!out.converged);
        assert_eq!(out.x, 0.0);
    }

    #[test]
    fn inside_ball_input_is_returned() {
        let inst = ProblemInstance::new(vec![0.01, -0.02], 0.5, 1.0).unwrap();
        let report = rs_solve(&inst, &RsOptions::default()).unwrap();
        assert_eq!(report.status, RunStatus::TrivialInsideBall);
        assert_eq!(report.x_final, inst.y);
    }

    #[test]
    fn two_dimensional_example_is_self_consistent() {
        let inst = ProblemInstance::new(vec![0.5, -0.45], 0.5, 1.0).unwrap();
        for seed in 0..10 {
            let opts = RsOptions { seed, ..RsOptions::default() };
            let report = rs_solve(&inst, &opts).unwrap();
            let diag = report.rs.as_ref().unwrap();
            assert!(diag.bisection_iterations > 0);
            if report.status != RunStatus::Converged {
                continue;
            }
            assert!(report.beta / 2.0 < 1e-8);
            for (&x, &y) in report.x_final.iter().zip(&inst.y) {
                assert!(x * y >= 0.0);
                let (xa, ya) = (x.abs(), y.abs());
                if xa > 0.0 {
                    let g = xa - ya + 0.5 * report.lambda_final * xa.powf(-0.5);
                    assert!(g.abs() <= opts.newton_tol);
                }
            }
        }
    }

    #[test]
    fn bracket_shrinks() {
        let inst = ProblemInstance::new(vec![0.5, 0.45, 0.3, 0.2], 0.4, 1.0).unwrap();
        let report = rs_solve(&inst, &RsOptions::default()).unwrap();
        let diag = report.rs.unwrap();
        assert!(diag.lambda_low < diag.lambda_high || diag.practical_termination_met);
        assert!(diag.bisection_iterations <= 1001);
    }
}
