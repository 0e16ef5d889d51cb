//! Problem instances, the orthant reduction, and the run report shared by
//! both solvers.

use serde::{Deserialize, Serialize};

use crate::error::{LpBallError, Result};
use crate::sum;

/// Projection of `y` onto `{x : Σ|x_i|^p ≤ gamma}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub y: Vec<f64>,
    pub p: f64,
    pub gamma: f64,
}

impl ProblemInstance {
    pub fn new(y: Vec<f64>, p: f64, gamma: f64) -> Result<Self> {
        let inst = Self { y, p, gamma };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.y.is_empty() {
            return Err(LpBallError::InvalidInstance("y is empty".into()));
        }
        if let Some(i) = self.y.iter().position(|v| !v.is_finite()) {
            return Err(LpBallError::InvalidInstance(format!("y[{i}] is not finite")));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(LpBallError::InvalidInstance(format!(
                "p must lie in (0, 1), got {}",
                self.p
            )));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(LpBallError::InvalidInstance(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.y.len()
    }

    /// `Σ|y_i|^p`.
    pub fn lp_mass(&self) -> f64 {
        lp_pow_sum(self.y.iter().map(|v| v.abs()), self.p)
    }

    /// `½‖x − y‖²` in the original coordinates.
    pub fn objective(&self, x: &[f64]) -> f64 {
        0.5 * sum::sum(self.y.iter().zip(x).map(|(y, x)| (x - y) * (x - y)))
    }
}

/// `Σ v_i^p` over nonnegative entries with `0^p = 0`.
pub fn lp_pow_sum<I: IntoIterator<Item = f64>>(values: I, p: f64) -> f64 {
    sum::sum(values.into_iter().map(|v| if v > 0.0 { v.powf(p) } else { 0.0 }))
}

/// True iff `Σ|y_i|^p ≤ gamma`, in which case `y` is its own projection.
pub fn inside_ball(instance: &ProblemInstance) -> bool {
    instance.lp_mass() <= instance.gamma
}

/// The instance restricted to the nonnegative orthant with exact zeros removed.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedInstance {
    /// `|y_i|` for every nonzero `y_i`, in original order.
    pub y_bar: Vec<f64>,
    /// `sign(y_i)` for every original coordinate.
    pub signs: Vec<i8>,
    /// Original positions of the removed (zero) coordinates.
    pub zero_index_map: Vec<usize>,
    /// Original positions of the kept coordinates; `y_bar[j]` came from `kept[j]`.
    kept: Vec<usize>,
    pub p: f64,
    pub gamma: f64,
}

impl ReducedInstance {
    pub fn dim(&self) -> usize {
        self.y_bar.len()
    }

    pub fn original_dim(&self) -> usize {
        self.signs.len()
    }

    /// Position in the original vector of reduced coordinate `j`.
    pub fn original_index(&self, j: usize) -> usize {
        self.kept[j]
    }

    pub fn lp_mass(&self) -> f64 {
        lp_pow_sum(self.y_bar.iter().copied(), self.p)
    }
}

pub fn split_signs(instance: &ProblemInstance) -> ReducedInstance {
    let n = instance.y.len();
    let mut y_bar = Vec::with_capacity(n);
    let mut signs = Vec::with_capacity(n);
    let mut zero_index_map = Vec::new();
    let mut kept = Vec::with_capacity(n);
    for (i, &v) in instance.y.iter().enumerate() {
        if v == 0.0 {
            signs.push(0);
            zero_index_map.push(i);
        } else {
            signs.push(if v > 0.0 { 1 } else { -1 });
            y_bar.push(v.abs());
            kept.push(i);
        }
    }
    ReducedInstance {
        y_bar,
        signs,
        zero_index_map,
        kept,
        p: instance.p,
        gamma: instance.gamma,
    }
}

/// Map a nonnegative solution of the reduced problem back to signed original
/// coordinates.
pub fn recover(reduced: &ReducedInstance, x_plus: &[f64]) -> Result<Vec<f64>> {
    if x_plus.len() != reduced.dim() {
        return Err(LpBallError::DimensionMismatch {
            expected: reduced.dim(),
            got: x_plus.len(),
        });
    }
    let mut out = vec![0.0; reduced.original_dim()];
    for (&pos, &v) in reduced.kept.iter().zip(x_plus) {
        out[pos] = f64::from(reduced.signs[pos]) * v;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    MaxIterExceeded,
    TrivialInsideBall,
    /// The root-searching baseline ended without meeting its success test.
    Failed,
}

impl RunStatus {
    pub fn is_success(self) -> bool {
        matches!(self, RunStatus::Converged | RunStatus::TrivialInsideBall)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::MaxIterExceeded => "max_iter_exceeded",
            RunStatus::TrivialInsideBall => "trivial_inside_ball",
            RunStatus::Failed => "failed",
        }
    }
}

/// Scalar record of one iteration; full vectors are only available through
/// the solver observers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateSummary {
    pub k: usize,
    pub lambda: f64,
    /// Subproblem radius (IRBP) or the bisection midpoint's `‖x‖_p^p` (RS).
    pub gamma_k: f64,
    pub alpha: f64,
    pub beta: f64,
    pub triggered: bool,
    pub eps_max: f64,
}

/// Per-bisection-step statistics of the root-searching baseline.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RsDiagnostics {
    pub bisection_iterations: usize,
    /// Newton failures (coordinates forced to zero) at each bisection step.
    pub newton_failures: Vec<usize>,
    /// Total Newton iterations at each bisection step.
    pub newton_iterations: Vec<usize>,
    /// Whether the stationarity-plus-feasibility stopping test was met.
    pub practical_termination_met: bool,
    /// Whether `(1/n)|‖x‖_p^p − γ| < 1e-8` holds at the returned point.
    pub feasibility_success: bool,
    pub lambda_low: f64,
    pub lambda_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// Solution in the original signed coordinates.
    pub x_final: Vec<f64>,
    pub lambda_final: f64,
    pub iterations: usize,
    pub status: RunStatus,
    pub history: Vec<IterateSummary>,
    pub wall_time: f64,
    /// `α/n` at the returned point.
    pub alpha_bar: f64,
    pub beta: f64,
    pub trigger_count: usize,
    pub rs: Option<RsDiagnostics>,
}

impl RunReport {
    pub(crate) fn trivial(instance: &ProblemInstance, wall_time: f64) -> Self {
        Self {
            x_final: instance.y.clone(),
            lambda_final: 0.0,
            iterations: 0,
            status: RunStatus::TrivialInsideBall,
            history: Vec::new(),
            wall_time,
            alpha_bar: 0.0,
            beta: (instance.lp_mass() - instance.gamma).abs(),
            trigger_count: 0,
            rs: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn split_positive_pair() {
        let inst = ProblemInstance::new(vec![0.5, 0.45], 0.5, 1.0).unwrap();
        let r = split_signs(&inst);
        assert_eq!(r.y_bar, vec![0.5, 0.45]);
        assert_eq!(r.signs, vec![1, 1]);
        assert!(r.zero_index_map.is_empty());
    }

    #[test]
    fn split_removes_zeros() {
        let inst = ProblemInstance::new(vec![-2.0, 0.0, 3.0], 0.5, 1.0).unwrap();
        let r = split_signs(&inst);
        assert_eq!(r.y_bar, vec![2.0, 3.0]);
        assert_eq!(r.signs, vec![-1, 0, 1]);
        assert_eq!(r.zero_index_map, vec![1]);
        assert_eq!(r.original_index(1), 2);
    }

    #[test]
    fn recover_applies_signs() {
        let inst = ProblemInstance::new(vec![-1.0, 2.0], 0.5, 1.0).unwrap();
        let r = split_signs(&inst);
        assert_eq!(recover(&r, &[0.3, 0.2]).unwrap(), vec![-0.3, 0.2]);
        assert_eq!(recover(&r, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn recover_rejects_wrong_length() {
        let inst = ProblemInstance::new(vec![-1.0, 0.0, 2.0], 0.5, 1.0).unwrap();
        let r = split_signs(&inst);
        assert_eq!(
            recover(&r, &[1.0, 2.0, 3.0]),
            Err(LpBallError::DimensionMismatch { expected: 2, got: 3 })
        );
    }

    #[test]
    fn inside_ball_examples() {
        let a = ProblemInstance::new(vec![0.1, 0.1], 0.5, 1.0).unwrap();
        // 2·√0.1 = 0.632455...
        assert!((a.lp_mass() - 2.0 * 0.1f64.sqrt()).abs() < 1e-15);
        assert!(inside_ball(&a));
        let b = ProblemInstance::new(vec![0.5, 0.45], 0.5, 1.0).unwrap();
        assert!((b.lp_mass() - 1.3779).abs() < 1e-4);
        assert!(!inside_ball(&b));
        let z = ProblemInstance::new(vec![0.0; 4], 0.3, 1e-9).unwrap();
        assert!(inside_ball(&z));
    }

    #[test]
    fn rejects_bad_instances() {
        assert!(ProblemInstance::new(vec![], 0.5, 1.0).is_err());
        assert!(ProblemInstance::new(vec![1.0], 1.0, 1.0).is_err());
        assert!(ProblemInstance::new(vec![1.0], 0.0, 1.0).is_err());
        assert!(ProblemInstance::new(vec![1.0], 0.5, 0.0).is_err());
        assert!(ProblemInstance::new(vec![f64::NAN], 0.5, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn split_then_recover_is_identity(
            y in prop::collection::vec(prop_oneof![Just(0.0), -10.0f64..10.0], 1..40)
        ) {
            let inst = ProblemInstance::new(y.clone(), 0.5, 1.0).unwrap();
            let r = split_signs(&inst);
            prop_assert!(r.y_bar.iter().all(|&v| v > 0.0));
            prop_assert_eq!(recover(&r, &r.y_bar).unwrap(), y);
        }
    }
}
