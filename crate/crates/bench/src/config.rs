use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use lpball::{RsOptions, SolverOptions};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::instance::DEFAULT_NOISE_VARIANCE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Path2d,
    Profile,
    Scaling,
    Sensitivity,
}

impl Experiment {
    pub const ALL: [Experiment; 4] = [
        Experiment::Path2d,
        Experiment::Profile,
        Experiment::Scaling,
        Experiment::Sensitivity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::Path2d => "path2d",
            Experiment::Profile => "profile",
            Experiment::Scaling => "scaling",
            Experiment::Sensitivity => "sensitivity",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| format!("unknown experiment {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Irbp,
    Rs,
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::Irbp => "irbp",
            SolverKind::Rs => "rs",
        }
    }
}

impl FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "irbp" => Ok(SolverKind::Irbp),
            "rs" => Ok(SolverKind::Rs),
            _ => Err(format!("unknown solver {s:?}")),
        }
    }
}

fn default_gamma() -> f64 {
    1.0
}
fn default_num_instances() -> usize {
    1
}
fn default_noise() -> f64 {
    DEFAULT_NOISE_VARIANCE
}
fn default_m_list() -> Vec<f64> {
    vec![10.0, 1e2, 1e3, 1e4]
}
fn default_tau_list() -> Vec<f64> {
    vec![1.01, 1.1, 1.5, 1.8]
}
fn default_profile_solvers() -> Vec<SolverKind> {
    vec![SolverKind::Irbp, SolverKind::Rs]
}
fn default_path2d_y() -> Vec<f64> {
    vec![0.5, 0.45]
}
fn default_path2d_eps() -> Option<Vec<f64>> {
    Some(vec![0.072, 0.463])
}

/// One experiment run. Keys are snake_case; everything except `experiment`,
/// `n_list` and `p_list` has a default.
///
/// Instance seeds are `seeds` when given (then `num_instances` must match its
/// length) and `0..num_instances` otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n_list: Vec<usize>,
    pub p_list: Vec<f64>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_num_instances")]
    pub num_instances: usize,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub solver_opts: SolverOptions,
    #[serde(default)]
    pub rs_opts: RsOptions,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Run the per-iteration audits. Overrides `solver_opts.audit`; timings
    /// include the audit cost only when this is set.
    #[serde(default)]
    pub audit: bool,
    /// Variance of the generated entries of `y`.
    #[serde(default = "default_noise")]
    pub noise_variance: f64,
    /// Sensitivity grid over the trigger constant M.
    #[serde(default = "default_m_list")]
    pub m_list: Vec<f64>,
    /// Sensitivity grid over the trigger exponent τ.
    #[serde(default = "default_tau_list")]
    pub tau_list: Vec<f64>,
    /// Solvers compared in the performance profile.
    #[serde(default = "default_profile_solvers")]
    pub solvers: Vec<SolverKind>,
    /// Input vector for the 2D path experiment.
    #[serde(default = "default_path2d_y")]
    pub path2d_y: Vec<f64>,
    /// Injected initial perturbation for the path experiment; `null` draws it
    /// from `solver_opts.seed`.
    #[serde(default = "default_path2d_eps")]
    pub path2d_eps: Option<Vec<f64>>,
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| HarnessError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            HarnessError::InvalidConfig(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_json_str(&text)
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn instance_seeds(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            (0..self.num_instances as u64).collect()
        } else {
            self.seeds.clone()
        }
    }

    /// Solver options with the harness-level audit flag applied.
    pub fn irbp_options(&self) -> SolverOptions {
        SolverOptions {
            audit: self.audit,
            ..self.solver_opts.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::InvalidConfig(msg));
        if self.n_list.is_empty() {
            return bad("n_list must not be empty".into());
        }
        if self.p_list.is_empty() {
            return bad("p_list must not be empty".into());
        }
        if let Some(&n) = self.n_list.iter().find(|&&n| n == 0) {
            return bad(format!("n_list entries must be at least 1, got {n}"));
        }
        if let Some(&p) = self.p_list.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
            return bad(format!("p_list entries must lie in (0, 1), got {p}"));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        if self.num_instances == 0 {
            return bad("num_instances must be at least 1".into());
        }
        if !self.seeds.is_empty() && self.seeds.len() != self.num_instances {
            return bad(format!(
                "seeds has {} entries but num_instances is {}",
                self.seeds.len(),
                self.num_instances
            ));
        }
        if !(self.noise_variance.is_finite() && self.noise_variance > 0.0) {
            return bad(format!("noise_variance must be positive, got {}", self.noise_variance));
        }
        let invalid = |e: lpball::LpBallError| HarnessError::InvalidConfig(e.to_string());
        self.solver_opts.validate().map_err(invalid)?;
        self.rs_opts.validate().map_err(invalid)?;

        match self.experiment {
            Experiment::Sensitivity => {
                if self.m_list.is_empty() || self.tau_list.is_empty() {
                    return bad("m_list and tau_list must not be empty".into());
                }
                for &m in &self.m_list {
                    for &tau in &self.tau_list {
                        let opts = SolverOptions {
                            big_m: m,
                            tau,
                            ..self.solver_opts.clone()
                        };
                        opts.validate().map_err(invalid)?;
                    }
                }
            }
            Experiment::Profile => {
                if self.solvers.is_empty() {
                    return bad("solvers must not be empty".into());
                }
            }
            Experiment::Path2d => {
                if self.path2d_y.is_empty() {
                    return bad("path2d_y must not be empty".into());
                }
                if let Some(eps) = &self.path2d_eps {
                    if eps.len() != self.path2d_y.len() {
                        return bad(format!(
                            "path2d_eps has {} entries, path2d_y has {}",
                            eps.len(),
                            self.path2d_y.len()
                        ));
                    }
                }
            }
            Experiment::Scaling => {}
        }
        Ok(())
    }
}
