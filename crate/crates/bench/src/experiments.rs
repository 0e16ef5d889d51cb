use lpball::problem::lp_pow_sum;
use lpball::{irbp, root_search, ProblemInstance, RsOptions, RunReport, RunStatus, SolverOptions};
use serde::{Deserialize, Serialize};

use crate::config::{Experiment, ExperimentConfig, SolverKind};
use crate::error::Result;
use crate::instance::gen_instance_with_noise;
use crate::stats::{mean, median, success_profile, Quartiles};

/// One (solver, instance) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: Experiment,
    pub solver: SolverKind,
    pub n: usize,
    pub p: f64,
    pub seed: u64,
    pub status: RunStatus,
    pub iterations: usize,
    pub wall_time_s: f64,
    /// `½‖x − y‖²` at the returned point.
    pub objective: f64,
    pub alpha_bar: f64,
    pub beta: f64,
    pub trigger_count: usize,
    pub lambda: f64,
    /// Trigger constants; absent for the root-searching baseline.
    pub big_m: Option<f64>,
    pub tau: Option<f64>,
}

impl ResultRow {
    fn from_report(
        experiment: Experiment,
        solver: SolverKind,
        instance: &ProblemInstance,
        seed: u64,
        report: &RunReport,
        trigger: Option<(f64, f64)>,
    ) -> Self {
        Self {
            experiment,
            solver,
            n: instance.dim(),
            p: instance.p,
            seed,
            status: report.status,
            iterations: report.iterations,
            wall_time_s: report.wall_time,
            objective: instance.objective(&report.x_final),
            alpha_bar: report.alpha_bar,
            beta: report.beta,
            trigger_count: report.trigger_count,
            lambda: report.lambda_final,
            big_m: trigger.map(|t| t.0),
            tau: trigger.map(|t| t.1),
        }
    }

    /// Whether the recorded status follows from the recorded residuals under
    /// the solver's own stopping or success rule.
    pub fn status_consistent(&self, gamma: f64, opts: &SolverOptions, rs: &RsOptions) -> bool {
        match (self.solver, self.status) {
            (_, RunStatus::TrivialInsideBall) => self.iterations == 0,
            (SolverKind::Irbp, RunStatus::Converged) => {
                self.alpha_bar.max(self.beta) <= opts.delta_tol * gamma.max(1.0)
            }
            (SolverKind::Irbp, RunStatus::MaxIterExceeded) => {
                self.alpha_bar.max(self.beta) > opts.delta_tol * gamma.max(1.0)
            }
            (SolverKind::Rs, RunStatus::Converged) => self.beta / (self.n as f64) < rs.success_tol,
            (SolverKind::Rs, RunStatus::Failed) => self.beta / (self.n as f64) >= rs.success_tol,
            _ => false,
        }
    }
}

/// One IRBP iterate of the path experiment, in orthant coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub x: Vec<f64>,
    pub eps: Vec<f64>,
    /// Weights of the subproblem that produced `x`; empty for `k = 0`.
    pub w: Vec<f64>,
    /// Radius of that subproblem, `w·x ≤ γ^k`; `None` for `k = 0`.
    pub gamma_k: Option<f64>,
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `Σ (x_i + ε_i)^p`.
    pub lp_mass: f64,
    pub triggered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub solver: SolverKind,
    pub n: usize,
    pub p: f64,
    pub time_s: f64,
    pub fraction_solved: f64,
}

/// Aggregate over the runs sharing solver, n, p and trigger constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub solver: SolverKind,
    pub n: usize,
    pub p: f64,
    pub big_m: Option<f64>,
    pub tau: Option<f64>,
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_objective: f64,
    pub mean_alpha_bar: f64,
    pub mean_beta: f64,
    pub mean_iterations: f64,
    pub mean_wall_time_s: f64,
    pub wall_time_s: Quartiles,
}

/// Ratio of median solve times between consecutive sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRatio {
    pub p: f64,
    pub n_from: usize,
    pub n_to: usize,
    pub median_from_s: f64,
    pub median_to_s: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivitySummary {
    pub n: usize,
    pub p: f64,
    pub cells: usize,
    pub cells_all_converged: usize,
    pub grand_mean_objective: f64,
    pub min_cell_mean_objective: f64,
    pub max_cell_mean_objective: f64,
    /// `(max − min) / grand mean` over the cell means.
    pub relative_objective_spread: f64,
    pub termination_threshold: f64,
    pub max_final_alpha_bar: f64,
    pub max_final_beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSummary {
    pub x_final: Vec<f64>,
    pub iterations: usize,
    pub status: RunStatus,
    pub all_iterates_inside_ball: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: Experiment,
    pub total_runs: usize,
    /// IRBP runs that did not succeed. Baseline failures are data, not
    /// harness failures.
    pub failed_runs: usize,
    pub all_statuses_consistent: bool,
    pub groups: Vec<GroupSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub scaling_ratios: Vec<ScalingRatio>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub sensitivity: Vec<SensitivitySummary>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub path: Option<PathSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub experiment: Experiment,
    pub rows: Vec<ResultRow>,
    pub trace: Vec<TraceRow>,
    pub profile: Vec<ProfilePoint>,
    pub summary: Summary,
}

impl ExperimentOutput {
    pub fn any_failed(&self) -> bool {
        self.summary.failed_runs > 0
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    match cfg.experiment {
        Experiment::Path2d => run_path2d(cfg),
        Experiment::Profile => run_profile(cfg),
        Experiment::Scaling => run_scaling(cfg),
        Experiment::Sensitivity => run_sensitivity(cfg),
    }
}

fn irbp_options(cfg: &ExperimentConfig, instance_seed: u64) -> SolverOptions {
    let mut opts = cfg.irbp_options();
    opts.seed = opts.seed.wrapping_add(instance_seed);
    opts
}

fn rs_options(cfg: &ExperimentConfig, instance_seed: u64) -> RsOptions {
    let mut opts = cfg.rs_opts.clone();
    opts.seed = opts.seed.wrapping_add(instance_seed);
    opts
}

fn run_solver(
    cfg: &ExperimentConfig,
    solver: SolverKind,
    instance: &ProblemInstance,
    seed: u64,
) -> Result<ResultRow> {
    let row = match solver {
        SolverKind::Irbp => {
            let opts = irbp_options(cfg, seed);
            let report = irbp::solve(instance, &opts)?;
            let trigger = Some((opts.big_m, opts.tau));
            ResultRow::from_report(cfg.experiment, solver, instance, seed, &report, trigger)
        }
        SolverKind::Rs => {
            let report = root_search::rs_solve(instance, &rs_options(cfg, seed))?;
            ResultRow::from_report(cfg.experiment, solver, instance, seed, &report, None)
        }
    };
    Ok(row)
}

/// IRBP on a single vector, recording every iterate.
pub fn run_path2d(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let instance = ProblemInstance::new(cfg.path2d_y.clone(), cfg.p_list[0], cfg.gamma)?;
    let opts = cfg.irbp_options();
    let p = instance.p;
    let mut trace = Vec::new();
    let report = irbp::solve_observed(&instance, &opts, cfg.path2d_eps.as_deref(), |s| {
        let lp_mass = lp_pow_sum(s.x.iter().zip(&s.eps).map(|(x, e)| x + e), p);
        trace.push(TraceRow {
            k: s.k,
            x: s.x.clone(),
            eps: s.eps.clone(),
            w: s.w.clone(),
            gamma_k: (!s.gamma_k.is_nan()).then_some(s.gamma_k),
            lambda: s.lambda,
            alpha: s.alpha_res,
            beta: s.beta_res,
            lp_mass,
            triggered: s.triggered,
        });
    })?;
    let row = ResultRow::from_report(
        cfg.experiment,
        SolverKind::Irbp,
        &instance,
        opts.seed,
        &report,
        Some((opts.big_m, opts.tau)),
    );
    let path = PathSummary {
        x_final: report.x_final.clone(),
        iterations: report.iterations,
        status: report.status,
        all_iterates_inside_ball: trace
            .iter()
            .all(|t| t.lp_mass <= cfg.gamma * (1.0 + irbp::FEASIBILITY_SLACK)),
    };
    let rows = vec![row];
    let mut summary = summarize(cfg, &rows);
    summary.path = Some(path);
    Ok(ExperimentOutput {
        experiment: cfg.experiment,
        rows,
        trace,
        profile: Vec::new(),
        summary,
    })
}

/// Both solvers on the same random instances, plus the success profile.
pub fn run_profile(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let mut rows = Vec::new();
    for &p in &cfg.p_list {
        for &n in &cfg.n_list {
            for seed in cfg.instance_seeds() {
                let instance = gen_instance_with_noise(n, p, cfg.gamma, cfg.noise_variance, seed)?;
                for &solver in &cfg.solvers {
                    rows.push(run_solver(cfg, solver, &instance, seed)?);
                }
            }
        }
    }
    let mut profile = Vec::new();
    for key in group_keys(&rows) {
        let group: Vec<&ResultRow> = rows.iter().filter(|r| key.matches(r)).collect();
        let solved: Vec<f64> = group
            .iter()
            .filter(|r| r.status.is_success())
            .map(|r| r.wall_time_s)
            .collect();
        for (time_s, fraction_solved) in success_profile(&solved, group.len()) {
            profile.push(ProfilePoint {
                solver: key.solver,
                n: key.n,
                p: key.p,
                time_s,
                fraction_solved,
            });
        }
    }
    let summary = summarize(cfg, &rows);
    Ok(ExperimentOutput {
        experiment: cfg.experiment,
        rows,
        trace: Vec::new(),
        profile,
        summary,
    })
}

/// IRBP wall time across problem sizes.
pub fn run_scaling(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let mut rows = Vec::new();
    for &p in &cfg.p_list {
        for &n in &cfg.n_list {
            for seed in cfg.instance_seeds() {
                let instance = gen_instance_with_noise(n, p, cfg.gamma, cfg.noise_variance, seed)?;
                rows.push(run_solver(cfg, SolverKind::Irbp, &instance, seed)?);
            }
        }
    }
    let mut summary = summarize(cfg, &rows);
    summary.scaling_ratios = scaling_ratios(&rows);
    Ok(ExperimentOutput {
        experiment: cfg.experiment,
        rows,
        trace: Vec::new(),
        profile: Vec::new(),
        summary,
    })
}

pub fn scaling_ratios(rows: &[ResultRow]) -> Vec<ScalingRatio> {
    let mut out = Vec::new();
    let mut ps: Vec<f64> = Vec::new();
    for r in rows {
        if !ps.contains(&r.p) {
            ps.push(r.p);
        }
    }
    for p in ps {
        let mut ns: Vec<usize> = rows.iter().filter(|r| r.p == p).map(|r| r.n).collect();
        ns.sort_unstable();
        ns.dedup();
        let med = |n: usize| {
            let t: Vec<f64> = rows
                .iter()
                .filter(|r| r.p == p && r.n == n)
                .map(|r| r.wall_time_s)
                .collect();
            median(&t)
        };
        for pair in ns.windows(2) {
            let (a, b) = (med(pair[0]), med(pair[1]));
            out.push(ScalingRatio {
                p,
                n_from: pair[0],
                n_to: pair[1],
                median_from_s: a,
                median_to_s: b,
                ratio: b / a,
            });
        }
    }
    out
}

/// IRBP over a grid of trigger constants (M, τ), same instances in every cell.
pub fn run_sensitivity(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let mut rows = Vec::new();
    let mut sensitivity = Vec::new();
    for &n in &cfg.n_list {
        for &p in &cfg.p_list {
            let instances = cfg
                .instance_seeds()
                .into_iter()
                .map(|seed| {
                    gen_instance_with_noise(n, p, cfg.gamma, cfg.noise_variance, seed)
                        .map(|inst| (seed, inst))
                })
                .collect::<Result<Vec<_>>>()?;
            let first = rows.len();
            for &big_m in &cfg.m_list {
                for &tau in &cfg.tau_list {
                    let mut cell_cfg = cfg.clone();
                    cell_cfg.solver_opts.big_m = big_m;
                    cell_cfg.solver_opts.tau = tau;
                    for (seed, instance) in &instances {
                        rows.push(run_solver(&cell_cfg, SolverKind::Irbp, instance, *seed)?);
                    }
                }
            }
            sensitivity.push(sensitivity_summary(cfg, n, p, &rows[first..]));
        }
    }
    let mut summary = summarize(cfg, &rows);
    summary.sensitivity = sensitivity;
    Ok(ExperimentOutput {
        experiment: cfg.experiment,
        rows,
        trace: Vec::new(),
        profile: Vec::new(),
        summary,
    })
}

fn sensitivity_summary(cfg: &ExperimentConfig, n: usize, p: f64, rows: &[ResultRow]) -> SensitivitySummary {
    let groups: Vec<GroupSummary> = group_keys(rows)
        .iter()
        .map(|key| group_summary(key, rows))
        .collect();
    let cell_means: Vec<f64> = groups.iter().map(|g| g.mean_objective).collect();
    let all_objectives: Vec<f64> = rows.iter().map(|r| r.objective).collect();
    let grand = mean(&all_objectives);
    let lo = cell_means.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = cell_means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    SensitivitySummary {
        n,
        p,
        cells: groups.len(),
        cells_all_converged: groups.iter().filter(|g| g.successes == g.runs).count(),
        grand_mean_objective: grand,
        min_cell_mean_objective: lo,
        max_cell_mean_objective: hi,
        relative_objective_spread: (hi - lo) / grand,
        termination_threshold: cfg.solver_opts.delta_tol * cfg.gamma.max(1.0),
        max_final_alpha_bar: rows.iter().map(|r| r.alpha_bar).fold(0.0, f64::max),
        max_final_beta: rows.iter().map(|r| r.beta).fold(0.0, f64::max),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct GroupKey {
    solver: SolverKind,
    n: usize,
    p: f64,
    big_m: Option<f64>,
    tau: Option<f64>,
}

impl GroupKey {
    fn of(r: &ResultRow) -> Self {
        Self {
            solver: r.solver,
            n: r.n,
            p: r.p,
            big_m: r.big_m,
            tau: r.tau,
        }
    }

    fn matches(&self, r: &ResultRow) -> bool {
        *self == Self::of(r)
    }
}

/// Distinct group keys in order of first appearance.
fn group_keys(rows: &[ResultRow]) -> Vec<GroupKey> {
    let mut keys: Vec<GroupKey> = Vec::new();
    for r in rows {
        let k = GroupKey::of(r);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys
}

fn group_summary(key: &GroupKey, rows: &[ResultRow]) -> GroupSummary {
    let group: Vec<&ResultRow> = rows.iter().filter(|r| key.matches(r)).collect();
    let col = |f: fn(&ResultRow) -> f64| group.iter().map(|r| f(r)).collect::<Vec<f64>>();
    let times = col(|r| r.wall_time_s);
    let successes = group.iter().filter(|r| r.status.is_success()).count();
    GroupSummary {
        solver: key.solver,
        n: key.n,
        p: key.p,
        big_m: key.big_m,
        tau: key.tau,
        runs: group.len(),
        successes,
        success_rate: successes as f64 / group.len() as f64,
        mean_objective: mean(&col(|r| r.objective)),
        mean_alpha_bar: mean(&col(|r| r.alpha_bar)),
        mean_beta: mean(&col(|r| r.beta)),
        mean_iterations: mean(&col(|r| r.iterations as f64)),
        mean_wall_time_s: mean(&times),
        wall_time_s: Quartiles::of(&times),
    }
}

fn summarize(cfg: &ExperimentConfig, rows: &[ResultRow]) -> Summary {
    let groups = group_keys(rows).iter().map(|k| group_summary(k, rows)).collect();
    let failed_runs = rows
        .iter()
        .filter(|r| r.solver == SolverKind::Irbp && !r.status.is_success())
        .count();
    let all_statuses_consistent = rows.iter().all(|r| {
        let mut opts = cfg.solver_opts.clone();
        if let (Some(m), Some(t)) = (r.big_m, r.tau) {
            opts.big_m = m;
            opts.tau = t;
        }
        r.status_consistent(cfg.gamma, &opts, &cfg.rs_opts)
    });
    Summary {
        experiment: cfg.experiment,
        total_runs: rows.len(),
        failed_runs,
        all_statuses_consistent,
        groups,
        scaling_ratios: Vec::new(),
        sensitivity: Vec::new(),
        path: None,
    }
}
