use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use lpball::{irbp, root_search, LpBallError, ProblemInstance, RsOptions, SolverOptions};
use lpball_bench::output::write_outputs;
use lpball_bench::{run_experiment, Experiment, ExperimentConfig, HarnessError, SolverKind};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "lpball", version, about = "Euclidean projection onto the lp ball")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Project one vector.
    Solve {
        /// Path to a file of numbers, or an inline comma-separated list.
        #[arg(long, allow_hyphen_values = true)]
        y: String,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value = "irbp")]
        solver: SolverKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print the result as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run one experiment and write its result files.
    Bench {
        #[arg(long)]
        experiment: Experiment,
        #[arg(long)]
        config: PathBuf,
        /// Output root; defaults to the config's `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure with its process exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn invalid(error: impl Into<anyhow::Error>) -> Self {
        Self { code: 2, error: error.into() }
    }

    fn run(error: impl Into<anyhow::Error>) -> Self {
        Self { code: 1, error: error.into() }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Self {
            code: e.exit_code() as u8,
            error: e.into(),
        }
    }
}

#[derive(Serialize)]
struct SolveOutput {
    solver: SolverKind,
    status: lpball::RunStatus,
    iterations: usize,
    wall_time_s: f64,
    objective: f64,
    alpha_bar: f64,
    beta: f64,
    lambda: f64,
    trigger_count: usize,
    x: Vec<f64>,
}

fn parse_vector(arg: &str) -> anyhow::Result<Vec<f64>> {
    let text = if Path::new(arg).is_file() {
        std::fs::read_to_string(arg).with_context(|| format!("reading {arg}"))?
    } else {
        arg.to_owned()
    };
    let values = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().with_context(|| format!("not a number: {t:?}")))
        .collect::<anyhow::Result<Vec<f64>>>()?;
    if values.is_empty() {
        return Err(anyhow!("no values in --y"));
    }
    Ok(values)
}

fn solve(
    y: &str,
    p: f64,
    gamma: f64,
    solver: SolverKind,
    seed: u64,
    json: bool,
) -> Result<(), Failure> {
    let y = parse_vector(y).map_err(Failure::invalid)?;
    let instance = ProblemInstance::new(y, p, gamma).map_err(Failure::invalid)?;
    let report = match solver {
        SolverKind::Irbp => {
            let opts = SolverOptions {
                seed,
                audit: false,
                ..SolverOptions::default()
            };
            irbp::solve(&instance, &opts)
        }
        SolverKind::Rs => {
            let opts = RsOptions {
                seed,
                ..RsOptions::default()
            };
            root_search::rs_solve(&instance, &opts)
        }
    }
    .map_err(|e| match e {
        LpBallError::InvalidInstance(_) | LpBallError::InvalidOptions(_) => Failure::invalid(e),
        _ => Failure::run(e),
    })?;

    let out = SolveOutput {
        solver,
        status: report.status,
        iterations: report.iterations,
        wall_time_s: report.wall_time,
        objective: instance.objective(&report.x_final),
        alpha_bar: report.alpha_bar,
        beta: report.beta,
        lambda: report.lambda_final,
        trigger_count: report.trigger_count,
        x: report.x_final.clone(),
    };
    if json {
        let text = serde_json::to_string_pretty(&out).map_err(Failure::run)?;
        println!("{text}");
    } else {
        println!("solver      {}", solver.as_str());
        println!("status      {}", out.status.as_str());
        println!("iterations  {}", out.iterations);
        println!("time        {:.6} s", out.wall_time_s);
        println!("objective   {:.16e}", out.objective);
        println!("alpha_bar   {:.3e}", out.alpha_bar);
        println!("beta        {:.3e}", out.beta);
        let x: Vec<String> = out.x.iter().map(|v| format!("{v:.16e}")).collect();
        println!("x           {}", x.join(","));
    }
    if report.status.is_success() {
        Ok(())
    } else {
        Err(Failure::run(anyhow!("solver ended with status {}", report.status.as_str())))
    }
}

fn bench(experiment: Experiment, config: &Path, out: Option<PathBuf>) -> Result<(), Failure> {
    let cfg = ExperimentConfig::from_path(config)?;
    if cfg.experiment != experiment {
        return Err(Failure::invalid(anyhow!(
            "--experiment {experiment} does not match config experiment {}",
            cfg.experiment
        )));
    }
    let out = out
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| Failure::invalid(anyhow!("no --out given and config has no output_dir")))?;

    let result = run_experiment(&cfg)?;
    let dir = write_outputs(&out, &cfg, &result)?;
    let s = &result.summary;
    eprintln!(
        "{experiment}: {} runs, {} failed, results in {}",
        s.total_runs,
        s.failed_runs,
        dir.display()
    );
    for g in &s.groups {
        eprintln!(
            "  {:<4} n={:<8} p={:<4} M={:<8} tau={:<5} success {}/{}  median time {:.4} s  mean obj {:.6}",
            g.solver.as_str(),
            g.n,
            g.p,
            g.big_m.map_or("-".into(), |m| m.to_string()),
            g.tau.map_or("-".into(), |t| t.to_string()),
            g.successes,
            g.runs,
            g.wall_time_s.median,
            g.mean_objective
        );
    }
    if result.any_failed() {
        return Err(Failure::run(anyhow!("{} run(s) did not converge", s.failed_runs)));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve {
            y,
            p,
            gamma,
            solver,
            seed,
            json,
        } => solve(&y, p, gamma, solver, seed, json),
        Command::Bench {
            experiment,
            config,
            out,
        } => bench(experiment, &config, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
