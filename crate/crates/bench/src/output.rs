//! Result files. Floats are written as `{:.16e}` (17 significant digits), so
//! every value round-trips exactly; columns are in a fixed order.

use std::fs;
use std::path::{Path, PathBuf};

use lpball::RunStatus;

use crate::config::{ExperimentConfig, SolverKind};
use crate::error::{HarnessError, Result};
use crate::experiments::{ExperimentOutput, ProfilePoint, ResultRow, TraceRow};

pub const RESULT_COLUMNS: [&str; 15] = [
    "experiment",
    "solver",
    "n",
    "p",
    "seed",
    "status",
    "iterations",
    "wall_time_s",
    "objective",
    "alpha_bar",
    "beta",
    "trigger_count",
    "lambda",
    "big_m",
    "tau",
];

pub const PROFILE_COLUMNS: [&str; 5] = ["solver", "n", "p", "time_s", "fraction_solved"];

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn result_record(r: &ResultRow) -> Vec<String> {
    vec![
        r.experiment.as_str().to_owned(),
        r.solver.as_str().to_owned(),
        r.n.to_string(),
        fmt_f64(r.p),
        r.seed.to_string(),
        r.status.as_str().to_owned(),
        r.iterations.to_string(),
        fmt_f64(r.wall_time_s),
        fmt_f64(r.objective),
        fmt_f64(r.alpha_bar),
        fmt_f64(r.beta),
        r.trigger_count.to_string(),
        fmt_f64(r.lambda),
        fmt_opt(r.big_m),
        fmt_opt(r.tau),
    ]
}

/// Header for a trace of dimension `d`: vector columns are expanded as
/// `x_0..x_{d-1}`, `eps_*`, `w_*`.
pub fn trace_columns(d: usize) -> Vec<String> {
    let mut cols = vec!["k".to_owned()];
    for name in ["x", "eps", "w"] {
        cols.extend((0..d).map(|i| format!("{name}_{i}")));
    }
    cols.extend(
        ["gamma_k", "lambda", "alpha", "beta", "lp_mass", "triggered"].map(str::to_owned),
    );
    cols
}

fn trace_record(t: &TraceRow, d: usize) -> Vec<String> {
    let mut rec = vec![t.k.to_string()];
    rec.extend(t.x.iter().copied().map(fmt_f64));
    rec.extend(t.eps.iter().copied().map(fmt_f64));
    if t.w.is_empty() {
        rec.extend(std::iter::repeat(String::new()).take(d));
    } else {
        rec.extend(t.w.iter().copied().map(fmt_f64));
    }
    rec.push(fmt_opt(t.gamma_k));
    rec.extend([t.lambda, t.alpha, t.beta, t.lp_mass].map(fmt_f64));
    rec.push(u8::from(t.triggered).to_string());
    rec
}

fn profile_record(q: &ProfilePoint) -> Vec<String> {
    vec![
        q.solver.as_str().to_owned(),
        q.n.to_string(),
        fmt_f64(q.p),
        fmt_f64(q.time_s),
        fmt_f64(q.fraction_solved),
    ]
}

fn write_csv<I>(path: &Path, header: &[String], records: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for rec in records {
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))?;
    Ok(())
}

fn owned(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| (*c).to_owned()).collect()
}

pub fn write_results_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    write_csv(path, &owned(&RESULT_COLUMNS), rows.iter().map(result_record))
}

pub fn write_trace_csv(path: &Path, trace: &[TraceRow]) -> Result<()> {
    let d = trace.first().map_or(0, |t| t.x.len());
    write_csv(path, &trace_columns(d), trace.iter().map(|t| trace_record(t, d)))
}

pub fn write_profile_csv(path: &Path, points: &[ProfilePoint]) -> Result<()> {
    write_csv(path, &owned(&PROFILE_COLUMNS), points.iter().map(profile_record))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

/// Write all files for one experiment under `<out>/<experiment>/` and return
/// that directory.
pub fn write_outputs(out: &Path, cfg: &ExperimentConfig, result: &ExperimentOutput) -> Result<PathBuf> {
    let dir = out.join(result.experiment.as_str());
    fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
    write_results_csv(&dir.join("results.csv"), &result.rows)?;
    if !result.trace.is_empty() {
        write_trace_csv(&dir.join("trace.csv"), &result.trace)?;
    }
    if !result.profile.is_empty() || result.experiment == crate::Experiment::Profile {
        write_profile_csv(&dir.join("profile.csv"), &result.profile)?;
    }
    write_json(&dir.join("summary.json"), &result.summary)?;
    write_json(&dir.join("config_echo.json"), cfg)?;
    Ok(dir)
}

/// Read back a `results.csv` written by [`write_results_csv`].
pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != owned(&RESULT_COLUMNS) {
        return Err(HarnessError::InvalidConfig(format!(
            "{}: unexpected header {header:?}",
            path.display()
        )));
    }
    let bad = |what: &str, v: &str| HarnessError::InvalidConfig(format!("bad {what} field {v:?}"));
    let float = |v: &str| v.parse::<f64>().map_err(|_| bad("float", v));
    let int = |v: &str| v.parse::<u64>().map_err(|_| bad("integer", v));
    let opt = |v: &str| if v.is_empty() { Ok(None) } else { float(v).map(Some) };
    let status = |v: &str| -> Result<RunStatus> {
        serde_json::from_value(serde_json::Value::String(v.to_owned())).map_err(|_| bad("status", v))
    };

    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let f = |i: usize| rec.get(i).unwrap_or("");
        rows.push(ResultRow {
            experiment: f(0).parse().map_err(|_| bad("experiment", f(0)))?,
            solver: f(1).parse::<SolverKind>().map_err(|_| bad("solver", f(1)))?,
            n: int(f(2))? as usize,
            p: float(f(3))?,
            seed: int(f(4))?,
            status: status(f(5))?,
            iterations: int(f(6))? as usize,
            wall_time_s: float(f(7))?,
            objective: float(f(8))?,
            alpha_bar: float(f(9))?,
            beta: float(f(10))?,
            trigger_count: int(f(11))? as usize,
            lambda: float(f(12))?,
            big_m: opt(f(13))?,
            tau: opt(f(14))?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(158.1), "1.5809999999999999e2");
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_f64(-2.5e-300), "-2.5000000000000000e-300");
    }

    #[test]
    fn trace_header_for_two_dims() {
        let cols = trace_columns(2);
        assert_eq!(cols[..7], ["k", "x_0", "x_1", "eps_0", "eps_1", "w_0", "w_1"]);
        assert_eq!(cols.last().unwrap(), "triggered");
        assert_eq!(cols.len(), 13);
    }

    proptest! {
        #[test]
        fn floats_round_trip(x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
            prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
