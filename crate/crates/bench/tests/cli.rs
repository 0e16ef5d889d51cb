//! End-to-end runs of the `lpball` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lpball_bench::output::{read_results_csv, trace_columns, RESULT_COLUMNS};

fn lpball(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpball"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write_config(dir: &Path, json: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, json).unwrap();
    path.to_str().unwrap().to_owned()
}

fn header(path: &Path) -> Vec<String> {
    let text = fs::read_to_string(path).unwrap();
    text.lines().next().unwrap().split(',').map(str::to_owned).collect()
}

#[test]
fn solve_prints_json_and_succeeds() {
    let out = lpball(&["solve", "--y", "0.5,0.45", "--p", "0.5", "--gamma", "1", "--json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["status"], "converged");
    let x: Vec<f64> = serde_json::from_value(v["x"].clone()).unwrap();
    let mass: f64 = x.iter().map(|v| v.abs().powf(0.5)).sum();
    assert!((mass - 1.0).abs() < 1e-6, "Σ|x|^p = {mass}");
}

#[test]
fn solve_reads_a_file_and_keeps_signs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("y.txt");
    fs::write(&path, "-0.5\n0.45\n0\n").unwrap();
    let out = lpball(&["solve", "--y", path.to_str().unwrap(), "--p", "0.5", "--gamma", "1", "--json"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let x: Vec<f64> = serde_json::from_value(v["x"].clone()).unwrap();
    assert!(x[0] < 0.0 && x[1] > 0.0 && x[2] == 0.0, "{x:?}");
}

#[test]
fn solve_rejects_bad_input_with_code_two() {
    assert_eq!(code(&lpball(&["solve", "--y", "0.5,abc", "--p", "0.5", "--gamma", "1"])), 2);
    assert_eq!(code(&lpball(&["solve", "--y", "0.5,0.4", "--p", "1.5", "--gamma", "1"])), 2);
    assert_eq!(code(&lpball(&["solve", "--y", "0.5,0.4", "--p", "0.5", "--gamma", "-1"])), 2);
}

#[test]
fn bench_rejects_invalid_configs_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let cases = [
        r#"{"experiment": "profile", "n_list": [10], "p_list": [1.2]}"#,
        r#"{"experiment": "profile", "n_list": [], "p_list": [0.5]}"#,
        r#"{"experiment": "profile", "n_list": [10], "p_list": [0.5], "typo_field": 1}"#,
        "not json",
    ];
    for json in cases {
        let cfg = write_config(dir.path(), json);
        let out = lpball(&["bench", "--experiment", "profile", "--config", &cfg, "--out", out_dir]);
        assert_eq!(code(&out), 2, "config {json}");
    }
    // The experiment named on the command line must match the config.
    let cfg = write_config(dir.path(), r#"{"experiment": "scaling", "n_list": [10], "p_list": [0.5]}"#);
    let out = lpball(&["bench", "--experiment", "profile", "--config", &cfg, "--out", out_dir]);
    assert_eq!(code(&out), 2);
}

#[test]
fn failing_run_exits_with_code_one() {
    // One iteration is not enough to converge.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"experiment": "scaling", "n_list": [200], "p_list": [0.5], "solver_opts": {"max_iter": 1}}"#,
    );
    let out = lpball(&["bench", "--experiment", "scaling", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("scaling/results.csv").is_file());
}

#[test]
fn path2d_writes_every_file_with_fixed_headers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"experiment": "path2d", "n_list": [2], "p_list": [0.5]}"#);
    let out = lpball(&["bench", "--experiment", "path2d", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let exp = dir.path().join("path2d");
    for f in ["results.csv", "trace.csv", "summary.json", "config_echo.json"] {
        assert!(exp.join(f).is_file(), "missing {f}");
    }
    assert_eq!(header(&exp.join("results.csv")), RESULT_COLUMNS);
    assert_eq!(header(&exp.join("trace.csv")), trace_columns(2));

    // Trace starts at the injected initial point and ends at the reported one.
    let mut rdr = csv::Reader::from_path(exp.join("trace.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(&rows[0][0], "0");
    assert_eq!(rows[0][3].parse::<f64>().unwrap(), 0.072);
    assert_eq!(rows[0][4].parse::<f64>().unwrap(), 0.463);
    let results = read_results_csv(&exp.join("results.csv")).unwrap();
    assert_eq!(results.len(), 1);
    assert_eq!(rows.len(), results[0].iterations + 1);
    let last = rows.last().unwrap();
    assert!((last[1].parse::<f64>().unwrap() - 0.2972).abs() < 5e-3);
    assert!((last[2].parse::<f64>().unwrap() - 0.2069).abs() < 5e-3);

    // Every float cell uses the 17-significant-digit scientific format.
    let x0 = &rows[1][1];
    assert!(x0.contains('e') && x0.split('e').next().unwrap().len() == 18, "{x0}");

    let echo: serde_json::Value = serde_json::from_str(&fs::read_to_string(exp.join("config_echo.json")).unwrap()).unwrap();
    assert_eq!(echo["experiment"], "path2d");
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(exp.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["path"]["all_iterates_inside_ball"], true);
}

#[test]
fn output_dir_from_config_is_used_without_out() {
    let dir = tempfile::tempdir().unwrap();
    let json = format!(
        r#"{{"experiment": "path2d", "n_list": [2], "p_list": [0.5], "output_dir": {:?}}}"#,
        dir.path().join("res").to_str().unwrap()
    );
    let cfg = write_config(dir.path(), &json);
    let out = lpball(&["bench", "--experiment", "path2d", "--config", &cfg]);
    assert_eq!(code(&out), 0);
    assert!(dir.path().join("res/path2d/results.csv").is_file());
}

/// Drop the wall-time column, the only field allowed to differ between runs.
fn without_times(path: &Path) -> Vec<Vec<String>> {
    let col = RESULT_COLUMNS.iter().position(|c| *c == "wall_time_s").unwrap();
    let mut rdr = csv::Reader::from_path(path).unwrap();
    rdr.records()
        .map(|r| {
            r.unwrap()
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != col)
                .map(|(_, v)| v.to_owned())
                .collect()
        })
        .collect()
}

#[test]
fn identical_configs_reproduce_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"experiment": "profile", "n_list": [300], "p_list": [0.4, 0.8], "num_instances": 4}"#,
    );
    let mut tables = Vec::new();
    for run in ["a", "b"] {
        let out_dir = dir.path().join(run);
        let out = lpball(&["bench", "--experiment", "profile", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        assert!(out_dir.join("profile/profile.csv").is_file());
        tables.push(without_times(&out_dir.join("profile/results.csv")));
    }
    assert_eq!(tables[0].len(), 16);
    assert_eq!(tables[0], tables[1]);
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for exp in lpball_bench::Experiment::ALL {
        let path = dir.join(format!("{exp}.json"));
        let cfg = lpball_bench::ExperimentConfig::from_path(&path).unwrap();
        assert_eq!(cfg.experiment, exp, "{}", path.display());
    }
}
