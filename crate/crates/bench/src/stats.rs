//! Small summary statistics over run results.

use serde::{Deserialize, Serialize};

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    lpball::sum::sum(values.iter().copied()) / values.len() as f64
}

/// Linearly interpolated quantile of `values` at `q ∈ [0, 1]`.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Self {
        Self {
            min: quantile(values, 0.0),
            q1: quantile(values, 0.25),
            median: quantile(values, 0.5),
            q3: quantile(values, 0.75),
            max: quantile(values, 1.0),
        }
    }
}

/// Performance profile: fraction of all `total` runs solved within each
/// observed solve time. One point per successful run, in time order.
pub fn success_profile(solved_times: &[f64], total: usize) -> Vec<(f64, f64)> {
    let mut t = solved_times.to_vec();
    t.sort_by(f64::total_cmp);
    t.iter()
        .enumerate()
        .map(|(i, &ti)| (ti, (i + 1) as f64 / total.max(1) as f64))
        .collect()
}
