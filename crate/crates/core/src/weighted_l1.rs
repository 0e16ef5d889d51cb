//! Euclidean projection of a nonnegative point onto the weighted ℓ1 ball
//! intersected with the nonnegative orthant,
//!
//! ```text
//! min ½‖x − ȳ‖²  s.t.  Σ w_i x_i ≤ r,  x ≥ 0.
//! ```
//!
//! The solution has threshold form `x_i = max(ȳ_i − λ w_i, 0)`. The fast
//! solver sorts the breakpoints `z_i = ȳ_i / w_i` and scans them once; the
//! oracle enumerates every support and is only meant for testing.

use serde::{Deserialize, Serialize};

use crate::error::{LpBallError, Result};
use crate::sum::{self, CompensatedSum};

/// Largest dimension accepted by [`project_oracle`].
pub const ORACLE_MAX_DIM: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    /// Largest violation of `ȳ_i − x_i − λw_i = 0` on the support and of
    /// `ȳ_i − λw_i ≤ 0` off it. The latter is the implied slack multiplier
    /// `μ_i = λw_i − ȳ_i` being negative.
    pub max_stationarity_violation: f64,
    /// `λ · |Σ w_i x_i − r|`.
    pub complementarity_gap: f64,
    /// `|Σ w_i x_i − r|` when the ball constraint is active, otherwise the
    /// amount by which it is exceeded (zero for a feasible interior point).
    pub tightness_gap: f64,
    /// `max(1, ‖ȳ‖_∞, Σ w_i ȳ_i)`; gaps are meaningful relative to this.
    pub scale: f64,
}

impl KktReport {
    pub fn max_gap(&self) -> f64 {
        self.max_stationarity_violation
            .max(self.complementarity_gap)
            .max(self.tightness_gap)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedL1Solution {
    pub x: Vec<f64>,
    pub lambda: f64,
    pub kkt: KktReport,
}

fn validate(y_bar: &[f64], w: &[f64], r: f64) -> Result<()> {
    if y_bar.len() != w.len() {
        return Err(LpBallError::DimensionMismatch {
            expected: y_bar.len(),
            got: w.len(),
        });
    }
    if let Some((index, &value)) = w
        .iter()
        .enumerate()
        .find(|(_, &v)| !(v > 0.0 && v.is_finite()))
    {
        return Err(LpBallError::NonPositiveWeight { index, value });
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(LpBallError::NonPositiveRadius(r));
    }
    Ok(())
}

/// Evaluate the KKT conditions of the subproblem at `(x, λ)`.
pub fn kkt_report(y_bar: &[f64], w: &[f64], r: f64, x: &[f64], lambda: f64) -> KktReport {
    let mut stat = 0.0f64;
    let mut y_max = 0.0f64;
    for ((&yi, &wi), &xi) in y_bar.iter().zip(w).zip(x) {
        y_max = y_max.max(yi);
        let v = if xi > 0.0 {
            (yi - xi - lambda * wi).abs()
        } else {
            (yi - lambda * wi).max(0.0)
        };
        stat = stat.max(v);
    }
    let load = sum::sum(w.iter().zip(x).map(|(a, b)| a * b));
    let mass = sum::sum(w.iter().zip(y_bar).map(|(a, b)| a * b));
    let tightness_gap = if lambda > 0.0 {
        (load - r).abs()
    } else {
        (load - r).max(0.0)
    };
    KktReport {
        max_stationarity_violation: stat,
        complementarity_gap: lambda * (load - r).abs(),
        tightness_gap,
        scale: 1.0f64.max(y_max).max(mass),
    }
}

#[cfg(test)]
fn threshold(y_bar: &[f64], w: &[f64], lambda: f64) -> Vec<f64> {
    y_bar
        .iter()
        .zip(w)
        .map(|(&yi, &wi)| (yi - lambda * wi).max(0.0))
        .collect()
}

/// Exact projection by a downward scan over breakpoints, sorting lazily.
pub fn project_weighted_l1(y_bar: &[f64], w: &[f64], r: f64) -> Result<WeightedL1Solution> {
    let (x, lambda) = project_weighted_l1_point(y_bar, w, r)?;
    let kkt = kkt_report(y_bar, w, r, &x, lambda);
    Ok(WeightedL1Solution { x, lambda, kkt })
}

/// Same as [`project_weighted_l1`] but returns only `(x, λ)`, skipping the
/// KKT report.
pub fn project_weighted_l1_point(y_bar: &[f64], w: &[f64], r: f64) -> Result<(Vec<f64>, f64)> {
    validate(y_bar, w, r)?;

    // The multiplier of the projection restricted to any subset of the
    // coordinates is a lower bound on the full one. Solving small subsets as
    // they stream in lets us discard breakpoints that can never be active
    // without materialising all of them.
    let mut mass = CompensatedSum::new();
    let mut floor = 0.0f64;
    let mut candidates: Vec<(f64, usize)> = Vec::new();
    let mut cap = PRUNE_BLOCK;
    for (i, (&yi, &wi)) in y_bar.iter().zip(w).enumerate() {
        mass.add(wi * yi);
        let z = yi / wi;
        if z > floor {
            candidates.push((z, i));
            if candidates.len() >= cap {
                let seg = scan(&mut candidates, w, r, floor);
                if seg.reached {
                    // Margin for rounding in the subset multiplier, which is
                    // accurate to a few ulps of the largest breakpoint.
                    let margin = 16.0 * f64::EPSILON * seg.z_top;
                    floor = floor.max(seg.z_g - seg.eta - margin);
                    candidates.retain(|c| c.0 > floor);
                }
                cap = (2 * candidates.len()).max(PRUNE_BLOCK);
            }
        }
    }
    if mass.value() <= r {
        return Ok((y_bar.to_vec(), 0.0));
    }

    let seg = scan(&mut candidates, w, r, floor);
    let mut x = vec![0.0; y_bar.len()];
    for &(z, i) in &candidates[..seg.active] {
        x[i] = (w[i] * ((z - seg.z_g) + seg.eta)).clamp(0.0, y_bar[i]);
    }
    Ok((x, (seg.z_g - seg.eta).max(0.0)))
}

const PRUNE_BLOCK: usize = 1024;

/// Where the downward scan stopped.
struct Segment {
    /// The first `active` entries of the candidate slice are the support.
    active: usize,
    /// Smallest breakpoint in the support.
    z_g: f64,
    /// λ = z_g − η.
    eta: f64,
    z_top: f64,
    /// Whether the load reached `r` above `floor`.
    reached: bool,
}

/// Solve the projection restricted to `candidates`, treating everything at
/// or below `floor` as inactive. Reorders `candidates` so that the support
/// comes first.
///
/// The constraint load at multiplier λ is L(λ) = Σ w_i² (z_i − λ)_+. Scan
/// breakpoints downward, carrying L at the current breakpoint as a sum of
/// nonnegative terms, and stop at the first segment where L reaches r.
/// Inside that segment λ = z_g − η with η = (r − L(z_g)) / Σ_A w_i², and
/// x_i = w_i ((z_i − z_g) + η). Nothing here subtracts nearly equal
/// quantities, so Σ w_i x_i = r holds to a few ulps of r even when the
/// weights span many orders of magnitude.
fn scan(candidates: &mut [(f64, usize)], w: &[f64], r: f64, floor: f64) -> Segment {
    let mut sorted = SortedPrefix::new(candidates);
    let total = sorted.len();
    if total == 0 {
        return Segment { active: 0, z_g: floor, eta: 0.0, z_top: floor, reached: false };
    }
    let z_top = sorted.get(0).0;
    let mut load = CompensatedSum::new();
    let mut w_sq_active = CompensatedSum::new();
    let mut z_g = z_top;
    let mut active = 0;
    let mut eta = 0.0;
    let mut reached = false;
    while active < total {
        z_g = sorted.get(active).0;
        while active < total && sorted.get(active).0 == z_g {
            let i = sorted.get(active).1;
            w_sq_active.add(w[i] * w[i]);
            active += 1;
        }
        let z_next = if active < total { sorted.get(active).0 } else { floor };
        let load_here = load.value();
        load.add(w_sq_active.value() * (z_g - z_next));
        reached = load.value() >= r;
        if reached || active == total {
            eta = ((r - load_here) / w_sq_active.value()).clamp(0.0, z_g - z_next);
            break;
        }
    }
    Segment { active, z_g, eta, z_top, reached }
}

/// Candidates sorted in descending breakpoint order on demand: only the
/// prefix that the scan actually reaches is ever sorted.
struct SortedPrefix<'a> {
    items: &'a mut [(f64, usize)],
    sorted: usize,
}

impl<'a> SortedPrefix<'a> {
    const INITIAL_BLOCK: usize = 64;

    fn new(items: &'a mut [(f64, usize)]) -> Self {
        Self { items, sorted: 0 }
    }

    fn len(&self) -> usize {
        self.items.len()
    }

    fn get(&mut self, idx: usize) -> (f64, usize) {
        if idx >= self.sorted {
            self.extend(idx + 1);
        }
        self.items[idx]
    }

    fn extend(&mut self, need: usize) {
        let desc = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0);
        let target = need
            .max(2 * self.sorted)
            .max(Self::INITIAL_BLOCK)
            .min(self.items.len());
        let rest = &mut self.items[self.sorted..];
        let m = target - self.sorted;
        if m < rest.len() {
            rest.select_nth_unstable_by(m, desc);
        }
        rest[..m].sort_unstable_by(desc);
        self.sorted = target;
    }
}

/// Brute-force projection by enumeration of all `2^n` supports.
pub fn project_oracle(y_bar: &[f64], w: &[f64], r: f64) -> Result<WeightedL1Solution> {
    validate(y_bar, w, r)?;
    let n = y_bar.len();
    if n > ORACLE_MAX_DIM {
        return Err(LpBallError::OracleTooLarge {
            max: ORACLE_MAX_DIM,
            got: n,
        });
    }

    let objective = |x: &[f64]| -> f64 {
        0.5 * x.iter().zip(y_bar).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
    };
    let tol = 1e-12 * y_bar.iter().fold(1.0f64, |m, &v| m.max(v));

    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    let mass: f64 = y_bar.iter().zip(w).map(|(a, b)| a * b).sum();
    if mass <= r {
        let x = y_bar.to_vec();
        best = Some((0.0, x, 0.0));
    }

    for mask in 1u32..(1u32 << n) {
        let (mut s_a, mut s_b) = (0.0, 0.0);
        for i in 0..n {
            if mask & (1 << i) != 0 {
                s_a += w[i] * y_bar[i];
                s_b += w[i] * w[i];
            }
        }
        let lambda = (s_a - r) / s_b;
        if lambda < 0.0 {
            continue;
        }
        let feasible = (0..n).all(|i| {
            let v = y_bar[i] - lambda * w[i];
            if mask & (1 << i) != 0 {
                v >= -tol
            } else {
                v <= tol
            }
        });
        if !feasible {
            continue;
        }
        let x: Vec<f64> = (0..n)
            .map(|i| {
                if mask & (1 << i) != 0 {
                    (y_bar[i] - lambda * w[i]).max(0.0)
                } else {
                    0.0
                }
            })
            .collect();
        let obj = objective(&x);
        if best.as_ref().map_or(true, |b| obj < b.0) {
            best = Some((obj, x, lambda));
        }
    }

    let (_, x, lambda) = best.expect("projection onto a nonempty convex set always exists");
    let kkt = kkt_report(y_bar, w, r, &x, lambda);
    Ok(WeightedL1Solution { x, lambda, kkt })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn interior_point_is_returned_unchanged() {
        let s = project_weighted_l1(&[0.1, 0.1], &[1.0, 1.0], 1.0).unwrap();
        assert_eq!(s.x, vec![0.1, 0.1]);
        assert_eq!(s.lambda, 0.0);
    }

    #[test]
    fn both_coordinates_active() {
        let s = project_weighted_l1(&[0.5, 0.45], &[1.0, 1.0], 0.5).unwrap();
        assert!((s.lambda - 0.225).abs() < 1e-15);
        assert!((s.x[0] - 0.275).abs() < 1e-15);
        assert!((s.x[1] - 0.225).abs() < 1e-15);
    }

    #[test]
    fn one_coordinate_clipped_matches_oracle() {
        let (y, w, r) = ([1.0, 0.2], [1.0, 4.0], 0.5);
        let fast = project_weighted_l1(&y, &w, r).unwrap();
        let slow = project_oracle(&y, &w, r).unwrap();
        assert!((fast.lambda - 0.5).abs() < 1e-15);
        assert_eq!(fast.x[1], 0.0);
        for (a, b) in fast.x.iter().zip(&slow.x) {
            assert!((a - b).abs() <= 1e-12);
        }
        assert!((fast.lambda - slow.lambda).abs() <= 1e-12);
    }

    #[test]
    fn oracle_single_coordinate() {
        let s = project_oracle(&[2.0], &[1.0], 1.0).unwrap();
        assert_eq!(s.x, vec![1.0]);
        assert_eq!(s.lambda, 1.0);
    }

    #[test]
    fn ties_form_one_segment() {
        let y = [1.0, 2.0, 3.0, 0.1];
        let w = [1.0, 2.0, 3.0, 1.0];
        let fast = project_weighted_l1(&y, &w, 2.0).unwrap();
        let slow = project_oracle(&y, &w, 2.0).unwrap();
        assert!((fast.lambda - slow.lambda).abs() < 1e-14);
        assert!(fast.kkt.max_gap() <= 1e-12 * fast.kkt.scale);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            project_weighted_l1(&[1.0, 1.0], &[1.0, 0.0], 1.0),
            Err(LpBallError::NonPositiveWeight { index: 1, .. })
        ));
        assert!(matches!(
            project_weighted_l1(&[1.0], &[1.0], -1.0),
            Err(LpBallError::NonPositiveRadius(_))
        ));
        assert!(matches!(
            project_weighted_l1(&[1.0], &[1.0, 2.0], 1.0),
            Err(LpBallError::DimensionMismatch { .. })
        ));
        let big = vec![1.0; ORACLE_MAX_DIM + 1];
        assert!(matches!(
            project_oracle(&big, &big, 1.0),
            Err(LpBallError::OracleTooLarge { .. })
        ));
    }

    fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
        (1usize..30).prop_flat_map(|n| {
            (
                prop::collection::vec(1e-3f64..5.0, n),
                prop::collection::vec(0.05f64..20.0, n),
                0.01f64..1.5,
            )
                .prop_map(|(y, w, frac)| {
                    let mass: f64 = y.iter().zip(&w).map(|(a, b)| a * b).sum();
                    (y, w, frac * mass)
                })
        })
    }

    /// Large instances with weights over many decades, some exact ties and
    /// some zero coordinates, so the streaming prune is exercised.
    fn wide_instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
        (2000usize..6000, any::<u64>(), 1e-4f64..0.999, any::<bool>()).prop_map(
            |(n, seed, frac, moderate_radius)| {
                use rand::{Rng, SeedableRng};
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let mut y = Vec::with_capacity(n);
                let mut w = Vec::with_capacity(n);
                for i in 0..n {
                    if i > 0 && rng.gen_bool(0.05) {
                        y.push(y[i - 1]);
                        w.push(w[i - 1]);
                        continue;
                    }
                    y.push(if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.0..1.0) });
                    let decades = if rng.gen_bool(0.3) { 3.0..150.0 } else { -3.0..3.0 };
                    w.push(10f64.powf(rng.gen_range(decades)));
                }
                let mass = sum::sum(
                    y.iter()
                        .zip(&w)
                        .filter(|(_, &b)| !moderate_radius || b < 1e3)
                        .map(|(a, b)| a * b),
                );
                (y, w, frac * mass)
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn pruning_matches_a_full_scan((y, w, r) in wide_instance()) {
            let (x, lambda) = project_weighted_l1_point(&y, &w, r).unwrap();
            let mut all: Vec<(f64, usize)> =
                y.iter().zip(&w).enumerate().map(|(i, (a, b))| (a / b, i)).filter(|c| c.0 > 0.0).collect();
            let seg = scan(&mut all, &w, r, 0.0);
            let mut reference = vec![0.0; y.len()];
            for &(z, i) in &all[..seg.active] {
                reference[i] = (w[i] * ((z - seg.z_g) + seg.eta)).clamp(0.0, y[i]);
            }
            prop_assert_eq!(lambda, (seg.z_g - seg.eta).max(0.0));
            prop_assert_eq!(x, reference);
        }
    }

    proptest! {
        #[test]
        fn threshold_form_and_tightness((y, w, r) in instance()) {
            let s = project_weighted_l1(&y, &w, r).unwrap();
            let rebuilt = threshold(&y, &w, s.lambda);
            for ((a, b), yi) in rebuilt.iter().zip(&s.x).zip(&y) {
                prop_assert!((a - b).abs() <= 4.0 * f64::EPSILON * yi);
            }
            let mass: f64 = y.iter().zip(&w).map(|(a, b)| a * b).sum();
            if mass > r {
                let load = sum::sum(w.iter().zip(&s.x).map(|(a, b)| a * b));
                prop_assert!((load - r).abs() <= 1e-12 * r.max(1.0));
            } else {
                prop_assert_eq!(&s.x, &y);
            }
            prop_assert!(s.kkt.max_gap() <= 1e-12 * s.kkt.scale);
        }

        #[test]
        fn closer_than_any_feasible_point(
            (y, w, r) in instance(),
            dirs in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 30), 8),
        ) {
            let s = project_weighted_l1(&y, &w, r).unwrap();
            let d_proj: f64 = s.x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
            for dir in dirs {
                // Scale a random nonnegative direction onto the ball surface.
                let u = &dir[..y.len()];
                let load: f64 = u.iter().zip(&w).map(|(a, b)| a * b).sum();
                if load == 0.0 { continue; }
                let cand: Vec<f64> = u.iter().map(|v| v * r / load).collect();
                let d: f64 = cand.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
                prop_assert!(d_proj <= d + 1e-12);
            }
        }

        #[test]
        fn shrinking_radius_shrinks_solution((y, w, r) in instance()) {
            let mut prev = f64::INFINITY;
            for k in 0..12 {
                let rk = r * 0.5f64.powi(k);
                let l1: f64 = project_weighted_l1(&y, &w, rk).unwrap().x.iter().sum();
                prop_assert!(l1 <= prev + 1e-12);
                prev = l1;
            }
            let w_min = w.iter().cloned().fold(f64::INFINITY, f64::min);
            let y_l1: f64 = y.iter().sum();
            prop_assert!(prev <= y_l1.min(r * 0.5f64.powi(11) / w_min) * (1.0 + 1e-12) + 1e-14 * y_l1);
        }
    }
}
