//! Euclidean projection onto the nonconvex ℓp ball, `{x : Σ|x_i|^p ≤ γ}` with
//! `0 < p < 1`.
//!
//! The main solver ([`irbp::solve`]) works in the nonnegative orthant: the
//! input is split into signs and magnitudes ([`problem::split_signs`]), a
//! sequence of weighted ℓ1-ball projections ([`weighted_l1`]) is solved on the
//! magnitudes while a smoothing perturbation is driven to zero, and the signs
//! are reapplied at the end ([`problem::recover`]).
//!
//! A bisection/Newton root-searching baseline lives in [`root_search`].
//!
//! ```
//! use lpball::{irbp, ProblemInstance, SolverOptions, RunStatus};
//!
//! let inst = ProblemInstance::new(vec![0.5, 0.45], 0.5, 1.0).unwrap();
//! let report = irbp::solve_with_initial_eps(&inst, &SolverOptions::default(), &[0.072, 0.463]).unwrap();
//! assert_eq!(report.status, RunStatus::Converged);
//! assert!((report.x_final[0] - 0.2972).abs() < 5e-3);
//! ```

pub mod error;
pub mod irbp;
pub mod problem;
pub mod residual;
pub mod root_search;
pub mod sum;
pub mod weighted_l1;

pub use error::{LpBallError, Result};
pub use irbp::{EpsilonSchedule, IterateState, SolverOptions};
pub use problem::{ProblemInstance, ReducedInstance, RunReport, RunStatus};
pub use root_search::RsOptions;
pub use weighted_l1::{KktReport, WeightedL1Solution};
