use lpball::ProblemInstance;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{HarnessError, Result};

/// Variance of the Gaussian entries of `y`.
pub const DEFAULT_NOISE_VARIANCE: f64 = 1e-3;

pub const MAX_GENERATION_ATTEMPTS: usize = 100;

/// ChaCha stream used for instance data. The solvers seed their own
/// generators on stream 0, so equal seeds never share random draws.
const INSTANCE_STREAM: u64 = 1;

/// `y_i ~ N(γ/n, 1e-3)`, redrawn until `y` lies strictly outside the ball.
pub fn gen_instance(n: usize, p: f64, gamma: f64, seed: u64) -> Result<ProblemInstance> {
    gen_instance_with_noise(n, p, gamma, DEFAULT_NOISE_VARIANCE, seed)
}

pub fn gen_instance_with_noise(
    n: usize,
    p: f64,
    gamma: f64,
    variance: f64,
    seed: u64,
) -> Result<ProblemInstance> {
    if n == 0 {
        return Err(HarnessError::InvalidConfig("instance dimension must be at least 1".into()));
    }
    if !(variance.is_finite() && variance > 0.0) {
        return Err(HarnessError::InvalidConfig(format!(
            "noise variance must be positive, got {variance}"
        )));
    }
    let normal = Normal::new(gamma / n as f64, variance.sqrt())
        .map_err(|e| HarnessError::InvalidConfig(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(INSTANCE_STREAM);

    for _ in 0..MAX_GENERATION_ATTEMPTS {
        let y: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        let instance = ProblemInstance::new(y, p, gamma)?;
        if instance.lp_mass() > gamma {
            return Ok(instance);
        }
    }
    Err(HarnessError::Generation {
        attempts: MAX_GENERATION_ATTEMPTS,
        n,
        p,
        gamma,
    })
}
