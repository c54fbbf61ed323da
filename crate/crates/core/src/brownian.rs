//! Brownian-motion oracle: piecewise-linear paths with Gaussian increments,
//! cone occupation times, and a Gaussian sampler for CLT comparisons.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

use crate::exec::{map_indexed, rng_from, trajectory_seed, Execution};
use crate::sojourn::{path_occupation, Cone};
use crate::stats::{ks_two_sample, wilson_interval};
use crate::vector::{Vector, MAX_DIM};

/// Default time step.
pub const DEFAULT_STEP: f64 = 1e-3;

#[derive(Debug, Error, PartialEq)]
pub enum BrownianError {
    #[error("step {step} must be positive and at most horizon/100 = {max}")]
    InvalidStep { step: f64, max: f64 },
    #[error("dimension {0} not in 1..={MAX_DIM}")]
    Dimension(usize),
    #[error("covariance matrix is not symmetric positive-definite")]
    NotPositiveDefinite,
}

/// A sampled path `B_0 = 0, B_h, B_{2h}, ..., B_t`, interpolated linearly.
#[derive(Clone, Debug)]
pub struct BrownianPath {
    pub dim: usize,
    pub horizon: f64,
    /// Effective step `t / ⌈t/h⌉`.
    pub step: f64,
    pub seed: u64,
    pub points: Vec<Vector>,
}

impl BrownianPath {
    pub fn steps(&self) -> usize {
        self.points.len() - 1
    }

    pub fn endpoint(&self) -> Vector {
        *self.points.last().expect("path has points")
    }
}

/// Path on `[0, t]` with `⌈t/h⌉` i.i.d. `N(0, step·I)` increments.
pub fn simulate(
    dim: usize,
    horizon: f64,
    step: f64,
    seed: u64,
) -> Result<BrownianPath, BrownianError> {
    if dim == 0 || dim > MAX_DIM {
        return Err(BrownianError::Dimension(dim));
    }
    let max = horizon / 100.0;
    if !(step > 0.0 && step <= max * (1.0 + 1e-12)) {
        return Err(BrownianError::InvalidStep { step, max });
    }
    let steps = (horizon / step - 1e-9).ceil().max(1.0) as usize;
    let h = horizon / steps as f64;
    let sd = h.sqrt();
    let mut rng = rng_from(seed);
    let mut points = Vec::with_capacity(steps + 1);
    let mut b = Vector::zeros(dim);
    points.push(b);
    for _ in 0..steps {
        for i in 0..dim {
            let z: f64 = rng.sample(StandardNormal);
            b.as_mut_slice()[i] += sd * z;
        }
        points.push(b);
    }
    Ok(BrownianPath {
        dim,
        horizon,
        step: h,
        seed,
        points,
    })
}

/// `τ_C(t)/t = (1/t)∫_0^t 1_C(B_s) ds` on the interpolated path.
pub fn tau_brownian(path: &BrownianPath, cone: &Cone) -> f64 {
    path_occupation(&path.points, cone)
}

/// Normalized occupation times of `samples` independent paths.
#[allow(clippy::too_many_arguments)]
pub fn tau_samples(
    cone: &Cone,
    horizon: f64,
    step: f64,
    samples: usize,
    global_seed: u64,
    exec: Execution,
) -> Result<Vec<f64>, BrownianError> {
    // validate once, then every path is valid
    simulate(cone.dim(), horizon, step, global_seed)?;
    Ok(map_indexed(exec, samples, |i| {
        let path = simulate(
            cone.dim(),
            horizon,
            step,
            trajectory_seed(global_seed, i as u64),
        )
        .expect("validated");
        tau_brownian(&path, cone)
    }))
}

/// Two-sample KS distance between `τ_C(t1)/t1` and `τ_C(t2)/t2`.
pub fn scale_invariance_check(
    cone: &Cone,
    t1: f64,
    t2: f64,
    samples: usize,
    step: f64,
    global_seed: u64,
    exec: Execution,
) -> Result<f64, BrownianError> {
    assert!(t1 != t2, "horizons must differ");
    let a = tau_samples(cone, t1, step, samples, global_seed, exec)?;
    let b = tau_samples(cone, t2, step, samples, global_seed ^ 0x5ca1e, exec)?;
    Ok(ks_two_sample(&a, &b))
}

#[derive(Clone, Debug, Serialize)]
pub struct PositivityReport {
    pub alpha: f64,
    pub samples: usize,
    pub successes: usize,
    pub probability: f64,
    /// 95% Wilson interval.
    pub ci95: (f64, f64),
}

/// Empirical `P(τ_C(1) > 1 − α)`.
pub fn positivity_check(
    cone: &Cone,
    alpha: f64,
    samples: usize,
    step: f64,
    global_seed: u64,
    exec: Execution,
) -> Result<PositivityReport, BrownianError> {
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    let taus = tau_samples(cone, 1.0, step, samples, global_seed, exec)?;
    let successes = taus.iter().filter(|&&t| t > 1.0 - alpha).count();
    Ok(PositivityReport {
        alpha,
        samples,
        successes,
        probability: successes as f64 / samples as f64,
        ci95: wilson_interval(successes, samples, 1.96),
    })
}

/// Exact sampler of `N(0, Γ)` through the Cholesky factor `Γ = L·Lᵀ`.
#[derive(Clone, Debug)]
pub struct GaussianSampler {
    factor: DMatrix<f64>,
}

impl GaussianSampler {
    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Vector {
        let z = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        Vector::from_slice((&self.factor * z).as_slice())
    }

    pub fn samples(&self, count: usize, seed: u64) -> Vec<Vector> {
        let mut rng = rng_from(seed);
        (0..count).map(|_| self.sample(&mut rng)).collect()
    }
}

/// Gaussian reference law `N(0, Γ)` for the central limit checks.
pub fn clt_reference(covariance: &[Vec<f64>]) -> Result<GaussianSampler, BrownianError> {
    let d = covariance.len();
    if d == 0 || d > MAX_DIM || covariance.iter().any(|r| r.len() != d) {
        return Err(BrownianError::Dimension(d));
    }
    let m = DMatrix::from_fn(d, d, |i, j| covariance[i][j]);
    let scale = m.amax().max(f64::MIN_POSITIVE);
    if (&m - m.transpose()).amax() > 1e-12 * scale {
        return Err(BrownianError::NotPositiveDefinite);
    }
    let chol = m.cholesky().ok_or(BrownianError::NotPositiveDefinite)?;
    let factor = chol.unpack();
    // a numerically singular matrix can still factor with a tiny pivot
    if factor.diagonal().iter().any(|&p| p <= 1e-10 * scale.sqrt()) {
        return Err(BrownianError::NotPositiveDefinite);
    }
    Ok(GaussianSampler { factor })
}
