//! Synthetic measurement generator: ideal sphere samples, ellipsoidal
//! distortion (non-orthogonality, per-axis scaling, hard-iron offset),
//! Gaussian sensor noise and controllable sphere coverage.

use nalgebra::{Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{SampleSeries, Vec3};

/// Ground-truth distortion applied to ideal sphere samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistortionTruth {
    /// Row-major 3x3 soft-iron matrix.
    pub soft_iron: [[f64; 3]; 3],
    /// Hard-iron offset, nT.
    pub hard_iron: [f64; 3],
    /// Per-component Gaussian noise standard deviation, nT.
    pub noise_sigma: f64,
    /// Ambient field magnitude, nT.
    pub field: f64,
}

impl DistortionTruth {
    pub fn new(
        soft_iron: Matrix3<f64>,
        hard_iron: Vec3,
        noise_sigma: f64,
        field: f64,
    ) -> Result<Self> {
        if soft_iron.determinant().abs() <= 1e-12 {
            return Err(Error::SingularMatrix {
                det: soft_iron.determinant(),
            });
        }
        if noise_sigma < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "noise_sigma must be non-negative, got {noise_sigma}"
            )));
        }
        if !(field > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "field must be positive, got {field}"
            )));
        }
        Ok(DistortionTruth {
            soft_iron: [
                [soft_iron[(0, 0)], soft_iron[(0, 1)], soft_iron[(0, 2)]],
                [soft_iron[(1, 0)], soft_iron[(1, 1)], soft_iron[(1, 2)]],
                [soft_iron[(2, 0)], soft_iron[(2, 1)], soft_iron[(2, 2)]],
            ],
            hard_iron: [hard_iron.x, hard_iron.y, hard_iron.z],
            noise_sigma,
            field,
        })
    }

    /// No distortion, no noise, field B.
    pub fn ideal(field: f64) -> Result<Self> {
        DistortionTruth::new(Matrix3::identity(), Vec3::ZERO, 0.0, field)
    }

    pub fn soft_iron_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.soft_iron[i][j])
    }

    pub fn hard_iron_vec(&self) -> Vec3 {
        Vec3::new(self.hard_iron[0], self.hard_iron[1], self.hard_iron[2])
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SamplingMode {
    /// Low-discrepancy uniform directions on the full sphere.
    UniformFull,
    /// Same construction restricted to a polar cap of the given area fraction.
    UniformCap { fraction: f64 },
    /// Seeded smooth rotation path at the given revolution rate.
    Trajectory { rev_rate: f64, duration: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplingPlan {
    #[serde(flatten)]
    pub mode: SamplingMode,
    pub n_samples: usize,
    pub sample_rate: f64,
    pub seed: u64,
}

impl SamplingPlan {
    fn validate(&self) -> Result<()> {
        if self.n_samples < 1 {
            return Err(Error::InvalidConfig("n_samples must be >= 1".into()));
        }
        if !(self.sample_rate > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "sample_rate must be positive, got {}",
                self.sample_rate
            )));
        }
        if let SamplingMode::UniformCap { fraction } = self.mode {
            if !(fraction > 0.0 && fraction <= 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "cap fraction must be in (0, 1], got {fraction}"
                )));
            }
        }
        Ok(())
    }
}

const GOLDEN_ANGLE: f64 = 2.399963229728653; // pi * (3 - sqrt(5))

/// Fibonacci lattice on the full unit sphere.
pub fn fibonacci_sphere(n: usize) -> Vec<Vector3<f64>> {
    fibonacci_cap(n, 1.0)
}

/// Fibonacci lattice on the polar cap of area fraction `f` (z from 1 down to
/// `1 - 2f`); `f = 1` is the full sphere.
pub fn fibonacci_cap(n: usize, f: f64) -> Vec<Vector3<f64>> {
    (0..n)
        .map(|i| {
            let z = 1.0 - f * (2 * i + 1) as f64 / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let theta = GOLDEN_ANGLE * i as f64;
            Vector3::new(r * theta.cos(), r * theta.sin(), z)
        })
        .collect()
}

/// Unit measurement directions for a sampling plan.
pub fn sample_directions(plan: &SamplingPlan) -> Result<Vec<Vector3<f64>>> {
    plan.validate()?;
    match plan.mode {
        SamplingMode::UniformFull => Ok(fibonacci_sphere(plan.n_samples)),
        SamplingMode::UniformCap { fraction } => Ok(fibonacci_cap(plan.n_samples, fraction)),
        SamplingMode::Trajectory { rev_rate, .. } => Ok(trajectory_directions(
            plan.n_samples,
            plan.sample_rate,
            rev_rate,
            plan.seed,
        )),
    }
}

// Rotate a unit vector at a constant angular rate about an axis that drifts
// by a small seeded random walk, giving a smooth hand-rotation-like path.
fn trajectory_directions(
    n: usize,
    sample_rate: f64,
    rev_rate: f64,
    seed: u64,
) -> Vec<Vector3<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal: Normal<f64> = Normal::new(0.0, 1.0).unwrap();
    let step = 2.0 * std::f64::consts::PI * rev_rate / sample_rate;
    let drift = 0.02;
    let mut dir = Vector3::new(1.0, 0.0, 0.0);
    let mut axis = Vector3::new(0.0, 0.0, 1.0);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(dir);
        let jitter = Vector3::new(
            normal.sample(&mut rng),
            normal.sample(&mut rng),
            normal.sample(&mut rng),
        );
        axis = (axis + drift * jitter).normalize();
        let rot = nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), step);
        dir = (rot * dir).normalize();
    }
    out
}

/// Lower-triangular non-orthogonality matrix from the sensing-axis angles,
/// composed with per-axis scale factors (rows are unit-norm before scaling):
///
/// ```text
/// row 1 = (1, 0, 0)
/// row 2 = (sin v12, cos v12, 0)
/// row 3 = (sin v13, sin v23 cos v13, sqrt(1 - sin^2 v13 - sin^2 v23 cos^2 v13))
/// ```
pub fn soft_iron_from_angles(
    v12: f64,
    v13: f64,
    v23: f64,
    scales: [f64; 3],
) -> Result<Matrix3<f64>> {
    let limit = 10f64.to_radians();
    for a in [v12, v13, v23] {
        if a.abs() >= limit {
            return Err(Error::InvalidConfig(format!(
                "non-orthogonality angle {a} rad exceeds 10 degrees"
            )));
        }
    }
    for s in scales {
        if !(s > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "scale factors must be positive, got {s}"
            )));
        }
    }
    let r2 = (v12.sin(), v12.cos());
    let r3x = v13.sin();
    let r3y = v23.sin() * v13.cos();
    let radicand = 1.0 - r3x * r3x - r3y * r3y;
    if radicand <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "angle combination leaves non-positive radicand {radicand}"
        )));
    }
    let rows = Matrix3::new(
        1.0,
        0.0,
        0.0, //
        r2.0,
        r2.1,
        0.0, //
        r3x,
        r3y,
        radicand.sqrt(),
    );
    Ok(Matrix3::from_diagonal(&Vector3::new(scales[0], scales[1], scales[2])) * rows)
}

/// Generate a distorted raw series and its ideal on-sphere counterpart.
///
/// Ideal samples are `field * d_i`; raw samples are
/// `soft_iron * ideal + hard_iron + n_i` with iid zero-mean Gaussian noise
/// of per-component std `noise_sigma`, seeded from the plan.
pub fn generate(
    truth: &DistortionTruth,
    plan: &SamplingPlan,
) -> Result<(SampleSeries, SampleSeries)> {
    let dirs = sample_directions(plan)?;
    let soft = truth.soft_iron_matrix();
    let hard = truth.hard_iron_vec().to_vector();
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let dt = 1.0 / plan.sample_rate;
    let mut ideal = Vec::with_capacity(dirs.len());
    let mut raw = Vec::with_capacity(dirs.len());
    for (i, d) in dirs.iter().enumerate() {
        let t = i as f64 * dt;
        let s = truth.field * d;
        let mut r = soft * s + hard;
        if truth.noise_sigma > 0.0 {
            r += truth.noise_sigma
                * Vector3::new(
                    normal.sample(&mut rng),
                    normal.sample(&mut rng),
                    normal.sample(&mut rng),
                );
        }
        ideal.push((t, Vec3::from_vector(s)));
        raw.push((t, Vec3::from_vector(r)));
    }
    Ok((
        SampleSeries::new(raw, plan.sample_rate, "synthetic raw")?,
        SampleSeries::new(ideal, plan.sample_rate, "synthetic ideal")?,
    ))
}
