//! Training-target generation for the neural pipeline: map each measurement
//! to its nearest point on the origin-centered sphere of the estimated field.

use crate::error::{Error, Result};
use crate::series::{SampleSeries, Vec3};

/// Matched input/target series for supervised calibration.
#[derive(Debug, Clone)]
pub struct TrainingPairs {
    pub inputs: SampleSeries,
    pub targets: SampleSeries,
    /// Sphere radius of the targets, nT.
    pub field: f64,
}

/// Nearest point on the sphere `|p| = field` under Euclidean distance.
///
/// The minimizer of `(x - x_e)^2 + (y - y_e)^2 + (z - z_e)^2` subject to
/// `x^2 + y^2 + z^2 = field^2` is the radial projection `field * p / |p|`,
/// unique for any nonzero `p`.
pub fn project_to_sphere(p: Vec3, field: f64) -> Result<Vec3> {
    if !(field > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "field must be positive, got {field}"
        )));
    }
    let norm = p.magnitude();
    if norm == 0.0 {
        return Err(Error::ZeroVectorSample { index: 0 });
    }
    let k = field / norm;
    Ok(Vec3::new(k * p.x, k * p.y, k * p.z))
}

/// Pair every raw sample with its sphere projection.
pub fn build_training_pairs(raw: &SampleSeries, field: f64) -> Result<TrainingPairs> {
    if !(field > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "field must be positive, got {field}"
        )));
    }
    let mut targets = Vec::with_capacity(raw.len());
    for (i, (t, b)) in raw.samples().iter().enumerate() {
        if b.magnitude() == 0.0 {
            return Err(Error::ZeroVectorSample { index: i });
        }
        targets.push((*t, project_to_sphere(*b, field)?));
    }
    let targets = SampleSeries::new(
        targets,
        raw.sample_rate(),
        format!("{} (targets)", raw.label()),
    )?;
    Ok(TrainingPairs {
        inputs: raw.clone(),
        targets,
        field,
    })
}
