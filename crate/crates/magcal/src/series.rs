//! Core sample types: a 3-axis field sample and a time-stamped series.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One 3-axis magnetic field sample, components in nT.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    /// Field magnitude sqrt(x^2 + y^2 + z^2).
    pub fn magnitude(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_vector(v: Vector3<f64>) -> Self {
        Vec3::new(v.x, v.y, v.z)
    }
}

/// Field magnitude of a sample.
pub fn magnitude(v: Vec3) -> f64 {
    v.magnitude()
}

/// A time-stamped sequence of field samples with sampling-rate metadata.
///
/// Invariants enforced at construction: all components finite, timestamps
/// strictly increasing, `sample_rate > 0`, and for uniformly spaced series
/// the rate agrees with the timestamp spacing within 1%.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSeries {
    samples: Vec<(f64, Vec3)>,
    sample_rate: f64,
    label: String,
}

impl SampleSeries {
    pub fn new(
        samples: Vec<(f64, Vec3)>,
        sample_rate: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        if !(sample_rate > 0.0) || !sample_rate.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "sample_rate must be positive and finite, got {sample_rate}"
            )));
        }
        for (i, (t, b)) in samples.iter().enumerate() {
            if !t.is_finite() || !b.is_finite() {
                return Err(Error::NonFiniteSample { index: i });
            }
            if i > 0 && *t <= samples[i - 1].0 {
                return Err(Error::NonIncreasingTimestamps { index: i });
            }
        }
        let series = SampleSeries {
            samples,
            sample_rate,
            label: label.into(),
        };
        series.check_rate()?;
        Ok(series)
    }

    /// Build a uniformly sampled series starting at t = 0.
    pub fn uniform(values: Vec<Vec3>, sample_rate: f64, label: impl Into<String>) -> Result<Self> {
        let samples = values
            .into_iter()
            .enumerate()
            .map(|(i, b)| (i as f64 / sample_rate, b))
            .collect();
        SampleSeries::new(samples, sample_rate, label)
    }

    // Only meaningful when spacing is uniform; non-uniform series skip the check.
    fn check_rate(&self) -> Result<()> {
        if self.samples.len() < 2 {
            return Ok(());
        }
        let dts: Vec<f64> = self.samples.windows(2).map(|w| w[1].0 - w[0].0).collect();
        let min = dts.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = dts.iter().cloned().fold(0.0, f64::max);
        if max / min > 1.01 {
            return Ok(());
        }
        let mean = dts.iter().sum::<f64>() / dts.len() as f64;
        if (mean * self.sample_rate - 1.0).abs() > 0.01 {
            return Err(Error::InconsistentRate {
                rate: self.sample_rate,
                spacing: mean,
            });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[(f64, Vec3)] {
        &self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn values(&self) -> impl Iterator<Item = Vec3> + '_ {
        self.samples.iter().map(|(_, b)| *b)
    }

    /// Per-sample field magnitudes.
    pub fn magnitudes(&self) -> Vec<f64> {
        self.samples.iter().map(|(_, b)| b.magnitude()).collect()
    }

    /// Apply a per-sample map, preserving timestamps and rate.
    ///
    /// The map must produce finite values; this is upheld by every
    /// transformation in the crate (finite matrix times finite vector).
    pub fn map_values(
        &self,
        mut f: impl FnMut(Vec3) -> Vec3,
        label: impl Into<String>,
    ) -> SampleSeries {
        SampleSeries {
            samples: self.samples.iter().map(|(t, b)| (*t, f(*b))).collect(),
            sample_rate: self.sample_rate,
            label: label.into(),
        }
    }
}
