//! Scalar error metrics: peak-to-peak, magnitude variance, RMSE and
//! normalized cross-correlation diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::SampleSeries;

/// Summary statistics of a magnitude series.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    /// Max minus min magnitude, nT.
    pub ptp: f64,
    /// Population variance of the magnitude sequence, nT^2.
    pub variance: f64,
    pub mean_magnitude: f64,
    pub median_magnitude: f64,
    pub n_samples: usize,
}

impl MetricReport {
    pub fn from_series(series: &SampleSeries) -> Result<Self> {
        if series.is_empty() {
            return Err(Error::EmptySeries);
        }
        let mags = series.magnitudes();
        let n = mags.len();
        let mean = mags.iter().sum::<f64>() / n as f64;
        let variance = if n >= 2 {
            magnitude_variance(series)?
        } else {
            0.0
        };
        Ok(MetricReport {
            ptp: ptp(series)?,
            variance,
            mean_magnitude: mean,
            median_magnitude: median(&mags),
            n_samples: n,
        })
    }
}

/// Median of a non-empty slice (mean of the two middle values for even n).
pub(crate) fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Maximum peak-to-peak error of the magnitude sequence.
pub fn ptp(series: &SampleSeries) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for v in series.values() {
        let m = v.magnitude();
        min = min.min(m);
        max = max.max(m);
    }
    Ok(max - min)
}

/// Population variance of the per-sample magnitude sequence.
pub fn magnitude_variance(series: &SampleSeries) -> Result<f64> {
    let n = series.len();
    if n < 2 {
        return Err(Error::TooFewSamples { need: 2, got: n });
    }
    let mags = series.magnitudes();
    let mean = mags.iter().sum::<f64>() / n as f64;
    Ok(mags.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / n as f64)
}

/// Root-mean-squared error between two equal-length scalar sequences.
pub fn rmse(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            a: a.len(),
            b: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::TooFewSamples { need: 1, got: 0 });
    }
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((sum / a.len() as f64).sqrt())
}

/// Normalized cross-correlation of two equal-length sequences over all lags.
#[derive(Debug, Clone)]
pub struct CrossCorrelation {
    /// Values for lags -(n-1) ..= n-1, in order.
    pub values: Vec<f64>,
    n: usize,
}

impl CrossCorrelation {
    /// Value at a given lag of `b` relative to `a`.
    pub fn at(&self, lag: isize) -> f64 {
        let idx = lag + (self.n as isize - 1);
        self.values[idx as usize]
    }

    /// Lag with the maximum correlation value.
    pub fn peak_lag(&self) -> isize {
        let (idx, _) = self
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        idx as isize - (self.n as isize - 1)
    }
}

/// Pearson-style normalized cross-correlation: both sequences are mean-removed
/// and the overlap sum at each lag is divided by `n * std(a) * std(b)`, so a
/// sequence against itself yields exactly 1.0 at lag zero.
pub fn normalized_cross_correlation(a: &[f64], b: &[f64]) -> Result<CrossCorrelation> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            a: a.len(),
            b: b.len(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::TooFewSamples { need: 2, got: n });
    }
    let mean_a = a.iter().sum::<f64>() / n as f64;
    let mean_b = b.iter().sum::<f64>() / n as f64;
    let da: Vec<f64> = a.iter().map(|x| x - mean_a).collect();
    let db: Vec<f64> = b.iter().map(|x| x - mean_b).collect();
    let ss_a: f64 = da.iter().map(|x| x * x).sum();
    let ss_b: f64 = db.iter().map(|x| x * x).sum();
    if ss_a == 0.0 && ss_b == 0.0 {
        return Err(Error::DegenerateInput("both sequences are constant".into()));
    }
    let norm = (ss_a * ss_b).sqrt();
    let mut values = Vec::with_capacity(2 * n - 1);
    for lag in -(n as isize - 1)..=(n as isize - 1) {
        let mut sum = 0.0;
        for i in 0..n {
            let j = i as isize + lag;
            if j >= 0 && (j as usize) < n {
                sum += da[i] * db[j as usize];
            }
        }
        // One constant sequence: numerator is identically zero, define r = 0.
        values.push(if norm == 0.0 { 0.0 } else { sum / norm });
    }
    Ok(CrossCorrelation { values, n })
}
