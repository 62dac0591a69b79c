//! Preprocessing filters.

use crate::error::{Error, Result};
use crate::series::{SampleSeries, Vec3};

/// Trailing per-component moving average over `round(window_seconds * rate)`
/// samples. Output length is `len - w + 1`; each output keeps the timestamp
/// of the last sample in its window.
pub fn moving_average(series: &SampleSeries, window_seconds: f64) -> Result<SampleSeries> {
    if !(window_seconds > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "window must be positive, got {window_seconds}"
        )));
    }
    let w = (window_seconds * series.sample_rate()).round() as usize;
    if w < 1 {
        return Err(Error::InvalidConfig(format!(
            "window of {window_seconds} s spans less than one sample at {} Hz",
            series.sample_rate()
        )));
    }
    let n = series.len();
    if w > n {
        return Err(Error::WindowTooLong { window: w, len: n });
    }

    let samples = series.samples();
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sz = 0.0;
    let mut out = Vec::with_capacity(n - w + 1);
    for (i, (t, b)) in samples.iter().enumerate() {
        sx += b.x;
        sy += b.y;
        sz += b.z;
        if i >= w {
            let old = samples[i - w].1;
            sx -= old.x;
            sy -= old.y;
            sz -= old.z;
        }
        if i + 1 >= w {
            let inv = 1.0 / w as f64;
            out.push((*t, Vec3::new(sx * inv, sy * inv, sz * inv)));
        }
    }
    SampleSeries::new(
        out,
        series.sample_rate(),
        format!("{} (ma {window_seconds}s)", series.label()),
    )
}

/// Analytical amplitude attenuation of a `w`-sample moving average applied to
/// a sinusoid of frequency `f` sampled at `fs`.
pub fn moving_average_attenuation(f: f64, fs: f64, w: usize) -> f64 {
    let x = std::f64::consts::PI * f / fs;
    ((x * w as f64).sin() / (w as f64 * x.sin())).abs()
}
