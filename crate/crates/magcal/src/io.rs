//! File formats: sample CSV (`t,bx,by,bz`), calibration model JSON,
//! network JSON and report JSON.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geocal::{CalibrationModel, Provenance};
use crate::metrics::MetricReport;
use crate::nncal::LinearNet;
use crate::series::{SampleSeries, Vec3};
use crate::synth::{DistortionTruth, SamplingPlan};

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn json_err(path: &Path, source: serde_json::Error) -> Error {
    Error::Json {
        path: path.display().to_string(),
        source,
    }
}

/// Write a series as CSV: `#`-prefixed metadata comments, a `t,bx,by,bz`
/// header, then one row per sample. Values use shortest round-trip float
/// formatting, so read-back is bit-exact.
pub fn write_series_csv(path: &Path, series: &SampleSeries) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("# label: {}\n", series.label()));
    out.push_str(&format!("# sample_rate_hz: {}\n", series.sample_rate()));
    out.push_str("t,bx,by,bz\n");
    for (t, b) in series.samples() {
        out.push_str(&format!("{},{},{},{}\n", t, b.x, b.y, b.z));
    }
    let mut file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| io_err(path, e))
}

/// Read a series CSV written by [`write_series_csv`] (or any file with the
/// same header). The sample rate comes from the metadata comment when
/// present, otherwise it is inferred from the median timestamp spacing.
pub fn read_series_csv(path: &Path) -> Result<SampleSeries> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.display().to_string(),
        line,
        message,
    };

    let mut label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut rate: Option<f64> = None;
    let mut samples = Vec::new();
    let mut saw_header = false;
    for (idx, raw_line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(v) = comment.strip_prefix("label:") {
                label = v.trim().to_string();
            } else if let Some(v) = comment.strip_prefix("sample_rate_hz:") {
                rate =
                    Some(v.trim().parse().map_err(|_| {
                        parse_err(lineno, format!("bad sample rate '{}'", v.trim()))
                    })?);
            }
            continue;
        }
        if !saw_header {
            if line != "t,bx,by,bz" {
                return Err(parse_err(
                    lineno,
                    format!("expected header 't,bx,by,bz', got '{line}'"),
                ));
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(parse_err(
                lineno,
                format!("expected 4 fields, got {}", fields.len()),
            ));
        }
        let mut values = [0.0f64; 4];
        for (i, f) in fields.iter().enumerate() {
            values[i] = f
                .trim()
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad number '{}'", f.trim())))?;
        }
        samples.push((values[0], Vec3::new(values[1], values[2], values[3])));
    }
    if !saw_header {
        return Err(parse_err(
            text.lines().count().max(1),
            "missing 't,bx,by,bz' header".into(),
        ));
    }
    let rate = match rate {
        Some(r) => r,
        None => infer_rate(&samples),
    };
    SampleSeries::new(samples, rate, label)
}

fn infer_rate(samples: &[(f64, Vec3)]) -> f64 {
    if samples.len() < 2 {
        return 1.0;
    }
    let mut dts: Vec<f64> = samples.windows(2).map(|w| w[1].0 - w[0].0).collect();
    dts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = dts[dts.len() / 2];
    if median > 0.0 {
        1.0 / median
    } else {
        1.0
    }
}

/// On-disk calibration model schema.
#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    /// Row-major 3x3 correction matrix.
    matrix: [f64; 9],
    offset: [f64; 3],
    target_field: f64,
    provenance: Provenance,
    created_at: String,
}

pub fn write_model_json(path: &Path, model: &CalibrationModel) -> Result<()> {
    let m = &model.matrix;
    let file = ModelFile {
        matrix: [
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)], //
            m[(1, 0)],
            m[(1, 1)],
            m[(1, 2)], //
            m[(2, 0)],
            m[(2, 1)],
            m[(2, 2)],
        ],
        offset: [model.offset.x, model.offset.y, model.offset.z],
        target_field: model.target_field,
        provenance: model.provenance,
        created_at: chrono::Utc::now().to_rfc3339(),
    };
    let text = serde_json::to_string_pretty(&file).map_err(|e| json_err(path, e))?;
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn read_model_json(path: &Path) -> Result<CalibrationModel> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let file: ModelFile = serde_json::from_str(&text).map_err(|e| json_err(path, e))?;
    let m = file.matrix;
    CalibrationModel::new(
        Matrix3::new(m[0], m[1], m[2], m[3], m[4], m[5], m[6], m[7], m[8]),
        Vec3::new(file.offset[0], file.offset[1], file.offset[2]),
        file.target_field,
        file.provenance,
    )
}

#[derive(Debug, Serialize, Deserialize)]
struct LayerFile {
    /// Row-major 3x3 weights.
    weights: [f64; 9],
    bias: [f64; 3],
}

#[derive(Debug, Serialize, Deserialize)]
struct NetFile {
    layer1: LayerFile,
    layer2: LayerFile,
    seed: u64,
}

fn layer_file(w: &Matrix3<f64>, b: &Vector3<f64>) -> LayerFile {
    LayerFile {
        weights: [
            w[(0, 0)],
            w[(0, 1)],
            w[(0, 2)], //
            w[(1, 0)],
            w[(1, 1)],
            w[(1, 2)], //
            w[(2, 0)],
            w[(2, 1)],
            w[(2, 2)],
        ],
        bias: [b[0], b[1], b[2]],
    }
}

fn layer_parts(l: &LayerFile) -> (Matrix3<f64>, Vector3<f64>) {
    let w = l.weights;
    (
        Matrix3::new(w[0], w[1], w[2], w[3], w[4], w[5], w[6], w[7], w[8]),
        Vector3::new(l.bias[0], l.bias[1], l.bias[2]),
    )
}

pub fn write_net_json(path: &Path, net: &LinearNet, seed: u64) -> Result<()> {
    let file = NetFile {
        layer1: layer_file(&net.w1, &net.b1),
        layer2: layer_file(&net.w2, &net.b2),
        seed,
    };
    let text = serde_json::to_string_pretty(&file).map_err(|e| json_err(path, e))?;
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn read_net_json(path: &Path) -> Result<(LinearNet, u64)> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let file: NetFile = serde_json::from_str(&text).map_err(|e| json_err(path, e))?;
    let (w1, b1) = layer_parts(&file.layer1);
    let (w2, b2) = layer_parts(&file.layer2);
    Ok((LinearNet { w1, b1, w2, b2 }, file.seed))
}

/// Sidecar recording how a synthetic dataset was produced.
#[derive(Debug, Serialize, Deserialize)]
pub struct TruthSidecar {
    pub truth: DistortionTruth,
    pub plan: SamplingPlan,
}

pub fn write_truth_json(path: &Path, sidecar: &TruthSidecar) -> Result<()> {
    let text = serde_json::to_string_pretty(sidecar).map_err(|e| json_err(path, e))?;
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn read_truth_json(path: &Path) -> Result<TruthSidecar> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| json_err(path, e))
}

/// Before/after calibration report mirroring the PTP/variance row structure.
#[derive(Debug, Serialize, Deserialize)]
pub struct CalibrationRunReport {
    pub method: String,
    pub ptp_before: f64,
    pub ptp_after: f64,
    pub var_before: f64,
    pub var_after: f64,
    pub target_field: f64,
    pub n_samples: usize,
}

impl CalibrationRunReport {
    pub fn new(
        method: &str,
        before: &MetricReport,
        after: &MetricReport,
        target_field: f64,
    ) -> Self {
        CalibrationRunReport {
            method: method.to_string(),
            ptp_before: before.ptp,
            ptp_after: after.ptp,
            var_before: before.variance,
            var_after: after.variance,
            target_field,
            n_samples: after.n_samples,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| json_err(path, e))?;
    fs::write(path, text).map_err(|e| io_err(path, e))
}
