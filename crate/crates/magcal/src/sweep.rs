//! Coverage/noise sweep: for each (coverage, sigma, method, seed) cell,
//! generate a training set, calibrate, and evaluate the model on an
//! independent full-coverage noiseless-but-distorted test set.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geocal::{apply, calibrate_geometric, estimate_field_magnitude, CalibrationModel};
use crate::metrics::MetricReport;
use crate::nncal::{export_model, train, TrainConfig};
use crate::project::build_training_pairs;
use crate::series::{SampleSeries, Vec3};
use crate::synth::{generate, soft_iron_from_angles, DistortionTruth, SamplingMode, SamplingPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Geo,
    Nn,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::Geo => write!(f, "geo"),
            Method::Nn => write!(f, "nn"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub coverages: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub n_samples: usize,
    pub eval_samples: usize,
    pub field: f64,
    pub train: TrainConfig,
    /// Optional soft/hard-iron template applied to every cell (its noise and
    /// field are overridden per cell). `None` studies an undistorted sensor,
    /// isolating the noise x coverage behavior.
    pub distortion: Option<DistortionTruth>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            coverages: (1..=10).map(|i| i as f64 / 10.0).collect(),
            sigmas: vec![0.1, 0.3],
            methods: vec![Method::Geo],
            seeds: vec![0],
            n_samples: 100_000,
            eval_samples: 20_000,
            field: 45_000.0,
            train: TrainConfig::default(),
            distortion: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub coverage: f64,
    pub sigma: f64,
    pub method: Method,
    pub seed: u64,
    pub ptp: f64,
    pub variance: f64,
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    /// Cells whose calibration failed, with the error message.
    pub failures: Vec<(f64, f64, Method, u64, String)>,
}

/// Default ground-truth distortion used for sweep cells: sub-degree
/// non-orthogonality, sub-percent scale errors, a few-hundred-nT offset.
pub fn default_distortion(sigma: f64, field: f64) -> DistortionTruth {
    let deg = std::f64::consts::PI / 180.0;
    let soft = soft_iron_from_angles(0.5 * deg, -0.3 * deg, 0.4 * deg, [1.003, 0.997, 1.002])
        .expect("angles well within limits");
    DistortionTruth::new(soft, Vec3::new(200.0, -150.0, 80.0), sigma, field)
        .expect("valid distortion")
}

impl SweepConfig {
    /// Ground truth for one cell: the configured soft/hard-iron template (or
    /// none) with the cell's noise level and the sweep field.
    fn cell_truth(&self, sigma: f64) -> Result<DistortionTruth> {
        match &self.distortion {
            Some(t) => {
                DistortionTruth::new(t.soft_iron_matrix(), t.hard_iron_vec(), sigma, self.field)
            }
            None => {
                DistortionTruth::new(nalgebra::Matrix3::identity(), Vec3::ZERO, sigma, self.field)
            }
        }
    }
}

fn training_plan(coverage: f64, n_samples: usize, seed: u64) -> SamplingPlan {
    let mode = if coverage >= 1.0 {
        SamplingMode::UniformFull
    } else {
        SamplingMode::UniformCap { fraction: coverage }
    };
    SamplingPlan {
        mode,
        n_samples,
        sample_rate: 100.0,
        seed,
    }
}

/// Calibrate a raw series with the given method.
pub fn calibrate(
    raw: &SampleSeries,
    method: Method,
    train_cfg: &TrainConfig,
) -> Result<CalibrationModel> {
    match method {
        Method::Geo => Ok(calibrate_geometric(raw)?.0),
        Method::Nn => {
            let field = estimate_field_magnitude(raw)?;
            let pairs = build_training_pairs(raw, field)?;
            let (net, _) = train(&pairs, train_cfg)?;
            export_model(&net, field)
        }
    }
}

/// One sweep cell: train on a (coverage, sigma) dataset, evaluate metrics on
/// an independent full-coverage noiseless distorted set.
pub fn sweep_cell(
    coverage: f64,
    sigma: f64,
    method: Method,
    seed: u64,
    cfg: &SweepConfig,
) -> Result<SweepRow> {
    let truth = cfg.cell_truth(sigma)?;
    let (raw, _) = generate(&truth, &training_plan(coverage, cfg.n_samples, seed))?;
    let mut train_cfg = cfg.train.clone();
    train_cfg.seed = seed;
    let model = calibrate(&raw, method, &train_cfg)?;

    let eval_truth = cfg.cell_truth(0.0)?;
    let (eval_raw, _) = generate(&eval_truth, &training_plan(1.0, cfg.eval_samples, seed + 1))?;
    let report = MetricReport::from_series(&apply(&model, &eval_raw))?;
    Ok(SweepRow {
        coverage,
        sigma,
        method,
        seed,
        ptp: report.ptp,
        variance: report.variance,
    })
}

/// Run every cell; rows come back sorted by (coverage, sigma, method, seed).
pub fn run_sweep(cfg: &SweepConfig) -> SweepOutcome {
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &coverage in &cfg.coverages {
        for &sigma in &cfg.sigmas {
            for &method in &cfg.methods {
                for &seed in &cfg.seeds {
                    match sweep_cell(coverage, sigma, method, seed, cfg) {
                        Ok(row) => rows.push(row),
                        Err(e) => failures.push((coverage, sigma, method, seed, e.to_string())),
                    }
                }
            }
        }
    }
    rows.sort_by(|a, b| {
        (a.coverage, a.sigma, a.method.to_string(), a.seed)
            .partial_cmp(&(b.coverage, b.sigma, b.method.to_string(), b.seed))
            .unwrap()
    });
    SweepOutcome { rows, failures }
}

/// Calibration-time extrapolation assuming coverage accumulates uniformly
/// with rotation time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeExtrapolation {
    pub rotation_minutes: f64,
    pub coverage_achieved: f64,
    pub coverage_needed: f64,
    pub extrapolated_minutes: f64,
}

pub fn extrapolate_time(
    rotation_minutes: f64,
    coverage_achieved: f64,
    coverage_needed: f64,
) -> TimeExtrapolation {
    TimeExtrapolation {
        rotation_minutes,
        coverage_achieved,
        coverage_needed,
        extrapolated_minutes: rotation_minutes * coverage_needed / coverage_achieved,
    }
}

/// Render rows as the plot-ready CSV table.
pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("coverage,sigma,method,seed,ptp,variance\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.coverage, r.sigma, r.method, r.seed, r.ptp, r.variance
        ));
    }
    out
}

/// Apply a calibration and report metrics before and after, the per-command
/// core of `calibrate-geo` / `calibrate-nn`.
pub fn calibrate_and_report(
    raw: &SampleSeries,
    method: Method,
    train_cfg: &TrainConfig,
) -> Result<(CalibrationModel, MetricReport, MetricReport)> {
    let before = MetricReport::from_series(raw)?;
    let model = calibrate(raw, method, train_cfg)?;
    let after = MetricReport::from_series(&apply(&model, raw))?;
    Ok((model, before, after))
}
