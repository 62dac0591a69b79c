//! Command-line surface: simulate, calibrate, apply, evaluate, coverage
//! and sweep.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use magcal::coverage::{coverage, CoverageGrid};
use magcal::error::{Error, Result};
use magcal::filter::moving_average;
use magcal::geocal::apply;
use magcal::io;
use magcal::metrics::MetricReport;
use magcal::nncal::TrainConfig;
use magcal::series::{SampleSeries, Vec3};
use magcal::sweep::{
    calibrate_and_report, default_distortion, extrapolate_time, rows_to_csv, run_sweep, Method,
    SweepConfig,
};
use magcal::synth::{generate, soft_iron_from_angles, DistortionTruth, SamplingMode, SamplingPlan};

#[derive(Parser)]
#[command(
    name = "magcal",
    version,
    about = "Scalar calibration toolkit for 3-axis magnetometers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Processing presets named after the sensor/sampling configurations they
/// reproduce: sample rate plus the 0.1 s averaging window.
#[derive(Debug, Clone, Copy, ValueEnum)]
enum Preset {
    #[value(name = "mag649-3khz")]
    Mag649_3khz,
    #[value(name = "mag649-250hz")]
    Mag649_250hz,
    #[value(name = "mag648-1khz")]
    Mag648_1khz,
    #[value(name = "mag648-250hz")]
    Mag648_250hz,
    Custom,
}

impl Preset {
    fn sample_rate(self) -> Option<f64> {
        match self {
            Preset::Mag649_3khz => Some(3000.0),
            Preset::Mag649_250hz => Some(250.0),
            Preset::Mag648_1khz => Some(1000.0),
            Preset::Mag648_250hz => Some(250.0),
            Preset::Custom => None,
        }
    }

    fn window_seconds(self) -> Option<f64> {
        match self {
            Preset::Custom => None,
            _ => Some(0.1),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Geo,
    Nn,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic distorted dataset plus its ideal counterpart.
    Simulate(SimulateArgs),
    /// Geometric (ellipsoid-fit) calibration of a raw CSV.
    CalibrateGeo(CalibrateArgs),
    /// Neural (linear-network) calibration of a raw CSV.
    CalibrateNn(CalibrateArgs),
    /// Apply a saved calibration model to a CSV.
    Apply(ApplyArgs),
    /// Compute PTP/variance metrics of a CSV.
    Evaluate(EvaluateArgs),
    /// Compute sphere-coverage of a CSV.
    Coverage(CoverageArgs),
    /// Coverage x noise performance sweep.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Output prefix; writes <prefix>_raw.csv, <prefix>_ideal.csv,
    /// <prefix>_truth.json.
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    n_samples: usize,
    #[arg(long, default_value_t = 100.0)]
    sample_rate: f64,
    #[arg(long, default_value_t = 45_000.0)]
    field: f64,
    /// Per-component Gaussian noise std, nT.
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    /// Sphere-coverage fraction of the sampled cap (1.0 = full sphere).
    #[arg(long, default_value_t = 1.0)]
    coverage: f64,
    /// Sample along a smooth rotation path instead of a uniform lattice.
    #[arg(long)]
    trajectory: bool,
    /// Revolutions per second for --trajectory.
    #[arg(long, default_value_t = 1.0)]
    rev_rate: f64,
    /// Non-orthogonality angles, degrees.
    #[arg(long, default_value_t = 0.5)]
    v12_deg: f64,
    #[arg(long, default_value_t = -0.3)]
    v13_deg: f64,
    #[arg(long, default_value_t = 0.4)]
    v23_deg: f64,
    /// Per-axis scale factors as sx,sy,sz.
    #[arg(long, default_value = "1.003,0.997,1.002")]
    scales: String,
    /// Hard-iron offset as ox,oy,oz in nT.
    #[arg(long, default_value = "200,-150,80")]
    offset: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    input: PathBuf,
    /// Output model JSON path.
    #[arg(long)]
    output: PathBuf,
    /// Report JSON path (default: <output> with .report.json).
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Preset::Custom)]
    preset: Preset,
    /// Moving-average window; overrides the preset's window.
    #[arg(long)]
    window_seconds: Option<f64>,
    /// Target field override, nT (default: median of raw magnitudes).
    #[arg(long)]
    field: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3000)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    learning_rate: f64,
    #[arg(long, default_value_t = 256)]
    batch_size: usize,
}

#[derive(Args)]
struct ApplyArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    input: PathBuf,
    /// Optional metrics JSON output path (default: stdout only).
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    window_seconds: Option<f64>,
}

#[derive(Args)]
struct CoverageArgs {
    #[arg(long)]
    input: PathBuf,
    /// Optional coverage JSON output path (includes the bald-cell list).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Output CSV table path; an extrapolation JSON is written next to it.
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0")]
    coverages: String,
    #[arg(long, default_value = "0.1,0.3")]
    sigmas: String,
    #[arg(long, value_enum, default_value_t = MethodArg::Geo)]
    method: MethodArg,
    #[arg(long, default_value = "0")]
    seeds: String,
    #[arg(long, default_value_t = 100_000)]
    n_samples: usize,
    #[arg(long, default_value_t = 20_000)]
    eval_samples: usize,
    #[arg(long, default_value_t = 45_000.0)]
    field: f64,
    #[arg(long, default_value_t = 400)]
    epochs: usize,
    #[arg(long, default_value_t = 0.2)]
    learning_rate: f64,
    /// Apply the default soft/hard-iron distortion in every cell instead of
    /// the undistorted noise x coverage study.
    #[arg(long)]
    distorted: bool,
    /// Rotation duration behind the time extrapolation, minutes.
    #[arg(long, default_value_t = 2.0)]
    rotation_minutes: f64,
    #[arg(long, default_value_t = 0.26)]
    coverage_achieved: f64,
    #[arg(long, default_value_t = 0.6)]
    coverage_needed: f64,
}

fn parse_f64_list(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("bad {what} value '{p}'")))
        })
        .collect()
}

fn parse_u64_list(s: &str, what: &str) -> Result<Vec<u64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<u64>()
                .map_err(|_| Error::InvalidConfig(format!("bad {what} value '{p}'")))
        })
        .collect()
}

fn parse_triple(s: &str, what: &str) -> Result<[f64; 3]> {
    let v = parse_f64_list(s, what)?;
    if v.len() != 3 {
        return Err(Error::InvalidConfig(format!(
            "{what} needs 3 comma-separated values, got {}",
            v.len()
        )));
    }
    Ok([v[0], v[1], v[2]])
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    if args.n_samples == 0 {
        return Err(Error::InvalidConfig("n_samples must be >= 1".into()));
    }
    let deg = std::f64::consts::PI / 180.0;
    let scales = parse_triple(&args.scales, "scales")?;
    let offset = parse_triple(&args.offset, "offset")?;
    let soft = soft_iron_from_angles(
        args.v12_deg * deg,
        args.v13_deg * deg,
        args.v23_deg * deg,
        scales,
    )?;
    let truth = DistortionTruth::new(
        soft,
        Vec3::new(offset[0], offset[1], offset[2]),
        args.sigma,
        args.field,
    )?;
    let mode = if args.trajectory {
        SamplingMode::Trajectory {
            rev_rate: args.rev_rate,
            duration: args.n_samples as f64 / args.sample_rate,
        }
    } else if args.coverage >= 1.0 {
        SamplingMode::UniformFull
    } else {
        SamplingMode::UniformCap {
            fraction: args.coverage,
        }
    };
    let plan = SamplingPlan {
        mode,
        n_samples: args.n_samples,
        sample_rate: args.sample_rate,
        seed: args.seed,
    };
    let (raw, ideal) = generate(&truth, &plan)?;

    let prefix = args.output.as_os_str().to_string_lossy().into_owned();
    let raw_path = PathBuf::from(format!("{prefix}_raw.csv"));
    let ideal_path = PathBuf::from(format!("{prefix}_ideal.csv"));
    let truth_path = PathBuf::from(format!("{prefix}_truth.json"));
    io::write_series_csv(&raw_path, &raw)?;
    io::write_series_csv(&ideal_path, &ideal)?;
    io::write_truth_json(&truth_path, &io::TruthSidecar { truth, plan })?;
    println!(
        "wrote {} samples to {}, {}, {}",
        raw.len(),
        raw_path.display(),
        ideal_path.display(),
        truth_path.display()
    );
    Ok(())
}

fn preprocess(args: &CalibrateArgs, raw: SampleSeries) -> Result<SampleSeries> {
    if let Some(rate) = args.preset.sample_rate() {
        if (raw.sample_rate() - rate).abs() / rate > 0.01 {
            eprintln!(
                "note: input rate {} Hz differs from preset rate {} Hz",
                raw.sample_rate(),
                rate
            );
        }
    }
    let window = args.window_seconds.or(args.preset.window_seconds());
    match window {
        Some(w) => moving_average(&raw, w),
        None => Ok(raw),
    }
}

fn cmd_calibrate(args: CalibrateArgs, method: Method) -> Result<()> {
    let raw = io::read_series_csv(&args.input)?;
    let series = preprocess(&args, raw)?;
    let train_cfg = TrainConfig {
        epochs: args.epochs,
        learning_rate: args.learning_rate,
        batch_size: args.batch_size,
        seed: args.seed,
        ..TrainConfig::default()
    };
    let (mut model, before, after) = calibrate_and_report(&series, method, &train_cfg)?;
    if let Some(field) = args.field {
        // Rescale the correction so magnitudes land on the requested field.
        let k = field / model.target_field;
        model.matrix *= k;
        model.target_field = field;
    }
    io::write_model_json(&args.output, &model)?;
    let report =
        io::CalibrationRunReport::new(&method.to_string(), &before, &after, model.target_field);
    let report_path = args
        .report
        .clone()
        .unwrap_or_else(|| args.output.with_extension("report.json"));
    io::write_json(&report_path, &report)?;
    println!(
        "{}: ptp {:.3} -> {:.3} nT, variance {:.3} -> {:.3} nT^2 ({} samples)",
        method,
        report.ptp_before,
        report.ptp_after,
        report.var_before,
        report.var_after,
        report.n_samples
    );
    Ok(())
}

fn cmd_apply(args: ApplyArgs) -> Result<()> {
    let series = io::read_series_csv(&args.input)?;
    let model = io::read_model_json(&args.model)?;
    let out = apply(&model, &series);
    io::write_series_csv(&args.output, &out)?;
    println!(
        "wrote {} calibrated samples to {}",
        out.len(),
        args.output.display()
    );
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let series = io::read_series_csv(&args.input)?;
    let series = match args.window_seconds {
        Some(w) => moving_average(&series, w)?,
        None => series,
    };
    let report = MetricReport::from_series(&series)?;
    println!(
        "ptp {:.6} nT, variance {:.6} nT^2, median |B| {:.3} nT ({} samples)",
        report.ptp, report.variance, report.median_magnitude, report.n_samples
    );
    if let Some(path) = args.output {
        io::write_json(&path, &report)?;
    }
    Ok(())
}

fn cmd_coverage(args: CoverageArgs) -> Result<()> {
    let series = io::read_series_csv(&args.input)?;
    let report = coverage(&series, &CoverageGrid::default())?;
    println!(
        "coverage {:.2}% ({} bald cells, {} samples)",
        100.0 * report.percent,
        report.bald_cells.len(),
        report.n_samples
    );
    if let Some(path) = args.output {
        io::write_json(&path, &report)?;
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let methods = match args.method {
        MethodArg::Geo => vec![Method::Geo],
        MethodArg::Nn => vec![Method::Nn],
        MethodArg::Both => vec![Method::Geo, Method::Nn],
    };
    let cfg = SweepConfig {
        coverages: parse_f64_list(&args.coverages, "coverage")?,
        sigmas: parse_f64_list(&args.sigmas, "sigma")?,
        methods,
        seeds: parse_u64_list(&args.seeds, "seed")?,
        n_samples: args.n_samples,
        eval_samples: args.eval_samples,
        field: args.field,
        train: TrainConfig {
            epochs: args.epochs,
            learning_rate: args.learning_rate,
            ..TrainConfig::default()
        },
        distortion: args.distorted.then(|| default_distortion(0.0, args.field)),
    };
    let outcome = run_sweep(&cfg);
    for (cov, sigma, method, seed, msg) in &outcome.failures {
        eprintln!("cell (coverage {cov}, sigma {sigma}, {method}, seed {seed}) failed: {msg}");
    }
    std::fs::write(&args.output, rows_to_csv(&outcome.rows)).map_err(|e| Error::Io {
        path: args.output.display().to_string(),
        source: e,
    })?;
    let extrapolation = extrapolate_time(
        args.rotation_minutes,
        args.coverage_achieved,
        args.coverage_needed,
    );
    let extra_path = args.output.with_extension("extrapolation.json");
    io::write_json(&extra_path, &extrapolation)?;
    println!(
        "{} rows -> {}; reaching {:.0}% coverage at the {:.1}-minute rotation pace takes {:.1} minutes",
        outcome.rows.len(),
        args.output.display(),
        100.0 * extrapolation.coverage_needed,
        extrapolation.rotation_minutes,
        extrapolation.extrapolated_minutes
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::CalibrateGeo(args) => cmd_calibrate(args, Method::Geo),
        Command::CalibrateNn(args) => cmd_calibrate(args, Method::Nn),
        Command::Apply(args) => cmd_apply(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Coverage(args) => cmd_coverage(args),
        Command::Sweep(args) => cmd_sweep(args),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
