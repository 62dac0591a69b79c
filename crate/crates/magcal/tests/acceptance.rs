//! Acceptance gate: one test per criterion, each printing a pass/fail line
//! with the measured numbers before asserting.

use std::time::Instant;

use nalgebra::{Matrix3, Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use magcal::coverage::{coverage_of_directions, CoverageGrid};
use magcal::ellipsoid::{extract_ellipsoid, fit_quadric, EllipsoidParams};
use magcal::filter::{moving_average, moving_average_attenuation};
use magcal::geocal::{apply, calibrate_geometric, estimate_field_magnitude};
use magcal::metrics::MetricReport;
use magcal::nncal::{
    export_model, forward, init_net, mse_gradients, mse_loss, train, LinearNet, TrainConfig,
};
use magcal::project::{build_training_pairs, project_to_sphere};
use magcal::series::{SampleSeries, Vec3};
use magcal::sweep::{run_sweep, Method, SweepConfig};
use magcal::synth::{
    fibonacci_sphere, generate, soft_iron_from_angles, DistortionTruth, SamplingMode, SamplingPlan,
};

fn report(criterion: &str, pass: bool, detail: &str) -> bool {
    println!(
        "criterion {criterion}: {} — {detail}",
        if pass { "pass" } else { "FAIL" }
    );
    pass
}

fn random_truth(
    rng: &mut ChaCha8Rng,
    max_angle_deg: f64,
    max_scale_dev: f64,
    max_offset: f64,
) -> DistortionTruth {
    let deg = std::f64::consts::PI / 180.0;
    let soft = soft_iron_from_angles(
        rng.gen_range(-max_angle_deg..max_angle_deg) * deg,
        rng.gen_range(-max_angle_deg..max_angle_deg) * deg,
        rng.gen_range(-max_angle_deg..max_angle_deg) * deg,
        [
            1.0 + rng.gen_range(-max_scale_dev..max_scale_dev),
            1.0 + rng.gen_range(-max_scale_dev..max_scale_dev),
            1.0 + rng.gen_range(-max_scale_dev..max_scale_dev),
        ],
    )
    .unwrap();
    let offset = Vec3::new(
        rng.gen_range(-max_offset..max_offset),
        rng.gen_range(-max_offset..max_offset),
        rng.gen_range(-max_offset..max_offset),
    );
    DistortionTruth::new(soft, offset, 0.0, 45_000.0).unwrap()
}

/// 1. Noiseless round-trip of the geometric pipeline over random distortions.
#[test]
fn criterion_1_noiseless_roundtrip() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let mut truths = Vec::new();
    for _ in 0..50 {
        truths.push(random_truth(&mut rng, 1.0, 0.005, 10.0));
    }
    for _ in 0..10 {
        truths.push(random_truth(&mut rng, 1.0, 0.05, 5_000.0));
    }

    let mut worst_ptp_rel = 0.0f64;
    let mut worst_mag_rel = 0.0f64;
    let mut worst_orth = 0.0f64;
    for (i, truth) in truths.iter().enumerate() {
        let plan = SamplingPlan {
            mode: SamplingMode::UniformFull,
            n_samples: 10_000,
            sample_rate: 100.0,
            seed: i as u64,
        };
        let (raw, _) = generate(truth, &plan).unwrap();
        let (model, after) = calibrate_geometric(&raw).unwrap();
        worst_ptp_rel = worst_ptp_rel.max(after.ptp / model.target_field);

        // M * A_true should be proportional to an orthogonal matrix.
        let g = model.matrix * truth.soft_iron_matrix();
        let gtg = g.transpose() * g;
        let c = gtg.trace() / 3.0;
        worst_orth = worst_orth.max((gtg - c * Matrix3::identity()).norm() / c);

        for v in apply(&model, &raw).values() {
            worst_mag_rel =
                worst_mag_rel.max((v.magnitude() - model.target_field).abs() / model.target_field);
        }
    }
    let elapsed = t0.elapsed().as_secs_f64();
    let pass = worst_ptp_rel < 1e-6 && worst_mag_rel < 1e-9 && worst_orth < 1e-9 && elapsed < 30.0;
    assert!(report(
        "1 (noiseless round-trip)",
        pass,
        &format!(
            "worst ptp/field {worst_ptp_rel:.2e} (< 1e-6), worst |h_c| rel dev {worst_mag_rel:.2e} (< 1e-9), worst orthogonality dev {worst_orth:.2e}, {elapsed:.1} s (< 30)"
        ),
    ));
}

fn median(xs: &mut Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs[xs.len() / 2]
}

/// Inversions larger than 2% relative (plateau jitter allowance); the curve
/// may contain at most one, and it must stay within 20% relative.
fn inversion_ok(curve: &[f64]) -> bool {
    let mut count = 0usize;
    for w in curve.windows(2) {
        let rel = (w[1] - w[0]) / w[0];
        if rel > 0.2 {
            return false;
        }
        if rel > 0.02 {
            count += 1;
        }
    }
    count <= 1
}

/// 2. Noise-floor behavior across the coverage x noise sweep.
#[test]
fn criterion_2_noise_floor_sweep() {
    let t0 = Instant::now();
    let coverages: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
    let sigmas = [0.1, 0.3];
    let cfg = SweepConfig {
        coverages: coverages.clone(),
        sigmas: sigmas.to_vec(),
        methods: vec![Method::Geo, Method::Nn],
        seeds: vec![0, 1, 2, 3, 4],
        n_samples: 100_000,
        eval_samples: 20_000,
        field: 45_000.0,
        train: TrainConfig {
            epochs: 915,
            learning_rate: 0.1,
            ..TrainConfig::default()
        },
        distortion: None,
    };
    let outcome = run_sweep(&cfg);
    let mut pass = outcome.failures.is_empty();
    for f in &outcome.failures {
        println!("  sweep cell failed: {f:?}");
    }

    let mut full_variance_ok = true;
    for &sigma in &sigmas {
        for &method in &[Method::Geo, Method::Nn] {
            let curve: Vec<f64> = coverages
                .iter()
                .map(|&cov| {
                    let mut ptps: Vec<f64> = outcome
                        .rows
                        .iter()
                        .filter(|r| r.sigma == sigma && r.method == method && r.coverage == cov)
                        .map(|r| r.ptp)
                        .collect();
                    median(&mut ptps)
                })
                .collect();
            let bound = match method {
                Method::Geo => 12.0 * sigma,
                Method::Nn => 15.0 * sigma,
            };
            let full = *curve.last().unwrap();
            let a_ok = full <= bound;
            let b_ok = inversion_ok(&curve);
            println!(
                "  sigma={sigma} {method}: full-coverage median ptp {full:.4} (bound {bound}), monotone-with-jitter {b_ok}, curve {curve:?}"
            );
            pass &= a_ok && b_ok;
            if sigma == 0.1 {
                let mut vars: Vec<f64> = outcome
                    .rows
                    .iter()
                    .filter(|r| r.sigma == sigma && r.method == method && r.coverage == 1.0)
                    .map(|r| r.variance)
                    .collect();
                full_variance_ok &= median(&mut vars) < 0.5;
            }
        }
    }
    pass &= full_variance_ok;
    let elapsed = t0.elapsed().as_secs_f64();
    pass &= elapsed < 600.0;
    assert!(report(
        "2 (noise-floor sweep)",
        pass,
        &format!(
            "variance at full coverage < 0.5 nT^2: {full_variance_ok}, {elapsed:.0} s (< 600)"
        ),
    ));
}

/// 3. Order-of-magnitude reduction on a strongly distorted dataset.
#[test]
fn criterion_3_order_of_magnitude_reduction() {
    let deg = std::f64::consts::PI / 180.0;
    let soft =
        soft_iron_from_angles(0.5 * deg, -0.3 * deg, 0.4 * deg, [1.006, 0.994, 1.004]).unwrap();
    let truth = DistortionTruth::new(soft, Vec3::new(400.0, -300.0, 160.0), 0.1, 45_000.0).unwrap();
    let plan = SamplingPlan {
        mode: SamplingMode::UniformFull,
        n_samples: 20_000,
        sample_rate: 100.0,
        seed: 7,
    };
    let (raw, _) = generate(&truth, &plan).unwrap();
    let before = MetricReport::from_series(&raw).unwrap().ptp;

    let (_, geo_report) = calibrate_geometric(&raw).unwrap();
    let geo_ratio = before / geo_report.ptp;

    let field = estimate_field_magnitude(&raw).unwrap();
    let pairs = build_training_pairs(&raw, field).unwrap();
    let cfg = TrainConfig {
        epochs: 1005,
        learning_rate: 0.2,
        ..TrainConfig::default()
    };
    let (net, _) = train(&pairs, &cfg).unwrap();
    let model = export_model(&net, field).unwrap();
    let nn_after = MetricReport::from_series(&apply(&model, &raw)).unwrap().ptp;
    let nn_ratio = before / nn_after;

    let pass = before > 1e3 && geo_ratio >= 100.0 && nn_ratio >= 100.0;
    assert!(report(
        "3 (order-of-magnitude reduction)",
        pass,
        &format!(
            "before ptp {before:.0} nT (> 1e3), geo reduction {geo_ratio:.1}x (>= 100), nn reduction {nn_ratio:.2}x (>= 100)"
        ),
    ));
}

/// 4. Closed-form sphere projection vs a brute-force grid minimizer of the
/// squared-distance objective J.
#[test]
fn criterion_4_projection_oracle() {
    let t0 = Instant::now();
    let field = 45_000.0;
    let (n_theta, n_phi) = (2000usize, 1000usize);
    let dtheta = 2.0 * std::f64::consts::PI / n_theta as f64;
    let dphi = std::f64::consts::PI / n_phi as f64;
    let thetas: Vec<(f64, f64)> = (0..n_theta)
        .map(|j| {
            let t = (j as f64 + 0.5) * dtheta;
            (t.cos(), t.sin())
        })
        .collect();
    let phis: Vec<(f64, f64)> = (0..n_phi)
        .map(|i| {
            let p = (i as f64 + 0.5) * dphi;
            (p.cos(), p.sin())
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(400);
    let mut worst_angle = 0.0f64;
    let mut closed_form_never_worse = true;
    for _ in 0..1000 {
        let p = Vector3::new(
            rng.gen_range(-1.5..1.5),
            rng.gen_range(-1.5..1.5),
            rng.gen_range(-1.5..1.5),
        ) * field;
        if p.norm() < 0.1 * field {
            continue;
        }
        // J = |p|^2 - 2 field p.u + field^2; minimizing J maximizes p.u,
        // but J itself is evaluated and compared.
        let mut best_j = f64::INFINITY;
        let mut best_u = Vector3::zeros();
        let pp = p.norm_squared() + field * field;
        for &(cp, sp) in &phis {
            let zc = p.z * cp;
            for &(ct, st) in &thetas {
                let dot = sp * (p.x * ct + p.y * st) + zc;
                let j = pp - 2.0 * field * dot;
                if j < best_j {
                    best_j = j;
                    best_u = Vector3::new(sp * ct, sp * st, cp);
                }
            }
        }
        let cf = project_to_sphere(Vec3::from_vector(p), field)
            .unwrap()
            .to_vector();
        let jcf = (p - cf).norm_squared();
        closed_form_never_worse &= jcf <= best_j * (1.0 + 1e-12) + 1e-12;
        let cos_angle = (cf.dot(&(best_u * field)) / (field * field)).clamp(-1.0, 1.0);
        worst_angle = worst_angle.max(cos_angle.acos());
    }
    let elapsed = t0.elapsed().as_secs_f64();
    let res = dtheta;
    let pass = worst_angle < res && closed_form_never_worse && elapsed < 60.0;
    assert!(report(
        "4 (projection oracle)",
        pass,
        &format!(
            "worst angular error {worst_angle:.2e} rad (< {res:.2e}), closed-form J never exceeds oracle J: {closed_form_never_worse}, {elapsed:.1} s (< 60)"
        ),
    ));
}

/// 5. Exported affine model reproduces the network forward pass exactly.
#[test]
fn criterion_5_affine_collapse() {
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let mut worst = 0.0f64;
    let mut nets = 0;
    let mut seed = 0u64;
    while nets < 100 {
        let net = init_net(seed);
        seed += 1;
        let model = match export_model(&net, 1.0) {
            Ok(m) => m,
            Err(_) => continue,
        };
        nets += 1;
        for _ in 0..1000 {
            let v = Vec3::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            let d = (model.apply_point(v).to_vector() - forward(&net, v).to_vector()).norm();
            worst = worst.max(d);
        }
    }
    let pass = worst < 1e-12;
    assert!(report(
        "5 (affine collapse)",
        pass,
        &format!("worst |apply - forward| {worst:.2e} over 100 nets x 1000 inputs (< 1e-12)"),
    ));
}

/// 6. Analytic MSE gradients vs central finite differences.
#[test]
fn criterion_6_gradient_check() {
    let mut worst_rel = 0.0f64;
    for seed in 0..5u64 {
        let net = init_net(seed + 600);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inputs: Vec<Vec3> = (0..64)
            .map(|_| {
                Vec3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                )
            })
            .collect();
        let targets: Vec<Vec3> = inputs
            .iter()
            .map(|v| Vec3::new(0.9 * v.x + 0.05, 1.1 * v.y - 0.02, v.z + 0.01))
            .collect();
        let (_, grads) = mse_gradients(&net, &inputs, &targets);
        let step = 1e-4;
        let mut probe =
            |get: &dyn Fn(&LinearNet) -> f64, set: &dyn Fn(&mut LinearNet, f64), analytic: f64| {
                let base = get(&net);
                let mut plus = net.clone();
                set(&mut plus, base + step);
                let mut minus = net.clone();
                set(&mut minus, base - step);
                let fd = (mse_loss(&plus, &inputs, &targets) - mse_loss(&minus, &inputs, &targets))
                    / (2.0 * step);
                let rel = (analytic - fd).abs() / fd.abs().max(1e-8);
                worst_rel = worst_rel.max(rel);
            };
        for i in 0..3 {
            for j in 0..3 {
                probe(
                    &|n| n.w1[(i, j)],
                    &move |n, v| n.w1[(i, j)] = v,
                    grads.w1[(i, j)],
                );
                probe(
                    &|n| n.w2[(i, j)],
                    &move |n, v| n.w2[(i, j)] = v,
                    grads.w2[(i, j)],
                );
            }
            probe(&|n| n.b1[i], &move |n, v| n.b1[i] = v, grads.b1[i]);
            probe(&|n| n.b2[i], &move |n, v| n.b2[i] = v, grads.b2[i]);
        }
    }
    let pass = worst_rel < 1e-5;
    assert!(report(
        "6 (gradient check)",
        pass,
        &format!("worst relative deviation {worst_rel:.2e} over 5 nets x 24 parameters (< 1e-5)"),
    ));
}

/// 7. Coverage metric sanity on three reference configurations.
#[test]
fn criterion_7_coverage_sanity() {
    let grid = CoverageGrid::default();

    let n = 10_000_000;
    let full = coverage_of_directions(fibonacci_sphere(n).into_iter(), n, &grid)
        .unwrap()
        .percent;
    let full_ok = full >= 0.999;

    // Uniform directions restricted to a hemisphere.
    let dirs: Vec<Vector3<f64>> = fibonacci_sphere(200_000)
        .into_iter()
        .filter(|d| d.z > 0.0)
        .take(100_000)
        .collect();
    let n_hemi = dirs.len();
    let hemi = coverage_of_directions(dirs.into_iter(), n_hemi, &grid)
        .unwrap()
        .percent;
    let hemi_ok = (hemi - 0.5).abs() <= 0.02;

    let single = coverage_of_directions(std::iter::once(Vector3::new(0.3, -0.5, 0.9)), 1, &grid)
        .unwrap()
        .percent;
    let single_ok = single > 0.0 && single < 1e-4;

    println!(
        "  full 1e7 lattice: {:.4}% (>= 99.9%): {full_ok}",
        100.0 * full
    );
    println!(
        "  hemisphere 1e5 uniform: {:.2}% (50% +/- 2): {hemi_ok}",
        100.0 * hemi
    );
    println!(
        "  single point: {:.6}% (> 0, < 0.01%): {single_ok}",
        100.0 * single
    );
    assert!(report(
        "7 (coverage sanity)",
        full_ok && hemi_ok && single_ok,
        &format!(
            "full {:.4}%, hemisphere {:.2}%, single {:.6}%",
            100.0 * full,
            100.0 * hemi,
            100.0 * single
        ),
    ));
}

/// 8. Ellipsoid fit/extraction round-trip on random instances.
#[test]
fn criterion_8_ellipsoid_roundtrip() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(800);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        // Distinct semi-axes (ratio <= 10) so the principal frame is unique.
        let a = rng.gen_range(4.0..6.0);
        let b = rng.gen_range(2.0..3.5);
        let c = rng.gen_range(0.8..1.5);
        let rot = Rotation3::from_euler_angles(
            rng.gen_range(0.0..std::f64::consts::TAU),
            rng.gen_range(0.0..std::f64::consts::TAU),
            rng.gen_range(0.0..std::f64::consts::TAU),
        );
        let center = Vec3::new(
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-3.0..3.0),
        );
        let truth = EllipsoidParams::new(center, [a, b, c], rot.into_inner()).unwrap();
        let values: Vec<Vec3> = fibonacci_sphere(2000)
            .into_iter()
            .map(|u| truth.surface_point(u))
            .collect();
        let series = SampleSeries::uniform(values, 1.0, "acceptance").unwrap();
        let fitted = extract_ellipsoid(&fit_quadric(&series).unwrap()).unwrap();

        worst = worst.max((fitted.center.to_vector() - truth.center.to_vector()).norm());
        for i in 0..3 {
            worst = worst.max((fitted.semi_axes[i] - truth.semi_axes[i]).abs());
        }
        worst = worst.max((fitted.rotation - truth.rotation).norm());
    }
    let elapsed = t0.elapsed().as_secs_f64();
    let pass = worst < 1e-8 && elapsed < 10.0;
    assert!(report(
        "8 (ellipsoid round-trip)",
        pass,
        &format!("worst parameter deviation {worst:.2e} over 100 instances (< 1e-8), {elapsed:.1} s (< 10)"),
    ));
}

/// 9. Moving-average frequency response vs the analytical attenuation.
#[test]
fn criterion_9_moving_average_response() {
    let fs = 3000.0;
    let n = 30_000;
    let w = 300;
    let mut worst = 0.0f64;
    let mut pass = true;
    for f in [1.0, 5.0, 50.0] {
        let values: Vec<Vec3> = (0..n)
            .map(|i| {
                let t = i as f64 / fs;
                Vec3::new((2.0 * std::f64::consts::PI * f * t).sin(), 0.0, 0.0)
            })
            .collect();
        let s = SampleSeries::uniform(values, fs, "sine").unwrap();
        let out = moving_average(&s, 0.1).unwrap();
        let (mut cs, mut sn) = (0.0, 0.0);
        for (t, v) in out.samples() {
            let ph = 2.0 * std::f64::consts::PI * f * t;
            cs += v.x * ph.cos();
            sn += v.x * ph.sin();
        }
        let m = out.len() as f64;
        let amp = 2.0 * (cs * cs + sn * sn).sqrt() / m;
        let expected = moving_average_attenuation(f, fs, w);
        // 50 Hz sits on an exact null of the 0.1 s window; both sides are
        // numerically zero there, hence the absolute floor.
        let dev = (amp - expected).abs() / expected.max(1e-9);
        worst = worst.max(dev);
        pass &= dev < 0.01;
        println!("  f={f} Hz: measured {amp:.6e}, analytical {expected:.6e}");
    }
    assert!(report(
        "9 (moving-average response)",
        pass,
        &format!("worst deviation {worst:.2e} relative (< 1e-2) for f in {{1, 5, 50}} Hz"),
    ));
}
