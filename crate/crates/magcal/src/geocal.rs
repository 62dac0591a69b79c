//! Geometric calibration pipeline: fit an ellipsoid to raw data and derive
//! the affine correction `h_c = M (h_r - b)` that maps it onto a sphere.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::ellipsoid::{extract_ellipsoid, fit_quadric, EllipsoidParams};
use crate::error::{Error, Result};
use crate::metrics::{median, MetricReport};
use crate::series::{SampleSeries, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Geometric,
    Neural,
    External,
}

/// Affine correction common to both pipelines, applied as
/// `matrix * (sample - offset)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationModel {
    pub matrix: Matrix3<f64>,
    pub offset: Vec3,
    /// Sphere radius the corrected magnitudes land on, nT.
    pub target_field: f64,
    pub provenance: Provenance,
}

impl CalibrationModel {
    pub fn new(
        matrix: Matrix3<f64>,
        offset: Vec3,
        target_field: f64,
        provenance: Provenance,
    ) -> Result<Self> {
        if matrix.determinant().abs() <= 1e-12 {
            return Err(Error::SingularMatrix {
                det: matrix.determinant(),
            });
        }
        if !(target_field > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "target_field must be positive, got {target_field}"
            )));
        }
        Ok(CalibrationModel {
            matrix,
            offset,
            target_field,
            provenance,
        })
    }

    pub fn identity(target_field: f64, provenance: Provenance) -> Result<Self> {
        CalibrationModel::new(Matrix3::identity(), Vec3::ZERO, target_field, provenance)
    }

    pub fn apply_point(&self, v: Vec3) -> Vec3 {
        Vec3::from_vector(self.matrix * (v.to_vector() - self.offset.to_vector()))
    }
}

/// Constant-field estimate: median of the per-sample magnitudes.
pub fn estimate_field_magnitude(series: &SampleSeries) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    Ok(median(&series.magnitudes()))
}

/// Build the correction from a fitted ellipsoid: offset is the ellipsoid
/// center and `M = R diag(B/a, B/b, B/c) R^T`, the symmetric completion of
/// de-rotation followed by de-scaling that keeps corrected vectors in the
/// sensor frame. Magnitudes are unchanged by the extra rotation back.
pub fn build_correction(e: &EllipsoidParams, target_field: f64) -> Result<CalibrationModel> {
    if !(target_field > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "target_field must be positive, got {target_field}"
        )));
    }
    for a in e.semi_axes {
        if !(a > 0.0) {
            return Err(Error::DegenerateEllipsoid(format!(
                "semi-axis {a} is not positive"
            )));
        }
    }
    let scale = Matrix3::from_diagonal(&nalgebra::Vector3::new(
        target_field / e.semi_axes[0],
        target_field / e.semi_axes[1],
        target_field / e.semi_axes[2],
    ));
    let matrix = e.rotation * scale * e.rotation.transpose();
    CalibrationModel::new(matrix, e.center, target_field, Provenance::Geometric)
}

/// Apply the correction to every sample, preserving timestamps and rate.
pub fn apply(model: &CalibrationModel, series: &SampleSeries) -> SampleSeries {
    series.map_values(
        |v| model.apply_point(v),
        format!("{} (calibrated)", series.label()),
    )
}

/// Full geometric pipeline: fit quadric, extract ellipsoid, estimate the
/// field from the raw magnitudes, build the correction, and report metrics
/// of the corrected series.
pub fn calibrate_geometric(raw: &SampleSeries) -> Result<(CalibrationModel, MetricReport)> {
    let quadric = fit_quadric(raw)?;
    let ellipsoid = extract_ellipsoid(&quadric)?;
    let field = estimate_field_magnitude(raw)?;
    let model = build_correction(&ellipsoid, field)?;
    let report = MetricReport::from_series(&apply(&model, raw))?;
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::fibonacci_sphere;
    use nalgebra::Rotation3;

    fn mag_series(mags: &[f64]) -> SampleSeries {
        SampleSeries::uniform(
            mags.iter().map(|&m| Vec3::new(0.0, 0.0, m)).collect(),
            1.0,
            "m",
        )
        .unwrap()
    }

    #[test]
    fn median_field_estimate() {
        assert_eq!(
            estimate_field_magnitude(&mag_series(&[1.0, 2.0, 100.0])).unwrap(),
            2.0
        );
        assert_eq!(estimate_field_magnitude(&mag_series(&[5.0])).unwrap(), 5.0);
        let s = SampleSeries::uniform(vec![], 1.0, "empty").unwrap();
        assert!(matches!(
            estimate_field_magnitude(&s),
            Err(Error::EmptySeries)
        ));
    }

    #[test]
    fn sphere_correction_is_identity() {
        let b = 45_000.0;
        let e = EllipsoidParams::new(Vec3::ZERO, [b, b, b], Matrix3::identity()).unwrap();
        let model = build_correction(&e, b).unwrap();
        assert!((model.matrix - Matrix3::identity()).norm() < 1e-12);
        assert_eq!(model.offset, Vec3::ZERO);
    }

    #[test]
    fn double_radius_sphere_descales_by_half() {
        let b = 45_000.0;
        let e = EllipsoidParams::new(Vec3::ZERO, [2.0 * b, 2.0 * b, 2.0 * b], Matrix3::identity())
            .unwrap();
        let model = build_correction(&e, b).unwrap();
        assert!((model.matrix - 0.5 * Matrix3::<f64>::identity()).norm() < 1e-12);
    }

    #[test]
    fn surface_points_map_to_target_magnitude() {
        let rot = Rotation3::from_euler_angles(0.7, -0.2, 1.4).into_inner();
        let e = EllipsoidParams::new(
            Vec3::new(210.0, -90.0, 55.0),
            [48_000.0, 45_500.0, 43_000.0],
            rot,
        )
        .unwrap();
        let b = 45_000.0;
        let model = build_correction(&e, b).unwrap();
        for u in fibonacci_sphere(1000) {
            let p = e.surface_point(u);
            let m = model.apply_point(p).magnitude();
            assert!((m - b).abs() / b < 1e-9);
        }
    }

    #[test]
    fn apply_identity_and_offset() {
        let values: Vec<Vec3> = (0..10).map(|i| Vec3::new(i as f64, 1.0, -2.0)).collect();
        let s = SampleSeries::uniform(values, 1.0, "s").unwrap();
        let ident = CalibrationModel::identity(1.0, Provenance::External).unwrap();
        assert_eq!(apply(&ident, &s).samples(), s.samples());

        let o = Vec3::new(3.0, 3.0, 3.0);
        let model =
            CalibrationModel::new(Matrix3::identity(), o, 1.0, Provenance::External).unwrap();
        let constant = SampleSeries::uniform(vec![o; 5], 1.0, "c").unwrap();
        for v in apply(&model, &constant).values() {
            assert_eq!(v.magnitude(), 0.0);
        }
    }

    #[test]
    fn spherical_data_yields_trivial_model() {
        let b = 45_000.0;
        let values: Vec<Vec3> = fibonacci_sphere(2000)
            .into_iter()
            .map(|d| Vec3::from_vector(b * d))
            .collect();
        let s = SampleSeries::uniform(values, 1.0, "sphere").unwrap();
        let (model, report) = calibrate_geometric(&s).unwrap();
        assert!((model.target_field - b).abs() / b < 1e-9);
        assert!((model.matrix - Matrix3::identity()).norm() < 1e-6);
        assert!(model.offset.magnitude() < 1e-4);
        assert!(report.ptp < 1e-6 * b);
    }

    #[test]
    fn calibrating_calibrated_data_changes_little() {
        let rot = Rotation3::from_euler_angles(0.3, 0.9, -0.5).into_inner();
        let e = EllipsoidParams::new(
            Vec3::new(150.0, -60.0, 40.0),
            [46_000.0, 45_000.0, 44_200.0],
            rot,
        )
        .unwrap();
        let values: Vec<Vec3> = fibonacci_sphere(3000)
            .into_iter()
            .map(|u| e.surface_point(u))
            .collect();
        let raw = SampleSeries::uniform(values, 1.0, "raw").unwrap();
        let (model, _) = calibrate_geometric(&raw).unwrap();
        let calibrated = apply(&model, &raw);
        let (model2, _) = calibrate_geometric(&calibrated).unwrap();
        let recal = apply(&model2, &calibrated);
        for (a, b) in calibrated.values().zip(recal.values()) {
            assert!((b.magnitude() - a.magnitude()).abs() / a.magnitude() < 1e-6);
        }
    }

    #[test]
    fn output_metrics_rotation_invariant() {
        let rot = Rotation3::from_euler_angles(-0.4, 0.25, 0.8).into_inner();
        let e = EllipsoidParams::new(
            Vec3::new(90.0, 120.0, -30.0),
            [47_000.0, 45_200.0, 44_000.0],
            rot,
        )
        .unwrap();
        let values: Vec<Vec3> = fibonacci_sphere(3000)
            .into_iter()
            .map(|u| e.surface_point(u))
            .collect();
        let raw = SampleSeries::uniform(values.clone(), 1.0, "raw").unwrap();
        let g = Rotation3::from_euler_angles(1.1, -0.7, 0.2).into_inner();
        let rotated = SampleSeries::uniform(
            values
                .iter()
                .map(|v| Vec3::from_vector(g * v.to_vector()))
                .collect(),
            1.0,
            "rot",
        )
        .unwrap();
        let (_, r1) = calibrate_geometric(&raw).unwrap();
        let (_, r2) = calibrate_geometric(&rotated).unwrap();
        let denom = r1.ptp.abs().max(1e-30);
        assert!((r1.ptp - r2.ptp).abs() / denom < 1e-3 || (r1.ptp - r2.ptp).abs() < 1e-9);
        assert!((r1.mean_magnitude - r2.mean_magnitude).abs() / r1.mean_magnitude < 1e-6);
    }
}
