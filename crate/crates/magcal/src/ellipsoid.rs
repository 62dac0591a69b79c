//! Least-squares quadric fitting and extraction of the nine-parameter
//! ellipsoid (center, semi-axes, orientation).

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::series::{SampleSeries, Vec3};

/// Singular-value ratio below which the design matrix counts as rank-deficient.
const RANK_EPS: f64 = 1e-10;

/// Coefficients of the quadric
/// `A x^2 + B y^2 + C z^2 + 2D xy + 2E xz + 2F yz + 2G x + 2H y + 2I z = 1`.
///
/// Field names spell out the monomial each coefficient multiplies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadricCoefficients {
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
    pub xy: f64,
    pub xz: f64,
    pub yz: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl QuadricCoefficients {
    /// The symmetric quadratic-form matrix Q.
    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.xx, self.xy, self.xz, //
            self.xy, self.yy, self.yz, //
            self.xz, self.yz, self.zz,
        )
    }

    /// The linear-term vector [G, H, I].
    pub fn linear(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    /// Algebraic residual `p^T Q p + 2 g . p - 1` at a point.
    pub fn residual(&self, p: Vec3) -> f64 {
        let v = p.to_vector();
        (v.transpose() * self.matrix() * v)[(0, 0)] + 2.0 * self.linear().dot(&v) - 1.0
    }
}

/// Nine-parameter ellipsoid in canonical form: semi-axes sorted descending,
/// rotation columns are the matching principal axes with the largest-magnitude
/// entry of each column positive and determinant +1.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidParams {
    pub center: Vec3,
    pub semi_axes: [f64; 3],
    pub rotation: Matrix3<f64>,
}

impl EllipsoidParams {
    pub fn new(center: Vec3, semi_axes: [f64; 3], rotation: Matrix3<f64>) -> Result<Self> {
        for a in semi_axes {
            if !(a > 0.0) || !a.is_finite() {
                return Err(Error::DegenerateEllipsoid(format!(
                    "semi-axis {a} is not positive"
                )));
            }
        }
        let rtr = rotation.transpose() * rotation;
        if (rtr - Matrix3::identity()).norm() > 1e-9 {
            return Err(Error::DegenerateEllipsoid(
                "rotation is not orthogonal".into(),
            ));
        }
        if (rotation.determinant() - 1.0).abs() > 1e-9 {
            return Err(Error::DegenerateEllipsoid(
                "rotation determinant is not +1".into(),
            ));
        }
        let (s, r) = canonicalize(semi_axes, rotation);
        Ok(EllipsoidParams {
            center,
            semi_axes: s,
            rotation: r,
        })
    }

    /// Surface point at a unit direction `u` in the principal frame:
    /// `center + R diag(a, b, c) u`.
    pub fn surface_point(&self, u: Vector3<f64>) -> Vec3 {
        let scaled = Vector3::new(
            self.semi_axes[0] * u.x,
            self.semi_axes[1] * u.y,
            self.semi_axes[2] * u.z,
        );
        Vec3::from_vector(self.center.to_vector() + self.rotation * scaled)
    }
}

/// Sort semi-axes descending, carry the rotation columns along, fix column
/// signs so each column's largest-magnitude entry is positive, and force
/// det = +1 by flipping the last column if needed.
fn canonicalize(semi_axes: [f64; 3], rotation: Matrix3<f64>) -> ([f64; 3], Matrix3<f64>) {
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| semi_axes[j].partial_cmp(&semi_axes[i]).unwrap());
    let axes = [
        semi_axes[order[0]],
        semi_axes[order[1]],
        semi_axes[order[2]],
    ];
    let mut r = Matrix3::zeros();
    for (dst, &src) in order.iter().enumerate() {
        let mut col = rotation.column(src).into_owned();
        let mut imax = 0;
        for k in 1..3 {
            if col[k].abs() > col[imax].abs() {
                imax = k;
            }
        }
        if col[imax] < 0.0 {
            col = -col;
        }
        r.set_column(dst, &col);
    }
    if r.determinant() < 0.0 {
        let col = -r.column(2).into_owned();
        r.set_column(2, &col);
    }
    (axes, r)
}

/// Least-squares fit of the general quadric to the sample positions,
/// minimizing the algebraic residual with right-hand side 1.
pub fn fit_quadric(points: &SampleSeries) -> Result<QuadricCoefficients> {
    let n = points.len();
    if n < 9 {
        return Err(Error::TooFewSamples { need: 9, got: n });
    }
    let mut design = DMatrix::zeros(n, 9);
    for (row, v) in points.values().enumerate() {
        design[(row, 0)] = v.x * v.x;
        design[(row, 1)] = v.y * v.y;
        design[(row, 2)] = v.z * v.z;
        design[(row, 3)] = 2.0 * v.x * v.y;
        design[(row, 4)] = 2.0 * v.x * v.z;
        design[(row, 5)] = 2.0 * v.y * v.z;
        design[(row, 6)] = 2.0 * v.x;
        design[(row, 7)] = 2.0 * v.y;
        design[(row, 8)] = 2.0 * v.z;
    }
    let rhs = DVector::from_element(n, 1.0);
    let svd = design.svd(true, true);
    let sv = &svd.singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    if smin <= RANK_EPS * smax {
        return Err(Error::RankDeficient { ratio: smin / smax });
    }
    let coeffs = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::DegenerateInput(e.to_string()))?;
    let q = QuadricCoefficients {
        xx: coeffs[0],
        yy: coeffs[1],
        zz: coeffs[2],
        xy: coeffs[3],
        xz: coeffs[4],
        yz: coeffs[5],
        x: coeffs[6],
        y: coeffs[7],
        z: coeffs[8],
    };
    // The "= 1" normalization flips every coefficient's sign when the origin
    // lies outside the surface, so an ellipsoid needs all eigenvalues of the
    // same (nonzero) sign rather than strictly positive ones.
    let eig = q.matrix().symmetric_eigen();
    if eig.eigenvalues.min() * eig.eigenvalues.max() <= 0.0 {
        return Err(Error::NotAnEllipsoid(
            "quadratic form has mixed-sign eigenvalues; points do not bound an ellipsoid".into(),
        ));
    }
    Ok(q)
}

/// Recover center, semi-axes and principal axes from quadric coefficients.
///
/// Completing the square: with `c = -Q^{-1} g` the quadric becomes
/// `(p - c)^T Q (p - c) = 1 + g^T Q^{-1} g`, so `Q / s` with
/// `s = 1 - g . c` is the unit-level-set form whose eigenvalues are
/// the inverse squared semi-axes.
pub fn extract_ellipsoid(q: &QuadricCoefficients) -> Result<EllipsoidParams> {
    let qm = q.matrix();
    let g = q.linear();
    let qinv = qm.try_inverse().ok_or_else(|| Error::SingularMatrix {
        det: qm.determinant(),
    })?;
    let center = -(qinv * g);
    // Q and s carry a common sign; Q/s must be positive definite.
    let s = 1.0 - g.dot(&center);
    if s == 0.0 {
        return Err(Error::NotAnEllipsoid(
            "level-set scale vanishes; the quadric is a cone".into(),
        ));
    }
    let scaled = qm / s;
    let eig = scaled.symmetric_eigen();
    let mut semi_axes = [0.0; 3];
    for i in 0..3 {
        let lambda = eig.eigenvalues[i];
        if lambda <= 0.0 {
            return Err(Error::NotAnEllipsoid(format!(
                "eigenvalue {lambda:.3e} is non-positive"
            )));
        }
        semi_axes[i] = 1.0 / lambda.sqrt();
    }
    EllipsoidParams::new(
        Vec3::from_vector(center),
        semi_axes,
        orthonormalized(eig.eigenvectors),
    )
}

// Symmetric-eigen vectors can drift from orthonormal and flip handedness;
// re-orthonormalize with Gram-Schmidt. Taking the cross product for the
// third column always yields determinant +1 (the column's sign is
// irrelevant for a principal axis and gets canonicalized later anyway).
fn orthonormalized(m: Matrix3<f64>) -> Matrix3<f64> {
    let mut c0 = m.column(0).into_owned();
    c0 /= c0.norm();
    let mut c1 = m.column(1).into_owned();
    c1 -= c0 * c0.dot(&c1);
    c1 /= c1.norm();
    let c2 = c0.cross(&c1);
    Matrix3::from_columns(&[c0, c1, c2])
}
