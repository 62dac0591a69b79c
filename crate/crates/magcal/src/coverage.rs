//! Sphere-coverage metric: bin measurement directions on a fixed
//! (theta, phi) grid and report the solid-angle fraction covered plus the
//! bald (empty) cells.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::SampleSeries;

/// Angular grid over theta in [0, 2pi) x phi in [0, pi].
///
/// The default 500 x 400 grid satisfies the cell-size criterion
/// `dtheta * dphi <= 1e-4` on the unit-normalized sphere.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageGrid {
    pub n_theta: usize,
    pub n_phi: usize,
    pub threshold: f64,
}

impl Default for CoverageGrid {
    fn default() -> Self {
        CoverageGrid {
            n_theta: 500,
            n_phi: 400,
            threshold: 1e-4,
        }
    }
}

impl CoverageGrid {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        let grid = CoverageGrid {
            n_theta,
            n_phi,
            threshold: 1e-4,
        };
        grid.validate()?;
        Ok(grid)
    }

    fn validate(&self) -> Result<()> {
        if self.n_theta == 0 || self.n_phi == 0 {
            return Err(Error::InvalidConfig(
                "grid dimensions must be nonzero".into(),
            ));
        }
        let dtheta = 2.0 * std::f64::consts::PI / self.n_theta as f64;
        let dphi = std::f64::consts::PI / self.n_phi as f64;
        if dtheta * dphi > self.threshold {
            return Err(Error::InvalidConfig(format!(
                "cell size {:.3e} exceeds threshold {:.3e}",
                dtheta * dphi,
                self.threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageReport {
    /// Solid-angle fraction of occupied cells, in [0, 1].
    pub percent: f64,
    /// Centers (theta, phi) of cells with zero occupancy.
    pub bald_cells: Vec<(f64, f64)>,
    pub n_samples: usize,
}

/// Coverage of the sample directions of a series.
pub fn coverage(series: &SampleSeries, grid: &CoverageGrid) -> Result<CoverageReport> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    for (i, v) in series.values().enumerate() {
        if v.magnitude() == 0.0 {
            return Err(Error::ZeroVectorSample { index: i });
        }
    }
    coverage_of_directions(series.values().map(|v| v.to_vector()), series.len(), grid)
}

/// Coverage of a direction stream; vectors need not be normalized.
pub fn coverage_of_directions(
    dirs: impl Iterator<Item = Vector3<f64>>,
    n_samples: usize,
    grid: &CoverageGrid,
) -> Result<CoverageReport> {
    grid.validate()?;
    let (nt, np) = (grid.n_theta, grid.n_phi);
    let mut occupied = vec![false; nt * np];
    let two_pi = 2.0 * std::f64::consts::PI;
    for d in dirs {
        let norm = d.norm();
        let mut theta = d.y.atan2(d.x);
        if theta < 0.0 {
            theta += two_pi;
        }
        let phi = (d.z / norm).clamp(-1.0, 1.0).acos();
        let it = ((theta / two_pi * nt as f64) as usize).min(nt - 1);
        let ip = ((phi / std::f64::consts::PI * np as f64) as usize).min(np - 1);
        occupied[it * np + ip] = true;
    }

    let dtheta = two_pi / nt as f64;
    let dphi = std::f64::consts::PI / np as f64;
    let mut covered = 0.0;
    let mut bald_cells = Vec::new();
    for it in 0..nt {
        for ip in 0..np {
            // Exact spherical cell area: dtheta * (cos phi_lo - cos phi_hi).
            let phi_lo = ip as f64 * dphi;
            let phi_hi = phi_lo + dphi;
            if occupied[it * np + ip] {
                covered += dtheta * (phi_lo.cos() - phi_hi.cos());
            } else {
                bald_cells.push(((it as f64 + 0.5) * dtheta, (ip as f64 + 0.5) * dphi));
            }
        }
    }
    Ok(CoverageReport {
        percent: covered / (4.0 * std::f64::consts::PI),
        bald_cells,
        n_samples,
    })
}
