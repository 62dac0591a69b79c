//! Scalar calibration toolkit for 3-axis fluxgate magnetometers.
//!
//! Raw vector readings of a constant ambient field lie on an ellipsoid
//! (non-orthogonal axes, per-axis scale errors, hard-iron offset). This
//! crate derives the affine correction that maps them back onto a sphere,
//! via two interchangeable pipelines:
//!
//! - [`geocal`]: least-squares ellipsoid fit ([`ellipsoid`]) followed by
//!   de-rotation / de-scaling,
//! - [`nncal`]: a small all-linear network trained against sphere
//!   projections ([`project`]), exported to the same affine model.
//!
//! [`synth`] generates distorted synthetic datasets, [`coverage`] measures
//! how much of the direction sphere a dataset covers, [`metrics`] and
//! [`filter`] provide the evaluation metrics and preprocessing, and
//! [`sweep`] ties it all into coverage/noise performance tables.

pub mod coverage;
pub mod ellipsoid;
pub mod error;
pub mod filter;
pub mod geocal;
pub mod io;
pub mod metrics;
pub mod nncal;
pub mod project;
pub mod series;
pub mod sweep;
pub mod synth;

pub use error::{Error, Result};
pub use series::{magnitude, SampleSeries, Vec3};
