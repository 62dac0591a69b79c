//! Neural calibration pipeline: an all-linear 3-3-3 network trained with
//! mini-batch gradient descent on MSE, with a periodic dropout schedule,
//! exportable as an equivalent affine `CalibrationModel`.

use nalgebra::{Matrix3, Vector3};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geocal::{CalibrationModel, Provenance};
use crate::project::TrainingPairs;
use crate::series::Vec3;

/// Two 3x3 layers with biases, linear activations. In row-vector form the
/// forward pass is exactly affine: `out = v W1 W2 + (b1 W2 + b2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearNet {
    pub w1: Matrix3<f64>,
    pub b1: Vector3<f64>,
    pub w2: Matrix3<f64>,
    pub b2: Vector3<f64>,
}

impl LinearNet {
    pub fn identity() -> Self {
        LinearNet {
            w1: Matrix3::identity(),
            b1: Vector3::zeros(),
            w2: Matrix3::identity(),
            b2: Vector3::zeros(),
        }
    }

    /// Combined weight matrix `W1 W2` of the collapsed affine map.
    pub fn combined_matrix(&self) -> Matrix3<f64> {
        self.w1 * self.w2
    }

    /// Combined bias `b1 W2 + b2` of the collapsed affine map.
    pub fn combined_bias(&self) -> Vector3<f64> {
        self.w2.transpose() * self.b1 + self.b2
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Hidden neurons zeroed on each dropout epoch (of 6 total).
    pub dropout_count: usize,
    /// Dropout is applied on every `dropout_period`-th epoch.
    pub dropout_period: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 3000,
            learning_rate: 1e-3,
            dropout_count: 2,
            dropout_period: 30,
            batch_size: 256,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.dropout_count >= 6 {
            return Err(Error::InvalidConfig(format!(
                "dropout_count must be < 6, got {}",
                self.dropout_count
            )));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.dropout_period == 0 {
            return Err(Error::InvalidConfig(
                "epochs, batch_size and dropout_period must be nonzero".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    /// Per-epoch training MSE, nT^2.
    pub loss_curve: Vec<f64>,
    /// Full-network MSE over all pairs after training, nT^2.
    pub final_loss: f64,
    pub epochs_run: usize,
    pub seed: u64,
}

/// Seeded initialization: weights uniform in (-1/sqrt(3), 1/sqrt(3)),
/// biases zero.
pub fn init_net(seed: u64) -> LinearNet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = 1.0 / 3f64.sqrt();
    let mut draw = |_| {
        let m: Matrix3<f64> = Matrix3::from_fn(|_, _| rng.gen_range(-bound..bound));
        m
    };
    LinearNet {
        w1: draw(()),
        b1: Vector3::zeros(),
        w2: draw(()),
        b2: Vector3::zeros(),
    }
}

/// Evaluate the affine forward pass on one sample.
pub fn forward(net: &LinearNet, v: Vec3) -> Vec3 {
    let h = net.w1.transpose() * v.to_vector() + net.b1;
    Vec3::from_vector(net.w2.transpose() * h + net.b2)
}

/// Parameter gradients of the MSE, same shapes as the net.
#[derive(Debug, Clone)]
pub struct NetGradients {
    pub w1: Matrix3<f64>,
    pub b1: Vector3<f64>,
    pub w2: Matrix3<f64>,
    pub b2: Vector3<f64>,
}

/// MSE over all samples and components: `mean(|forward(x) - y|^2) / 3`.
pub fn mse_loss(net: &LinearNet, inputs: &[Vec3], targets: &[Vec3]) -> f64 {
    let n = inputs.len();
    let mut sum = 0.0;
    for (x, y) in inputs.iter().zip(targets) {
        let o = forward(net, *x);
        sum += (o.to_vector() - y.to_vector()).norm_squared();
    }
    sum / (3.0 * n as f64)
}

/// Analytic MSE loss and gradients over a batch, without dropout.
pub fn mse_gradients(net: &LinearNet, inputs: &[Vec3], targets: &[Vec3]) -> (f64, NetGradients) {
    batch_gradients(
        net,
        inputs,
        targets,
        &Vector3::from_element(1.0),
        &Vector3::from_element(1.0),
    )
}

// Mask entries are 0 for dropped neurons and the inverted-dropout scale for
// survivors; all-ones when dropout is inactive.
fn batch_gradients(
    net: &LinearNet,
    inputs: &[Vec3],
    targets: &[Vec3],
    mask1: &Vector3<f64>,
    mask2: &Vector3<f64>,
) -> (f64, NetGradients) {
    let n = inputs.len();
    let scale = 2.0 / (3.0 * n as f64);
    let mut loss = 0.0;
    let mut dw1 = Matrix3::zeros();
    let mut db1 = Vector3::zeros();
    let mut dw2 = Matrix3::zeros();
    let mut db2 = Vector3::zeros();
    for (x, y) in inputs.iter().zip(targets) {
        let xv = x.to_vector();
        let h = (net.w1.transpose() * xv + net.b1).component_mul(mask1);
        let o = (net.w2.transpose() * h + net.b2).component_mul(mask2);
        let err = o - y.to_vector();
        loss += err.norm_squared();
        let g2 = (err * scale).component_mul(mask2);
        dw2 += h * g2.transpose();
        db2 += g2;
        let g1 = (net.w2 * g2).component_mul(mask1);
        dw1 += xv * g1.transpose();
        db1 += g1;
    }
    (
        loss / (3.0 * n as f64),
        NetGradients {
            w1: dw1,
            b1: db1,
            w2: dw2,
            b2: db2,
        },
    )
}

/// Train on the projected pairs with mini-batch gradient descent.
///
/// Inputs and targets are normalized by the pair field during training and
/// the learned biases are rescaled on return, so the returned net maps raw
/// nT samples directly to calibrated nT outputs. On every
/// `dropout_period`-th epoch, `dropout_count` of the 6 hidden neurons are
/// zeroed for that epoch with survivors scaled by `6 / (6 - dropout_count)`.
/// Deterministic for a fixed seed, config and input order.
pub fn train(pairs: &TrainingPairs, cfg: &TrainConfig) -> Result<(LinearNet, TrainReport)> {
    cfg.validate()?;
    if pairs.inputs.is_empty() {
        return Err(Error::EmptySeries);
    }
    let field = pairs.field;
    let inputs: Vec<Vec3> = pairs
        .inputs
        .values()
        .map(|v| Vec3::new(v.x / field, v.y / field, v.z / field))
        .collect();
    let targets: Vec<Vec3> = pairs
        .targets
        .values()
        .map(|v| Vec3::new(v.x / field, v.y / field, v.z / field))
        .collect();

    let mut net = init_net(cfg.seed);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    dropout_rng.set_stream(1);

    let initial_loss = mse_loss(&net, &inputs, &targets);
    let survivor_scale = 6.0 / (6.0 - cfg.dropout_count as f64);
    let mut loss_curve = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let dropout_epoch = cfg.dropout_count > 0 && (epoch + 1) % cfg.dropout_period == 0;
        let (mask1, mask2) = if dropout_epoch {
            let mut m = [survivor_scale; 6];
            for idx in sample(&mut dropout_rng, 6, cfg.dropout_count) {
                m[idx] = 0.0;
            }
            (
                Vector3::new(m[0], m[1], m[2]),
                Vector3::new(m[3], m[4], m[5]),
            )
        } else {
            (Vector3::from_element(1.0), Vector3::from_element(1.0))
        };

        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for start in (0..inputs.len()).step_by(cfg.batch_size) {
            let end = (start + cfg.batch_size).min(inputs.len());
            let (loss, grads) = batch_gradients(
                &net,
                &inputs[start..end],
                &targets[start..end],
                &mask1,
                &mask2,
            );
            net.w1 -= cfg.learning_rate * grads.w1;
            net.b1 -= cfg.learning_rate * grads.b1;
            net.w2 -= cfg.learning_rate * grads.w2;
            net.b2 -= cfg.learning_rate * grads.b2;
            epoch_loss += loss;
            batches += 1;
        }
        let epoch_loss = epoch_loss / batches as f64 * field * field;
        loss_curve.push(epoch_loss);
        if !epoch_loss.is_finite() || epoch_loss > 1e6 * initial_loss * field * field {
            return Err(Error::Divergence {
                epoch,
                loss: epoch_loss,
                initial: initial_loss * field * field,
            });
        }
    }

    // Fold the field normalization into the biases: scaling both biases by
    // the field denormalizes the affine map exactly.
    net.b1 *= field;
    net.b2 *= field;

    let raw_inputs: Vec<Vec3> = pairs.inputs.values().collect();
    let raw_targets: Vec<Vec3> = pairs.targets.values().collect();
    let final_loss = mse_loss(&net, &raw_inputs, &raw_targets);
    Ok((
        net,
        TrainReport {
            loss_curve,
            final_loss,
            epochs_run: cfg.epochs,
            seed: cfg.seed,
        },
    ))
}

/// Collapse the network to the `h_c = M (h_r - b)` form:
/// `M = (W1 W2)^T` and `b = -M^{-1} (b1 W2 + b2)`, so that
/// `apply(model, v) == forward(net, v)` exactly.
pub fn export_model(net: &LinearNet, field: f64) -> Result<CalibrationModel> {
    let m = net.combined_matrix().transpose();
    let det = m.determinant();
    if det.abs() <= 1e-12 {
        return Err(Error::SingularMatrix { det });
    }
    let inv = m.try_inverse().ok_or(Error::SingularMatrix { det })?;
    let offset = -(inv * net.combined_bias());
    CalibrationModel::new(m, Vec3::from_vector(offset), field, Provenance::Neural)
}
