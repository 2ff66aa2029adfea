//! Two-input, three-hidden, one-output feedforward network trained by
//! full-batch gradient descent.
//!
//! The network sees only the final `(gwl, rainfall)` step of each window:
//! `hidden = σ(W1·x + b1)`, `output = W2·hidden + b2`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataio::WindowedSamples;
use crate::lstm::{sigmoid, GdConfig, Trained};

pub const HIDDEN: usize = 3;
pub const INPUTS: usize = 2;
/// Number of trainable parameters.
pub const PARAM_COUNT: usize = HIDDEN * INPUTS + HIDDEN + HIDDEN + 1;
/// Half-width of the seeded uniform initialization.
pub const FFNN_INIT_RANGE: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum FfnnError {
    #[error("at least one sample is required")]
    NoSamples,
    #[error("inputs and targets differ in length ({inputs} vs {targets})")]
    Length { inputs: usize, targets: usize },
    #[error("learning rate must be positive, got {0}")]
    LearningRate(f64),
    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },
}

/// Weights of the 2-3-1 network. `w1` is row-major `3 × 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FfnnParams {
    pub w1: [f64; HIDDEN * INPUTS],
    pub b1: [f64; HIDDEN],
    pub w2: [f64; HIDDEN],
    pub b2: f64,
}

impl FfnnParams {
    pub fn zeros() -> Self {
        Self {
            w1: [0.0; HIDDEN * INPUTS],
            b1: [0.0; HIDDEN],
            w2: [0.0; HIDDEN],
            b2: 0.0,
        }
    }

    pub fn random(low: f64, high: f64, rng: &mut impl Rng) -> Self {
        let mut flat = [0.0; PARAM_COUNT];
        for v in flat.iter_mut() {
            *v = rng.random_range(low..high);
        }
        Self::from_flat(&flat)
    }

    /// `w1, b1, w2, b2` concatenated.
    pub fn to_flat(&self) -> [f64; PARAM_COUNT] {
        let mut flat = [0.0; PARAM_COUNT];
        flat[..6].copy_from_slice(&self.w1);
        flat[6..9].copy_from_slice(&self.b1);
        flat[9..12].copy_from_slice(&self.w2);
        flat[12] = self.b2;
        flat
    }

    pub fn from_flat(flat: &[f64; PARAM_COUNT]) -> Self {
        let mut p = Self::zeros();
        p.w1.copy_from_slice(&flat[..6]);
        p.b1.copy_from_slice(&flat[6..9]);
        p.w2.copy_from_slice(&flat[9..12]);
        p.b2 = flat[12];
        p
    }

    pub fn hidden(&self, x: [f64; 2]) -> [f64; HIDDEN] {
        let mut out = [0.0; HIDDEN];
        for (j, h) in out.iter_mut().enumerate() {
            *h = sigmoid(self.w1[2 * j] * x[0] + self.w1[2 * j + 1] * x[1] + self.b1[j]);
        }
        out
    }
}

pub fn ffnn_forward(params: &FfnnParams, x: [f64; 2]) -> f64 {
    let hidden = params.hidden(x);
    params.b2 + params.w2.iter().zip(hidden).map(|(w, h)| w * h).sum::<f64>()
}

pub fn mse_loss(params: &FfnnParams, inputs: &[[f64; 2]], targets: &[f64]) -> Result<f64, FfnnError> {
    check(inputs, targets)?;
    let sse: f64 = inputs
        .iter()
        .zip(targets)
        .map(|(&x, y)| (ffnn_forward(params, x) - y).powi(2))
        .sum();
    Ok(sse / inputs.len() as f64)
}

fn check(inputs: &[[f64; 2]], targets: &[f64]) -> Result<(), FfnnError> {
    if inputs.len() != targets.len() {
        return Err(FfnnError::Length {
            inputs: inputs.len(),
            targets: targets.len(),
        });
    }
    if inputs.is_empty() {
        return Err(FfnnError::NoSamples);
    }
    Ok(())
}

/// Gradient of the mean squared error, in the same shape as the parameters.
pub fn mse_gradient(params: &FfnnParams, inputs: &[[f64; 2]], targets: &[f64]) -> Result<FfnnParams, FfnnError> {
    check(inputs, targets)?;
    let scale = 2.0 / inputs.len() as f64;
    let mut g = FfnnParams::zeros();
    for (&x, &y) in inputs.iter().zip(targets) {
        let hidden = params.hidden(x);
        let out = params.b2 + params.w2.iter().zip(hidden).map(|(w, h)| w * h).sum::<f64>();
        let d_out = scale * (out - y);
        g.b2 += d_out;
        for (j, &hj) in hidden.iter().enumerate() {
            g.w2[j] += d_out * hj;
            let d_pre = d_out * params.w2[j] * hj * (1.0 - hj);
            g.b1[j] += d_pre;
            g.w1[2 * j] += d_pre * x[0];
            g.w1[2 * j + 1] += d_pre * x[1];
        }
    }
    Ok(g)
}

/// Gradient descent on explicit `(input, target)` pairs.
pub fn train_on_pairs(
    inputs: &[[f64; 2]],
    targets: &[f64],
    config: GdConfig,
    seed: u64,
) -> Result<Trained<FfnnParams>, FfnnError> {
    if config.learning_rate.is_nan() || config.learning_rate <= 0.0 {
        return Err(FfnnError::LearningRate(config.learning_rate));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = FfnnParams::random(-FFNN_INIT_RANGE, FFNN_INIT_RANGE, &mut rng);
    let mut trace = Vec::with_capacity(config.epochs + 1);
    trace.push(mse_loss(&params, inputs, targets)?);
    for epoch in 1..=config.epochs {
        let grad = mse_gradient(&params, inputs, targets)?.to_flat();
        let mut flat = params.to_flat();
        for (w, g) in flat.iter_mut().zip(grad) {
            *w -= config.learning_rate * g;
        }
        params = FfnnParams::from_flat(&flat);
        let loss = mse_loss(&params, inputs, targets)?;
        if !loss.is_finite() {
            return Err(FfnnError::Diverged { epoch });
        }
        trace.push(loss);
    }
    Ok(Trained { params, trace })
}

/// Trains on the last step of every window. The trace holds the training
/// MSE at initialization followed by one entry per epoch.
pub fn train_ffnn_gd(samples: &WindowedSamples, config: GdConfig, seed: u64) -> Result<Trained<FfnnParams>, FfnnError> {
    train_on_pairs(&samples.last_steps(), &samples.targets, config, seed)
}
