//! Single-layer LSTM with a linear readout.
//!
//! Each gate reads the concatenation `[h_prev, x]` (hidden state first):
//!
//! ```text
//! f  = σ(W_f·[h_prev, x] + b_f)
//! i  = σ(W_i·[h_prev, x] + b_i)
//! ĉ  = tanh(W_c·[h_prev, x] + b_c)
//! C  = f ⊙ C_prev + i ⊙ ĉ
//! o  = σ(W_o·[h_prev, x] + b_o)
//! h  = o ⊙ tanh(C)
//! ŷ  = W_y·h_L + b_y
//! ```
//!
//! The flat genome layout, which is also the JSON wire format, is
//! `W_f rows, W_i rows, W_c rows, W_o rows, b_f, b_i, b_c, b_o, W_y, b_y`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataio::WindowedSamples;

#[derive(Debug, Error, PartialEq)]
pub enum LstmError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("genome length {found} does not match {expected} for H = {hidden}, D = {input}")]
    GenomeLength {
        found: usize,
        expected: usize,
        hidden: usize,
        input: usize,
    },
    #[error("at least one sample is required")]
    NoSamples,
    #[error("learning rate must be positive, got {0}")]
    LearningRate(f64),
    #[error("non-finite value during {0}")]
    NonFinite(&'static str),
    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One gate's affine map: `weights` is row-major `H × (H + D)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Gate {
    fn zeros(hidden: usize, input: usize) -> Self {
        Self {
            weights: vec![0.0; hidden * (hidden + input)],
            bias: vec![0.0; hidden],
        }
    }

    fn preactivation(&self, z: &[f64]) -> Vec<f64> {
        let width = z.len();
        self.bias
            .iter()
            .enumerate()
            .map(|(row, b)| {
                let w = &self.weights[row * width..(row + 1) * width];
                b + w.iter().zip(z).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }
}

/// Gate weights and readout of a single-layer LSTM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "LstmDocument", try_from = "LstmDocument")]
pub struct LstmParams {
    pub hidden: usize,
    pub input: usize,
    pub forget: Gate,
    pub input_gate: Gate,
    pub candidate: Gate,
    pub output: Gate,
    pub readout_weights: Vec<f64>,
    pub readout_bias: f64,
}

/// Serialized form: `{"h": H, "d": D, "genome": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LstmDocument {
    pub h: usize,
    pub d: usize,
    pub genome: Vec<f64>,
}

impl From<LstmParams> for LstmDocument {
    fn from(p: LstmParams) -> Self {
        LstmDocument {
            h: p.hidden,
            d: p.input,
            genome: p.to_genome(),
        }
    }
}

impl TryFrom<LstmDocument> for LstmParams {
    type Error = LstmError;

    fn try_from(doc: LstmDocument) -> Result<Self, Self::Error> {
        LstmParams::from_genome(&doc.genome, doc.h, doc.d)
    }
}

/// Length of the flat genome for hidden size `hidden` and input size `input`.
pub fn genome_dim(hidden: usize, input: usize) -> usize {
    4 * hidden * (hidden + input) + 4 * hidden + hidden + 1
}

impl LstmParams {
    pub fn zeros(hidden: usize, input: usize) -> Self {
        Self {
            hidden,
            input,
            forget: Gate::zeros(hidden, input),
            input_gate: Gate::zeros(hidden, input),
            candidate: Gate::zeros(hidden, input),
            output: Gate::zeros(hidden, input),
            readout_weights: vec![0.0; hidden],
            readout_bias: 0.0,
        }
    }

    /// Every genome entry drawn uniformly from `[low, high)`.
    pub fn random(hidden: usize, input: usize, low: f64, high: f64, rng: &mut impl Rng) -> Self {
        let genome: Vec<f64> = (0..genome_dim(hidden, input))
            .map(|_| rng.random_range(low..high))
            .collect();
        Self::from_genome(&genome, hidden, input).expect("length matches genome_dim")
    }

    pub fn gates(&self) -> [&Gate; 4] {
        [&self.forget, &self.input_gate, &self.candidate, &self.output]
    }

    pub fn genome_dim(&self) -> usize {
        genome_dim(self.hidden, self.input)
    }

    pub fn to_genome(&self) -> Vec<f64> {
        let mut genome = Vec::with_capacity(self.genome_dim());
        for gate in self.gates() {
            genome.extend_from_slice(&gate.weights);
        }
        for gate in self.gates() {
            genome.extend_from_slice(&gate.bias);
        }
        genome.extend_from_slice(&self.readout_weights);
        genome.push(self.readout_bias);
        genome
    }

    pub fn from_genome(genome: &[f64], hidden: usize, input: usize) -> Result<Self, LstmError> {
        let expected = genome_dim(hidden, input);
        if genome.len() != expected {
            return Err(LstmError::GenomeLength {
                found: genome.len(),
                expected,
                hidden,
                input,
            });
        }
        let mut rest = genome;
        let mut take = |n: usize| {
            let (head, tail) = rest.split_at(n);
            rest = tail;
            head.to_vec()
        };
        let w = hidden * (hidden + input);
        let weights = [take(w), take(w), take(w), take(w)];
        let biases = [take(hidden), take(hidden), take(hidden), take(hidden)];
        let readout_weights = take(hidden);
        let readout_bias = take(1)[0];
        let [wf, wi, wc, wo] = weights;
        let [bf, bi, bc, bo] = biases;
        Ok(Self {
            hidden,
            input,
            forget: Gate { weights: wf, bias: bf },
            input_gate: Gate { weights: wi, bias: bi },
            candidate: Gate { weights: wc, bias: bc },
            output: Gate { weights: wo, bias: bo },
            readout_weights,
            readout_bias,
        })
    }

    fn check_shapes(&self) -> Result<(), LstmError> {
        let w = self.hidden * (self.hidden + self.input);
        for gate in self.gates() {
            if gate.weights.len() != w || gate.bias.len() != self.hidden {
                return Err(LstmError::Shape(format!(
                    "gate shapes inconsistent with H = {}, D = {}",
                    self.hidden, self.input
                )));
            }
        }
        if self.readout_weights.len() != self.hidden {
            return Err(LstmError::Shape("readout length differs from H".into()));
        }
        Ok(())
    }
}

/// Cell and hidden state.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub c: Vec<f64>,
    pub h: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            c: vec![0.0; hidden],
            h: vec![0.0; hidden],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateActivations {
    pub f: Vec<f64>,
    pub i: Vec<f64>,
    pub c_hat: Vec<f64>,
    pub o: Vec<f64>,
}

fn concat(h: &[f64], x: &[f64]) -> Vec<f64> {
    let mut z = Vec::with_capacity(h.len() + x.len());
    z.extend_from_slice(h);
    z.extend_from_slice(x);
    z
}

/// Advances the cell by one input vector.
pub fn lstm_cell_step(
    params: &LstmParams,
    x: &[f64],
    state: &LstmState,
) -> Result<(LstmState, GateActivations), LstmError> {
    params.check_shapes()?;
    if x.len() != params.input {
        return Err(LstmError::Shape(format!(
            "input has {} features, expected {}",
            x.len(),
            params.input
        )));
    }
    if state.c.len() != params.hidden || state.h.len() != params.hidden {
        return Err(LstmError::Shape("state length differs from H".into()));
    }
    Ok(step_unchecked(params, x, state))
}

fn step_unchecked(params: &LstmParams, x: &[f64], state: &LstmState) -> (LstmState, GateActivations) {
    let z = concat(&state.h, x);
    let f: Vec<f64> = params.forget.preactivation(&z).into_iter().map(sigmoid).collect();
    let i: Vec<f64> = params.input_gate.preactivation(&z).into_iter().map(sigmoid).collect();
    let c_hat: Vec<f64> = params.candidate.preactivation(&z).into_iter().map(f64::tanh).collect();
    let o: Vec<f64> = params.output.preactivation(&z).into_iter().map(sigmoid).collect();
    let c: Vec<f64> = (0..params.hidden)
        .map(|j| f[j] * state.c[j] + i[j] * c_hat[j])
        .collect();
    let h = (0..params.hidden).map(|j| o[j] * c[j].tanh()).collect();
    (LstmState { c, h }, GateActivations { f, i, c_hat, o })
}

fn readout(params: &LstmParams, h: &[f64]) -> f64 {
    params.readout_bias + params.readout_weights.iter().zip(h).map(|(w, h)| w * h).sum::<f64>()
}

/// Runs the sequence from a zero state and applies the readout to the
/// final hidden state. The result is in normalized target units.
pub fn lstm_forward<S: AsRef<[f64]>>(params: &LstmParams, sequence: &[S]) -> Result<f64, LstmError> {
    params.check_shapes()?;
    if sequence.is_empty() {
        return Err(LstmError::Shape("empty sequence".into()));
    }
    let mut state = LstmState::zeros(params.hidden);
    for x in sequence {
        let x = x.as_ref();
        if x.len() != params.input {
            return Err(LstmError::Shape(format!(
                "input has {} features, expected {}",
                x.len(),
                params.input
            )));
        }
        state = step_unchecked(params, x, &state).0;
    }
    Ok(readout(params, &state.h))
}

/// Forward predictions for every sample window.
pub fn predict_samples(params: &LstmParams, samples: &WindowedSamples) -> Result<Vec<f64>, LstmError> {
    samples.inputs.iter().map(|w| lstm_forward(params, w)).collect()
}

/// Mean squared error over `samples`.
pub fn mse_loss(params: &LstmParams, samples: &WindowedSamples) -> Result<f64, LstmError> {
    if samples.is_empty() {
        return Err(LstmError::NoSamples);
    }
    let preds = predict_samples(params, samples)?;
    let sse: f64 = preds.iter().zip(&samples.targets).map(|(p, y)| (p - y).powi(2)).sum();
    Ok(sse / samples.len() as f64)
}

/// Adds one window's loss gradient, scaled by `scale`, into `grad`
/// (genome layout). Backpropagates through every step of the window.
fn accumulate_window_gradient<S: AsRef<[f64]>>(
    params: &LstmParams,
    window: &[S],
    target: f64,
    scale: f64,
    grad: &mut [f64],
) {
    let hdim = params.hidden;
    let width = params.hidden + params.input;
    let wlen = hdim * width;

    let mut states = vec![LstmState::zeros(hdim)];
    let mut acts = Vec::with_capacity(window.len());
    let mut inputs = Vec::with_capacity(window.len());
    for x in window {
        let prev = states.last().expect("seeded with initial state");
        let z = concat(&prev.h, x.as_ref());
        let (next, gates) = step_unchecked(params, x.as_ref(), prev);
        inputs.push(z);
        acts.push(gates);
        states.push(next);
    }
    let last = states.last().expect("nonempty");
    let pred = readout(params, &last.h);
    let dpred = scale * 2.0 * (pred - target);

    let readout_offset = 4 * wlen + 4 * hdim;
    for j in 0..hdim {
        grad[readout_offset + j] += dpred * last.h[j];
    }
    grad[readout_offset + hdim] += dpred;

    let mut dh: Vec<f64> = params.readout_weights.iter().map(|w| dpred * w).collect();
    let mut dc = vec![0.0; hdim];
    let gates = params.gates();
    for t in (0..window.len()).rev() {
        let a = &acts[t];
        let c = &states[t + 1].c;
        let c_prev = &states[t].c;
        let z = &inputs[t];
        let mut da = [vec![0.0; hdim], vec![0.0; hdim], vec![0.0; hdim], vec![0.0; hdim]];
        for j in 0..hdim {
            let tc = c[j].tanh();
            let d_o = dh[j] * tc;
            dc[j] += dh[j] * a.o[j] * (1.0 - tc * tc);
            let d_f = dc[j] * c_prev[j];
            let d_i = dc[j] * a.c_hat[j];
            let d_chat = dc[j] * a.i[j];
            da[0][j] = d_f * a.f[j] * (1.0 - a.f[j]);
            da[1][j] = d_i * a.i[j] * (1.0 - a.i[j]);
            da[2][j] = d_chat * (1.0 - a.c_hat[j] * a.c_hat[j]);
            da[3][j] = d_o * a.o[j] * (1.0 - a.o[j]);
            dc[j] *= a.f[j];
        }
        let mut dz = vec![0.0; width];
        for (g, gate) in gates.iter().enumerate() {
            let w_off = g * wlen;
            let b_off = 4 * wlen + g * hdim;
            for j in 0..hdim {
                let d = da[g][j];
                grad[b_off + j] += d;
                let row = &gate.weights[j * width..(j + 1) * width];
                let grow = &mut grad[w_off + j * width..w_off + (j + 1) * width];
                for k in 0..width {
                    grow[k] += d * z[k];
                    dz[k] += row[k] * d;
                }
            }
        }
        dh.copy_from_slice(&dz[..hdim]);
    }
}

/// Gradient of the mean squared error over `samples` with respect to
/// every parameter, in genome layout.
pub fn bptt_gradient(params: &LstmParams, samples: &WindowedSamples) -> Result<Vec<f64>, LstmError> {
    params.check_shapes()?;
    if samples.is_empty() {
        return Err(LstmError::NoSamples);
    }
    for w in &samples.inputs {
        if w.is_empty() || params.input != 2 {
            return Err(LstmError::Shape(format!(
                "windows carry 2 features per step, params expect {}",
                params.input
            )));
        }
    }
    let dim = params.genome_dim();
    let scale = 1.0 / samples.len() as f64;
    // Per-sample gradients are summed in index order so results do not
    // depend on the thread schedule.
    let per_sample: Vec<Vec<f64>> = samples
        .inputs
        .par_iter()
        .zip(&samples.targets)
        .map(|(window, &target)| {
            let mut g = vec![0.0; dim];
            accumulate_window_gradient(params, window, target, scale, &mut g);
            g
        })
        .collect();
    let mut grad = vec![0.0; dim];
    for g in per_sample {
        for (acc, v) in grad.iter_mut().zip(g) {
            *acc += v;
        }
    }
    if grad.iter().all(|g| g.is_finite()) {
        Ok(grad)
    } else {
        Err(LstmError::NonFinite("backpropagation"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GdConfig {
    pub learning_rate: f64,
    pub epochs: usize,
}

/// Parameters after gradient descent together with the training-MSE trace.
///
/// `trace[0]` is the loss at initialization and `trace[e]` the loss after
/// `e` updates, so the trace has `epochs + 1` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Trained<P> {
    pub params: P,
    pub trace: Vec<f64>,
}

/// Range of the seeded uniform initialization used by the BPTT baseline.
pub const LSTM_INIT_RANGE: f64 = 0.1;

/// Full-batch gradient descent on the training MSE.
pub fn train_lstm_gd(
    samples: &WindowedSamples,
    hidden: usize,
    config: GdConfig,
    seed: u64,
) -> Result<Trained<LstmParams>, LstmError> {
    if config.learning_rate.is_nan() || config.learning_rate <= 0.0 {
        return Err(LstmError::LearningRate(config.learning_rate));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = LstmParams::random(hidden, 2, -LSTM_INIT_RANGE, LSTM_INIT_RANGE, &mut rng);
    let mut genome = params.to_genome();
    let mut trace = Vec::with_capacity(config.epochs + 1);
    trace.push(mse_loss(&params, samples)?);
    for epoch in 1..=config.epochs {
        let grad = bptt_gradient(&params, samples).map_err(|e| match e {
            LstmError::NonFinite(_) => LstmError::Diverged { epoch },
            other => other,
        })?;
        for (w, g) in genome.iter_mut().zip(&grad) {
            *w -= config.learning_rate * g;
        }
        params = LstmParams::from_genome(&genome, hidden, 2)?;
        let loss = mse_loss(&params, samples)?;
        if !loss.is_finite() {
            return Err(LstmError::Diverged { epoch });
        }
        trace.push(loss);
    }
    Ok(Trained { params, trace })
}
