//! Groundwater level forecasting with an LSTM whose weights are searched by
//! the Lion Algorithm, alongside a gradient-descent FFNN and a BPTT-trained
//! LSTM as baselines.
//!
//! The modules follow the pipeline order:
//!
//! - [`dataio`]: CSV ingestion, min-max scaling, lag windows, chronological
//!   split and contiguous folds.
//! - [`lstm`]: the LSTM cell, forward pass, flat genome codec and BPTT.
//! - [`ffnn`]: the 2-3-1 feedforward baseline.
//! - [`lion`]: the Lion Algorithm minimizer.
//! - [`forecaster`]: model pipelines, recursive forecasts, comparisons.
//! - [`evalkit`]: metrics, box-plot statistics and cross-validation.
//! - [`synth`]: a seeded synthetic monthly series for experiments.
//!
//! ```
//! use lionlstm::lion::{optimize, LaConfig};
//!
//! let sphere = |x: &[f64]| x.iter().map(|v| (v - 0.3).powi(2)).sum::<f64>();
//! let config = LaConfig { seed: 1, ..LaConfig::default() };
//! let outcome = optimize(&sphere, 4, &config, |_| {}).unwrap();
//! assert_eq!(outcome.trace.len(), 100);
//! assert!(outcome.best_fitness < 0.05);
//! ```

pub mod dataio;
pub mod evalkit;
pub mod ffnn;
pub mod forecaster;
pub mod lion;
pub mod lstm;
pub mod synth;
