//! Error metrics, box-plot summaries and blocked k-fold cross-validation.
//!
//! Accuracy is defined as `100 · clamp(1 − RMSE / (max(obs) − min(obs)), 0, 1)`,
//! a range-normalized RMSE turned into a bounded score.
//!
//! Quartiles use the median-of-halves rule: the sorted values are split
//! into a lower and an upper half (the overall median is left out when the
//! count is odd), and `q1`/`q3` are the medians of those halves.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataio::{denormalize, Feature, FoldPlan, ScalingParams, WindowedSamples};

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("empty input")]
    Empty,
    #[error("length mismatch: {pred} predictions vs {obs} observations")]
    Length { pred: usize, obs: usize },
    #[error("non-finite value in input")]
    NonFinite,
    #[error("observations are constant; accuracy is undefined")]
    ConstantObservations,
    #[error("at least 2 values are needed, got {0}")]
    TooFewValues(usize),
}

#[derive(Debug, Error)]
pub enum CvError {
    #[error("fold {fold} has {size} samples; at least 2 are needed")]
    FoldTooSmall { fold: usize, size: usize },
    #[error("fold plan covers {plan} samples but {samples} were given")]
    PlanMismatch { plan: usize, samples: usize },
    #[error("fold {fold}: {source}")]
    Metric {
        fold: usize,
        #[source]
        source: MetricError,
    },
    #[error("fold {fold}: training failed: {message}")]
    Training { fold: usize, message: String },
}

fn check(pred: &[f64], obs: &[f64]) -> Result<(), MetricError> {
    if pred.len() != obs.len() {
        return Err(MetricError::Length {
            pred: pred.len(),
            obs: obs.len(),
        });
    }
    if pred.is_empty() {
        return Err(MetricError::Empty);
    }
    if pred.iter().chain(obs).any(|v| !v.is_finite()) {
        return Err(MetricError::NonFinite);
    }
    Ok(())
}

pub fn mse(pred: &[f64], obs: &[f64]) -> Result<f64, MetricError> {
    check(pred, obs)?;
    Ok(pred.iter().zip(obs).map(|(p, o)| (p - o).powi(2)).sum::<f64>() / pred.len() as f64)
}

pub fn rmse(pred: &[f64], obs: &[f64]) -> Result<f64, MetricError> {
    mse(pred, obs).map(f64::sqrt)
}

pub fn mae(pred: &[f64], obs: &[f64]) -> Result<f64, MetricError> {
    check(pred, obs)?;
    Ok(pred.iter().zip(obs).map(|(p, o)| (p - o).abs()).sum::<f64>() / pred.len() as f64)
}

pub fn accuracy_pct(pred: &[f64], obs: &[f64]) -> Result<f64, MetricError> {
    let err = rmse(pred, obs)?;
    let max = obs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = obs.iter().copied().fold(f64::INFINITY, f64::min);
    let range = max - min;
    if range.is_nan() || range <= 0.0 {
        return Err(MetricError::ConstantObservations);
    }
    Ok(100.0 * (1.0 - err / range).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub rmse: f64,
    pub mse: f64,
    pub mae: f64,
    pub accuracy_pct: f64,
}

impl MetricSet {
    pub fn compute(pred: &[f64], obs: &[f64]) -> Result<Self, MetricError> {
        let mse = mse(pred, obs)?;
        Ok(Self {
            rmse: mse.sqrt(),
            mse,
            mae: mae(pred, obs)?,
            accuracy_pct: accuracy_pct(pred, obs)?,
        })
    }
}

/// Five-number summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn boxplot_stats(values: &[f64]) -> Result<BoxStats, MetricError> {
    if values.len() < 2 {
        return Err(MetricError::TooFewValues(values.len()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(MetricError::NonFinite);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let lower = &sorted[..n / 2];
    let upper = &sorted[n.div_ceil(2)..];
    Ok(BoxStats {
        min: sorted[0],
        q1: median_sorted(lower),
        median: median_sorted(&sorted),
        q3: median_sorted(upper),
        max: sorted[n - 1],
    })
}

/// Per-fold accuracies and their box-plot summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub folds: Vec<f64>,
    #[serde(flatten)]
    pub stats: BoxStats,
}

impl CvSummary {
    pub fn from_folds(folds: Vec<f64>) -> Result<Self, MetricError> {
        let stats = boxplot_stats(&folds)?;
        Ok(Self { folds, stats })
    }

    pub fn mean(&self) -> f64 {
        self.folds.iter().sum::<f64>() / self.folds.len() as f64
    }
}

/// A trainable model type, as seen by cross-validation.
pub trait ModelFamily: Sync {
    fn name(&self) -> &str;

    /// Trains on `train` and returns normalized predictions for every
    /// sample of `validate`, in order.
    fn fit_predict(&self, train: &WindowedSamples, validate: &WindowedSamples, seed: u64) -> Result<Vec<f64>, String>;
}

/// Trains once per fold on the remaining folds (seed `base_seed + fold`)
/// and scores accuracy on the held-out fold in original units.
pub fn cross_validate(
    family: &dyn ModelFamily,
    train: &WindowedSamples,
    plan: &FoldPlan,
    base_seed: u64,
    scaling: &ScalingParams,
) -> Result<CvSummary, CvError> {
    if plan.sample_count() != train.len() {
        return Err(CvError::PlanMismatch {
            plan: plan.sample_count(),
            samples: train.len(),
        });
    }
    for (fold, range) in plan.folds.iter().enumerate() {
        if range.len() < 2 {
            return Err(CvError::FoldTooSmall {
                fold,
                size: range.len(),
            });
        }
    }
    let accuracies: Vec<Result<f64, CvError>> = (0..plan.k())
        .into_par_iter()
        .map(|fold| {
            let fit = train.select(plan.training_indices(fold));
            let held_out = train.slice(plan.folds[fold].clone());
            let seed = base_seed.wrapping_add(fold as u64);
            let pred = family
                .fit_predict(&fit, &held_out, seed)
                .map_err(|message| CvError::Training { fold, message })?;
            let pred = denormalize(&pred, scaling, Feature::Gwl);
            let obs = denormalize(&held_out.targets, scaling, Feature::Gwl);
            accuracy_pct(&pred, &obs).map_err(|source| CvError::Metric { fold, source })
        })
        .collect();
    let folds = accuracies.into_iter().collect::<Result<Vec<_>, _>>()?;
    CvSummary::from_folds(folds).map_err(|source| CvError::Metric { fold: 0, source })
}

/// Test-split metrics of one model, optionally with its CV summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    #[serde(flatten)]
    pub metrics: MetricSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cv: Option<CvSummary>,
}

/// Reports keyed by model name (`ffnn`, `lstm`, `lstm_la`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EvalReport {
    pub models: BTreeMap<String, ModelReport>,
}

impl EvalReport {
    /// Plot-ready rows `model,fold,accuracy_pct` for every model with a CV
    /// summary. Folds are numbered from 1.
    pub fn fold_csv(&self) -> String {
        let mut out = String::from("model,fold,accuracy_pct\n");
        for (name, report) in &self.models {
            if let Some(cv) = &report.cv {
                for (k, acc) in cv.folds.iter().enumerate() {
                    out.push_str(&format!("{name},{},{acc}\n", k + 1));
                }
            }
        }
        out
    }
}
