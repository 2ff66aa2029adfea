//! Model pipelines: the FFNN and BPTT baselines, the Lion-Algorithm-trained
//! LSTM, recursive multi-month forecasts and the three-way comparison.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataio::{
    self, denormalize, fit_minmax, make_windows, normalize, split_point, DataError, Feature, FoldPlan, ScalingParams,
    TimeSeriesDataset, WindowedSamples, YearMonth,
};
use crate::evalkit::{self, CvError, CvSummary, EvalReport, MetricError, MetricSet, ModelFamily, ModelReport};
use crate::ffnn::{self, FfnnError, FfnnParams};
use crate::lion::{self, LaConfig, LaOutcome, LionError, Progress};
use crate::lstm::{self, genome_dim, GdConfig, LstmError, LstmParams};

/// Lead time, in months, beyond which forecasts are flagged.
pub const MAX_LEAD_TIME: usize = 12;

#[derive(Debug, Error)]
pub enum ForecastError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Lstm(#[from] LstmError),
    #[error(transparent)]
    Ffnn(#[from] FfnnError),
    #[error(transparent)]
    Lion(#[from] LionError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Cv(#[from] CvError),
    #[error("window has {found} steps, model expects {expected}")]
    WindowLength { found: usize, expected: usize },
    #[error("model kind {kind} does not match its parameter document")]
    KindMismatch { kind: ModelKind },
    #[error("training set is empty")]
    NoSamples,
    #[error("non-finite prediction")]
    NonFinite,
}

impl ForecastError {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            ForecastError::Lstm(LstmError::Diverged { .. } | LstmError::NonFinite(_))
                | ForecastError::Ffnn(FfnnError::Diverged { .. })
                | ForecastError::Lion(LionError::NonFiniteFitness { .. })
                | ForecastError::NonFinite
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Ffnn,
    Lstm,
    LstmLa,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Ffnn, ModelKind::Lstm, ModelKind::LstmLa];

    /// Key used in reports and CSV headers.
    pub fn key(self) -> &'static str {
        match self {
            ModelKind::Ffnn => "ffnn",
            ModelKind::Lstm => "lstm",
            ModelKind::LstmLa => "lstm_la",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ffnn" => Ok(ModelKind::Ffnn),
            "lstm" => Ok(ModelKind::Lstm),
            "lstm-la" | "lstm_la" => Ok(ModelKind::LstmLa),
            other => Err(format!("unknown model `{other}` (expected ffnn, lstm or lstm-la)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelParams {
    Lstm(LstmParams),
    Ffnn(FfnnParams),
}

/// A fitted model with the scaling and lag it was trained under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainedModel {
    pub kind: ModelKind,
    pub parameters: ModelParams,
    pub scaling: ScalingParams,
    pub lag: usize,
    pub training_trace: Vec<f64>,
}

impl TrainedModel {
    pub fn from_json(text: &str) -> Result<Self, String> {
        let model: TrainedModel = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let consistent = matches!(
            (model.kind, &model.parameters),
            (ModelKind::Ffnn, ModelParams::Ffnn(_)) | (ModelKind::Lstm | ModelKind::LstmLa, ModelParams::Lstm(_))
        );
        if consistent {
            Ok(model)
        } else {
            Err(ForecastError::KindMismatch { kind: model.kind }.to_string())
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    /// Forward pass on a normalized window; output in normalized units.
    pub fn predict_normalized(&self, window: &[[f64; 2]]) -> Result<f64, ForecastError> {
        if window.len() != self.lag {
            return Err(ForecastError::WindowLength {
                found: window.len(),
                expected: self.lag,
            });
        }
        let y = match &self.parameters {
            ModelParams::Ffnn(p) => ffnn::ffnn_forward(p, window[window.len() - 1]),
            ModelParams::Lstm(p) => lstm::lstm_forward(p, window)?,
        };
        if y.is_finite() {
            Ok(y)
        } else {
            Err(ForecastError::NonFinite)
        }
    }

    /// Predicts next-month gwl from a raw `(gwl, rainfall)` window.
    pub fn predict_one(&self, window: &[[f64; 2]]) -> Result<f64, ForecastError> {
        let normalized: Vec<[f64; 2]> = window.iter().map(|&[g, r]| self.scaling.normalize_step(g, r)).collect();
        let y = self.predict_normalized(&normalized)?;
        Ok(self.scaling.gwl.denormalize(y))
    }

    pub fn predict_samples(&self, samples: &WindowedSamples) -> Result<Vec<f64>, ForecastError> {
        samples.inputs.iter().map(|w| self.predict_normalized(w)).collect()
    }
}

/// Windows and scaling shared by every model of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedData {
    pub scaling: ScalingParams,
    pub lag: usize,
    pub train: WindowedSamples,
    pub test: WindowedSamples,
    /// Records `[0, scaling_end)` fed the scaling fit.
    pub scaling_end: usize,
}

/// Splits windows chronologically and fits the scaling on the records the
/// training windows touch, so test months never influence normalization.
pub fn prepare(dataset: &TimeSeriesDataset, lag: usize, train_fraction: f64) -> Result<PreparedData, ForecastError> {
    if lag == 0 {
        return Err(DataError::ZeroLag.into());
    }
    if dataset.len() <= lag {
        return Err(DataError::TooShort {
            len: dataset.len(),
            lag,
        }
        .into());
    }
    let n_train = split_point(dataset.len() - lag, train_fraction)?;
    let scaling_end = n_train + lag;
    let scaling = fit_minmax(dataset, scaling_end)?;
    let samples = make_windows(&normalize(dataset, &scaling), lag)?;
    Ok(PreparedData {
        scaling,
        lag,
        train: samples.slice(0..n_train),
        test: samples.slice(n_train..samples.len()),
        scaling_end,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub lag: usize,
    pub hidden: usize,
    pub train_fraction: f64,
    pub folds: usize,
    pub seed: u64,
    pub la: LaConfig,
    pub ffnn: GdConfig,
    pub lstm: GdConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            lag: 12,
            hidden: 3,
            train_fraction: 0.8,
            folds: 5,
            seed: 0,
            la: LaConfig {
                bounds: lion::Bounds::new(-2.0, 2.0),
                ..LaConfig::default()
            },
            ffnn: GdConfig {
                learning_rate: 0.5,
                epochs: 2000,
            },
            lstm: GdConfig {
                learning_rate: 0.5,
                epochs: 300,
            },
        }
    }
}

/// RMSE of the LSTM encoded by `genome` over `samples`, in normalized units.
pub fn hybrid_fitness(genome: &[f64], hidden: usize, samples: &WindowedSamples) -> f64 {
    let Ok(params) = LstmParams::from_genome(genome, hidden, 2) else {
        return f64::NAN;
    };
    match lstm::mse_loss(&params, samples) {
        Ok(mse) => mse.sqrt(),
        Err(_) => f64::NAN,
    }
}

/// Searches LSTM weights with the Lion Algorithm, minimizing training RMSE.
pub fn train_hybrid(
    train: &WindowedSamples,
    la: &LaConfig,
    hidden: usize,
    sink: impl FnMut(Progress),
) -> Result<(LstmParams, LaOutcome), ForecastError> {
    if train.is_empty() {
        return Err(ForecastError::NoSamples);
    }
    let fitness = |genome: &[f64]| hybrid_fitness(genome, hidden, train);
    let outcome = lion::optimize(&fitness, genome_dim(hidden, 2), la, sink)?;
    let params = LstmParams::from_genome(&outcome.best_genome, hidden, 2)?;
    debug_assert!(outcome.trace.windows(2).all(|w| w[1] <= w[0]));
    Ok((params, outcome))
}

/// Result of fitting one model family, with the hybrid run's evaluation count.
#[derive(Debug, Clone, PartialEq)]
pub struct Fitted {
    pub model: TrainedModel,
    pub evaluations: Option<u64>,
}

/// Trains `kind` on `train`. The seed drives initialization (gradient
/// models) or the whole search (hybrid).
pub fn fit(
    kind: ModelKind,
    train: &WindowedSamples,
    scaling: ScalingParams,
    config: &PipelineConfig,
    seed: u64,
    sink: impl FnMut(Progress),
) -> Result<Fitted, ForecastError> {
    let lag = train.lag().ok_or(ForecastError::NoSamples)?;
    let (parameters, training_trace, evaluations) = match kind {
        ModelKind::Ffnn => {
            let t = ffnn::train_ffnn_gd(train, config.ffnn, seed)?;
            (ModelParams::Ffnn(t.params), t.trace, None)
        }
        ModelKind::Lstm => {
            let t = lstm::train_lstm_gd(train, config.hidden, config.lstm, seed)?;
            (ModelParams::Lstm(t.params), t.trace, None)
        }
        ModelKind::LstmLa => {
            let la = LaConfig { seed, ..config.la };
            let (params, outcome) = train_hybrid(train, &la, config.hidden, sink)?;
            (ModelParams::Lstm(params), outcome.trace, Some(outcome.evaluations))
        }
    };
    Ok(Fitted {
        model: TrainedModel {
            kind,
            parameters,
            scaling,
            lag,
            training_trace,
        },
        evaluations,
    })
}

/// A model family bound to a pipeline configuration, for cross-validation.
pub struct Family<'a> {
    pub kind: ModelKind,
    pub config: &'a PipelineConfig,
}

impl ModelFamily for Family<'_> {
    fn name(&self) -> &str {
        self.kind.key()
    }

    fn fit_predict(&self, train: &WindowedSamples, validate: &WindowedSamples, seed: u64) -> Result<Vec<f64>, String> {
        // Scaling only matters for denormalized output, which CV does itself.
        let scaling = ScalingParams {
            gwl: dataio::FeatureRange { min: 0.0, max: 1.0 },
            rainfall: dataio::FeatureRange { min: 0.0, max: 1.0 },
        };
        let fitted = fit(self.kind, train, scaling, self.config, seed, |_| {}).map_err(|e| e.to_string())?;
        fitted.model.predict_samples(validate).map_err(|e| e.to_string())
    }
}

/// How rainfall is filled in for months beyond the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FutureRainfall {
    /// Mean rainfall per calendar month, January first.
    Climatology([f64; 12]),
    Constant(f64),
}

impl FutureRainfall {
    /// Calendar-month means over records `[0, range_end)`. Months absent
    /// from the range take the overall mean.
    pub fn climatology(dataset: &TimeSeriesDataset, range_end: usize) -> Self {
        let end = range_end.min(dataset.len());
        let mut sums = [0.0; 12];
        let mut counts = [0usize; 12];
        for (ym, r) in dataset.timestamps()[..end].iter().zip(dataset.rainfall()) {
            sums[ym.month_index()] += r;
            counts[ym.month_index()] += 1;
        }
        let overall = sums.iter().sum::<f64>() / counts.iter().sum::<usize>().max(1) as f64;
        let mut means = [overall; 12];
        for m in 0..12 {
            if counts[m] > 0 {
                means[m] = sums[m] / counts[m] as f64;
            }
        }
        FutureRainfall::Climatology(means)
    }

    pub fn rainfall(&self, month: YearMonth) -> f64 {
        match self {
            FutureRainfall::Climatology(means) => means[month.month_index()],
            FutureRainfall::Constant(v) => *v,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            FutureRainfall::Climatology(_) => "training-period monthly climatology".into(),
            FutureRainfall::Constant(v) => format!("constant {v} mm"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastResult {
    /// First forecast month.
    pub start: YearMonth,
    pub horizon: usize,
    /// One gwl value per month, original units.
    pub predictions: Vec<f64>,
    pub rainfall_assumption: String,
    /// Set when `horizon` exceeds [`MAX_LEAD_TIME`].
    pub beyond_lead_time: bool,
}

impl ForecastResult {
    pub fn months(&self) -> impl Iterator<Item = YearMonth> + '_ {
        (0..self.horizon).map(|k| self.start.plus_months(k))
    }
}

/// Forecasts `horizon` months after `last_month`, feeding each prediction
/// back into the window with rainfall taken from `rainfall`.
///
/// `last_window` holds the raw `(gwl, rainfall)` records ending at
/// `last_month`; nothing later than that month is ever read.
pub fn forecast_recursive(
    model: &TrainedModel,
    last_window: &[[f64; 2]],
    last_month: YearMonth,
    horizon: usize,
    rainfall: &FutureRainfall,
) -> Result<ForecastResult, ForecastError> {
    if last_window.len() != model.lag {
        return Err(ForecastError::WindowLength {
            found: last_window.len(),
            expected: model.lag,
        });
    }
    let beyond_lead_time = horizon > MAX_LEAD_TIME;
    if beyond_lead_time {
        warn!("forecast horizon {horizon} exceeds the {MAX_LEAD_TIME}-month lead time");
    }
    let start = last_month.next();
    let mut window = last_window.to_vec();
    let mut predictions = Vec::with_capacity(horizon);
    for k in 0..horizon {
        let month = start.plus_months(k);
        let gwl = model.predict_one(&window)?;
        predictions.push(gwl);
        window.remove(0);
        window.push([gwl, rainfall.rainfall(month)]);
    }
    Ok(ForecastResult {
        start,
        horizon,
        predictions,
        rainfall_assumption: rainfall.describe(),
        beyond_lead_time,
    })
}

/// Forecasts from the end of `dataset`.
pub fn forecast_from(
    model: &TrainedModel,
    dataset: &TimeSeriesDataset,
    horizon: usize,
    rainfall: &FutureRainfall,
) -> Result<ForecastResult, ForecastError> {
    let n = dataset.len();
    if n < model.lag {
        return Err(DataError::TooShort { len: n, lag: model.lag }.into());
    }
    let window: Vec<[f64; 2]> = (n - model.lag..n)
        .map(|i| [dataset.gwl()[i], dataset.rainfall()[i]])
        .collect();
    forecast_recursive(model, &window, dataset.end(), horizon, rainfall)
}

/// One row of the `date,observed,ffnn,lstm,lstm_la` table.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRow {
    pub date: YearMonth,
    pub observed: Option<f64>,
    pub values: BTreeMap<ModelKind, f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SeriesTable {
    pub rows: Vec<SeriesRow>,
}

impl SeriesTable {
    pub const HEADER: &'static str = "date,observed,ffnn,lstm,lstm_la";

    /// Empty cells for missing values.
    pub fn to_csv(&self) -> String {
        let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut out = format!("{}\n", Self::HEADER);
        for row in &self.rows {
            out.push_str(&row.date.to_string());
            out.push(',');
            out.push_str(&cell(row.observed));
            for kind in ModelKind::ALL {
                out.push(',');
                out.push_str(&cell(row.values.get(&kind).copied()));
            }
            out.push('\n');
        }
        out
    }

    /// Table of forecast months for each model; observed left blank.
    pub fn from_forecasts(forecasts: &[(ModelKind, ForecastResult)]) -> Self {
        let mut rows: BTreeMap<YearMonth, SeriesRow> = BTreeMap::new();
        for (kind, result) in forecasts {
            for (month, value) in result.months().zip(&result.predictions) {
                rows.entry(month)
                    .or_insert_with(|| SeriesRow {
                        date: month,
                        observed: None,
                        values: BTreeMap::new(),
                    })
                    .values
                    .insert(*kind, *value);
            }
        }
        Self {
            rows: rows.into_values().collect(),
        }
    }
}

/// Test-split predictions of a model, denormalized.
pub fn test_predictions(model: &TrainedModel, test: &WindowedSamples) -> Result<Vec<f64>, ForecastError> {
    let pred = model.predict_samples(test)?;
    Ok(denormalize(&pred, &model.scaling, Feature::Gwl))
}

/// Observed gwl at each sample's target month.
pub fn observed_targets(dataset: &TimeSeriesDataset, samples: &WindowedSamples) -> Vec<f64> {
    samples.origin_index.iter().map(|&i| dataset.gwl()[i]).collect()
}

/// Metrics of `model` on the chronological test split of `dataset`,
/// windowed with the model's own scaling and lag.
pub fn evaluate_model(
    model: &TrainedModel,
    dataset: &TimeSeriesDataset,
    train_fraction: f64,
) -> Result<MetricSet, ForecastError> {
    let windows = make_windows(&normalize(dataset, &model.scaling), model.lag)?;
    let (_, test) = dataio::chrono_split(&windows, train_fraction)?;
    let pred = test_predictions(model, &test)?;
    Ok(MetricSet::compute(&pred, &observed_targets(dataset, &test))?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub report: EvalReport,
    pub series: SeriesTable,
    pub models: Vec<Fitted>,
}

/// Trains all three families on the same training windows and scores them
/// on the same test windows.
pub fn compare_models(dataset: &TimeSeriesDataset, config: &PipelineConfig) -> Result<Comparison, ForecastError> {
    let data = prepare(dataset, config.lag, config.train_fraction)?;
    let fitted: Vec<Result<Fitted, ForecastError>> = {
        use rayon::prelude::*;
        ModelKind::ALL
            .par_iter()
            .map(|&kind| fit(kind, &data.train, data.scaling, config, config.seed, |_| {}))
            .collect()
    };
    let models = fitted.into_iter().collect::<Result<Vec<_>, _>>()?;

    let observed = observed_targets(dataset, &data.test);
    let mut report = EvalReport::default();
    let mut rows: Vec<SeriesRow> = data
        .test
        .origin_index
        .iter()
        .zip(&observed)
        .map(|(&i, &obs)| SeriesRow {
            date: dataset.timestamps()[i],
            observed: Some(obs),
            values: BTreeMap::new(),
        })
        .collect();
    for fitted in &models {
        let pred = test_predictions(&fitted.model, &data.test)?;
        let metrics = MetricSet::compute(&pred, &observed)?;
        report
            .models
            .insert(fitted.model.kind.key().to_string(), ModelReport { metrics, cv: None });
        for (row, value) in rows.iter_mut().zip(pred) {
            row.values.insert(fitted.model.kind, value);
        }
    }
    Ok(Comparison {
        report,
        series: SeriesTable { rows },
        models,
    })
}

/// 5-fold (or `config.folds`) cross-validation of each requested family
/// over the training windows.
pub fn cross_validate_models(
    dataset: &TimeSeriesDataset,
    config: &PipelineConfig,
    kinds: &[ModelKind],
) -> Result<BTreeMap<ModelKind, CvSummary>, ForecastError> {
    let data = prepare(dataset, config.lag, config.train_fraction)?;
    let plan: FoldPlan = dataio::kfold_plan(data.train.len(), config.folds)?;
    let mut out = BTreeMap::new();
    for &kind in kinds {
        let family = Family { kind, config };
        let summary = evalkit::cross_validate(&family, &data.train, &plan, config.seed, &data.scaling)?;
        out.insert(kind, summary);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, SynthConfig};

    fn small_config() -> PipelineConfig {
        PipelineConfig {
            lag: 6,
            hidden: 3,
            la: LaConfig {
                n: 4,
                nrm: 2,
                epochs: 5,
                ..LaConfig::default()
            },
            ffnn: GdConfig {
                learning_rate: 0.5,
                epochs: 50,
            },
            lstm: GdConfig {
                learning_rate: 0.5,
                epochs: 5,
            },
            ..PipelineConfig::default()
        }
    }

    fn series() -> TimeSeriesDataset {
        generate(&SynthConfig::new(96, 3)).unwrap()
    }

    fn zero_model(lag: usize, scaling: ScalingParams) -> TrainedModel {
        TrainedModel {
            kind: ModelKind::Lstm,
            parameters: ModelParams::Lstm(LstmParams::zeros(2, 2)),
            scaling,
            lag,
            training_trace: vec![],
        }
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("lstm-la".parse::<ModelKind>().unwrap(), ModelKind::LstmLa);
        assert_eq!("ffnn".parse::<ModelKind>().unwrap(), ModelKind::Ffnn);
        assert!("rnn".parse::<ModelKind>().is_err());
    }

    #[test]
    fn prepare_fits_scaling_on_training_records() {
        let ds = series();
        let data = prepare(&ds, 12, 0.8).unwrap();
        assert_eq!(data.train.len(), 67);
        assert_eq!(data.test.len(), 17);
        assert_eq!(data.scaling_end, 79);
        assert_eq!(data.scaling, fit_minmax(&ds, 79).unwrap());
        assert_eq!(*data.train.origin_index.last().unwrap(), 78);
    }

    #[test]
    fn zero_model_predicts_training_minimum() {
        let ds = series();
        let data = prepare(&ds, 4, 0.8).unwrap();
        let model = zero_model(4, data.scaling);
        let window: Vec<[f64; 2]> = (0..4).map(|i| [ds.gwl()[i], ds.rainfall()[i]]).collect();
        let y = model.predict_one(&window).unwrap();
        assert_eq!(y, data.scaling.gwl.min);
        assert_eq!(y, model.predict_one(&window).unwrap());
        assert!(matches!(
            model.predict_one(&window[..3]),
            Err(ForecastError::WindowLength { found: 3, expected: 4 })
        ));
    }

    #[test]
    fn predict_one_equals_normalized_path() {
        let ds = series();
        let data = prepare(&ds, 6, 0.8).unwrap();
        let fitted = fit(ModelKind::Ffnn, &data.train, data.scaling, &small_config(), 1, |_| {}).unwrap();
        let raw: Vec<[f64; 2]> = (10..16).map(|i| [ds.gwl()[i], ds.rainfall()[i]]).collect();
        let norm = data.train.inputs[10].clone();
        let via_norm = data
            .scaling
            .gwl
            .denormalize(fitted.model.predict_normalized(&norm).unwrap());
        assert!((fitted.model.predict_one(&raw).unwrap() - via_norm).abs() < 1e-12);
    }

    #[test]
    fn recursive_forecast_shapes() {
        let ds = series();
        let data = prepare(&ds, 6, 0.8).unwrap();
        let mut params = LstmParams::zeros(2, 2);
        params.readout_bias = 0.25;
        let model = TrainedModel {
            parameters: ModelParams::Lstm(params),
            ..zero_model(6, data.scaling)
        };
        let rule = FutureRainfall::climatology(&ds, data.scaling_end);
        let none = forecast_from(&model, &ds, 0, &rule).unwrap();
        assert!(none.predictions.is_empty());

        let year = forecast_from(&model, &ds, 12, &rule).unwrap();
        assert_eq!(year.predictions.len(), 12);
        assert!(!year.beyond_lead_time);
        assert_eq!(year.start, ds.end().next());
        let months: Vec<u32> = year.months().map(|m| m.month).collect();
        assert_eq!(months, (1..=12).collect::<Vec<_>>());
        let expected = data.scaling.gwl.denormalize(0.25);
        assert!(year.predictions.iter().all(|&p| p == expected));

        let long = forecast_from(&model, &ds, 18, &rule).unwrap();
        assert!(long.beyond_lead_time);
        assert_eq!(long.predictions.len(), 18);
    }

    #[test]
    fn forecast_ignores_later_observations() {
        let ds = series();
        let cut =
            TimeSeriesDataset::from_start(ds.start(), ds.gwl()[..60].to_vec(), ds.rainfall()[..60].to_vec()).unwrap();
        let data = prepare(&cut, 6, 0.8).unwrap();
        let fitted = fit(ModelKind::Ffnn, &data.train, data.scaling, &small_config(), 2, |_| {}).unwrap();
        let rule = FutureRainfall::Constant(50.0);
        let from_cut = forecast_from(&fitted.model, &cut, 6, &rule).unwrap();
        let window: Vec<[f64; 2]> = (54..60).map(|i| [ds.gwl()[i], ds.rainfall()[i]]).collect();
        let from_full = forecast_recursive(&fitted.model, &window, ds.timestamps()[59], 6, &rule).unwrap();
        assert_eq!(from_cut, from_full);
    }

    #[test]
    fn climatology_means() {
        let ds = TimeSeriesDataset::from_start(
            YearMonth { year: 2000, month: 11 },
            vec![1.0; 4],
            vec![10.0, 20.0, 30.0, 40.0],
        )
        .unwrap();
        let rule = FutureRainfall::climatology(&ds, 4);
        assert_eq!(rule.rainfall(YearMonth { year: 2005, month: 11 }), 10.0);
        assert_eq!(rule.rainfall(YearMonth { year: 2005, month: 2 }), 40.0);
        assert_eq!(rule.rainfall(YearMonth { year: 2005, month: 12 }), 20.0);
        assert_eq!(rule.rainfall(YearMonth { year: 2005, month: 6 }), 25.0);
    }

    #[test]
    fn hybrid_training_contract() {
        let ds = series();
        let data = prepare(&ds, 6, 0.8).unwrap();
        let la = LaConfig {
            n: 3,
            nrm: 2,
            epochs: 1,
            seed: 5,
            ..LaConfig::default()
        };
        let (params, outcome) = train_hybrid(&data.train, &la, 3, |_| {}).unwrap();
        assert_eq!(params.to_genome().len(), genome_dim(3, 2));
        assert_eq!(outcome.trace.len(), 1);
        let (again, _) = train_hybrid(&data.train, &la, 3, |_| {}).unwrap();
        assert_eq!(params, again);
        assert!(train_hybrid(&WindowedSamples::default(), &la, 3, |_| {}).is_err());
    }

    #[test]
    fn hybrid_improves_constant_target() {
        let ds = series();
        let mut data = prepare(&ds, 6, 0.8).unwrap();
        data.train.targets.iter_mut().for_each(|t| *t = 0.5);
        for seed in 0..3 {
            let la = LaConfig {
                n: 6,
                nrm: 2,
                epochs: 20,
                seed,
                ..LaConfig::default()
            };
            let (_, outcome) = train_hybrid(&data.train, &la, 3, |_| {}).unwrap();
            let fitness = |g: &[f64]| hybrid_fitness(g, 3, &data.train);
            let mut search = lion::LionSearch::new(la, genome_dim(3, 2), &fitness).unwrap();
            let initial = search.init_population().unwrap().best_ever.fitness;
            assert!(outcome.best_fitness < initial);
            assert!(outcome.trace.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn comparison_contract_and_json_round_trip() {
        let ds = series();
        let cfg = small_config();
        let cmp = compare_models(&ds, &cfg).unwrap();
        let data = prepare(&ds, cfg.lag, cfg.train_fraction).unwrap();
        assert_eq!(cmp.report.models.len(), 3);
        for report in cmp.report.models.values() {
            assert!(report.metrics.rmse.is_finite() && report.metrics.mae.is_finite());
        }
        assert_eq!(cmp.series.rows.len(), data.test.len());
        assert!(cmp.series.rows.iter().all(|r| r.values.len() == 3));
        let csv = cmp.series.to_csv();
        assert!(csv.starts_with("date,observed,ffnn,lstm,lstm_la\n"));

        for fitted in &cmp.models {
            assert_eq!(fitted.model.scaling, data.scaling);
            let back = TrainedModel::from_json(&fitted.model.to_json()).unwrap();
            let a = back.predict_samples(&data.test).unwrap();
            let b = fitted.model.predict_samples(&data.test).unwrap();
            assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let ds = series();
        let data = prepare(&ds, 4, 0.8).unwrap();
        let mut model = zero_model(4, data.scaling);
        model.kind = ModelKind::Ffnn;
        assert!(TrainedModel::from_json(&model.to_json()).is_err());
    }

    #[test]
    fn evaluate_matches_comparison() {
        let ds = series();
        let cfg = small_config();
        let cmp = compare_models(&ds, &cfg).unwrap();
        let ffnn = &cmp
            .models
            .iter()
            .find(|f| f.model.kind == ModelKind::Ffnn)
            .unwrap()
            .model;
        let metrics = evaluate_model(ffnn, &ds, cfg.train_fraction).unwrap();
        assert_eq!(metrics, cmp.report.models["ffnn"].metrics);
    }
}
