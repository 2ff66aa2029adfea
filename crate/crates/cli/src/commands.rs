use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use lionlstm::dataio::{self, TimeSeriesDataset};
use lionlstm::evalkit::{CvSummary, MetricSet};
use lionlstm::forecaster::{self, FutureRainfall, ModelKind, SeriesTable, TrainedModel, MAX_LEAD_TIME};
use lionlstm::lion::Progress;
use lionlstm::synth::{self, SynthConfig, MIN_MONTHS};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct Globals {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub data: Option<PathBuf>,
}

impl Globals {
    fn run_config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(data) = &self.data {
            cfg.data = Some(data.clone());
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataInfo {
    pub path: PathBuf,
    pub sha256: String,
    pub records: usize,
    pub start: dataio::YearMonth,
    pub end: dataio::YearMonth,
}

/// Provenance record written next to every output set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    pub config: RunConfig,
    pub data: DataInfo,
    pub evaluations: BTreeMap<String, u64>,
    pub outputs: Vec<String>,
}

struct LoadedData {
    dataset: TimeSeriesDataset,
    info: DataInfo,
}

fn load_data(cfg: &RunConfig) -> Result<LoadedData, CliError> {
    let path = cfg
        .data
        .clone()
        .ok_or_else(|| CliError::Config("no data file given (use --data or \"data\" in the config)".into()))?;
    let bytes = fs::read(&path).map_err(|e| CliError::io(&path, e))?;
    let dataset = dataio::read_csv(bytes.as_slice()).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let info = DataInfo {
        path,
        sha256: hex::encode(Sha256::digest(&bytes)),
        records: dataset.len(),
        start: dataset.start(),
        end: dataset.end(),
    };
    Ok(LoadedData { dataset, info })
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    text
}

fn write_outputs(dir: &Path, files: &[(String, String)], manifest: Option<(String, Manifest)>) -> Result<(), CliError> {
    for (name, contents) in files {
        write_file(&dir.join(name), contents)?;
    }
    if let Some((name, manifest)) = manifest {
        write_file(&dir.join(name), &to_json(&manifest))?;
    }
    Ok(())
}

fn progress_line(kind: ModelKind) -> impl FnMut(Progress) {
    move |p: Progress| {
        eprintln!(
            "{kind} epoch {} best_rmse {:.6} evaluations {}",
            p.epoch, p.best_fitness, p.evaluations
        )
    }
}

pub fn synth(globals: &Globals, months: usize) -> Result<(), CliError> {
    let out = globals
        .out
        .as_ref()
        .ok_or_else(|| CliError::Config("synth needs --out <file>".into()))?;
    let config = SynthConfig::new(months, globals.seed.unwrap_or(0));
    let dataset = synth::generate(&config)
        .ok_or_else(|| CliError::Config(format!("--months must be at least {MIN_MONTHS}, got {months}")))?;
    let mut bytes = Vec::new();
    dataset
        .write_csv(&mut bytes)
        .map_err(|e| CliError::Data(e.to_string()))?;
    write_file(out, &String::from_utf8(bytes).expect("csv is utf-8"))?;
    eprintln!("wrote {months} months to {}", out.display());
    Ok(())
}

fn trace_csv(kind: ModelKind, trace: &[f64], progress: &[Progress]) -> String {
    let mut out = String::new();
    if kind == ModelKind::LstmLa {
        out.push_str("epoch,best_rmse,evaluations\n");
        for p in progress {
            writeln!(out, "{},{},{}", p.epoch, p.best_fitness, p.evaluations).unwrap();
        }
    } else {
        out.push_str("epoch,train_mse\n");
        for (epoch, loss) in trace.iter().enumerate() {
            writeln!(out, "{epoch},{loss}").unwrap();
        }
    }
    out
}

pub fn train(globals: &Globals, kind: ModelKind) -> Result<(), CliError> {
    let cfg = globals.run_config()?;
    let pipeline = cfg.pipeline();
    let data = load_data(&cfg)?;
    let prepared = forecaster::prepare(&data.dataset, cfg.lag, cfg.train_fraction)?;
    let mut progress = Vec::new();
    let mut log = progress_line(kind);
    let fitted = forecaster::fit(kind, &prepared.train, prepared.scaling, &pipeline, cfg.seed, |p| {
        log(p);
        progress.push(p);
    })?;
    let train_rmse = fitted
        .model
        .training_trace
        .last()
        .map(|&v| if kind == ModelKind::LstmLa { v } else { v.sqrt() });
    if let Some(rmse) = train_rmse {
        eprintln!("{kind} trained: final training rmse {rmse:.6} (normalized)");
    }

    let key = kind.key();
    let files = vec![
        (format!("{key}.model.json"), format!("{}\n", fitted.model.to_json())),
        (
            format!("{key}.trace.csv"),
            trace_csv(kind, &fitted.model.training_trace, &progress),
        ),
    ];
    let manifest = Manifest {
        command: format!("train {key}"),
        seed: cfg.seed,
        evaluations: fitted
            .evaluations
            .map(|n| BTreeMap::from([(key.to_string(), n)]))
            .unwrap_or_default(),
        outputs: files.iter().map(|(name, _)| name.clone()).collect(),
        data: data.info,
        config: cfg.clone(),
    };
    write_outputs(&cfg.out_dir, &files, Some((format!("{key}.manifest.json"), manifest)))?;
    eprintln!("wrote {} model to {}", key, cfg.out_dir.display());
    Ok(())
}

/// `x.model.json` -> `x.manifest.json`.
pub fn manifest_path(model_path: &Path) -> Option<PathBuf> {
    let name = model_path.file_name()?.to_str()?;
    let stem = name.strip_suffix(".model.json")?;
    Some(model_path.with_file_name(format!("{stem}.manifest.json")))
}

fn load_model(path: &Path) -> Result<(TrainedModel, Manifest), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let model = TrainedModel::from_json(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let manifest_file = manifest_path(path)
        .ok_or_else(|| CliError::Config(format!("{}: model files are named <kind>.model.json", path.display())))?;
    let manifest_text = fs::read_to_string(&manifest_file).map_err(|e| CliError::io(&manifest_file, e))?;
    let manifest: Manifest = serde_json::from_str(&manifest_text)
        .map_err(|e| CliError::Data(format!("{}: {e}", manifest_file.display())))?;
    Ok((model, manifest))
}

fn data_for(globals: &Globals, manifest: &Manifest) -> Result<LoadedData, CliError> {
    let cfg = RunConfig {
        data: Some(globals.data.clone().unwrap_or_else(|| manifest.data.path.clone())),
        ..manifest.config.clone()
    };
    load_data(&cfg)
}

#[derive(Debug, Serialize)]
struct EvaluateReport {
    model: String,
    test_samples: usize,
    #[serde(flatten)]
    metrics: MetricSet,
}

pub fn evaluate(globals: &Globals, model_path: &Path) -> Result<(), CliError> {
    let (model, manifest) = load_model(model_path)?;
    let data = data_for(globals, &manifest)?;
    let fraction = manifest.config.train_fraction;
    let metrics = forecaster::evaluate_model(&model, &data.dataset, fraction)?;
    let windows = data.dataset.len() - model.lag;
    let test_samples = windows - dataio::split_point(windows, fraction)?;
    let report = EvaluateReport {
        model: model.kind.key().to_string(),
        test_samples,
        metrics,
    };
    let text = to_json(&report);
    print!("{text}");
    if let Some(dir) = &globals.out {
        write_file(&dir.join(format!("{}.metrics.json", model.kind.key())), &text)?;
    }
    Ok(())
}

pub fn compare(globals: &Globals) -> Result<(), CliError> {
    let cfg = globals.run_config()?;
    let data = load_data(&cfg)?;
    eprintln!("training ffnn, lstm and lstm_la on {} records", data.info.records);
    let comparison = forecaster::compare_models(&data.dataset, &cfg.pipeline())?;
    for (name, report) in &comparison.report.models {
        eprintln!(
            "{name}: rmse {:.4} mae {:.4} accuracy {:.2}%",
            report.metrics.rmse, report.metrics.mae, report.metrics.accuracy_pct
        );
    }
    let files = vec![
        ("compare.json".to_string(), to_json(&comparison.report)),
        ("compare_test.csv".to_string(), comparison.series.to_csv()),
    ];
    let evaluations = comparison
        .models
        .iter()
        .filter_map(|f| f.evaluations.map(|n| (f.model.kind.key().to_string(), n)))
        .collect();
    let manifest = Manifest {
        command: "compare".into(),
        seed: cfg.seed,
        evaluations,
        outputs: files.iter().map(|(name, _)| name.clone()).collect(),
        data: data.info,
        config: cfg.clone(),
    };
    write_outputs(&cfg.out_dir, &files, Some(("compare.manifest.json".into(), manifest)))
}

pub fn crossval(globals: &Globals, kinds: &[ModelKind]) -> Result<(), CliError> {
    let cfg = globals.run_config()?;
    let data = load_data(&cfg)?;
    let kinds = if kinds.is_empty() { &ModelKind::ALL[..] } else { kinds };
    eprintln!("{}-fold cross-validation on {} records", cfg.folds, data.info.records);
    let summaries = forecaster::cross_validate_models(&data.dataset, &cfg.pipeline(), kinds)?;
    let mut csv = String::from("model,fold,accuracy_pct\n");
    for (kind, summary) in &summaries {
        eprintln!(
            "{kind}: median accuracy {:.2}% (q1 {:.2}, q3 {:.2})",
            summary.stats.median, summary.stats.q1, summary.stats.q3
        );
        for (fold, acc) in summary.folds.iter().enumerate() {
            writeln!(csv, "{kind},{fold},{acc}").unwrap();
        }
    }
    let keyed: BTreeMap<&str, &CvSummary> = summaries.iter().map(|(k, s)| (k.key(), s)).collect();
    let files = vec![
        ("crossval.json".to_string(), to_json(&keyed)),
        ("crossval_folds.csv".to_string(), csv),
    ];
    let manifest = Manifest {
        command: "crossval".into(),
        seed: cfg.seed,
        evaluations: BTreeMap::new(),
        outputs: files.iter().map(|(name, _)| name.clone()).collect(),
        data: data.info,
        config: cfg.clone(),
    };
    write_outputs(&cfg.out_dir, &files, Some(("crossval.manifest.json".into(), manifest)))
}

pub fn forecast(globals: &Globals, model_paths: &[PathBuf], horizon: usize) -> Result<(), CliError> {
    if horizon == 0 {
        return Err(CliError::Config("--horizon must be at least 1".into()));
    }
    if horizon > MAX_LEAD_TIME {
        eprintln!(
            "warning: horizon {horizon} exceeds the {MAX_LEAD_TIME}-month lead time; later months are extrapolations"
        );
    }
    let mut results = Vec::new();
    let mut out_dir = globals.out.clone();
    for path in model_paths {
        let (model, manifest) = load_model(path)?;
        let data = data_for(globals, &manifest)?;
        let prepared = forecaster::prepare(&data.dataset, model.lag, manifest.config.train_fraction)?;
        let rainfall = FutureRainfall::climatology(&data.dataset, prepared.scaling_end);
        let result = forecaster::forecast_from(&model, &data.dataset, horizon, &rainfall)?;
        eprintln!("{}: future rainfall from {}", model.kind, result.rainfall_assumption);
        if results.iter().any(|(k, _)| *k == model.kind) {
            return Err(CliError::Config(format!("model kind {} given twice", model.kind)));
        }
        out_dir.get_or_insert_with(|| manifest.config.out_dir.clone());
        results.push((model.kind, result));
    }
    let table = SeriesTable::from_forecasts(&results);
    let dir = out_dir.unwrap_or_else(|| PathBuf::from("out"));
    write_file(&dir.join("forecast.csv"), &table.to_csv())?;
    eprintln!(
        "wrote {horizon}-month forecast to {}",
        dir.join("forecast.csv").display()
    );
    Ok(())
}
