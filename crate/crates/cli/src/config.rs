use std::path::{Path, PathBuf};

use lionlstm::forecaster::PipelineConfig;
use lionlstm::lion::{Bounds, LaConfig};
use lionlstm::lstm::GdConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Run configuration as read from the `--config` JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub lag: usize,
    pub hidden: usize,
    pub train_fraction: f64,
    pub folds: usize,
    pub seed: u64,
    pub la: LaSection,
    pub ffnn: GdConfig,
    pub lstm: GdConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LaSection {
    pub n: usize,
    pub nrm: usize,
    pub mutation_rate: f64,
    pub epochs: usize,
    pub bounds: [f64; 2],
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = PipelineConfig::default();
        Self {
            data: None,
            out_dir: PathBuf::from("out"),
            lag: p.lag,
            hidden: p.hidden,
            train_fraction: p.train_fraction,
            folds: p.folds,
            seed: p.seed,
            la: LaSection::default(),
            ffnn: p.ffnn,
            lstm: p.lstm,
        }
    }
}

impl Default for LaSection {
    fn default() -> Self {
        let la = PipelineConfig::default().la;
        Self {
            n: la.n,
            nrm: la.nrm,
            mutation_rate: la.mutation_rate,
            epochs: la.epochs,
            bounds: [la.bounds.low, la.bounds.high],
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.lag == 0 {
            return Err("lag must be at least 1".into());
        }
        if self.hidden == 0 {
            return Err("hidden must be at least 1".into());
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(format!("train_fraction {} is not in (0, 1)", self.train_fraction));
        }
        if self.folds < 2 {
            return Err("folds must be at least 2".into());
        }
        for (name, gd) in [("ffnn", self.ffnn), ("lstm", self.lstm)] {
            if !(gd.learning_rate.is_finite() && gd.learning_rate > 0.0) {
                return Err(format!("{name}.learning_rate must be positive"));
            }
        }
        self.pipeline().la.validate().map_err(|e| e.to_string())
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            lag: self.lag,
            hidden: self.hidden,
            train_fraction: self.train_fraction,
            folds: self.folds,
            seed: self.seed,
            la: LaConfig {
                n: self.la.n,
                nrm: self.la.nrm,
                mutation_rate: self.la.mutation_rate,
                epochs: self.la.epochs,
                bounds: Bounds::new(self.la.bounds[0], self.la.bounds[1]),
                seed: self.seed,
            },
            ffnn: self.ffnn,
            lstm: self.lstm,
        }
    }
}
