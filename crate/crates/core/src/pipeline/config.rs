use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::FitConfig;
use crate::metrics::KlDirection;
use crate::model::{MlpConfig, TrainConfig};
use crate::simulate::SimConfig;
use crate::types::Split;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Baseline,
    McDropout,
    Ensemble,
    Recalibration,
    Distillation,
    Chance,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Baseline,
        Method::McDropout,
        Method::Ensemble,
        Method::Recalibration,
        Method::Distillation,
        Method::Chance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::McDropout => "mc_dropout",
            Method::Ensemble => "ensemble",
            Method::Recalibration => "recalibration",
            Method::Distillation => "distillation",
            Method::Chance => "chance",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s || m.name().replace('_', "-") == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

/// Network and optimizer settings shared by every trained model in a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelOptions {
    pub hidden_dims: Vec<usize>,
    pub dropout_rate: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for ModelOptions {
    fn default() -> Self {
        let m = MlpConfig::new(1, 1);
        let t = TrainConfig::default();
        ModelOptions {
            hidden_dims: m.hidden_dims,
            dropout_rate: m.dropout_rate,
            learning_rate: t.learning_rate,
            epochs: t.epochs,
            batch_size: t.batch_size,
        }
    }
}

impl ModelOptions {
    pub fn mlp(&self, input_dim: usize, n_labels: usize, init_seed: u64) -> MlpConfig {
        MlpConfig {
            input_dim,
            hidden_dims: self.hidden_dims.clone(),
            n_labels,
            dropout_rate: self.dropout_rate,
            init_seed,
        }
    }

    pub fn train(&self, shuffle_seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            shuffle_seed,
            ..Default::default()
        }
    }
}

/// Everything that determines one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub bundle: PathBuf,
    pub out: PathBuf,
    pub method: Method,
    /// Stochastic passes (MC dropout) or members (ensemble).
    pub k: usize,
    pub seeds: Vec<u64>,
    /// Root of every derived random stream.
    pub root_seed: u64,
    pub fit: FitConfig,
    /// Split the temperature is fitted on; `test_s` gives the oracle variant.
    pub fit_split: Split,
    /// Use only the first `n` examples of the fit split.
    pub fit_limit: Option<usize>,
    /// KL orientation used for reporting.
    pub eval_direction: KlDirection,
    pub model: ModelOptions,
    /// When set, the bundle is generated into `bundle` before running.
    pub sim: Option<SimConfig>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            bundle: PathBuf::from("bundle"),
            out: PathBuf::from("out"),
            method: Method::Baseline,
            k: 10,
            seeds: (0..10).collect(),
            root_seed: 0,
            fit: FitConfig::default(),
            fit_split: Split::DevS,
            fit_limit: None,
            eval_direction: KlDirection::GoldVsPred,
            model: ModelOptions::default(),
            sim: None,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        crate::io::read_json(path)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.fit_limit == Some(0) {
            return Err(Error::Config("fit_limit must be positive".into()));
        }
        self.fit.validate()?;
        self.model.mlp(1, 2, 0).validate()?;
        self.model.train(0).validate()?;
        if let Some(sim) = &self.sim {
            sim.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_json_uses_defaults() {
        let cfg: ExperimentConfig =
            serde_json::from_str(r#"{"method":"mc_dropout","k":5,"fit":{"target_type":"hard_onehot"}}"#)
                .unwrap();
        assert_eq!(cfg.method, Method::McDropout);
        assert_eq!(cfg.k, 5);
        assert_eq!(cfg.seeds.len(), 10);
        assert_eq!(cfg.fit.log10_bounds, (-2.0, 2.0));
        assert_eq!(cfg.model.hidden_dims, vec![32]);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn method_names() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!("mc-dropout".parse::<Method>().unwrap(), Method::McDropout);
        assert!("bayes".parse::<Method>().is_err());
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = ExperimentConfig {
            k: 0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        cfg.k = 1;
        cfg.seeds.clear();
        assert!(cfg.validate().is_err());
    }
}
