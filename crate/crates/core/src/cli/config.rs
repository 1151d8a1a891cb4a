use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::backtest::BacktestConfig;
use crate::error::{Error, Result};
use crate::market::{SampleParams, SynthParams};
use crate::model::{ModelConfig, ModelKind, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    /// A bars CSV file, or a directory of them.
    pub data: Option<PathBuf>,
    pub output: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Image window in days; also sets `model.n`.
    pub n: usize,
    pub horizon: usize,
    pub limit: f64,
    /// Explicit split boundaries. When absent, the fractions below place
    /// the boundaries on sample end-date quantiles.
    pub train_end: Option<NaiveDate>,
    pub val_end: Option<NaiveDate>,
    pub train_frac: f64,
    pub val_frac: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub symbols: usize,
    pub days: usize,
    pub params: SynthParams,
}

/// Everything a command needs, as read from the TOML config file.
///
/// Keys missing from the file take the values of [`RunConfig::default`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// One training run per seed. Each seed also drives data synthesis and
    /// weight initialization.
    pub seeds: Vec<u64>,
    pub paths: Paths,
    pub data: DataConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub backtest: BacktestConfig,
    pub synth: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seeds: vec![0],
            paths: Paths {
                data: None,
                output: PathBuf::from("out"),
            },
            data: DataConfig {
                n: 20,
                horizon: 5,
                limit: 0.10,
                train_end: None,
                val_end: None,
                train_frac: 0.6,
                val_frac: 0.2,
            },
            model: ModelConfig::desk(ModelKind::Smsfr, 20),
            train: TrainConfig::default(),
            backtest: BacktestConfig::default(),
            synth: SynthConfig {
                symbols: 50,
                days: 600,
                params: SynthParams::default(),
            },
        }
    }
}

fn merge(base: &mut toml::Value, overlay: toml::Value) {
    match (base, overlay) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

impl RunConfig {
    /// Parses `text` over the defaults, key by key at every depth.
    pub fn from_toml(text: &str) -> Result<Self> {
        let overlay: toml::Value = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut value = toml::Value::try_from(Self::default()).map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut value, overlay);
        let mut cfg: Self = value.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.sync();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Copies shared settings into the sections that repeat them.
    pub fn sync(&mut self) {
        self.model.n = self.data.n;
        if let Some(&s) = self.seeds.first() {
            self.model.seed = s;
        }
    }

    pub fn sample_params(&self) -> SampleParams {
        SampleParams {
            n: self.data.n,
            horizon: self.data.horizon,
            limit: self.data.limit,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sample_params().validate().map_err(|e| Error::Config(e.to_string()))?;
        self.model.validate()?;
        self.train.validate()?;
        self.backtest.validate()?;
        if let (Some(a), Some(b)) = (self.data.train_end, self.data.val_end) {
            if a >= b {
                return Err(Error::Config(format!("train_end {a} must precede val_end {b}")));
            }
        }
        if self.data.train_end.is_some() != self.data.val_end.is_some() {
            return Err(Error::Config("set both train_end and val_end, or neither".into()));
        }
        if let Some(p) = &self.paths.data {
            if !p.exists() {
                return Err(Error::io(
                    p,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "data path does not exist"),
                ));
            }
        }
        Ok(())
    }

    /// The data path, required by commands that read bars.
    pub fn data_path(&self) -> Result<&Path> {
        self.paths
            .data
            .as_deref()
            .ok_or_else(|| Error::Config("no data path: set paths.data or pass --data".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::from_toml("").unwrap(), {
            let mut c = RunConfig::default();
            c.sync();
            c
        });
    }

    #[test]
    fn partial_sections_keep_other_defaults() {
        let cfg = RunConfig::from_toml("seeds = [3, 4]\n[model]\nlambda = 0.5\n[model.geometry]\nprice_rows = 30\n").unwrap();
        assert_eq!(cfg.seeds, vec![3, 4]);
        assert_eq!(cfg.model.lambda, 0.5);
        assert_eq!(cfg.model.geometry.price_rows, 30);
        assert_eq!(cfg.model.geometry.turnover_rows, RunConfig::default().model.geometry.turnover_rows);
        assert_eq!(cfg.model.msf_channels, RunConfig::default().model.msf_channels);
        assert_eq!(cfg.model.seed, 3);
    }

    #[test]
    fn round_trip_through_toml() {
        let mut cfg = RunConfig::default();
        cfg.data.train_end = NaiveDate::from_ymd_opt(2016, 1, 4);
        cfg.data.val_end = NaiveDate::from_ymd_opt(2016, 6, 1);
        cfg.sync();
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_config_errors() {
        assert!(matches!(RunConfig::from_toml("[model]\nlamda = 1.0\n"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_toml("seeds = \"x\""), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_toml("[[["), Err(Error::Config(_))));
        let cfg = RunConfig::from_toml("[backtest]\nentry_threshold = 1.5\n").unwrap();
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }
}
