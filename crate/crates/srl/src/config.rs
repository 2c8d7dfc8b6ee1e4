//! Run configuration files.
//!
//! Relative paths inside a config are resolved against the directory
//! holding the config file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use srl_core::corpus::Fraction;
use srl_core::embedder::EmbedderSpec;
use srl_core::model::ModelConfig;
use srl_core::trainer::TrainConfig;

use crate::error::{Error, Result};

pub const DEFAULT_SEED: u64 = 13;

/// Corpus files of one language.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
}

/// Languages of the English-share experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub source_language: String,
    pub target_language: String,
    /// Share of the target training corpus used in every run.
    pub target_fraction: Fraction,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            source_language: "en".into(),
            target_language: "fa".into(),
            target_fraction: Fraction::new(1, 10).expect("valid"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Seed of every random choice; copied into `model.seed` and `train.seed`.
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub embedder: EmbedderSpec,
    /// Corpus files per language code.
    pub data: BTreeMap<String, DataPaths>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Reads, resolves relative paths, applies `overrides` and validates.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_json(&text, path)?;
        config.resolve_paths(path.parent().unwrap_or(Path::new("")));
        config.apply(overrides);
        config.validate(path)?;
        config.check_paths()?;
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for d in self.data.values_mut() {
            for p in [&mut d.train, &mut d.dev, &mut d.test].into_iter().flatten() {
                join(p);
            }
        }
        join(&mut self.output_dir);
        if let EmbedderSpec::PrecomputedCache { paths, .. } = &mut self.embedder {
            for p in paths.values_mut() {
                let mut buf = PathBuf::from(&*p);
                join(&mut buf);
                *p = buf.to_string_lossy().into_owned();
            }
        }
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(seed) = overrides.seed {
            self.seed = seed;
        }
        if let Some(epochs) = overrides.epochs {
            self.train.epochs = epochs;
        }
        if let Some(dir) = &overrides.output_dir {
            self.output_dir = dir.clone();
        }
        self.model.seed = self.seed;
        self.train.seed = self.seed;
    }

    pub fn validate(&self, path: &Path) -> Result<()> {
        let bad = |message: String| {
            Err(Error::Config {
                path: path.to_path_buf(),
                message,
            })
        };
        if let Err(e) = self.train.validate() {
            return bad(e.to_string());
        }
        if !(0.0..1.0).contains(&self.model.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.model.dropout));
        }
        let widths = [self.model.d_e, self.model.hidden, self.model.d_p, self.model.d_s, self.model.d_r];
        if widths.contains(&0) {
            return bad("model widths must be at least 1".into());
        }
        if self.data.is_empty() {
            return bad("no data".into());
        }
        if !self.data.values().any(|d| d.train.is_some()) {
            return bad("no language has a training corpus".into());
        }
        if let Some(s) = &self.sweep {
            let has = |lang: &str, f: fn(&DataPaths) -> bool| self.data.get(lang).is_some_and(f);
            if !has(&s.source_language, |d| d.train.is_some()) {
                return bad(format!("sweep source {:?} needs a train corpus", s.source_language));
            }
            if !has(&s.target_language, |d| d.train.is_some() && d.dev.is_some() && d.test.is_some()) {
                return bad(format!("sweep target {:?} needs train, dev and test corpora", s.target_language));
            }
        }
        Ok(())
    }

    /// Fails on the first referenced input that does not exist.
    pub fn check_paths(&self) -> Result<()> {
        let mut inputs: Vec<PathBuf> = self
            .data
            .values()
            .flat_map(|d| [&d.train, &d.dev, &d.test])
            .flatten()
            .cloned()
            .collect();
        if let EmbedderSpec::PrecomputedCache { paths, .. } = &self.embedder {
            inputs.extend(paths.values().map(PathBuf::from));
        }
        match inputs.into_iter().find(|p| !p.is_file()) {
            Some(p) => Err(Error::io(&p, std::io::Error::from(std::io::ErrorKind::NotFound))),
            None => Ok(()),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}
