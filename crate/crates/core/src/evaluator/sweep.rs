use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::evaluate;
use crate::corpus::{Corpus, Fraction};
use crate::embedder::{EmbedderSpec, EmbeddingCache};
use crate::model::ModelConfig;
use crate::numerics::Real;
use crate::trainer::{build_model, train, TrainConfig, TrainError};

/// Everything one sweep needs besides the list of percentages.
#[derive(Clone, Debug)]
pub struct SweepSetup {
    pub model: ModelConfig,
    pub embedder: EmbedderSpec,
    pub train: TrainConfig,
    /// The high-resource language whose share is swept ("en").
    pub source_language: String,
    /// The low-resource language trained at a fixed share and tested ("fa").
    pub target_language: String,
    pub target_fraction: Fraction,
    pub source_train: Corpus,
    pub target_train: Corpus,
    pub target_dev: Corpus,
    pub target_test: Corpus,
    pub cache: Option<EmbeddingCache>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub english_percentage: u32,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub english_sentences: usize,
    /// Source-language batches over the whole run.
    pub english_batches: usize,
    pub target_sentences: usize,
    pub best_epoch: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub seed: u64,
    pub source_language: String,
    pub target_language: String,
    pub target_fraction: f64,
    pub rows: Vec<SweepRow>,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("sweep failed at {percentage}%: {error}")]
pub struct SweepError {
    /// Rows finished before the failure.
    pub partial: SweepTable,
    pub percentage: u32,
    pub error: TrainError,
}

/// One fresh training run per percentage of the source corpus, each scored
/// on the target test set. 0% trains a target-only model.
pub fn run_sweep<R: Real>(setup: &SweepSetup, percentages: &[u32]) -> Result<SweepTable, SweepError> {
    run_sweep_with_observer::<R>(setup, percentages, |_| {})
}

/// [`run_sweep`] with a callback after every finished row.
pub fn run_sweep_with_observer<R: Real>(
    setup: &SweepSetup,
    percentages: &[u32],
    mut observer: impl FnMut(&SweepRow),
) -> Result<SweepTable, SweepError> {
    let mut table = SweepTable {
        seed: setup.train.seed,
        source_language: setup.source_language.clone(),
        target_language: setup.target_language.clone(),
        target_fraction: setup.target_fraction.as_f64(),
        rows: Vec::new(),
    };
    for &pct in percentages {
        match sweep_row::<R>(setup, pct) {
            Ok(row) => {
                observer(&row);
                table.rows.push(row);
            }
            Err(error) => {
                return Err(SweepError {
                    partial: table,
                    percentage: pct,
                    error,
                })
            }
        }
    }
    Ok(table)
}

fn sweep_row<R: Real>(setup: &SweepSetup, pct: u32) -> Result<SweepRow, TrainError> {
    let fraction =
        Fraction::from_percent(pct).map_err(|_| TrainError::Config(alloc::format!("percentage {pct} above 100")))?;
    let (src, tgt) = (&setup.source_language, &setup.target_language);
    let mut config = setup.train.clone();
    config.fractions.insert(tgt.clone(), setup.target_fraction);
    let mut corpora = BTreeMap::new();
    corpora.insert(tgt.clone(), setup.target_train.clone());
    if pct > 0 {
        config.fractions.insert(src.clone(), fraction);
        corpora.insert(src.clone(), setup.source_train.clone());
    }
    let mut dev = BTreeMap::new();
    dev.insert(tgt.clone(), setup.target_dev.clone());

    let mut model = build_model::<R>(setup.model.clone(), &setup.embedder, &corpora, setup.cache.clone())?;
    let history = train(&mut model, &config, &corpora, &dev)?;
    let (_, report) = evaluate(&model, &setup.target_test, tgt, config.decode)?;
    Ok(SweepRow {
        english_percentage: pct,
        f1: report.f1,
        precision: report.precision,
        recall: report.recall,
        english_sentences: history.train_sentences.get(src).copied().unwrap_or(0),
        english_batches: history.epochs.iter().map(|e| e.batches.get(src).copied().unwrap_or(0)).sum(),
        target_sentences: history.train_sentences.get(tgt).copied().unwrap_or(0),
        best_epoch: history.best_epoch,
    })
}
