//! Multi-task, multi-language training.
//!
//! Each optimizer step sees one homogeneous-language [`Batch`]. The shared
//! encoders therefore receive gradients from every language across steps,
//! while each language's decoders only see their own batches.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{build_inventory, sample_fraction, Corpus, CorpusError, Fraction, Sentence};
use crate::embedder::{lookup_vocabulary, EmbedderSpec, EmbeddingCache};
use crate::evaluator::evaluate;
use crate::model::{DecodeOptions, ModelConfig, ModelError, SrlModel};
use crate::numerics::{AdamW, AdamWConfig, Precision, Real};

mod batch;
mod freeze;
mod objective;

pub use batch::{make_batches, Batch};
pub use freeze::{apply_freeze, FreezePolicy, PARAMETER_ROOTS};
pub use objective::{model_grad_check, objective, total_loss, LossBreakdown, TaskLosses};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error("no training sentences")]
    NoTrainingData,
    #[error("freeze prefix {0:?} matches no parameter")]
    UnresolvedPrefix(String),
    #[error("non-finite loss at epoch {epoch}, batch {batch} ({language}, first sentence {first_sentence:?})")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        language: String,
        first_sentence: String,
    },
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Which predicates condition the argument encoder during training.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TeacherForcing {
    /// Gold predicate positions.
    #[default]
    Gold,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Stop after this many epochs without a better dev score; 0 disables.
    pub patience: usize,
    pub seed: u64,
    /// Loss weight per language; missing languages weigh 1.
    pub language_weights: BTreeMap<String, f64>,
    /// Weight of each language's dev F1 in model selection; missing
    /// languages weigh 1.
    pub selection_weights: BTreeMap<String, f64>,
    /// Fraction of each language's training corpus to use; missing means all.
    pub fractions: BTreeMap<String, Fraction>,
    pub freeze: FreezePolicy,
    /// Global gradient-norm clip; off when absent.
    pub grad_clip: Option<f64>,
    pub teacher_forcing: TeacherForcing,
    pub precision: Precision,
    /// Decoding used for dev evaluation.
    pub decode: DecodeOptions,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamWConfig::default();
        TrainConfig {
            epochs: 30,
            batch_size: 16,
            learning_rate: adam.learning_rate,
            weight_decay: adam.weight_decay,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
            patience: 5,
            seed: 13,
            language_weights: BTreeMap::new(),
            selection_weights: BTreeMap::new(),
            fractions: BTreeMap::new(),
            freeze: FreezePolicy::default(),
            grad_clip: None,
            teacher_forcing: TeacherForcing::Gold,
            precision: Precision::Standard,
            decode: DecodeOptions::default(),
        }
    }
}

impl TrainConfig {
    pub fn optimizer(&self) -> AdamWConfig {
        AdamWConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            weight_decay: self.weight_decay,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |msg: String| Err(TrainError::Config(msg));
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(alloc::format!("learning_rate {} must be positive", self.learning_rate));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad(alloc::format!("weight_decay {} must be non-negative", self.weight_decay));
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2) && self.epsilon > 0.0) {
            return bad("betas must lie in [0, 1) and epsilon be positive".into());
        }
        for (kind, map) in [("language", &self.language_weights), ("selection", &self.selection_weights)] {
            if let Some((lang, w)) = map.iter().find(|(_, w)| !(**w >= 0.0 && w.is_finite())) {
                return bad(alloc::format!("{kind} weight {w} for {lang:?} must be non-negative"));
            }
        }
        if let Some(c) = self.grad_clip {
            if !(c > 0.0 && c.is_finite()) {
                return bad(alloc::format!("grad_clip {c} must be positive"));
            }
        }
        Ok(())
    }
}

/// Inventories from every non-empty training corpus and a freshly
/// initialized model over them. An empty lookup vocabulary is filled from
/// the training forms.
pub fn build_model<R: Real>(
    config: ModelConfig,
    embedder: &EmbedderSpec,
    train: &BTreeMap<String, Corpus>,
    cache: Option<EmbeddingCache>,
) -> Result<SrlModel<R>, TrainError> {
    let corpora: Vec<&Corpus> = train.values().filter(|c| !c.is_empty()).collect();
    if corpora.is_empty() {
        return Err(TrainError::NoTrainingData);
    }
    let inventories = corpora.iter().map(|c| build_inventory(c)).collect::<Result<Vec<_>, _>>()?;
    let mut spec = embedder.clone();
    if let EmbedderSpec::TrainableLookup { vocabulary, .. } = &mut spec {
        if vocabulary.is_empty() {
            *vocabulary = lookup_vocabulary(corpora.iter().copied());
        }
    }
    Ok(SrlModel::new(config, &spec, &inventories, cache)?)
}

/// Freeze policy actually applied: the configured one, plus the provider
/// when it is a lookup table marked non-trainable.
pub fn effective_freeze<R: Real>(model: &SrlModel<R>, policy: &FreezePolicy) -> FreezePolicy {
    match model.embedder().spec() {
        EmbedderSpec::TrainableLookup { trainable: false, .. } => policy.clone().with("embedder."),
        _ => policy.clone(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-batch task losses per language.
    pub losses: BTreeMap<String, TaskLosses>,
    /// Mean per-batch weighted objective.
    pub total_loss: f64,
    pub batches: BTreeMap<String, usize>,
    pub dev_f1: BTreeMap<String, f64>,
    /// Weighted mean dev F1; absent without dev data.
    pub selection: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub seed: u64,
    pub train_sentences: BTreeMap<String, usize>,
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters the model holds after training.
    pub best_epoch: Option<usize>,
    pub best_selection: Option<f64>,
    pub stopped_early: bool,
}

/// Applies `config.fractions` to the training corpora.
pub fn sampled_corpora(train: &BTreeMap<String, Corpus>, config: &TrainConfig) -> BTreeMap<String, Corpus> {
    train
        .iter()
        .map(|(lang, c)| {
            let c = match config.fractions.get(lang) {
                Some(&f) => sample_fraction(c, f, config.seed),
                None => c.clone(),
            };
            (lang.clone(), c)
        })
        .collect()
}

fn selection_score(dev_f1: &BTreeMap<String, f64>, weights: &BTreeMap<String, f64>) -> Option<f64> {
    let (mut sum, mut norm) = (0.0, 0.0);
    for (lang, f1) in dev_f1 {
        let w = weights.get(lang).copied().unwrap_or(1.0);
        sum += w * f1;
        norm += w;
    }
    if dev_f1.is_empty() {
        None
    } else if norm == 0.0 {
        Some(0.0)
    } else {
        Some(sum / norm)
    }
}

/// Trains `model` in place.
///
/// Every epoch runs the batch loop, then scores each dev corpus whose
/// language the model knows. The parameters of the epoch with the best
/// selection score are restored at the end. Without dev data the final
/// parameters are kept.
pub fn train<R: Real>(
    model: &mut SrlModel<R>,
    config: &TrainConfig,
    train: &BTreeMap<String, Corpus>,
    dev: &BTreeMap<String, Corpus>,
) -> Result<TrainHistory, TrainError> {
    train_with_observer(model, config, train, dev, |_| {})
}

/// [`train`] with a callback after every epoch.
pub fn train_with_observer<R: Real>(
    model: &mut SrlModel<R>,
    config: &TrainConfig,
    train: &BTreeMap<String, Corpus>,
    dev: &BTreeMap<String, Corpus>,
    mut observer: impl FnMut(&EpochRecord),
) -> Result<TrainHistory, TrainError> {
    config.validate()?;
    let corpora = sampled_corpora(train, config);
    for lang in corpora.keys() {
        if !corpora[lang].is_empty() && !model.has_language(lang) {
            return Err(ModelError::UnknownLanguage(lang.clone()).into());
        }
    }
    let policy = effective_freeze(model, &config.freeze);
    apply_freeze(model, &policy)?;
    let mut optimizer = AdamW::new(config.optimizer(), model.params());
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_d20b);
    let use_dropout = model.config().dropout > 0.0;

    let mut history = TrainHistory {
        seed: config.seed,
        train_sentences: corpora.iter().map(|(l, c)| (l.clone(), c.len())).collect(),
        ..TrainHistory::default()
    };
    let mut best_values = None;
    let mut stall = 0;
    for epoch in 1..=config.epochs {
        let batches = make_batches(&corpora, config.batch_size, config.seed.wrapping_add(epoch as u64))?;
        let mut sums: BTreeMap<String, TaskLosses> = BTreeMap::new();
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        let mut total = 0.0;
        for (index, batch) in batches.iter().enumerate() {
            let corpus = &corpora[&batch.language];
            let sentences: Vec<&Sentence> = batch.sentences.iter().map(|&i| &corpus.sentences[i]).collect();
            model.params_mut().zero_grads();
            let rng = if use_dropout { Some(&mut dropout_rng) } else { None };
            let (loss, breakdown) = objective(model, &sentences, &config.language_weights, true, rng)?;
            if !loss.is_finite() {
                return Err(TrainError::NonFiniteLoss {
                    epoch,
                    batch: index,
                    language: batch.language.clone(),
                    first_sentence: sentences.first().map(|s| s.id.clone()).unwrap_or_default(),
                });
            }
            if let Some(clip) = config.grad_clip {
                let norm = model.params().grad_norm().as_f64();
                if norm > clip {
                    model.params_mut().scale_grads(R::of(clip / norm));
                }
            }
            optimizer.step(model.params_mut());
            total += breakdown.total;
            for (lang, c) in breakdown.components {
                let s = sums.entry(lang.clone()).or_default();
                s.predicate += c.predicate;
                s.sense += c.sense;
                s.role += c.role;
                *counts.entry(lang).or_default() += 1;
            }
        }
        let losses = sums
            .into_iter()
            .map(|(lang, s)| {
                let n = counts[&lang] as f64;
                let mean = TaskLosses {
                    predicate: s.predicate / n,
                    sense: s.sense / n,
                    role: s.role / n,
                };
                (lang, mean)
            })
            .collect();

        let mut dev_f1 = BTreeMap::new();
        for (lang, corpus) in dev {
            if model.has_language(lang) && !corpus.is_empty() {
                let (_, report) = evaluate(model, corpus, lang, config.decode)?;
                dev_f1.insert(lang.clone(), report.f1);
            }
        }
        let selection = selection_score(&dev_f1, &config.selection_weights);
        let record = EpochRecord {
            epoch,
            losses,
            total_loss: total / batches.len() as f64,
            batches: counts,
            dev_f1,
            selection,
        };
        observer(&record);
        history.epochs.push(record);

        match selection {
            Some(score) if history.best_selection.is_none_or(|b| score > b) => {
                history.best_selection = Some(score);
                history.best_epoch = Some(epoch);
                best_values = Some(model.params().values());
                stall = 0;
            }
            Some(_) => stall += 1,
            None => history.best_epoch = Some(epoch),
        }
        if config.patience > 0 && stall >= config.patience {
            history.stopped_early = epoch < config.epochs;
            break;
        }
    }
    if let Some(values) = best_values {
        model.params_mut().restore_values(values);
    }
    Ok(history)
}

/// Fit on the training data itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetrics {
    /// Token-level accuracy of the predicate head.
    pub predicate_accuracy: f64,
    pub role_f1: f64,
    pub f1: f64,
}

pub fn training_metrics<R: Real>(
    model: &SrlModel<R>,
    corpus: &Corpus,
    language: &str,
    decode: DecodeOptions,
) -> Result<TrainingMetrics, ModelError> {
    let (mut correct, mut tokens) = (0usize, 0usize);
    for s in &corpus.sentences {
        let out = model.forward_with_predicates(s, language, &[])?;
        for (i, t) in s.tokens.iter().enumerate() {
            tokens += 1;
            correct += usize::from(out.predicate_logits.argmax_row(i) == Some(usize::from(t.fill_pred)));
        }
    }
    let (_, report) = evaluate(model, corpus, language, decode)?;
    Ok(TrainingMetrics {
        predicate_accuracy: if tokens == 0 { 0.0 } else { correct as f64 / tokens as f64 },
        role_f1: report.roles.f1 / 100.0,
        f1: report.f1 / 100.0,
    })
}

#[cfg(test)]
mod tests;
