//! Labeled semantic-dependency scoring.
//!
//! Every frame contributes one sense item `(q, sense)` and one role item
//! `(q, a, role)` per argument. Precision and recall are micro-averaged over
//! all sentences. A predicted predicate at a non-gold position is simply an
//! unmatched item, so predicate-identification errors cost precision.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Sentence};
use crate::model::{DecodeOptions, ModelError, SrlModel};
use crate::numerics::Real;

mod report;
mod sweep;

pub use report::{render_metrics, render_sweep, ReportFormat, SWEEP_HEADER};
pub use sweep::{run_sweep, run_sweep_with_observer, SweepError, SweepRow, SweepSetup, SweepTable};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ScoredItem {
    Sense { predicate: usize, sense: String },
    Role { predicate: usize, argument: usize, role: String },
}

/// All items of one sentence; indices are 1-based token positions.
pub fn extract_items(sentence: &Sentence) -> BTreeSet<ScoredItem> {
    let mut items = BTreeSet::new();
    for f in &sentence.frames {
        items.insert(ScoredItem::Sense {
            predicate: f.predicate_index,
            sense: f.sense.clone(),
        });
        for (&argument, role) in &f.roles {
            items.insert(ScoredItem::Role {
                predicate: f.predicate_index,
                argument,
                role: role.clone(),
            });
        }
    }
    items
}

/// Harmonic mean of two percentages; 0 when both are 0.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// `100 · num / den`, with `0/0 = 0`.
fn percent(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub gold: usize,
    pub predicted: usize,
    pub matched: usize,
}

impl Counts {
    fn add(&mut self, gold: usize, predicted: usize, matched: usize) {
        self.gold += gold;
        self.predicted += predicted;
        self.matched += matched;
    }
}

/// Precision, recall and F1 in percent, with the counts behind them.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub counts: Counts,
}

impl Prf {
    pub fn from_counts(counts: Counts) -> Self {
        let precision = percent(counts.matched, counts.predicted);
        let recall = percent(counts.matched, counts.gold);
        Prf {
            precision,
            recall,
            f1: f1(precision, recall),
            counts,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Labeled semantic score over sense and role items.
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub counts: Counts,
    /// Unlabeled predicate positions.
    pub predicate_identification: Prf,
    /// Percentage of correctly identified predicates with the gold sense.
    pub sense_accuracy: f64,
    /// Role items only.
    pub roles: Prf,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum AlignmentError {
    #[error("gold has {gold} sentences, prediction has {predicted}")]
    SentenceCount { gold: usize, predicted: usize },
    #[error("sentence {index}: gold id {gold:?}, predicted id {predicted:?}")]
    Id { index: usize, gold: String, predicted: String },
    #[error("sentence {id:?}: gold has {gold} tokens, prediction has {predicted}")]
    TokenCount { id: String, gold: usize, predicted: usize },
}

/// Checks that `pred` annotates the same sentences as `gold`.
pub fn check_alignment(gold: &Corpus, pred: &Corpus) -> Result<(), AlignmentError> {
    if gold.len() != pred.len() {
        return Err(AlignmentError::SentenceCount {
            gold: gold.len(),
            predicted: pred.len(),
        });
    }
    for (index, (g, p)) in gold.sentences.iter().zip(&pred.sentences).enumerate() {
        if g.id != p.id {
            return Err(AlignmentError::Id {
                index,
                gold: g.id.clone(),
                predicted: p.id.clone(),
            });
        }
        if g.len() != p.len() {
            return Err(AlignmentError::TokenCount {
                id: g.id.clone(),
                gold: g.len(),
                predicted: p.len(),
            });
        }
    }
    Ok(())
}

pub fn score(gold: &Corpus, pred: &Corpus) -> Result<MetricsReport, AlignmentError> {
    check_alignment(gold, pred)?;
    let mut all = Counts::default();
    let mut roles = Counts::default();
    let mut predicates = Counts::default();
    let mut sense_correct = 0;
    for (g, p) in gold.sentences.iter().zip(&pred.sentences) {
        let gi = extract_items(g);
        let pi = extract_items(p);
        let matched = gi.intersection(&pi).count();
        all.add(gi.len(), pi.len(), matched);
        let is_role = |i: &&ScoredItem| matches!(i, ScoredItem::Role { .. });
        roles.add(
            gi.iter().filter(is_role).count(),
            pi.iter().filter(is_role).count(),
            gi.intersection(&pi).filter(is_role).count(),
        );
        let gs: BTreeMap<usize, &str> = g.frames.iter().map(|f| (f.predicate_index, f.sense.as_str())).collect();
        let ps: BTreeMap<usize, &str> = p.frames.iter().map(|f| (f.predicate_index, f.sense.as_str())).collect();
        let mut hit = 0;
        for (q, sense) in &ps {
            if let Some(gold_sense) = gs.get(q) {
                hit += 1;
                if gold_sense == sense {
                    sense_correct += 1;
                }
            }
        }
        predicates.add(gs.len(), ps.len(), hit);
    }
    let overall = Prf::from_counts(all);
    Ok(MetricsReport {
        precision: overall.precision,
        recall: overall.recall,
        f1: overall.f1,
        counts: all,
        predicate_identification: Prf::from_counts(predicates),
        sense_accuracy: percent(sense_correct, predicates.matched),
        roles: Prf::from_counts(roles),
    })
}

/// Annotates every sentence of `corpus` from scratch (its frames are ignored).
pub fn predict_corpus<R: Real>(
    model: &SrlModel<R>,
    corpus: &Corpus,
    language: &str,
    decode: DecodeOptions,
) -> Result<Corpus, ModelError> {
    let sentences = corpus
        .sentences
        .iter()
        .map(|s| model.predict(&s.without_frames(), language, decode))
        .collect::<Result<_, _>>()?;
    Ok(Corpus {
        language: corpus.language.clone(),
        sentences,
    })
}

/// Predicts `gold` end to end and scores the result against it.
pub fn evaluate<R: Real>(
    model: &SrlModel<R>,
    gold: &Corpus,
    language: &str,
    decode: DecodeOptions,
) -> Result<(Corpus, MetricsReport), ModelError> {
    let pred = predict_corpus(model, gold, language, decode)?;
    let report = score(gold, &pred).expect("predictions keep ids and token counts");
    Ok((pred, report))
}
