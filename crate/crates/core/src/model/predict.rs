use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{ForwardOutput, ModelError, SrlModel};
use crate::corpus::{PredicateFrame, Sentence};
use crate::numerics::{argmax, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeOptions {
    /// Restrict each predicate's sense to those sharing its lemma.
    pub lemma_mask: bool,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        DecodeOptions { lemma_mask: true }
    }
}

/// Lemma part of a sense label: everything before the last `.`.
pub fn sense_lemma(sense: &str) -> &str {
    sense.rsplit_once('.').map_or(sense, |(lemma, _)| lemma)
}

impl<R: Real> SrlModel<R> {
    /// 0-based positions whose predicate head prefers "is a predicate".
    pub fn identify_predicates(&self, sentence: &Sentence, language: &str) -> Result<Vec<usize>, ModelError> {
        let out = self.forward_with_predicates(sentence, language, &[])?;
        Ok((0..out.predicate_logits.rows())
            .filter(|&i| out.predicate_logits.argmax_row(i) == Some(1))
            .collect())
    }

    /// Full annotation of `sentence`: predicates, senses and roles.
    pub fn predict(&self, sentence: &Sentence, language: &str, opts: DecodeOptions) -> Result<Sentence, ModelError> {
        let predicates = self.identify_predicates(sentence, language)?;
        let out = self.forward_with_predicates(sentence, language, &predicates)?;
        let frames = self.decode_frames(sentence, &out, opts)?;
        let mut annotated = sentence.without_frames();
        annotated.set_frames(frames);
        Ok(annotated)
    }

    /// Frames for the predicates of `out`, which must come from `sentence`.
    pub fn decode_frames(
        &self,
        sentence: &Sentence,
        out: &ForwardOutput<R>,
        opts: DecodeOptions,
    ) -> Result<Vec<PredicateFrame>, ModelError> {
        let inv = self.inventory(&out.language)?;
        let mut frames = Vec::with_capacity(out.predicates.len());
        for (k, (&q, arg)) in out.predicates.iter().zip(&out.arguments).enumerate() {
            let scores = out.sense_logits.row(k);
            let sense = if opts.lemma_mask {
                let lemma = sentence.tokens[q].lemma.as_str();
                let best = inv
                    .senses
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| sense_lemma(s) == lemma)
                    .fold(None::<(usize, R)>, |best, (j, _)| match best {
                        Some((_, v)) if v >= scores[j] => best,
                        _ => Some((j, scores[j])),
                    });
                match best {
                    Some((j, _)) => inv.senses[j].clone(),
                    None => format!("{lemma}.01"),
                }
            } else {
                argmax(scores).and_then(|j| inv.senses.get(j)).cloned().unwrap_or_else(|| {
                    format!("{}.01", sentence.tokens[q].lemma)
                })
            };
            let mut roles = BTreeMap::new();
            for i in 0..arg.role_logits.rows() {
                if let Some(j) = arg.role_logits.argmax_row(i).filter(|&j| j != 0) {
                    roles.insert(i + 1, inv.roles[j].to_string());
                }
            }
            frames.push(PredicateFrame {
                predicate_index: q + 1,
                sense,
                roles,
            });
        }
        Ok(frames)
    }
}
