use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::mem;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Sentence, NULL_ROLE};
use crate::model::{ForwardOutput, ModelError, OutputGrads, SrlModel};
use crate::numerics::{grad_check, softmax_cross_entropy, GradCheckError, GradCheckReport, ParamStore, Real, Tensor};

/// Mean cross-entropies of the three tasks for one language.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskLosses {
    pub predicate: f64,
    pub sense: f64,
    pub role: f64,
}

impl TaskLosses {
    pub fn sum(&self) -> f64 {
        self.predicate + self.sense + self.role
    }
}

/// `Σ_l w_l · (ℒp + ℒs + ℒr)`; languages without a weight count with 1.
pub fn total_loss(components: &BTreeMap<String, TaskLosses>, weights: &BTreeMap<String, f64>) -> f64 {
    components
        .iter()
        .map(|(lang, c)| language_weight(weights, lang) * c.sum())
        .sum()
}

pub(crate) fn language_weight(weights: &BTreeMap<String, f64>, language: &str) -> f64 {
    weights.get(language).copied().unwrap_or(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub components: BTreeMap<String, TaskLosses>,
}

/// Gold targets of one sentence in the model's label spaces.
struct Targets {
    predicates: Vec<usize>,
    senses: Vec<usize>,
    roles: Vec<Vec<usize>>,
}

fn targets<R: Real>(model: &SrlModel<R>, sentence: &Sentence, language: &str) -> Result<Targets, ModelError> {
    let inv = model.inventory(language)?;
    let predicates = sentence.tokens.iter().map(|t| usize::from(t.fill_pred)).collect();
    let mut senses = Vec::with_capacity(sentence.frames.len());
    let mut roles = Vec::with_capacity(sentence.frames.len());
    for f in &sentence.frames {
        senses.push(inv.sense_index(&f.sense).ok_or_else(|| ModelError::UnknownSense {
            language: language.into(),
            sense: f.sense.clone(),
        })?);
        let mut row = alloc::vec![0; sentence.len()];
        for (&i, role) in &f.roles {
            if role == NULL_ROLE {
                continue;
            }
            let idx = inv.role_index(role).ok_or_else(|| ModelError::UnknownRole {
                language: language.into(),
                role: role.clone(),
            })?;
            if let Some(slot) = i.checked_sub(1).and_then(|k| row.get_mut(k)) {
                *slot = idx;
            }
        }
        roles.push(row);
    }
    Ok(Targets {
        predicates,
        senses,
        roles,
    })
}

/// Mean cross-entropy over the row-concatenation of `parts`; returns the
/// loss and each part's slice of the gradient.
fn pooled_ce<R: Real>(parts: &[&Tensor<R>], targets: &[usize], cols: usize) -> Result<(R, Vec<Tensor<R>>), ModelError> {
    let logits = Tensor::stack_rows(parts, cols);
    let mask = alloc::vec![true; targets.len()];
    let (loss, grad) = softmax_cross_entropy(&logits, targets, &mask)?;
    let mut out = Vec::with_capacity(parts.len());
    let mut start = 0;
    for p in parts {
        let rows: Vec<usize> = (start..start + p.rows()).collect();
        out.push(Tensor::matrix(p.rows(), cols, grad.select_rows(&rows).into_data()));
        start += p.rows();
    }
    Ok((loss, out))
}

/// Evaluates the multi-task objective over `sentences` (teacher-forced on
/// gold predicates) and, when `accumulate` is set, adds its gradient to the
/// model's parameter gradients.
///
/// Within each language the three losses are means over all rows of all
/// its sentences: every token for predicate identification, every gold
/// predicate for sense, every (gold predicate, token) pair for roles.
pub fn objective<R: Real, G: Rng>(
    model: &mut SrlModel<R>,
    sentences: &[&Sentence],
    weights: &BTreeMap<String, f64>,
    accumulate: bool,
    mut dropout: Option<&mut G>,
) -> Result<(R, LossBreakdown), ModelError> {
    let mut by_language: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (k, s) in sentences.iter().enumerate() {
        by_language.entry(s.language.as_str()).or_default().push(k);
    }
    let mut total = R::zero();
    let mut components = BTreeMap::new();
    for (language, members) in by_language {
        let mut outs: Vec<ForwardOutput<R>> = Vec::with_capacity(members.len());
        let mut gold = Vec::with_capacity(members.len());
        for &k in &members {
            let s = sentences[k];
            gold.push(targets(model, s, language)?);
            outs.push(match dropout.as_deref_mut() {
                Some(rng) => model.forward_training_with_dropout(s, language, rng)?,
                None => model.forward_training(s, language)?,
            });
        }
        let inv = model.inventory(language)?;
        let (n_senses, n_roles) = (inv.senses.len(), inv.roles.len());

        let pred_parts: Vec<&Tensor<R>> = outs.iter().map(|o| &o.predicate_logits).collect();
        let pred_targets: Vec<usize> = gold.iter().flat_map(|g| g.predicates.iter().copied()).collect();
        let (lp, gp) = pooled_ce(&pred_parts, &pred_targets, 2)?;

        let sense_parts: Vec<&Tensor<R>> = outs.iter().map(|o| &o.sense_logits).collect();
        let sense_targets: Vec<usize> = gold.iter().flat_map(|g| g.senses.iter().copied()).collect();
        let (ls, gs) = pooled_ce(&sense_parts, &sense_targets, n_senses)?;

        let role_parts: Vec<&Tensor<R>> = outs
            .iter()
            .flat_map(|o| o.arguments.iter().map(|a| &a.role_logits))
            .collect();
        let role_targets: Vec<usize> = gold
            .iter()
            .flat_map(|g| g.roles.iter().flat_map(|r| r.iter().copied()))
            .collect();
        let (lr, mut gr) = pooled_ce(&role_parts, &role_targets, n_roles)?;

        let w = R::of(language_weight(weights, language));
        total += w * (lp + ls + lr);
        components.insert(
            String::from(language),
            TaskLosses {
                predicate: lp.as_f64(),
                sense: ls.as_f64(),
                role: lr.as_f64(),
            },
        );

        if accumulate {
            let scale = |t: Tensor<R>| t.map(|v| v * w);
            let mut role_grads = gr.drain(..);
            for ((&k, out), (dp, ds)) in members.iter().zip(&outs).zip(gp.into_iter().zip(gs)) {
                let grads = OutputGrads {
                    predicate_logits: scale(dp),
                    sense_logits: scale(ds),
                    role_logits: out
                        .arguments
                        .iter()
                        .map(|_| scale(role_grads.next().expect("one gradient per role matrix")))
                        .collect(),
                };
                model.backward(sentences[k], out, &grads)?;
            }
        }
    }
    let breakdown = LossBreakdown {
        total: total.as_f64(),
        components,
    };
    Ok((total, breakdown))
}

/// Finite-difference check of the full objective over `sentences`.
pub fn model_grad_check<R: Real>(
    model: &mut SrlModel<R>,
    sentences: &[&Sentence],
    eps: f64,
) -> Result<GradCheckReport, GradCheckError<ModelError>> {
    let weights = BTreeMap::new();
    let mut store = mem::take(model.params_mut());
    let result = grad_check(&mut store, eps, |store: &mut ParamStore<R>| {
        mem::swap(model.params_mut(), store);
        let r = objective::<R, rand_chacha::ChaCha8Rng>(model, sentences, &weights, true, None);
        mem::swap(model.params_mut(), store);
        r.map(|(loss, _)| loss)
    });
    *model.params_mut() = store;
    result
}
