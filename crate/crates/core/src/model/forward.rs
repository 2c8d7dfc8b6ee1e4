use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{ModelError, SrlModel};
use crate::corpus::Sentence;
use crate::numerics::{Real, StackCache, SwishLinearCache, Tensor};

/// Role scores for one predicate plus the activations that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct ArgumentOutput<R> {
    /// 0-based token position of the predicate.
    pub predicate: usize,
    pub a: Tensor<R>,
    pub r: Tensor<R>,
    /// `n × |roles|`.
    pub role_logits: Tensor<R>,
    tape: ArgumentTape<R>,
}

#[derive(Clone, Debug, PartialEq)]
struct ArgumentTape<R> {
    stack: StackCache<R>,
    role: SwishLinearCache<R>,
    r_mask: Option<Tensor<R>>,
}

/// Everything a forward pass computes for one sentence.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardOutput<R> {
    pub language: String,
    pub h: Tensor<R>,
    pub e: Tensor<R>,
    pub t: Tensor<R>,
    pub p: Tensor<R>,
    pub s: Tensor<R>,
    /// `n × 2`; column 1 scores "is a predicate".
    pub predicate_logits: Tensor<R>,
    /// 0-based predicate positions the sense and role outputs refer to.
    pub predicates: Vec<usize>,
    /// One `|senses|` row per predicate.
    pub sense_logits: Tensor<R>,
    pub arguments: Vec<ArgumentOutput<R>>,
    tape: SentenceTape<R>,
}

#[derive(Clone, Debug, PartialEq)]
struct SentenceTape<R> {
    projection: SwishLinearCache<R>,
    e_mask: Option<Tensor<R>>,
    stack: StackCache<R>,
    predicate: SwishLinearCache<R>,
    p_mask: Option<Tensor<R>>,
    sense: SwishLinearCache<R>,
    s_mask: Option<Tensor<R>>,
}

/// Upstream gradients for the logits of a [`ForwardOutput`].
#[derive(Clone, Debug, PartialEq)]
pub struct OutputGrads<R> {
    pub predicate_logits: Tensor<R>,
    pub sense_logits: Tensor<R>,
    pub role_logits: Vec<Tensor<R>>,
}

impl<R: Real> OutputGrads<R> {
    pub fn zeros_like(out: &ForwardOutput<R>) -> Self {
        OutputGrads {
            predicate_logits: Tensor::zeros(out.predicate_logits.shape()),
            sense_logits: Tensor::zeros(out.sense_logits.shape()),
            role_logits: out
                .arguments
                .iter()
                .map(|a| Tensor::zeros(a.role_logits.shape()))
                .collect(),
        }
    }
}

/// Inverted-dropout mask, or `None` when dropout is off.
fn dropout_mask<R: Real, G: Rng>(rate: f64, shape: &[usize], rng: Option<&mut G>) -> Option<Tensor<R>> {
    let rng = rng?;
    if rate <= 0.0 {
        return None;
    }
    let keep = R::of(1.0 / (1.0 - rate));
    let mut m = Tensor::zeros(shape);
    for v in m.data_mut() {
        if rng.gen::<f64>() >= rate {
            *v = keep;
        }
    }
    Some(m)
}

fn apply_mask<R: Real>(x: &mut Tensor<R>, mask: &Option<Tensor<R>>) {
    if let Some(m) = mask {
        for (v, &k) in x.data_mut().iter_mut().zip(m.data()) {
            *v *= k;
        }
    }
}

impl<R: Real> SrlModel<R> {
    /// Universal sentence encoder: `e ↦ (t, p, s)`.
    pub fn encode_sentence(&self, e: &Tensor<R>) -> Result<(Tensor<R>, Tensor<R>, Tensor<R>), ModelError> {
        let (t, _) = self.sentence_encoder.forward(&self.params, e)?;
        let (p, _) = self.predicate_repr.forward(&self.params, &t)?;
        let (s, _) = self.sense_repr.forward(&self.params, &t)?;
        Ok((t, p, s))
    }

    /// Universal predicate-argument encoder for the predicate at 0-based
    /// position `predicate`: `t ↦ (a, r)`.
    pub fn encode_predicate_args(&self, t: &Tensor<R>, predicate: usize) -> Result<(Tensor<R>, Tensor<R>), ModelError> {
        let arg = self.argument_forward::<ChaCha8Rng>(t, predicate, None)?;
        Ok((arg.a, arg.r))
    }

    /// Base rows `t_q ⊕ t_i` of the predicate-argument encoder.
    pub fn argument_base(&self, t: &Tensor<R>, predicate: usize) -> Result<Tensor<R>, ModelError> {
        let n = t.rows();
        if predicate >= n {
            return Err(ModelError::PredicateOutOfRange {
                index: predicate,
                tokens: n,
            });
        }
        let w = t.cols();
        let tq = t.row(predicate);
        let mut data = Vec::with_capacity(n * 2 * w);
        for i in 0..n {
            data.extend_from_slice(tq);
            data.extend_from_slice(t.row(i));
        }
        Ok(Tensor::matrix(n, 2 * w, data))
    }

    /// Language-specific affine heads applied to every row of `p`, `s`, `r`.
    pub fn decode_heads(
        &self,
        p: &Tensor<R>,
        s: &Tensor<R>,
        r: &Tensor<R>,
        language: &str,
    ) -> Result<(Tensor<R>, Tensor<R>, Tensor<R>), ModelError> {
        let dec = self.decoder(language)?;
        Ok((
            dec.predicate.forward(&self.params, p)?,
            dec.sense.forward(&self.params, s)?,
            dec.role.forward(&self.params, r)?,
        ))
    }

    fn argument_forward<G: Rng>(
        &self,
        t: &Tensor<R>,
        predicate: usize,
        rng: Option<&mut G>,
    ) -> Result<ArgumentOutput<R>, ModelError> {
        let base = self.argument_base(t, predicate)?;
        let (a, stack) = self.argument_encoder.forward(&self.params, &base)?;
        let (mut r, role) = self.role_repr.forward(&self.params, &a)?;
        let r_mask = dropout_mask(self.config.dropout, r.shape(), rng);
        apply_mask(&mut r, &r_mask);
        Ok(ArgumentOutput {
            predicate,
            a,
            r,
            role_logits: Tensor::zeros(&[0, 0]),
            tape: ArgumentTape {
                stack,
                role,
                r_mask,
            },
        })
    }

    /// Full forward pass with the sense and role heads evaluated at the
    /// given 0-based predicate positions.
    pub fn forward_with_predicates(
        &self,
        sentence: &Sentence,
        language: &str,
        predicates: &[usize],
    ) -> Result<ForwardOutput<R>, ModelError> {
        self.forward_impl::<ChaCha8Rng>(sentence, language, predicates, None)
    }

    /// Teacher-forced forward pass over the sentence's gold predicates.
    pub fn forward_training(&self, sentence: &Sentence, language: &str) -> Result<ForwardOutput<R>, ModelError> {
        let predicates = self.gold_predicates(sentence)?;
        self.forward_impl::<ChaCha8Rng>(sentence, language, &predicates, None)
    }

    /// [`forward_training`](Self::forward_training) with dropout masks drawn from `rng`.
    pub fn forward_training_with_dropout(
        &self,
        sentence: &Sentence,
        language: &str,
        rng: &mut impl Rng,
    ) -> Result<ForwardOutput<R>, ModelError> {
        let predicates = self.gold_predicates(sentence)?;
        self.forward_impl(sentence, language, &predicates, Some(rng))
    }

    fn gold_predicates(&self, sentence: &Sentence) -> Result<Vec<usize>, ModelError> {
        sentence
            .frames
            .iter()
            .map(|f| {
                f.predicate_index
                    .checked_sub(1)
                    .filter(|&i| i < sentence.len())
                    .ok_or(ModelError::PredicateOutOfRange {
                        index: f.predicate_index,
                        tokens: sentence.len(),
                    })
            })
            .collect()
    }

    fn forward_impl<G: Rng>(
        &self,
        sentence: &Sentence,
        language: &str,
        predicates: &[usize],
        mut rng: Option<&mut G>,
    ) -> Result<ForwardOutput<R>, ModelError> {
        let dec = self.decoder(language)?;
        let h = self.embedder.embed(sentence, &self.params)?;
        let (mut e, projection) = self.projection.forward(&self.params, &h)?;
        let rate = self.config.dropout;
        let e_mask = dropout_mask(rate, e.shape(), rng.as_deref_mut());
        apply_mask(&mut e, &e_mask);
        let (t, stack) = self.sentence_encoder.forward(&self.params, &e)?;
        let (mut p, predicate) = self.predicate_repr.forward(&self.params, &t)?;
        let p_mask = dropout_mask(rate, p.shape(), rng.as_deref_mut());
        apply_mask(&mut p, &p_mask);
        let (mut s, sense) = self.sense_repr.forward(&self.params, &t)?;
        let s_mask = dropout_mask(rate, s.shape(), rng.as_deref_mut());
        apply_mask(&mut s, &s_mask);

        let predicate_logits = dec.predicate.forward(&self.params, &p)?;
        let sense_logits = dec.sense.forward(&self.params, &s.select_rows(predicates))?;
        let mut arguments = Vec::with_capacity(predicates.len());
        for &q in predicates {
            let mut arg = self.argument_forward(&t, q, rng.as_deref_mut())?;
            arg.role_logits = dec.role.forward(&self.params, &arg.r)?;
            arguments.push(arg);
        }
        Ok(ForwardOutput {
            language: language.to_string(),
            h,
            e,
            t,
            p,
            s,
            predicate_logits,
            predicates: predicates.to_vec(),
            sense_logits,
            arguments,
            tape: SentenceTape {
                projection,
                e_mask,
                stack,
                predicate,
                p_mask,
                sense,
                s_mask,
            },
        })
    }

    /// Backpropagates `grads` through the pass that produced `out`,
    /// accumulating into every parameter gradient (including the lookup
    /// table when the provider has one).
    pub fn backward(&mut self, sentence: &Sentence, out: &ForwardOutput<R>, grads: &OutputGrads<R>) -> Result<(), ModelError> {
        let dec = self
            .decoders
            .get(&out.language)
            .ok_or_else(|| ModelError::UnknownLanguage(out.language.clone()))?
            .clone();
        let params = &mut self.params;
        let tape = &out.tape;
        let n = out.t.rows();
        let t_width = out.t.cols();

        let mut dp = dec.predicate.backward(params, &out.p, &grads.predicate_logits);
        apply_mask(&mut dp, &tape.p_mask);
        let mut dt = self.predicate_repr.backward(params, &out.t, &tape.predicate, &dp);

        let s_rows = out.s.select_rows(&out.predicates);
        let ds_rows = dec.sense.backward(params, &s_rows, &grads.sense_logits);
        let mut ds = Tensor::zeros(out.s.shape());
        for (k, &q) in out.predicates.iter().enumerate() {
            for (d, &g) in ds.row_mut(q).iter_mut().zip(ds_rows.row(k)) {
                *d += g;
            }
        }
        apply_mask(&mut ds, &tape.s_mask);
        dt.add_assign(&self.sense_repr.backward(params, &out.t, &tape.sense, &ds));

        for (arg, d_logits) in out.arguments.iter().zip(&grads.role_logits) {
            let mut dr = dec.role.backward(params, &arg.r, d_logits);
            apply_mask(&mut dr, &arg.tape.r_mask);
            let da = self.role_repr.backward(params, &arg.a, &arg.tape.role, &dr);
            let d_base = self.argument_encoder.backward(params, &arg.tape.stack, &da);
            let q = arg.predicate;
            let mut dq = vec![R::zero(); t_width];
            for i in 0..n {
                let row = d_base.row(i);
                for (acc, &g) in dq.iter_mut().zip(&row[..t_width]) {
                    *acc += g;
                }
                for (d, &g) in dt.row_mut(i).iter_mut().zip(&row[t_width..]) {
                    *d += g;
                }
            }
            for (d, g) in dt.row_mut(q).iter_mut().zip(dq) {
                *d += g;
            }
        }

        let mut de = self.sentence_encoder.backward(params, &tape.stack, &dt);
        apply_mask(&mut de, &tape.e_mask);
        let dh = self.projection.backward(params, &out.h, &tape.projection, &de);
        self.embedder.backward(sentence, params, &dh);
        Ok(())
    }
}
