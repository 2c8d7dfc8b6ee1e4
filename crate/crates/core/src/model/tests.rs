use alloc::string::ToString;
use alloc::vec;

use proptest::prelude::*;

use super::*;
use crate::corpus::{build_inventory, parse_conll09_str, validate_sentence, write_conll09, Corpus, Sentence};
use crate::fixtures::{bilingual, three_token_pair};
use crate::numerics::Tensor;

fn small_config(sent_layers: usize, arg_layers: usize) -> ModelConfig {
    ModelConfig {
        d_e: 8,
        hidden: 4,
        sent_layers,
        arg_layers,
        d_p: 6,
        d_s: 5,
        d_r: 7,
        ..ModelConfig::default()
    }
}

fn toy() -> EmbedderSpec {
    EmbedderSpec::DeterministicToy {
        width: 4,
        layers: 6,
        seed: 3,
    }
}

fn bilingual_model(config: ModelConfig) -> (SrlModel<f64>, Corpus, Corpus) {
    let (en, fa) = bilingual(8, 2);
    let invs = [build_inventory(&en).unwrap(), build_inventory(&fa).unwrap()];
    (SrlModel::new(config, &toy(), &invs, None).unwrap(), en, fa)
}

#[test]
fn recurrence_widths() {
    let (m, en, _) = bilingual_model(small_config(2, 2));
    let s = &en.sentences[1];
    let out = m.forward_training(s, "en").unwrap();
    assert_eq!(out.t.shape(), &[s.len(), 24]);
    assert_eq!(out.arguments[0].a.shape(), &[s.len(), 64]);
    assert_eq!(out.arguments[0].r.shape(), &[s.len(), 7]);
    assert_eq!(out.p.cols(), 6);
    assert_eq!(out.s.cols(), 5);
}

#[test]
fn zero_depth_sentence_encoder_is_identity() {
    let (m, en, _) = bilingual_model(small_config(0, 1));
    let out = m.forward_training(&en.sentences[0], "en").unwrap();
    assert_eq!(out.t, out.e);
}

#[test]
fn encoding_is_pure() {
    let (m, en, _) = bilingual_model(small_config(2, 1));
    let out = m.forward_training(&en.sentences[0], "en").unwrap();
    assert_eq!(m.encode_sentence(&out.e).unwrap(), m.encode_sentence(&out.e).unwrap());
    assert_eq!(m.encode_sentence(&out.e).unwrap(), (out.t.clone(), out.p.clone(), out.s.clone()));
}

#[test]
fn argument_base_row_at_predicate_duplicates_t() {
    let (m, en, _) = bilingual_model(small_config(1, 1));
    let out = m.forward_training(&en.sentences[0], "en").unwrap();
    let q = out.predicates[0];
    let base = m.argument_base(&out.t, q).unwrap();
    let w = out.t.cols();
    assert_eq!(&base.row(q)[..w], &base.row(q)[w..]);
    assert_eq!(
        m.argument_base(&out.t, out.t.rows()),
        Err(ModelError::PredicateOutOfRange {
            index: out.t.rows(),
            tokens: out.t.rows()
        })
    );
}

#[test]
fn six_language_qualified_parameters_per_language() {
    let (m, _, _) = bilingual_model(small_config(2, 2));
    for lang in ["en", "fa"] {
        let names = m.language_parameter_names(lang);
        assert_eq!(names.len(), 6, "{names:?}");
    }
    let shared = m.shared_parameter_names();
    assert!(shared.iter().all(|n| n.starts_with("universal.")));
    assert_eq!(shared.len() + 12, m.params().len());
}

#[test]
fn universal_outputs_do_not_depend_on_language() {
    let (m, en, _) = bilingual_model(small_config(2, 1));
    let s = &en.sentences[3];
    let a = m.forward_training(s, "en").unwrap();
    let b = m.forward_training(s, "fa").unwrap();
    assert_eq!((&a.t, &a.p, &a.s), (&b.t, &b.p, &b.s));
    assert_eq!(a.arguments[0].a, b.arguments[0].a);
    assert_eq!(a.arguments[0].r, b.arguments[0].r);
    assert_ne!(a.predicate_logits, b.predicate_logits);
}

#[test]
fn decoder_widths_and_unknown_language() {
    let (m, en, fa) = bilingual_model(small_config(1, 1));
    let fa_inv = build_inventory(&fa).unwrap();
    let out = m.forward_training(&fa.sentences[1], "fa").unwrap();
    assert_eq!(out.predicate_logits.cols(), 2);
    assert_eq!(out.sense_logits.cols(), fa_inv.senses.len());
    assert_eq!(out.arguments[0].role_logits.cols(), fa_inv.roles.len());
    assert_eq!(
        m.forward_training(&en.sentences[0], "de").unwrap_err(),
        ModelError::UnknownLanguage("de".into())
    );
}

#[test]
fn zero_decoder_weights_emit_bias() {
    let (mut m, en, _) = bilingual_model(small_config(1, 1));
    let dec = m.decoder("en").unwrap().clone();
    let bias = Tensor::vector(vec![0.5, -1.5]);
    *m.params_mut().value_mut(dec.predicate.weight) = Tensor::zeros(&[2, 6]);
    *m.params_mut().value_mut(dec.predicate.bias) = bias.clone();
    let out = m.forward_training(&en.sentences[0], "en").unwrap();
    for i in 0..out.predicate_logits.rows() {
        assert_eq!(out.predicate_logits.row(i), bias.data());
    }
}

#[test]
fn predicate_counts_follow_gold_frames() {
    let (m, en, _) = bilingual_model(small_config(1, 1));
    let bare = en.sentences[0].without_frames();
    let out = m.forward_training(&bare, "en").unwrap();
    assert_eq!(out.predicate_logits.shape(), &[bare.len(), 2]);
    assert_eq!(out.sense_logits.rows(), 0);
    assert!(out.arguments.is_empty());

    let (s, _) = three_token_pair();
    let out = m.forward_with_predicates(&s, "en", &[0, 2]).unwrap();
    assert_eq!(out.sense_logits.rows(), 2);
    assert_eq!(out.arguments.len(), 2);
}

#[test]
fn predicate_order_permutes_role_matrices() {
    let (m, _, _) = bilingual_model(small_config(1, 2));
    let (s, _) = three_token_pair();
    let ab = m.forward_with_predicates(&s, "en", &[0, 2]).unwrap();
    let ba = m.forward_with_predicates(&s, "en", &[2, 0]).unwrap();
    assert_eq!(ab.arguments[0].role_logits, ba.arguments[1].role_logits);
    assert_eq!(ab.arguments[1].role_logits, ba.arguments[0].role_logits);
    assert_eq!(ab.sense_logits.row(0), ba.sense_logits.row(1));
}

fn force_predicate_class(m: &mut SrlModel<f64>, lang: &str, class: usize) {
    let dec = m.decoder(lang).unwrap().clone();
    let w = m.params().value(dec.predicate.weight).shape().to_vec();
    *m.params_mut().value_mut(dec.predicate.weight) = Tensor::zeros(&w);
    let mut b = vec![0.0; 2];
    b[class] = 1.0;
    *m.params_mut().value_mut(dec.predicate.bias) = Tensor::vector(b);
}

#[test]
fn predicate_head_favoring_class_zero_predicts_nothing() {
    let (mut m, en, _) = bilingual_model(small_config(1, 1));
    force_predicate_class(&mut m, "en", 0);
    let pred = m.predict(&en.sentences[2].without_frames(), "en", DecodeOptions::default()).unwrap();
    assert!(pred.frames.is_empty());
    assert!(pred.tokens.iter().all(|t| !t.fill_pred));
}

#[test]
fn unseen_lemma_falls_back_to_first_sense() {
    let (mut m, _, _) = bilingual_model(small_config(1, 1));
    force_predicate_class(&mut m, "en", 1);
    let mut s: Sentence = three_token_pair().0.without_frames();
    s.tokens[1].lemma = "devour".to_string();
    let pred = m.predict(&s, "en", DecodeOptions::default()).unwrap();
    assert_eq!(pred.frames.len(), 3);
    assert_eq!(pred.frames[1].sense, "devour.01");
    assert_eq!(pred.frames[0].sense, "john.01");

    let unmasked = m.predict(&s, "en", DecodeOptions { lemma_mask: false }).unwrap();
    let inv = m.inventory("en").unwrap();
    assert!(unmasked.frames.iter().all(|f| inv.senses.contains(&f.sense)));
}

#[test]
fn lemma_mask_keeps_sense_within_lemma() {
    let (mut m, en, _) = bilingual_model(small_config(1, 1));
    force_predicate_class(&mut m, "en", 1);
    let s = &en.sentences[2];
    let pred = m.predict(&s.without_frames(), "en", DecodeOptions::default()).unwrap();
    let q = s.frames[0].predicate_index - 1;
    let frame = pred.frames.iter().find(|f| f.predicate_index == q + 1).unwrap();
    assert!(frame.sense.starts_with("run."));
}

#[test]
fn predictions_validate_and_round_trip() {
    let (m, en, fa) = bilingual_model(small_config(1, 1));
    for (corpus, lang) in [(&en, "en"), (&fa, "fa")] {
        let mut out = Corpus::new(lang);
        for s in &corpus.sentences {
            let p = m.predict(&s.without_frames(), lang, DecodeOptions { lemma_mask: false }).unwrap();
            let inv = m.inventory(lang).unwrap();
            assert_eq!(validate_sentence(&p, inv), vec![]);
            out.sentences.push(p);
        }
        assert_eq!(parse_conll09_str(&write_conll09(&out), lang).unwrap(), out);
    }
}

#[test]
fn sense_lemma_splits_on_last_dot() {
    assert_eq!(sense_lemma("run.02"), "run");
    assert_eq!(sense_lemma("a.b.01"), "a.b");
    assert_eq!(sense_lemma("plain"), "plain");
}

#[test]
fn config_validation() {
    let (en, _) = bilingual(4, 0);
    let inv = build_inventory(&en).unwrap();
    let bad = ModelConfig {
        d_p: 0,
        ..small_config(1, 1)
    };
    assert!(matches!(
        SrlModel::<f32>::new(bad, &toy(), std::slice::from_ref(&inv), None),
        Err(ModelError::Config(_))
    ));
    assert!(matches!(
        SrlModel::<f32>::new(small_config(1, 1), &toy(), &[], None),
        Err(ModelError::Config(_))
    ));
    assert!(matches!(
        SrlModel::<f32>::new(small_config(1, 1), &toy(), &[inv.clone(), inv], None),
        Err(ModelError::Config(_))
    ));
}

#[test]
fn same_seed_same_parameters() {
    let (a, _, _) = bilingual_model(small_config(1, 1));
    let (b, _, _) = bilingual_model(small_config(1, 1));
    assert_eq!(a.params().values(), b.params().values());
    let mut c = small_config(1, 1);
    c.seed += 1;
    let (c, _, _) = bilingual_model(c);
    assert_ne!(a.params().values(), c.params().values());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn widths_match_recurrence(
        d_e in 1usize..6, hidden in 1usize..4, k1 in 0usize..3, k2 in 0usize..3, n in 1usize..4
    ) {
        let config = ModelConfig { d_e, hidden, sent_layers: k1, arg_layers: k2, d_p: 2, d_s: 2, d_r: 2, ..ModelConfig::default() };
        let (en, _) = bilingual(2, 0);
        let inv = build_inventory(&en).unwrap();
        let m = SrlModel::<f32>::new(config.clone(), &toy(), &[inv], None).unwrap();
        let e = Tensor::<f32>::zeros(&[n, d_e]);
        let (t, _, _) = m.encode_sentence(&e).unwrap();
        prop_assert_eq!(t.cols(), d_e + 2 * hidden * k1);
        prop_assert_eq!(t.cols(), config.sentence_width());
        let (a, _) = m.encode_predicate_args(&t, n - 1).unwrap();
        prop_assert_eq!(a.cols(), 2 * t.cols() + 2 * hidden * k2);
        prop_assert_eq!(a.cols(), config.argument_width());
    }
}
