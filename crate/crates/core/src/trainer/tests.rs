use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::fixtures::{bilingual, sized_corpus, three_token_pair};
use crate::model::ForwardOutput;

fn tiny_model_config() -> ModelConfig {
    ModelConfig {
        d_e: 6,
        hidden: 3,
        sent_layers: 1,
        arg_layers: 1,
        d_p: 4,
        d_s: 4,
        d_r: 4,
        ..ModelConfig::default()
    }
}

fn toy() -> EmbedderSpec {
    EmbedderSpec::DeterministicToy {
        width: 3,
        layers: 5,
        seed: 1,
    }
}

fn corpora(n: usize) -> BTreeMap<String, Corpus> {
    let (en, fa) = bilingual(n, 4);
    [("en".to_string(), en), ("fa".to_string(), fa)].into_iter().collect()
}

fn lookup(trainable: bool) -> EmbedderSpec {
    EmbedderSpec::TrainableLookup {
        width: 3,
        trainable,
        vocabulary: vec![],
    }
}

#[test]
fn batch_sizes_for_one_language() {
    let mut c = BTreeMap::new();
    c.insert("en".to_string(), sized_corpus("en", 10));
    let b = make_batches(&c, 4, 1).unwrap();
    let sizes: Vec<usize> = b.iter().map(|b| b.sentences.len()).collect();
    assert_eq!(sizes, vec![4, 4, 2]);
}

#[test]
fn equal_counts_alternate() {
    let mut c = BTreeMap::new();
    c.insert("en".to_string(), sized_corpus("en", 12));
    c.insert("fa".to_string(), sized_corpus("fa", 9));
    let b = make_batches(&c, 3, 7).unwrap();
    let langs: Vec<&str> = b.iter().map(|b| b.language.as_str()).collect();
    assert_eq!(langs, vec!["en", "fa", "en", "fa", "en", "fa", "en"]);
}

#[test]
fn interleaving_is_proportional_and_covers_each_sentence_once() {
    let mut c = BTreeMap::new();
    c.insert("en".to_string(), sized_corpus("en", 40));
    c.insert("fa".to_string(), sized_corpus("fa", 10));
    let b = make_batches(&c, 5, 3).unwrap();
    assert_eq!(b, make_batches(&c, 5, 3).unwrap());
    assert_ne!(b, make_batches(&c, 5, 4).unwrap());
    let fa_positions: Vec<usize> = (0..b.len()).filter(|&i| b[i].language == "fa").collect();
    assert_eq!(fa_positions, vec![2, 7]);
    for lang in ["en", "fa"] {
        let mut seen: Vec<usize> = b
            .iter()
            .filter(|x| x.language == lang)
            .flat_map(|x| x.sentences.iter().copied())
            .collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..c[lang].len()).collect::<Vec<_>>());
    }
}

#[test]
fn batching_errors() {
    let mut c = BTreeMap::new();
    c.insert("en".to_string(), Corpus::new("en"));
    assert_eq!(make_batches(&c, 4, 0), Err(TrainError::NoTrainingData));
    assert!(matches!(make_batches(&corpora(2), 0, 0), Err(TrainError::Config(_))));
}

#[test]
fn total_loss_examples() {
    let mut comps = BTreeMap::new();
    comps.insert("en".to_string(), TaskLosses { predicate: 1.0, sense: 2.0, role: 3.0 });
    comps.insert("fa".to_string(), TaskLosses { predicate: 0.5, sense: 0.5, role: 0.5 });
    assert_eq!(total_loss(&comps, &BTreeMap::new()), 7.5);
    let mut w = BTreeMap::new();
    w.insert("fa".to_string(), 2.0);
    assert_eq!(total_loss(&comps, &w), 9.0);
    comps.remove("fa");
    assert_eq!(total_loss(&comps, &BTreeMap::new()), 6.0);
}

/// `−log softmax(row)[target]` averaged over rows, evaluated directly.
fn direct_ce(rows: &[(&[f64], usize)]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let sum: f64 = rows
        .iter()
        .map(|(r, t)| {
            let m = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + Float::ln(r.iter().map(|v| Float::exp(v - m)).sum::<f64>());
            lse - r[*t]
        })
        .sum();
    sum / rows.len() as f64
}

fn independent_components(
    model: &SrlModel<f64>,
    sentences: &[&Sentence],
) -> BTreeMap<String, TaskLosses> {
    let mut out = BTreeMap::new();
    for lang in ["en", "fa"] {
        let inv = model.inventory(lang).unwrap();
        let group: Vec<(&Sentence, ForwardOutput<f64>)> = sentences
            .iter()
            .filter(|s| s.language == lang)
            .map(|s| (*s, model.forward_training(s, lang).unwrap()))
            .collect();
        if group.is_empty() {
            continue;
        }
        let mut pred = Vec::new();
        let mut sense = Vec::new();
        let mut role = Vec::new();
        for (s, o) in &group {
            for (i, t) in s.tokens.iter().enumerate() {
                pred.push((o.predicate_logits.row(i), usize::from(t.fill_pred)));
            }
            for (k, f) in s.frames.iter().enumerate() {
                sense.push((o.sense_logits.row(k), inv.sense_index(&f.sense).unwrap()));
                for i in 0..s.len() {
                    let t = f.roles.get(&(i + 1)).map_or(0, |r| inv.role_index(r).unwrap());
                    role.push((o.arguments[k].role_logits.row(i), t));
                }
            }
        }
        out.insert(
            lang.to_string(),
            TaskLosses {
                predicate: direct_ce(&pred),
                sense: direct_ce(&sense),
                role: direct_ce(&role),
            },
        );
    }
    out
}

#[test]
fn objective_is_sum_of_six_cross_entropies() {
    let train = corpora(6);
    let model: SrlModel<f64> = build_model(tiny_model_config(), &toy(), &train, None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let mut batch: Vec<&Sentence> = Vec::new();
        for c in train.values() {
            for s in &c.sentences {
                if rng.gen_bool(0.5) {
                    batch.push(s);
                }
            }
        }
        let mut m = model.clone();
        let (loss, breakdown) = objective::<f64, ChaCha8Rng>(&mut m, &batch, &BTreeMap::new(), false, None).unwrap();
        let expected = independent_components(&model, &batch);
        let literal: f64 = expected.values().map(TaskLosses::sum).sum();
        assert!((loss - literal).abs() < 1e-6, "{loss} vs {literal}");
        assert!((breakdown.total - total_loss(&breakdown.components, &BTreeMap::new())).abs() < 1e-6);
        for (lang, c) in &expected {
            let got = breakdown.components[lang];
            assert!((got.predicate - c.predicate).abs() < 1e-9);
            assert!((got.sense - c.sense).abs() < 1e-9);
            assert!((got.role - c.role).abs() < 1e-9);
        }
    }
}

#[test]
fn full_model_gradient_matches_finite_differences() {
    let (en, fa) = three_token_pair();
    let mut train = BTreeMap::new();
    train.insert("en".to_string(), Corpus { language: "en".into(), sentences: vec![en.clone()] });
    train.insert("fa".to_string(), Corpus { language: "fa".into(), sentences: vec![fa.clone()] });
    // Smallest gradients sit near the 1e-8 denominator floor; eps balances
    // finite-difference truncation against rounding in the loss.
    let spec = EmbedderSpec::DeterministicToy { width: 2, layers: 4, seed: 1 };
    let config = ModelConfig { d_e: 4, hidden: 2, ..tiny_model_config() };
    let mut model: SrlModel<f64> = build_model(config, &spec, &train, None).unwrap();
    let report = model_grad_check(&mut model, &[&en, &fa], 6e-4).unwrap();
    assert!(report.max_relative_error < 1e-4, "{report:?}");
    assert_eq!(report.checked, model.params().scalar_count());
}

#[test]
fn freeze_policies() {
    let train = corpora(4);
    let mut m: SrlModel<f32> = build_model(tiny_model_config(), &lookup(true), &train, None).unwrap();
    assert_eq!(apply_freeze(&mut m, &FreezePolicy::default()).unwrap(), 0);
    assert_eq!(apply_freeze(&mut m, &FreezePolicy::new(["embedder."])).unwrap(), 1);
    assert!(!m.params().by_name("embedder.lookup.table").unwrap().trainable);
    assert_eq!(
        apply_freeze(&mut m, &FreezePolicy::new(["decoder.de."])),
        Err(TrainError::UnresolvedPrefix("decoder.de.".into()))
    );
    assert_eq!(apply_freeze(&mut m, &FreezePolicy::new(["decoder.fa."])).unwrap(), 6);

    let mut toy_model: SrlModel<f32> = build_model(tiny_model_config(), &toy(), &train, None).unwrap();
    assert_eq!(apply_freeze(&mut toy_model, &FreezePolicy::new(["embedder."])).unwrap(), 0);
}

#[test]
fn freezing_everything_makes_training_a_no_op() {
    let train = corpora(4);
    let mut m: SrlModel<f32> = build_model(tiny_model_config(), &lookup(true), &train, None).unwrap();
    let before = m.params().values();
    let config = TrainConfig {
        epochs: 2,
        freeze: FreezePolicy::new(PARAMETER_ROOTS),
        ..TrainConfig::default()
    };
    train_fn(&mut m, &config, &train);
    assert_eq!(before, m.params().values());
}

fn train_fn(m: &mut SrlModel<f32>, config: &TrainConfig, data: &BTreeMap<String, Corpus>) -> TrainHistory {
    train(m, config, data, &BTreeMap::new()).unwrap()
}

#[test]
fn frozen_lookup_table_is_untouched_and_runs_repeat_bit_exactly() {
    let data = corpora(6);
    let config = TrainConfig {
        epochs: 3,
        batch_size: 4,
        learning_rate: 1e-2,
        ..TrainConfig::default()
    };
    let run = |spec: EmbedderSpec| {
        let mut m: SrlModel<f32> = build_model(tiny_model_config(), &spec, &data, None).unwrap();
        let before = m.params().by_name("embedder.lookup.table").unwrap().value.clone();
        let h = train_fn(&mut m, &config, &data);
        (m, before, h)
    };
    let (a, table0, ha) = run(lookup(false));
    assert_eq!(a.params().by_name("embedder.lookup.table").unwrap().value, table0);
    let (b, _, hb) = run(lookup(false));
    assert_eq!(a.params().values(), b.params().values());
    assert_eq!(ha, hb);
    let (c, table0, _) = run(lookup(true));
    assert_ne!(c.params().by_name("embedder.lookup.table").unwrap().value, table0);
}

#[test]
fn loss_decreases_and_history_is_complete() {
    let data = corpora(8);
    let mut m: SrlModel<f32> = build_model(tiny_model_config(), &toy(), &data, None).unwrap();
    let config = TrainConfig {
        epochs: 8,
        batch_size: 4,
        learning_rate: 1e-2,
        patience: 0,
        ..TrainConfig::default()
    };
    let h = train(&mut m, &config, &data, &data).unwrap();
    assert_eq!(h.epochs.len(), 8);
    assert!(h.epochs[7].total_loss < h.epochs[0].total_loss);
    assert_eq!(h.epochs[0].batches["en"], 2);
    let best = h.epochs.iter().filter_map(|e| e.selection).fold(f64::MIN, f64::max);
    assert_eq!(h.best_selection, Some(best));
    let best_epoch = h.best_epoch.unwrap();
    assert_eq!(h.epochs[best_epoch - 1].selection, Some(best));
    let mut dev_mean = 0.0;
    for (lang, c) in &data {
        dev_mean += crate::evaluator::evaluate(&m, c, lang, config.decode).unwrap().1.f1 / 2.0;
    }
    assert!((dev_mean - best).abs() < 1e-9);
}

#[test]
fn early_stopping_honours_patience() {
    let data = corpora(4);
    let mut m: SrlModel<f32> = build_model(tiny_model_config(), &toy(), &data, None).unwrap();
    let config = TrainConfig {
        epochs: 40,
        patience: 1,
        learning_rate: 1e-6,
        ..TrainConfig::default()
    };
    let h = train(&mut m, &config, &data, &data).unwrap();
    assert!(h.stopped_early);
    assert!(h.epochs.len() < 40);
}

#[test]
fn non_finite_loss_names_the_batch() {
    let data = corpora(4);
    let mut m: SrlModel<f32> = build_model(tiny_model_config(), &toy(), &data, None).unwrap();
    let id = m.params().id("decoder.fa.role.b").unwrap();
    m.params_mut().value_mut(id).data_mut()[0] = f32::NAN;
    let err = train(&mut m, &TrainConfig::default(), &data, &BTreeMap::new()).unwrap_err();
    match err {
        TrainError::NonFiniteLoss { epoch, language, .. } => {
            assert_eq!(epoch, 1);
            assert_eq!(language, "fa");
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn fractions_and_config_validation() {
    let data = corpora(20);
    let mut config = TrainConfig::default();
    config.fractions.insert("en".into(), crate::corpus::Fraction::from_percent(25).unwrap());
    let sampled = sampled_corpora(&data, &config);
    assert_eq!(sampled["en"].len(), 5);
    assert_eq!(sampled["fa"].len(), 20);
    config.language_weights.insert("en".into(), -1.0);
    assert!(matches!(config.validate(), Err(TrainError::Config(_))));
    let json = serde_json::to_string(&TrainConfig::default()).unwrap();
    assert_eq!(serde_json::from_str::<TrainConfig>(&json).unwrap(), TrainConfig::default());
    assert!(serde_json::from_str::<TrainConfig>(r#"{"epochz": 3}"#).is_err());
}

#[test]
fn dropout_changes_training_but_not_inference() {
    let data = corpora(4);
    let config = ModelConfig {
        dropout: 0.3,
        ..tiny_model_config()
    };
    let m: SrlModel<f64> = build_model(config, &toy(), &data, None).unwrap();
    let s = &data["en"].sentences[0];
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let plain = m.forward_training(s, "en").unwrap();
    let dropped = m.forward_training_with_dropout(s, "en", &mut rng).unwrap();
    assert_ne!(plain.predicate_logits, dropped.predicate_logits);
    assert_eq!(plain, m.forward_training(s, "en").unwrap());
}
