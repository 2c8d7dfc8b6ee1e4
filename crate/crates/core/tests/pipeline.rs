use std::collections::BTreeMap;

use srl_core::corpus::{build_inventory, parse_conll09_str, validate_sentence, write_conll09, ViolationKind};
use srl_core::embedder::EmbedderSpec;
use srl_core::evaluator::{predict_corpus, score};
use srl_core::fixtures::synthetic_corpus;
use srl_core::model::{sense_lemma, DecodeOptions, ModelConfig, SrlModel};
use srl_core::trainer::{build_model, train, TrainConfig};

fn small() -> ModelConfig {
    ModelConfig {
        d_e: 16,
        hidden: 8,
        sent_layers: 1,
        arg_layers: 1,
        d_p: 16,
        d_s: 16,
        d_r: 16,
        ..ModelConfig::default()
    }
}

#[test]
fn text_to_scored_predictions() {
    let mut train_set = BTreeMap::new();
    let mut dev = BTreeMap::new();
    for (lang, seed) in [("en", 1), ("fa", 2)] {
        let text = write_conll09(&synthetic_corpus(lang, 20, seed));
        train_set.insert(lang.to_string(), parse_conll09_str(&text, lang).unwrap());
        dev.insert(lang.to_string(), synthetic_corpus(lang, 6, seed + 10));
    }
    let spec = EmbedderSpec::DeterministicToy { width: 4, layers: 4, seed: 1 };
    let mut model: SrlModel<f32> = build_model(small(), &spec, &train_set, None).unwrap();
    let config = TrainConfig {
        epochs: 6,
        batch_size: 4,
        learning_rate: 1e-2,
        ..TrainConfig::default()
    };
    let history = train(&mut model, &config, &train_set, &dev).unwrap();
    let best = history.epochs.iter().filter_map(|e| e.selection).fold(f64::MIN, f64::max);
    assert_eq!(history.best_selection, Some(best));

    for (lang, gold) in &dev {
        let pred = predict_corpus(&model, gold, lang, DecodeOptions::default()).unwrap();
        let inv = build_inventory(&train_set[lang]).unwrap();
        for s in &pred.sentences {
            // Only a lemma without any known sense may get a label outside
            // the inventory: the `<lemma>.01` fallback.
            for v in validate_sentence(s, &inv) {
                let ViolationKind::UnknownSense(sense) = &v.kind else { panic!("{v:?}") };
                let lemma = sense_lemma(sense);
                assert_eq!(sense, &format!("{lemma}.01"));
                assert!(inv.senses.iter().all(|k| sense_lemma(k) != lemma));
            }
        }
        let reparsed = parse_conll09_str(&write_conll09(&pred), lang).unwrap();
        assert_eq!(score(gold, &reparsed).unwrap(), score(gold, &pred).unwrap());
    }
}

#[test]
fn lookup_embedder_trains_and_freezes() {
    let train_set = BTreeMap::from([("en".to_string(), synthetic_corpus("en", 8, 4))]);
    let spec = EmbedderSpec::TrainableLookup {
        width: 4,
        trainable: false,
        vocabulary: vec![],
    };
    let mut model: SrlModel<f32> = build_model(small(), &spec, &train_set, None).unwrap();
    let before = model.params().clone();
    let config = TrainConfig {
        epochs: 2,
        ..TrainConfig::default()
    };
    train(&mut model, &config, &train_set, &BTreeMap::new()).unwrap();
    let table = "embedder.lookup.table";
    assert_eq!(model.params().by_name(table).unwrap().value, before.by_name(table).unwrap().value);
    assert_ne!(model.params(), &before);
}
