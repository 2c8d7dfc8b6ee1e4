#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use srl_core::corpus::{write_conll09, Corpus};
use srl_core::fixtures::synthetic_corpus;

pub fn srl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_srl"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn write_corpus(dir: &Path, name: &str, corpus: &Corpus) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, write_conll09(corpus)).unwrap();
    path
}

/// Synthetic en/fa splits in `dir`; file names are `{lang}.{split}.conll`.
pub fn write_fixture_data(dir: &Path, sizes: [(usize, usize, usize); 2]) {
    for (lang, (train, dev, test), seed) in [("en", sizes[0], 11), ("fa", sizes[1], 17)] {
        for (split, n, offset) in [("train", train, 0), ("dev", dev, 1), ("test", test, 2)] {
            if n > 0 {
                write_corpus(dir, &format!("{lang}.{split}.conll"), &synthetic_corpus(lang, n, seed + offset));
            }
        }
    }
}

pub fn small_model() -> Value {
    json!({ "d_e": 16, "hidden": 8, "sent_layers": 1, "arg_layers": 1, "d_p": 16, "d_s": 16, "d_r": 16 })
}

/// Run config over the files [`write_fixture_data`] made.
pub fn fixture_config(dir: &Path, with_dev_test: bool) -> Value {
    let split = |lang: &str| {
        if with_dev_test {
            json!({ "train": format!("{lang}.train.conll"), "dev": format!("{lang}.dev.conll"), "test": format!("{lang}.test.conll") })
        } else {
            json!({ "train": format!("{lang}.train.conll") })
        }
    };
    json!({
        "model": small_model(),
        "embedder": { "kind": "deterministic-toy", "width": 4, "layers": 4, "seed": 5 },
        "train": { "epochs": 3, "batch_size": 8, "learning_rate": 0.01 },
        "data": { "en": split("en"), "fa": split("fa") },
        "output_dir": dir.join("out"),
    })
}

pub fn write_config(dir: &Path, config: &Value) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path
}
