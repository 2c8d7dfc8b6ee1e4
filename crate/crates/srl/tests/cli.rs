mod common;

use serde_json::{json, Value};
use srl::{Error, ExitCode};
use srl_core::corpus::parse_conll09_str;
use srl_core::evaluator::MetricsReport;
use srl_core::trainer::TrainError;

use common::*;

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

#[test]
fn usage_errors_exit_1() {
    for args in [&["frobnicate"][..], &[][..], &["eval"][..], &["sweep", "--fractions", "x"][..]] {
        let out = srl(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    assert_eq!(srl(&["--help"]).status.code(), Some(0));
}

#[test]
fn gradcheck_passes_on_default_model() {
    let out = srl(&["gradcheck"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.starts_with("seed 13:"), "{stdout}");
    let err: f64 = stdout.rsplit(' ').next().unwrap().trim().parse().unwrap();
    assert!(err < 1e-4);

    let out = srl(&["gradcheck", "--tolerance", "1e-30"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn exit_code_mapping() {
    let nan = TrainError::NonFiniteLoss {
        epoch: 1,
        batch: 2,
        language: "en".into(),
        first_sentence: "1".into(),
    };
    assert_eq!(Error::Train(nan).exit_code(), ExitCode::Numerical);
    assert_eq!(Error::Train(TrainError::NoTrainingData).exit_code(), ExitCode::Data);
    assert_eq!(Error::Usage("x".into()).exit_code(), ExitCode::Usage);
}

#[test]
fn train_eval_predict() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture_data(dir.path(), [(16, 4, 6), (16, 4, 6)]);
    let config = write_config(dir.path(), &fixture_config(dir.path(), true));
    let out = srl(&["train", "--config", config.to_str().unwrap(), "--seed", "7", "--epochs", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));

    let out_dir = dir.path().join("out");
    let effective: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("effective_config.json")).unwrap()).unwrap();
    assert_eq!(effective["seed"], 7);
    assert_eq!(effective["model"]["seed"], 7);
    assert_eq!(effective["train"]["epochs"], 2);
    let history: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("history.json")).unwrap()).unwrap();
    assert_eq!(history["seed"], 7);
    assert_eq!(history["epochs"].as_array().unwrap().len(), 2);
    assert!(out_dir.join("test.fa.json").is_file());

    let ckpt = out_dir.join("model.ckpt");
    let gold = dir.path().join("fa.test.conll");
    let out = srl(&[
        "eval", "--checkpoint", ckpt.to_str().unwrap(), "--gold", gold.to_str().unwrap(), "--language", "fa", "--format", "json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let report: MetricsReport = serde_json::from_slice(&out.stdout).unwrap();
    assert!((0.0..=100.0).contains(&report.f1));

    // A two-language model needs --language.
    let out = srl(&["eval", "--checkpoint", ckpt.to_str().unwrap(), "--gold", gold.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    let pred = dir.path().join("pred.conll");
    let out = srl(&[
        "predict", "--checkpoint", ckpt.to_str().unwrap(), "--input", gold.to_str().unwrap(), "--language", "fa", "--out",
        pred.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let predicted = std::fs::read_to_string(&pred).unwrap();
    assert!(predicted.starts_with("# seed = 7\n"));
    let gold_corpus = parse_conll09_str(&std::fs::read_to_string(&gold).unwrap(), "fa").unwrap();
    assert_eq!(parse_conll09_str(&predicted, "fa").unwrap().len(), gold_corpus.len());

    // Scoring the written predictions gives the same report.
    let out = srl(&["eval", "--gold", gold.to_str().unwrap(), "--pred", pred.to_str().unwrap(), "--format", "json"]);
    let rescored: MetricsReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rescored, report);
}

#[test]
fn eval_alignment_error_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let gold = "1\ta\ta\ta\tN\tN\t_\t_\t0\t0\tR\tR\t_\t_\n2\tb\tb\tb\tN\tN\t_\t_\t0\t0\tR\tR\t_\t_\n\n";
    let pred = "1\ta\ta\ta\tN\tN\t_\t_\t0\t0\tR\tR\t_\t_\n\n";
    std::fs::write(dir.path().join("g.conll"), gold).unwrap();
    std::fs::write(dir.path().join("p.conll"), pred).unwrap();
    let out = srl(&[
        "eval", "--gold", dir.path().join("g.conll").to_str().unwrap(), "--pred", dir.path().join("p.conll").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("gold has 2 tokens, prediction has 1"), "{}", text(&out.stderr));
}

#[test]
fn validate_and_inventory() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture_data(dir.path(), [(5, 0, 0), (5, 0, 0)]);
    let en = dir.path().join("en.train.conll");
    let out = srl(&["validate", en.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));

    let bad = dir.path().join("bad.conll");
    let good = std::fs::read_to_string(&en).unwrap();
    let mut lines: Vec<String> = good.lines().map(String::from).collect();
    lines[1] = lines[1].rsplit_once('\t').unwrap().0.to_string();
    std::fs::write(&bad, lines.join("\n")).unwrap();
    let out = srl(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("line 2"), "{}", text(&out.stderr));

    let config = write_config(dir.path(), &fixture_config(dir.path(), false));
    let out = srl(&["inventory", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let inventories: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(inventories.as_array().unwrap().len(), 2);
    assert_eq!(inventories[0]["roles"][0], "NULL");
}

#[test]
fn config_problems() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture_data(dir.path(), [(5, 0, 0), (5, 0, 0)]);
    let mut config = fixture_config(dir.path(), false);
    config["train"]["bogus"] = json!(1);
    let path = write_config(dir.path(), &config);
    let out = srl(&["train", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("bogus"));

    let mut config = fixture_config(dir.path(), false);
    config["train"]["batch_size"] = json!(0);
    let out = srl(&["train", "--config", write_config(dir.path(), &config).to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    let mut config = fixture_config(dir.path(), false);
    config["data"]["fa"]["train"] = json!("missing.conll");
    let out = srl(&["train", "--config", write_config(dir.path(), &config).to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("missing.conll"));
    assert!(!dir.path().join("out").exists(), "nothing is written before the inputs are checked");
}

#[test]
fn sweep_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture_data(dir.path(), [(20, 0, 0), (20, 5, 5)]);
    let mut config = fixture_config(dir.path(), false);
    config["data"]["fa"] = json!({ "train": "fa.train.conll", "dev": "fa.dev.conll", "test": "fa.test.conll" });
    config["sweep"] = json!({ "source_language": "en", "target_language": "fa", "target_fraction": 0.5 });
    let path = write_config(dir.path(), &config);
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out_dir = dir.path().join(run);
        let out = srl(&[
            "sweep", "--config", path.to_str().unwrap(), "--fractions", "0,50,100", "--output-dir", out_dir.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
        outputs.push(
            ["sweep.tsv", "sweep.json", "effective_config.json"].map(|f| std::fs::read(out_dir.join(f)).unwrap()),
        );
    }
    assert_eq!(outputs[0][0], outputs[1][0]);
    assert_eq!(outputs[0][1], outputs[1][1]);
    let tsv = String::from_utf8(outputs[0][0].clone()).unwrap();
    assert_eq!(tsv.lines().count(), 4);
}
