use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn eager(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eager")).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json summary")
}

fn error_json(out: &Output, code: i32) -> Value {
    assert_eq!(out.status.code(), Some(code), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stderr).expect("json error")
}

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/perturbed500")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_tables(dir: &Path, id_header: &str) {
    fs::write(
        dir.join("left.csv"),
        format!("{id_header},name,city\n1,Anna Lee,Berlin\n2,Bo Chen,Oslo\n3,Cy Dove,Rome\n"),
    )
    .unwrap();
    fs::write(dir.join("right.csv"), "rid,title,town\na,Ana Lee,Berlin\nb,Bo Chen,Oslo\nc,Cy Dove,Roma\n").unwrap();
    fs::write(
        dir.join("left.json"),
        r#"{"id_column":"id","attribute_columns":["name","city"],"entity_type":"person"}"#,
    )
    .unwrap();
    fs::write(
        dir.join("right.json"),
        r#"{"id_column":"rid","attribute_columns":["title","town"],"entity_type":"person"}"#,
    )
    .unwrap();
    fs::write(dir.join("links.csv"), "left,right\n1,a\n2,b\n3,c\n").unwrap();
}

fn convert_args(dir: &Path, out: &Path) -> Vec<String> {
    let f = |n: &str| dir.join(n).to_str().unwrap().to_owned();
    vec![
        "convert".into(),
        "--kg1".into(),
        f("left.csv"),
        "--schema1".into(),
        f("left.json"),
        "--kg2".into(),
        f("right.csv"),
        "--schema2".into(),
        f("right.json"),
        "--links".into(),
        f("links.csv"),
        "--out".into(),
        p(out).to_owned(),
    ]
}

#[test]
fn convert_writes_openea_layout() {
    let dir = tempfile::tempdir().unwrap();
    write_tables(dir.path(), "id");
    let out = dir.path().join("dataset");
    let args = convert_args(dir.path(), &out);
    let summary = stdout_json(&eager(&args.iter().map(String::as_str).collect::<Vec<_>>()));
    assert_eq!(summary["links"], 3);
    assert_eq!(summary["kg1"]["entities"], 3);
    assert_eq!(summary["kg1"]["attr_triples"], 9);
    let mut files: Vec<String> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    files.sort();
    assert_eq!(
        files,
        ["attr_triples_1", "attr_triples_2", "ent_links", "manifest.json", "rel_triples_1", "rel_triples_2"]
    );
    let manifest: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["kg2"], summary["kg2"]);
}

#[test]
fn convert_names_missing_id_column() {
    let dir = tempfile::tempdir().unwrap();
    write_tables(dir.path(), "key");
    let args = convert_args(dir.path(), &dir.path().join("dataset"));
    let err = error_json(&eager(&args.iter().map(String::as_str).collect::<Vec<_>>()), 2);
    assert!(err["error"]["message"].as_str().unwrap().contains("\"id\""), "{err}");
}

fn run_config(dir: &Path, variant: &str, extra: &str) -> PathBuf {
    let path = dir.join("run.json");
    let text = format!(
        r#"{{"dataset_dir": {:?}, "variant": "{variant}", "classifier": "rf", "rf": {{"n_trees": 100}}{extra}}}"#,
        p(&fixture())
    );
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn run_attribute_variant_is_accurate_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = run_config(dir.path(), "A", "");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let summary = stdout_json(&eager(&["run", "--config", p(&cfg), "--out", p(&a)]));
    assert!(summary["aggregate"]["f_measure"].as_f64().unwrap() >= 0.95, "{summary}");
    stdout_json(&eager(&["run", "--config", p(&cfg), "--out", p(&b)]));
    let m1 = fs::read(a.join("metrics.json")).unwrap();
    assert_eq!(m1, fs::read(b.join("metrics.json")).unwrap());
    let metrics: Value = serde_json::from_slice(&m1).unwrap();
    assert_eq!(metrics["provenance"]["config_hash"], summary["config_hash"]);
    assert_eq!(metrics["report"]["folds"].as_array().unwrap().len(), 5);
    assert!(a.join("timings.json").is_file());

    let other = stdout_json(&eager(&["run", "--config", p(&cfg), "--out", p(&b), "--seed", "7"]));
    assert_ne!(other["config_hash"], summary["config_hash"]);
}

#[test]
fn run_rejects_bad_configs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = run_config(dir.path(), "E", "");
    let err = error_json(&eager(&["run", "--config", p(&cfg), "--out", p(&out)]), 2);
    assert_eq!(err["error"]["kind"], "config");

    let cfg = run_config(dir.path(), "A", r#", "colour": "red""#);
    error_json(&eager(&["run", "--config", p(&cfg), "--out", p(&out)]), 2);

    let cfg = run_config(dir.path(), "A", "");
    let err = error_json(&eager(&["run", "--config", p(&cfg)]), 2);
    assert!(err["error"]["message"].as_str().unwrap().contains("output"));

    let missing = dir.path().join("nope.json");
    error_json(&eager(&["run", "--config", p(&missing), "--out", p(&out)]), 2);
}

#[test]
fn staged_commands_chain() {
    let dir = tempfile::tempdir().unwrap();
    let emb = dir.path().join("emb.tsv");
    let transe = dir.path().join("transe.json");
    fs::write(&transe, r#"{"dim": 8, "epochs": 5}"#).unwrap();
    let s = stdout_json(&eager(&[
        "embed", "--dataset", p(&fixture()), "--fold", "2", "--config", p(&transe), "--out", p(&emb),
    ]));
    assert_eq!(s["dim"], 8);

    let feats = dir.path().join("features");
    let s = stdout_json(&eager(&[
        "featurize", "--dataset", p(&fixture()), "--fold", "2", "--variant", "A||E", "--embeddings", p(&emb),
        "--out", p(&feats),
    ]));
    assert_eq!(s["rows"]["train"], 200);
    assert_eq!(s["rows"]["test"], 700);
    let header = fs::read_to_string(feats.join("train.csv")).unwrap();
    assert_eq!(header.lines().next().unwrap().split(',').count(), 3 + 16 + 1);

    let model = dir.path().join("model.json");
    let s = stdout_json(&eager(&[
        "train", "--features", p(&feats.join("train.csv")), "--classifier", "rf", "--seed", "3", "--out", p(&model),
    ]));
    assert_eq!(s["feature_dim"], 19);

    let preds = dir.path().join("pred.csv");
    let s = stdout_json(&eager(&[
        "predict", "--model", p(&model), "--features", p(&feats.join("test.csv")), "--out", p(&preds),
    ]));
    assert!(s["metrics"]["f_measure"].as_f64().unwrap() > 0.9, "{s}");
    let text = fs::read_to_string(&preds).unwrap();
    assert_eq!(text.lines().next(), Some("score,label,truth"));
    assert_eq!(text.lines().count(), 701);

    let err = error_json(
        &eager(&["featurize", "--dataset", p(&fixture()), "--variant", "E", "--out", p(&feats)]),
        2,
    );
    assert_eq!(err["error"]["kind"], "config");
    error_json(
        &eager(&["featurize", "--dataset", p(&fixture()), "--fold", "6", "--variant", "A", "--out", p(&feats)]),
        2,
    );
}

fn write_scores(path: &Path, methods: &[&str], rows: &[Vec<f64>]) {
    let mut text = format!("dataset,{}\n", methods.join(","));
    for (i, r) in rows.iter().enumerate() {
        let cells: Vec<String> = r.iter().map(f64::to_string).collect();
        text.push_str(&format!("d{i},{}\n", cells.join(",")));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn ranktest_framework_table() {
    let dir = tempfile::tempdir().unwrap();
    let scores = dir.path().join("scores.csv");
    let rows = vec![
        vec![0.958, 0.952, 0.930, 0.974, 0.977],
        vec![0.789, 0.760, 0.743, 0.724, 0.727],
        vec![0.997, 0.997, 0.990, 0.998, 0.999],
        vec![0.994, 0.997, 0.994, 0.997, 0.998],
        vec![0.988, 0.984, 0.984, 0.995, 0.997],
        vec![0.973, 0.967, 0.987, 0.993, 0.994],
        vec![0.983, 0.981, 0.988, 0.993, 0.995],
    ];
    write_scores(&scores, &["EAGER MLP", "EAGER RF", "DeepMatcher", "Magellan XGBoost", "Magellan RF"], &rows);
    let out = dir.path().join("out");
    let s = stdout_json(&eager(&["ranktest", "--scores", p(&scores), "--out", p(&out)]));
    let expected = [3.286, 3.786, 4.000, 2.500, 1.429];
    for (got, want) in s["avg_ranks"].as_array().unwrap().iter().zip(expected) {
        assert!((got.as_f64().unwrap() - want).abs() < 1e-3);
    }
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("rank_report.json")).unwrap()).unwrap();
    assert!((report["friedman_p"].as_f64().unwrap() - 0.012).abs() < 1e-3);
    let svg = fs::read_to_string(out.join("cd_diagram.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert_eq!(svg.matches("class=\"method\"").count(), 5);
    assert!(!svg.contains("data-members=\"EAGER RF|Magellan RF\""));

    let again = dir.path().join("again");
    stdout_json(&eager(&["ranktest", "--scores", p(&scores), "--out", p(&again)]));
    assert_eq!(svg, fs::read_to_string(again.join("cd_diagram.svg")).unwrap());
}

#[test]
fn ranktest_degenerate_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let scores = dir.path().join("scores.csv");
    let out = dir.path().join("out");
    write_scores(&scores, &["x", "y", "z"], &[vec![0.1, 0.2, 0.3]]);
    error_json(&eager(&["ranktest", "--scores", p(&scores), "--out", p(&out)]), 2);

    write_scores(&scores, &["x", "y", "z"], &vec![vec![0.5, 0.5, 0.5]; 4]);
    let s = stdout_json(&eager(&["ranktest", "--scores", p(&scores), "--out", p(&out)]));
    assert_eq!(s["friedman_p"], 1.0);
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("rank_report.json")).unwrap()).unwrap();
    assert_eq!(report["friedman_chi2"], 0.0);
    let svg = fs::read_to_string(out.join("cd_diagram.svg")).unwrap();
    assert_eq!(svg.matches("class=\"group\"").count(), 1);

    let bad_alpha = eager(&["ranktest", "--scores", p(&scores), "--alpha", "0.01", "--out", p(&out)]);
    assert_eq!(bad_alpha.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_alpha.stderr).contains("alpha"));
}

#[test]
fn version_and_usage_errors() {
    let out = eager(&["--version"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("eager"));
    assert!(!eager(&["frobnicate"]).status.success());
}
