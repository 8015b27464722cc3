mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn layoutqa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_layoutqa"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn error_kind(out: &Output) -> String {
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).expect("stderr is an error object");
    v["error"]["kind"].as_str().unwrap().to_owned()
}

fn write_pages(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("pages.json");
    fs::write(&path, common::layout_json(&common::random_pages(5, 60, 20))).unwrap();
    path
}

#[test]
fn exit_code_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let pages = write_pages(dir.path());
    let out = dir.path().join("out.json");
    let broken = dir.path().join("broken.json");
    fs::write(&broken, b"{\"pages\": [").unwrap();
    let bad_box = dir.path().join("bad_box.json");
    fs::write(
        &bad_box,
        br#"{"pages":[{"page_id":"x","width":10,"height":10,"segments":[{"id":"a","category":"text","bbox":[5,1,2,3]}]}]}"#,
    )
    .unwrap();

    let cases: Vec<(Vec<&str>, i32)> = vec![
        (vec!["--help"], 0),
        (vec!["--version"], 0),
        (vec!["build-scenegraph", "--in", p(&pages), "--out", p(&out)], 0),
        (vec!["build-scenegraph", "--in", p(&pages), "--out", p(&out), "--frobnicate"], 2),
        (vec!["no-such-command"], 2),
        (vec!["generate-qa", "--in", p(&pages), "--out", p(&out), "--total", "10"], 2),
        (vec!["generate-qa", "--in", p(&pages), "--out", p(&out), "--total", "10", "--ratios", "0.5,0.1"], 2),
        (vec!["build-scenegraph", "--in", "/does/not/exist.json", "--out", p(&out)], 1),
        (vec!["build-scenegraph", "--in", p(&broken), "--out", p(&out)], 1),
        (vec!["build-scenegraph", "--in", p(&bad_box), "--out", p(&out)], 1),
        (
            vec!["generate-qa", "--in", p(&pages), "--out", p(&out), "--total", "100000", "--ratios", "0.7,0.2,0.1"],
            1,
        ),
        (vec!["stats", "--in", p(&pages)], 1),
    ];
    for (args, want) in cases {
        let got = layoutqa(&args);
        assert_eq!(got.status.code(), Some(want), "{args:?}: {}", String::from_utf8_lossy(&got.stderr));
        if want == 1 {
            error_kind(&got);
        }
    }
}

#[test]
fn data_errors_name_the_culprit() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        br#"{"pages":[{"page_id":"p7","width":10,"height":10,"segments":[{"id":"seg9","category":"caption","bbox":[1,1,2,2]}]}]}"#,
    )
    .unwrap();
    let out = layoutqa(&["build-scenegraph", "--in", p(&bad), "--out", p(&dir.path().join("o.json"))]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_kind(&out), "ingest");
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("p7") && msg.contains("seg9"), "{msg}");
    assert!(!dir.path().join("o.json").exists());
}

#[test]
fn failed_run_keeps_previous_output() {
    let dir = tempfile::tempdir().unwrap();
    let pages = write_pages(dir.path());
    let out = dir.path().join("graphs.json");
    fs::write(&out, b"previous").unwrap();
    let res = layoutqa(&["generate-qa", "--in", p(&pages), "--out", p(&out), "--total", "99999", "--ratios", "0.5,0.5"]);
    assert_eq!(res.status.code(), Some(1));
    assert_eq!(fs::read(&out).unwrap(), b"previous");
    let leftovers = fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(leftovers, 2, "temp file left behind");
}

#[test]
fn full_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let pages = write_pages(dir.path());
    let graphs = dir.path().join("graphs.json");
    let from_layout = dir.path().join("a.json");
    let from_graphs = dir.path().join("b.json");
    let bank = dir.path().join("bank.json");
    fs::write(&bank, layoutqa::question::DEFAULT_BANK).unwrap();

    assert!(layoutqa(&["build-scenegraph", "--in", p(&pages), "--out", p(&graphs)]).status.success());
    let gen = |input: &Path, out: &Path| {
        layoutqa(&[
            "generate-qa", "--in", p(input), "--templates", p(&bank), "--total", "200", "--ratios", "0.7,0.2,0.1",
            "--seed", "11", "--out", p(out),
        ])
    };
    assert!(gen(&pages, &from_layout).status.success());
    assert!(gen(&graphs, &from_graphs).status.success());
    // Scene graphs written to disk carry everything generation needs.
    assert_eq!(fs::read(&from_layout).unwrap(), fs::read(&from_graphs).unwrap());

    let stats = layoutqa(&["stats", "--in", p(&from_layout)]);
    assert!(stats.status.success());
    let v: serde_json::Value = serde_json::from_slice(&stats.stdout).unwrap();
    assert_eq!(v["total"], 200);
    assert_eq!(v["splits"]["train"], 140);
    assert_eq!(v["splits"]["val"], 40);
    assert_eq!(v["splits"]["test"], 20);

    // Predict "yes" everywhere and score it.
    let ds = layoutqa::question::Dataset::parse(&fs::read(&from_layout).unwrap()).unwrap();
    let preds: String = ds
        .questions
        .iter()
        .map(|q| format!("{{\"question_id\":\"{}\",\"prediction\":\"YES\"}}\n", q.question_id))
        .collect();
    let pred_path = dir.path().join("preds.jsonl");
    fs::write(&pred_path, preds).unwrap();
    let report = dir.path().join("report.json");
    let res = layoutqa(&["evaluate", "--in", p(&from_layout), "--predictions", p(&pred_path), "--out", p(&report)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let r: serde_json::Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    let yes = ds.questions.iter().filter(|q| q.answer.as_str() == "yes").count();
    assert_eq!(r["count_scored"], 200);
    assert_eq!(r["count_skipped"], 0);
    assert!((r["corpus_score"].as_f64().unwrap() - 100.0 * yes as f64 / 200.0).abs() < 1e-9);
}

#[test]
fn funsd_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let forms = dir.path().join("forms");
    fs::create_dir(&forms).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut expected = 0;
    for i in 0..8 {
        let (json, answers) = common::synthetic_form(&mut rng, 3 + i % 4);
        expected += answers.len();
        fs::write(forms.join(format!("form{i}.json")), json).unwrap();
    }
    fs::write(forms.join("notes.txt"), "ignored").unwrap();
    let out = dir.path().join("funsd_qa.json");
    let res = layoutqa(&["derive-funsd-qa", "--in", p(&forms), "--ratios", "0.75,0.25", "--seed", "1", "--out", p(&out)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let ds = layoutqa::funsd_qa::FunsdDataset::parse(&fs::read(&out).unwrap()).unwrap();
    assert_eq!(ds.questions.len(), expected);
    assert_eq!(ds.contexts.len(), 8);

    // Echo the gold answers back: BLEU is 100 wherever the answer has a token.
    let preds: String = ds
        .questions
        .iter()
        .map(|q| serde_json::json!({"question_id": q.question_id, "prediction": q.answer_text}).to_string() + "\n")
        .collect();
    let pred_path = dir.path().join("preds.jsonl");
    fs::write(&pred_path, preds).unwrap();
    let report = dir.path().join("bleu.json");
    let res = layoutqa(&["evaluate", "--in", p(&out), "--predictions", p(&pred_path), "--out", p(&report)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let r: serde_json::Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    assert_eq!(r["metric"], "sentence_bleu");
    assert_eq!(r["corpus_score"], 100.0);

    let dup = dir.path().join("dup.jsonl");
    let line = serde_json::json!({"question_id": ds.questions[0].question_id, "prediction": "x"}).to_string();
    fs::write(&dup, format!("{line}\n{line}\n")).unwrap();
    let res = layoutqa(&["evaluate", "--in", p(&out), "--predictions", p(&dup), "--out", p(&report)]);
    assert_eq!(res.status.code(), Some(1));
    assert_eq!(error_kind(&res), "metrics");
}
