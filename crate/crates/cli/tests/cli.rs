use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn distnli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_distnli"))
        .args(args)
        .env_remove("DISTNLI_ROOT_SEED")
        .output()
        .expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = distnli(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn simulate(dir: &Path) -> String {
    let bundle = dir.join("bundle");
    let b = bundle.to_str().unwrap();
    ok_json(&[
        "simulate",
        "--out",
        b,
        "--n-train",
        "120",
        "--n-dev",
        "60",
        "--n-dev-s",
        "20",
        "--n-test-s",
        "40",
    ]);
    b.to_string()
}

const FAST: &[&str] = &["--seeds", "0,1", "--epochs", "3", "--hidden", "8"];

fn run(bundle: &str, out: &Path, method: &str, extra: &[&str]) -> Value {
    let mut args = vec![
        "run",
        "--bundle",
        bundle,
        "--out",
        out.to_str().unwrap(),
        "--method",
        method,
    ];
    args.extend_from_slice(FAST);
    args.extend_from_slice(extra);
    ok_json(&args)
}

#[test]
fn simulate_writes_every_split() {
    let dir = tempfile::tempdir().unwrap();
    let b = simulate(dir.path());
    for f in [
        "labelspace.json",
        "train.jsonl",
        "dev.jsonl",
        "dev_s.jsonl",
        "test_s.jsonl",
    ] {
        assert!(Path::new(&b).join(f).exists(), "{f} missing");
    }
}

#[test]
fn run_then_evaluate_agrees_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let b = simulate(dir.path());
    let out = dir.path().join("base");
    let summary = run(&b, &out, "baseline", &[]);
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["runs"].as_array().unwrap().len(), 2);
    assert_eq!(summary["mean"], manifest["mean"]);

    let report = ok_json(&[
        "evaluate",
        "--bundle",
        &b,
        "--pred",
        out.join("pred_seed0.jsonl").to_str().unwrap(),
    ]);
    let seed0 = &manifest["runs"][0]["report"];
    assert_eq!(report["kl_mean"], seed0["kl_mean"]);
    assert_eq!(report["jsd_mean"], seed0["jsd_mean"]);

    // Logit records with a label header are accepted too and score identically.
    let from_logits = ok_json(&[
        "evaluate",
        "--bundle",
        &b,
        "--pred",
        out.join("logits_seed0.jsonl").to_str().unwrap(),
    ]);
    assert!((from_logits["kl_mean"].as_f64().unwrap() - report["kl_mean"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn fit_temp_recovers_planted_temperature() {
    let dir = tempfile::tempdir().unwrap();
    let b = simulate(dir.path());
    // Logits 2 ln(counts) reproduce the human distribution at T = 2.
    let mut lines = vec![r#"{"labels":["entailment","neutral","contradiction"]}"#.to_string()];
    for line in std::fs::read_to_string(Path::new(&b).join("dev_s.jsonl"))
        .unwrap()
        .lines()
    {
        let ex: Value = serde_json::from_str(line).unwrap();
        let logits: Vec<f64> = ex["label_counts"]
            .as_array()
            .unwrap()
            .iter()
            .map(|c| 2.0 * (c.as_f64().unwrap() + 1e-3).ln())
            .collect();
        lines.push(
            serde_json::json!({"id": ex["id"], "logit_sets": [logits], "source": "deterministic"})
                .to_string(),
        );
    }
    let logits = dir.path().join("dev_s_logits.jsonl");
    std::fs::write(&logits, lines.join("\n") + "\n").unwrap();

    let fit_out = dir.path().join("t.json");
    let preds = dir.path().join("scaled.jsonl");
    let out = distnli(&[
        "fit-temp",
        "--bundle",
        &b,
        "--split",
        "dev_s",
        "--logits",
        logits.to_str().unwrap(),
        "--out",
        fit_out.to_str().unwrap(),
        "--apply-to",
        logits.to_str().unwrap(),
        "--pred-out",
        preds.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let fit: Value = serde_json::from_str(&std::fs::read_to_string(&fit_out).unwrap()).unwrap();
    let t = fit["temperature"].as_f64().unwrap();
    assert!((t - 2.0).abs() < 0.02, "fitted {t}");

    let report = ok_json(&[
        "evaluate",
        "--bundle",
        &b,
        "--split",
        "dev_s",
        "--pred",
        preds.to_str().unwrap(),
    ]);
    assert!(report["kl_mean"].as_f64().unwrap() < 1e-3);
}

#[test]
fn same_config_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let b = simulate(dir.path());
    let out = dir.path().join("mc");
    run(&b, &out, "mc-dropout", &["--k", "3"]);
    let first = std::fs::read(out.join("manifest.json")).unwrap();
    let pred = std::fs::read(out.join("pred_seed1.jsonl")).unwrap();
    run(&b, &out, "mc-dropout", &["--k", "3"]);
    assert_eq!(first, std::fs::read(out.join("manifest.json")).unwrap());
    assert_eq!(pred, std::fs::read(out.join("pred_seed1.jsonl")).unwrap());
}

#[test]
fn root_seed_env_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let b = simulate(dir.path());
    let a = run(&b, &dir.path().join("a"), "baseline", &[]);
    let out = Command::new(env!("CARGO_BIN_EXE_distnli"))
        .args([
            "run",
            "--bundle",
            &b,
            "--out",
            dir.path().join("b").to_str().unwrap(),
        ])
        .args(FAST)
        .env("DISTNLI_ROOT_SEED", "99")
        .output()
        .unwrap();
    assert!(out.status.success());
    let other: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_ne!(a["mean"], other["mean"]);
}

#[test]
fn sweep_curve_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let b = simulate(dir.path());
    let out = dir.path().join("sweep");
    let mut args = vec![
        "sweep-samples",
        "--bundle",
        &b,
        "--out",
        out.to_str().unwrap(),
        "--method",
        "ensemble",
        "--ks",
        "1,2,3",
    ];
    args.extend_from_slice(FAST);
    let v = ok_json(&args);
    assert_eq!(v["curve"].as_array().unwrap().len(), 3);
    let csv = std::fs::read_to_string(out.join("sweep_ensemble.csv")).unwrap();
    assert!(csv.starts_with("method,k,seed,kl,jsd,accuracy"));
    assert!(out.join("sweep_ensemble.svg").exists());

    let chance = dir.path().join("chance");
    run(&b, &chance, "chance", &[]);
    let reports = dir.path().join("report");
    let o = distnli(&[
        "export-report",
        chance.join("manifest.json").to_str().unwrap(),
        "--out",
        reports.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let md = String::from_utf8(o.stdout).unwrap();
    assert!(md.contains("chance (mean)"));
    assert!(md.contains("human (split-half)"));
    assert!(reports.join("report.csv").exists());
}

#[test]
fn entropy_curve_and_inspect() {
    let dir = tempfile::tempdir().unwrap();
    let b = simulate(dir.path());
    let base = dir.path().join("base");
    run(&b, &base, "baseline", &[]);
    let pred = format!("baseline={}", base.join("pred_seed0.jsonl").display());
    let out = dir.path().join("curves");
    let v = ok_json(&[
        "entropy-curve",
        "--bundle",
        &b,
        "--pred",
        &pred,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(v["series"], serde_json::json!(["baseline", "human"]));
    assert!(out.join("entropy_curve.csv").exists());

    let missing = format!("gone={}", dir.path().join("nope.jsonl").display());
    let report = ok_json(&[
        "inspect",
        "--bundle",
        &b,
        "--pred",
        &pred,
        "--pred",
        &missing,
        "--id",
        "test_s-00003",
        "--json",
    ]);
    assert_eq!(report["methods"].as_array().unwrap().len(), 1);
    assert_eq!(report["omitted"][0]["name"], "gone");

    let text = distnli(&["inspect", "--bundle", &b, "--pred", &pred, "--id", "test_s-00003"]);
    assert!(text.status.success());
    assert!(String::from_utf8(text.stdout).unwrap().contains("baseline"));
}

#[test]
fn distill_writes_student_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let b = simulate(dir.path());
    let out = dir.path().join("distill");
    let mut args = vec!["distill", "--bundle", &b, "--out", out.to_str().unwrap()];
    args.extend_from_slice(FAST);
    let v = ok_json(&args);
    assert!(v["teacher_temperature"].as_f64().unwrap() > 0.0);
    for f in ["train_relabeled.jsonl", "student.json", "pred_student.jsonl"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
}

#[test]
fn exit_codes_follow_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    let b = simulate(dir.path());
    let base = dir.path().join("base");
    run(&b, &base, "baseline", &[]);
    let pred = format!("baseline={}", base.join("pred_seed0.jsonl").display());

    let unknown = distnli(&["inspect", "--bundle", &b, "--pred", &pred, "--id", "no-such-id"]);
    assert_eq!(unknown.status.code(), Some(4));

    let no_bundle = distnli(&["run", "--bundle", dir.path().join("absent").to_str().unwrap()]);
    assert_eq!(no_bundle.status.code(), Some(7));

    let bad_k = distnli(&["run", "--bundle", &b, "--k", "0"]);
    assert_eq!(bad_k.status.code(), Some(6));

    let bad_flag = distnli(&["run", "--method", "nope"]);
    assert_eq!(bad_flag.status.code(), Some(2));
}
