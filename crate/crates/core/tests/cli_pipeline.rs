//! Drives the `viscnet` binary through every command on a tiny dataset.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn viscnet(cmd: &str, config: &Path, output: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_viscnet"))
        .arg(cmd)
        .arg("--config")
        .arg(config)
        .arg("--output")
        .arg(output)
        .args(extra)
        .output()
        .expect("binary runs")
}

fn ok(out: Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn failure(out: Output) -> Value {
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    let last = stderr.lines().last().expect("an error line");
    serde_json::from_str(last).expect("machine-parsable error")
}

fn write(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn model() -> Value {
    json!({
        "input": [8, 32, 32], "tubelet": [4, 8, 8], "embed_dim": 16, "depth": 1, "heads": 2,
        "mlp_ratio": 2.0, "num_classes": 10, "k": 3, "omega_range": [270.0, 450.0],
        "sigma_floor": 1e-3, "encoder": {"kind": "joint"}, "pooling": "mean", "seed": 0
    })
}

#[test]
fn full_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let gen = write(
        root,
        "gen.json",
        &json!({
            "synth": {"video": {"frames": 8, "height": 32, "width": 32, "fps": 4}},
            "omegas_rpm": [270.0, 360.0, 450.0],
            "seed": 3
        }),
    );
    let stdout = ok(viscnet("gen", &gen, &root.join("data"), &["--workers", "2"]));
    assert!(stdout.starts_with("120 samples"), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("class ")).count(), 10);
    let manifest = std::fs::read(root.join("data/manifest.jsonl")).unwrap();
    ok(viscnet("gen", &gen, &root.join("data2"), &[]));
    assert_eq!(std::fs::read(root.join("data2/manifest.jsonl")).unwrap(), manifest);

    let pre = write(
        root,
        "pre.json",
        &json!({"manifest": "data/manifest.jsonl", "train": {"epochs": 2, "model": model()}}),
    );
    ok(viscnet("train", &pre, &root.join("pre"), &["--seed", "7"]));
    let report: Value =
        serde_json::from_slice(&std::fs::read(root.join("pre/pretrain_classify-report.json")).unwrap()).unwrap();
    assert_eq!(report["history"].as_array().unwrap().len(), 2);

    let bad = write(
        root,
        "bad.json",
        &json!({"manifest": "data/manifest.jsonl", "train": {"stage": "regress"}}),
    );
    let err = failure(viscnet("train", &bad, &root.join("bad"), &[]));
    assert_eq!(err["error"], "curriculum");
    assert!(err["message"].as_str().unwrap().contains("pretrain_classify"));

    let reg = write(
        root,
        "reg.json",
        &json!({"manifest": "data/manifest.jsonl", "train": {
            "stage": "regress", "epochs": 2, "init_checkpoint": "pre/pretrain_classify-best.safetensors"}}),
    );
    ok(viscnet("train", &reg, &root.join("reg"), &[]));
    let ckpt = root.join("reg/regress-best.safetensors");
    let ckpt_bytes = std::fs::read(&ckpt).unwrap();

    let cal = write(
        root,
        "cal.json",
        &json!({"checkpoint": "reg/regress-best.safetensors", "manifest": "data/manifest.jsonl"}),
    );
    ok(viscnet("calibrate", &cal, &root.join("cal"), &[]));
    assert!(root.join("reg/regress-best.calibration.json").is_file());
    let c: Value = serde_json::from_slice(&std::fs::read(root.join("cal/calibration.json")).unwrap()).unwrap();
    assert_eq!(c["fit_samples"], 30);
    assert!(c["fit"]["ce_after"].as_f64().unwrap() <= c["fit"]["ce_before"].as_f64().unwrap());

    let ev = write(
        root,
        "eval.json",
        &json!({"checkpoint": "reg/regress-best.safetensors", "manifest": "data/manifest.jsonl"}),
    );
    ok(viscnet("eval", &ev, &root.join("eval"), &[]));
    let m: Value = serde_json::from_slice(&std::fs::read(root.join("eval/metrics.json")).unwrap()).unwrap();
    for k in [
        "mae_log",
        "ause_modeled",
        "ause_random",
        "ce_before",
        "ce_after",
        "s",
        "accuracy",
        "confusion",
    ] {
        assert!(m.get(k).is_some(), "metrics lacks {k}");
    }
    assert_eq!(m["s"], c["s"]);
    assert_eq!(m["samples"], 60);
    assert_eq!(
        std::fs::read(&ckpt).unwrap(),
        ckpt_bytes,
        "eval must not touch its inputs"
    );
    assert_eq!(std::fs::read(root.join("data/manifest.jsonl")).unwrap(), manifest);

    let sw = write(
        root,
        "sweep.json",
        &json!({"kind": "data_efficiency", "manifest": "data/manifest.jsonl", "sweep": {
            "fractions": [0.5, 1.0], "seeds": [0],
            "pretrained_checkpoint": "pre/pretrain_classify-best.safetensors",
            "train": {"stage": "finetune_classify", "epochs": 1}}}),
    );
    let stdout = ok(viscnet("sweep", &sw, &root.join("sweep"), &[]));
    assert_eq!(stdout.lines().count(), 4, "{stdout}");

    let rep = write(
        root,
        "report.json",
        &json!({"metrics": "eval/metrics.json", "sweep": "sweep/sweep.json"}),
    );
    ok(viscnet("report", &rep, &root.join("report"), &[]));
    ok(viscnet("report", &rep, &root.join("report2"), &[]));
    for f in viscnet::cli::FIGURES.iter().chain(&["index.html"]) {
        let a = std::fs::read(root.join("report").join(f)).unwrap();
        assert!(a.len() > 100, "{f}");
        assert_eq!(
            a,
            std::fs::read(root.join("report2").join(f)).unwrap(),
            "{f} differs between runs"
        );
    }
    let html = std::fs::read_to_string(root.join("report/index.html")).unwrap();
    assert_eq!(html.matches("<img").count(), 6);

    let missing = write(
        root,
        "missing.json",
        &json!({"metrics": "eval/metrics.json", "sweep": "nope/sweep.json"}),
    );
    let err = failure(viscnet("report", &missing, &root.join("r3"), &[]));
    assert_eq!(err["error"], "missing-artifacts");
    assert!(err["message"].as_str().unwrap().contains("nope"));
}

#[test]
fn bad_inputs_fail_with_one_json_line() {
    let tmp = tempfile::tempdir().unwrap();
    let err = failure(viscnet("gen", &tmp.path().join("absent.json"), tmp.path(), &[]));
    assert_eq!(err["error"], "io");
    let cfg = write(tmp.path(), "typo.json", &json!({"repeat": 2}));
    let err = failure(viscnet("gen", &cfg, tmp.path(), &[]));
    assert_eq!(err["error"], "config");
    let ev = write(
        tmp.path(),
        "eval.json",
        &json!({"checkpoint": "none.safetensors", "manifest": "none.jsonl"}),
    );
    let err = failure(viscnet("eval", &ev, tmp.path(), &[]));
    assert_eq!(err["error"], "missing-artifacts");
}
