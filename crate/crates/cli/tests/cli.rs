use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::sync::OnceLock;

use darkwand_core::dataset::write_csv;
use darkwand_core::pipeline::{synthetic_dataset, SynthDatasetOptions};
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_darkwand"));
    c.env_remove("DARKWAND_MODEL").env("RUST_LOG", "info");
    c
}

fn ok(cmd: &mut Command) -> Value {
    let out = cmd.output().unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn fails(cmd: &mut Command) -> String {
    let out: Output = cmd.output().unwrap();
    assert!(!out.status.success());
    assert!(out.stdout.is_empty());
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn workdir() -> &'static Path {
    static DIR: OnceLock<TempDir> = OnceLock::new();
    DIR.get_or_init(|| tempfile::tempdir().unwrap()).path()
}

/// SVM trained once on a small synthetic set.
fn model() -> PathBuf {
    static MODEL: OnceLock<PathBuf> = OnceLock::new();
    MODEL
        .get_or_init(|| {
            let path = workdir().join("svm.dgrm");
            ok(bin().args(["train", "--synthetic", "12", "--out"]).arg(&path));
            path
        })
        .clone()
}

fn synth_dir(name: &str, letter: &str, seed: &str) -> PathBuf {
    let dir = workdir().join(name);
    ok(bin().args(["synth", "--letter", letter, "--seed", seed, "--out"]).arg(&dir));
    dir
}

#[test]
fn train_reports_four_decimals() {
    let model = model();
    assert!(std::fs::read_to_string(&model).unwrap().starts_with("DGRM1\n"));
    let out = bin().args(["train", "--synthetic", "6", "--algo", "nb", "--split", "0.5", "--out"]).arg(workdir().join("nb.dgrm")).output().unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let v: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["algorithm"], "nb");
    assert_eq!(v["train_samples"], 6);
    assert_eq!(v["test_samples"], 6);
    let raw = stdout.split("\"accuracy\":").nth(1).unwrap();
    let digits = raw.split(',').next().unwrap();
    assert_eq!(digits.split('.').nth(1).unwrap().len(), 4, "{digits}");
}

#[test]
fn train_and_eval_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("letters.csv");
    let opts = SynthDatasetOptions { per_letter: 8, seed: 100, ..Default::default() };
    write_csv(&synthetic_dataset::<f64>(&['A', 'C'], &opts).unwrap(), &csv).unwrap();
    let model = dir.path().join("m.dgrm");
    let v = ok(bin().args(["train", "--labels", "0,2", "--max-per-label", "6", "--data"]).arg(&csv).arg("--out").arg(&model));
    assert_eq!(v["train_samples"].as_u64().unwrap() + v["test_samples"].as_u64().unwrap(), 12);
    assert_eq!(v["classes"], serde_json::json!([0, 2]));
    let e = ok(bin().args(["eval", "--data"]).arg(&csv).env("DARKWAND_MODEL", &model));
    assert_eq!(e["samples"], 16);
    assert_eq!(e["accuracy"].as_f64().unwrap(), 1.0);
}

#[test]
fn train_missing_file() {
    let err = fails(bin().args(["train", "--data", "/nonexistent/letters.csv", "--out"]).arg(workdir().join("x.dgrm")));
    assert!(err.contains("No such file"), "{err}");
    assert!(!workdir().join("x.dgrm").exists());
}

#[test]
fn synth_is_deterministic() {
    let a = synth_dir("a1", "A", "5");
    let b = synth_dir("a2", "A", "5");
    let frames: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).filter(|n| n.to_string_lossy().ends_with(".pgm")).collect();
    assert!(frames.len() >= 10);
    for name in frames {
        assert_eq!(std::fs::read(a.join(&name)).unwrap(), std::fs::read(b.join(&name)).unwrap());
    }
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["label"], 0);
    let err = fails(bin().args(["synth", "--letter", "A", "--seed", "5", "--out"]).arg(&a));
    assert!(err.contains("already contains frames"), "{err}");
    let err = fails(bin().args(["synth", "--letter", "Z", "--out"]).arg(workdir().join("z")));
    assert!(err.contains("'Z'"), "{err}");
}

#[test]
fn run_reports_dispatch() {
    let dir = synth_dir("run_a", "A", "77");
    let v = ok(bin().args(["run", "--frames"]).arg(&dir).arg("--model").arg(model()));
    assert_eq!(v["prediction"]["label"], 0);
    assert_eq!(v["pins"]["17"], "HIGH");

    let c = synth_dir("run_c", "C", "78");
    let v = ok(bin().args(["run", "--frames"]).arg(&c).env("DARKWAND_MODEL", model()));
    assert_eq!(v["prediction"]["letter"], "C");
    assert_eq!(v["pins"]["17"], "LOW");

    let bindings = workdir().join("bindings.txt");
    std::fs::write(&bindings, "C 4 HIGH\n").unwrap();
    let v = ok(bin().args(["run", "--frames"]).arg(&c).arg("--model").arg(model()).arg("--bindings").arg(&bindings));
    assert_eq!(v["pins"], serde_json::json!({"4": "HIGH"}));
}

#[test]
fn run_empty_and_bad_model() {
    let empty = workdir().join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    let v = ok(bin().args(["run", "--frames"]).arg(&empty).arg("--model").arg(model()));
    assert_eq!(v["frames_consumed"], 0);
    assert_eq!(v["events"], serde_json::json!([]));
    assert!(v["prediction"].is_null());

    let corrupt = workdir().join("corrupt.dgrm");
    let mut text = std::fs::read_to_string(model()).unwrap();
    text = text.replacen("plane 0 ", "plane 0 1", 1);
    std::fs::write(&corrupt, text).unwrap();
    let err = fails(bin().args(["run", "--frames"]).arg(&empty).arg("--model").arg(&corrupt));
    assert!(err.contains("checksum"), "{err}");
}

fn http_get(port: u16, path: &str) -> String {
    let mut s = TcpStream::connect(("127.0.0.1", port)).unwrap();
    write!(s, "GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").unwrap();
    let mut raw = String::new();
    s.read_to_string(&mut raw).unwrap();
    raw.split_once("\r\n\r\n").unwrap().1.to_string()
}

#[test]
fn serve_health_and_interrupt() {
    let mut child = bin().args(["serve", "--port", "0", "--model"]).arg(model()).stderr(Stdio::piped()).stdout(Stdio::null()).spawn().unwrap();
    let mut lines = BufReader::new(child.stderr.take().unwrap()).lines();
    let port: u16 = loop {
        let line = lines.next().expect("serve exited early").unwrap();
        if let Some(addr) = line.split("listening on http://").nth(1) {
            break addr.rsplit(':').next().unwrap().trim().parse().unwrap();
        }
    };
    let health: Value = serde_json::from_str(&http_get(port, "/health")).unwrap();
    assert_eq!(health["algorithm"], "svm");
    assert_eq!(health["classes"], serde_json::json!([0, 2]));

    let err = fails(bin().args(["serve", "--port", &port.to_string(), "--model"]).arg(model()));
    assert!(err.contains("binding"), "{err}");

    let status = Command::new("kill").args(["-INT", &child.id().to_string()]).status().unwrap();
    assert!(status.success());
    assert!(child.wait().unwrap().success());
}

#[test]
fn serve_bad_model() {
    let err = fails(bin().args(["serve", "--port", "0", "--model", "/nonexistent/model.dgrm"]));
    assert!(err.contains("loading model"), "{err}");
}
