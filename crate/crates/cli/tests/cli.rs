use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn auscult(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_auscult"))
        .args(args)
        .env_remove("AUSCULT_SEED")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = auscult(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name).display().to_string()
}

fn tree_hashes(root: &Path) -> BTreeMap<PathBuf, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let digest = Sha256::digest(std::fs::read(&p).unwrap());
                let hex = digest.iter().map(|b| format!("{b:02x}")).collect();
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), hex);
            }
        }
    }
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn fixtures_then_augment_counts() {
    let d = tempfile::tempdir().unwrap();
    let fx = d.path().join("fx");
    let aug = d.path().join("aug");
    ok(&["fixtures", "--seed", "1", "--count", "4", "--out", s(&fx)]);
    let manifest = fx.join("manifest.csv");
    let config = fx.join("config.json");
    ok(&["augment", "--manifest", s(&manifest), "--config", s(&config), "--seed", "1", "--out", s(&aug), "--copies", "2"]);
    let names: Vec<String> = std::fs::read_dir(&aug).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    let count = |f: &dyn Fn(&str) -> bool| names.iter().filter(|n| f(n)).count();
    assert_eq!(count(&|n| n.ends_with(".wav") && !n.contains("__ecg__")), 8);
    assert_eq!(count(&|n| n.contains("__ecg__aug") && n.ends_with(".wav")), 8);
    assert_eq!(count(&|n| n.ends_with(".json")), 8);
    let side: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(aug.join("fx002__aug1.json")).unwrap()).unwrap();
    assert_eq!(side["seed"], 1);
    assert!(side["plan"]["pcg"].get("am").is_some());
}

#[test]
fn fragments_flags() {
    let d = tempfile::tempdir().unwrap();
    let fx = d.path().join("fx");
    let aug = d.path().join("aug");
    ok(&["fixtures", "--seed", "2", "--count", "1", "--out", s(&fx)]);
    ok(&[
        "augment", "--manifest", s(&fx.join("manifest.csv")), "--config", s(&fx.join("config.json")),
        "--out", s(&aug), "--copies", "1", "--fragment-seconds", "1.5", "--fragments", "3",
    ]);
    for j in 0..3 {
        assert!(aug.join(format!("fx000__aug0__frag{j}.wav")).exists());
        assert!(aug.join(format!("fx000__ecg__aug0__frag{j}.wav")).exists());
    }
}

#[test]
fn identical_command_lines_identical_trees() {
    let d = tempfile::tempdir().unwrap();
    let mut trees = Vec::new();
    for run in ["a", "b"] {
        let fx = d.path().join(run).join("fx");
        let aug = d.path().join(run).join("aug");
        ok(&["fixtures", "--seed", "9", "--count", "2", "--out", s(&fx)]);
        ok(&["augment", "--manifest", s(&fx.join("manifest.csv")), "--config", s(&fx.join("config.json")), "--seed", "4", "--out", s(&aug), "--copies", "2"]);
        trees.push(tree_hashes(&d.path().join(run)));
    }
    assert!(trees[0].len() > 20);
    assert_eq!(trees[0], trees[1]);
}

#[test]
fn seed_env_fallback_and_flag_precedence() {
    let d = tempfile::tempdir().unwrap();
    let fx = d.path().join("fx");
    ok(&["fixtures", "--seed", "3", "--count", "1", "--out", s(&fx)]);
    let run = |name: &str, env: Option<&str>, flag: Option<&str>| {
        let out_dir = d.path().join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_auscult"));
        cmd.env_remove("AUSCULT_SEED");
        if let Some(v) = env {
            cmd.env("AUSCULT_SEED", v);
        }
        cmd.args(["augment", "--manifest", s(&fx.join("manifest.csv")), "--config", s(&fx.join("config.json")), "--copies", "1", "--out", s(&out_dir)]);
        if let Some(v) = flag {
            cmd.args(["--seed", v]);
        }
        assert!(cmd.output().unwrap().status.success());
        std::fs::read(out_dir.join("fx000__aug0.wav")).unwrap()
    };
    let by_flag = run("flag", None, Some("21"));
    assert_eq!(run("env", Some("21"), None), by_flag);
    assert_eq!(run("both", Some("5"), Some("21")), by_flag);
    assert_ne!(run("other", Some("5"), None), by_flag);
}

#[test]
fn metrics_on_perfect_classifier() {
    let out = ok(&["metrics", "--preds", &data("perfect_preds.csv"), "--labels", &data("perfect_labels.csv")]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].trim_start().starts_with("Acc"));
    assert!(lines[1].trim_end().ends_with("1.000"), "{}", lines[1]);
}

#[test]
fn errors_exit_nonzero_with_message() {
    let d = tempfile::tempdir().unwrap();
    let bad = auscult(&["metrics", "--preds", "nope.csv", "--labels", "nope.csv"]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("error"));

    let flag = auscult(&["metrics", "--bogus"]);
    assert!(!flag.status.success());
    assert!(!flag.stderr.is_empty());

    let fx = d.path().join("fx");
    ok(&["fixtures", "--count", "1", "--out", s(&fx)]);
    let cfg = d.path().join("bad.json");
    std::fs::write(&cfg, r#"{"copies": 1, "augment": {"pcg_gain": 0.5}}"#).unwrap();
    let schema = auscult(&["augment", "--manifest", s(&fx.join("manifest.csv")), "--config", s(&cfg), "--out", s(&d.path().join("o"))]);
    assert!(!schema.status.success());
    assert!(String::from_utf8_lossy(&schema.stderr).contains("pcg_gain"));

    let m = d.path().join("m.csv");
    std::fs::write(&m, "id,pcg,ecg,annotations,label\na,fx/pcg/fx000.wav,,,normal\nb,fx/pcg/fx000.wav,,,ambiguous\n").unwrap();
    let row = auscult(&["augment", "--manifest", s(&m), "--out", s(&d.path().join("o"))]);
    assert!(String::from_utf8_lossy(&row.stderr).contains("row 3"));
}

#[test]
fn rearrange_and_hpss_commands() {
    let d = tempfile::tempdir().unwrap();
    let fx = d.path().join("fx");
    ok(&["fixtures", "--seed", "1", "--count", "1", "--out", s(&fx)]);
    let pcg = fx.join("pcg/fx000.wav");
    let plan = ok(&[
        "rearrange", "--input", s(&pcg), "--cycles", s(&fx.join("cycles/fx000.csv")), "--out", s(&d.path().join("r.wav")),
        "--cycles-out", s(&d.path().join("r.csv")), "--mode", "cycles", "--seed", "2",
    ]);
    let plan: serde_json::Value = serde_json::from_str(&plan).unwrap();
    assert_eq!(plan["mode"], "cycles");
    assert!(d.path().join("r.csv").exists());

    let draw = ok(&[
        "hpss", "--input", s(&pcg), "--harmonic", s(&d.path().join("h.wav")), "--percussive", s(&d.path().join("p.wav")),
        "--augment", s(&d.path().join("a.wav")), "--seed", "1",
    ]);
    let draw: serde_json::Value = serde_json::from_str(&draw).unwrap();
    assert_eq!(draw["status"], "applied");
    for f in ["h.wav", "p.wav", "a.wav"] {
        assert!(d.path().join(f).exists());
    }
}

#[test]
fn train_then_sample() {
    let d = tempfile::tempdir().unwrap();
    let fx = d.path().join("fx");
    ok(&["fixtures", "--seed", "1", "--count", "2", "--out", s(&fx)]);
    let ckpt = d.path().join("model.ckpt");
    let report = d.path().join("report.json");
    ok(&["ddpm-train", "--manifest", s(&fx.join("manifest.csv")), "--out", s(&ckpt), "--steps", "3", "--report", s(&report), "--seed", "1"]);
    let rep: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(rep["losses"].as_array().unwrap().len(), 3);
    let wav = d.path().join("gen.wav");
    ok(&["ddpm-sample", "--checkpoint", s(&ckpt), "--ecg", s(&fx.join("ecg/fx001.wav")), "--out", s(&wav), "--label", "abnormal"]);
    let bytes = std::fs::read(&wav).unwrap();
    assert_eq!(&bytes[..4], b"RIFF");

    let bad = auscult(&["ddpm-sample", "--checkpoint", s(&report), "--ecg", s(&fx.join("ecg/fx001.wav")), "--out", s(&wav)]);
    assert!(!bad.status.success());
}
