#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_autodirector")).current_dir(dir).args(args).output().expect("spawn autodirector")
}

pub fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Simulate `scenarios` as streams `0..n` and write `manifest.json`.
pub fn production(dir: &Path, scenarios: &[&str], frames: u64, seed: u64) {
    let mut streams = Vec::new();
    let mut geometry = Vec::new();
    let mut inputs = Vec::new();
    for (s, sc) in scenarios.iter().enumerate() {
        let (fr, sd, st) = (frames.to_string(), (seed + s as u64).to_string(), s.to_string());
        ok(dir, &["simulate", "--scenario", sc, "--frames", &fr, "--seed", &sd, "--noise", "2", "--drop", "0.1", "--stream", &st]);
        streams.push(serde_json::json!({ "track_groups": true }));
        geometry.push(serde_json::json!({ "width": 1920, "height": 1080, "fps": 30.0 }));
        inputs.push(serde_json::json!({
            "stream": s,
            "detections": format!("detections_{s}.txt"),
            "ground_truth": format!("truth_{s}.txt"),
        }));
    }
    let m = serde_json::json!({
        "director": { "min_cut_length": 2.0, "best_viewpoint_always": true, "streams": streams, "geometry": geometry },
        "inputs": inputs,
        "frames": frames,
        "outputs": { "dir": "out" },
    });
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&m).unwrap()).unwrap();
}

pub fn edit_manifest(dir: &Path, f: impl FnOnce(&mut serde_json::Value)) {
    let p = dir.join("manifest.json");
    let mut m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
    f(&mut m);
    std::fs::write(p, m.to_string()).unwrap();
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}
