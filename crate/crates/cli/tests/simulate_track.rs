mod common;

use common::{ok, production, read_json, run, stderr};

#[test]
fn simulate_writes_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        ok(d.path(), &["simulate", "--scenario", "crossing", "--seed", "7", "--noise", "2", "--drop", "0.1"]);
    }
    for f in ["detections_0.txt", "truth_0.txt"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn unknown_scenario_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    let out = run(d.path(), &["simulate", "--scenario", "juggling"]);
    assert_eq!(out.status.code(), Some(1));
    let last = stderr(&out).lines().last().unwrap().to_string();
    let v: serde_json::Value = serde_json::from_str(&last).unwrap();
    assert_eq!(v["error"], "usage");
}

#[test]
fn crossing_tracks_two_people_and_a_group() {
    let d = tempfile::tempdir().unwrap();
    production(d.path(), &["crossing"], 300, 7);
    let text = ok(d.path(), &["track", "--manifest", "manifest.json"]);
    assert!(text.contains("stream 0: 2 individual, 1 group"), "{text}");
    let traces = read_json(&d.path().join("out/traces.json"));
    let kinds: Vec<&str> = traces["traces"].as_array().unwrap().iter().map(|t| t["kind"].as_str().unwrap()).collect();
    assert_eq!(kinds, ["individual", "individual", "group"]);
}

#[test]
fn empty_detections_track_to_nothing() {
    let d = tempfile::tempdir().unwrap();
    production(d.path(), &["crossing"], 90, 1);
    let det = d.path().join("detections_0.txt");
    let header = std::fs::read_to_string(&det).unwrap().lines().next().unwrap().to_string();
    std::fs::write(&det, header + "\n").unwrap();
    let text = ok(d.path(), &["track", "--manifest", "manifest.json"]);
    assert!(text.contains("stream 0: 0 individual, 0 group"), "{text}");
    assert!(read_json(&d.path().join("out/traces.json"))["traces"].as_array().unwrap().is_empty());
}

#[test]
fn corrupt_detections_name_the_file() {
    let d = tempfile::tempdir().unwrap();
    production(d.path(), &["crossing"], 90, 1);
    let det = d.path().join("detections_0.txt");
    let mut text = std::fs::read_to_string(&det).unwrap();
    text.push_str("12 0 0.9 not-a-number 3 4 5\n");
    std::fs::write(&det, text).unwrap();
    let out = run(d.path(), &["track", "--manifest", "manifest.json"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("detections_0.txt"), "{err}");
    let v: serde_json::Value = serde_json::from_str(err.lines().last().unwrap()).unwrap();
    assert_eq!(v["error"], "data");
}

#[test]
fn missing_manifest_is_a_data_error() {
    let d = tempfile::tempdir().unwrap();
    let out = run(d.path(), &["track", "--manifest", "nope.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("nope.json"));
}
