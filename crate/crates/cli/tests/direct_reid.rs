mod common;

use common::{edit_manifest, ok, production, read_json, run};

fn instruction_lines(text: &str) -> Vec<Vec<f64>> {
    text.lines().skip(1).map(|l| l.split_whitespace().map(|t| t.parse().unwrap()).collect()).collect()
}

#[test]
fn single_stream_direction_uses_stream_zero() {
    let d = tempfile::tempdir().unwrap();
    production(d.path(), &["crossing"], 300, 7);
    ok(d.path(), &["direct", "--manifest", "manifest.json"]);
    let rows = instruction_lines(&std::fs::read_to_string(d.path().join("out/instructions.txt")).unwrap());
    assert_eq!(rows.len(), 300);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[0] as usize, i);
        assert_eq!(r[1], 0.0);
    }
    let cuts = read_json(&d.path().join("out/cuts.json"));
    assert_eq!(cuts["duration"], 10.0);
    assert!(cuts["cuts"].as_array().unwrap().iter().all(|c| c["angle"] == 0));
}

#[test]
fn segmented_direction_is_reproducible() {
    let d = tempfile::tempdir().unwrap();
    production(d.path(), &["crossing", "bouncing"], 300, 3);
    ok(d.path(), &["track", "--manifest", "manifest.json"]);
    let mut outputs = Vec::new();
    for o in ["a", "b"] {
        ok(d.path(), &["direct", "--manifest", "manifest.json", "--traces", "out/traces.json", "--segmented", "--seed", "5", "--out", o]);
        outputs.push((std::fs::read(d.path().join(o).join("instructions.txt")).unwrap(), std::fs::read(d.path().join(o).join("cuts.json")).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    ok(d.path(), &["--sequential", "direct", "--manifest", "manifest.json", "--segmented", "--seed", "5", "--out", "c"]);
    assert_eq!(std::fs::read(d.path().join("c/instructions.txt")).unwrap(), outputs[0].0);
}

#[test]
fn no_traces_gives_full_frame() {
    let d = tempfile::tempdir().unwrap();
    production(d.path(), &["crossing"], 90, 1);
    let det = d.path().join("detections_0.txt");
    let header = std::fs::read_to_string(&det).unwrap().lines().next().unwrap().to_string();
    std::fs::write(&det, header + "\n").unwrap();
    ok(d.path(), &["direct", "--manifest", "manifest.json"]);
    let rows = instruction_lines(&std::fs::read_to_string(d.path().join("out/instructions.txt")).unwrap());
    assert_eq!(rows.len(), 90);
    assert!(rows.iter().all(|r| r[1..] == [0.0, 960.0, 540.0, 1.0]));
}

#[test]
fn reid_writes_one_direction_per_identity() {
    let d = tempfile::tempdir().unwrap();
    production(d.path(), &["crossing", "bouncing"], 300, 11);
    ok(d.path(), &["reid", "--manifest", "manifest.json", "--provider", "synthetic", "--k", "2"]);
    for f in ["features.txt", "clusters.json", "identity_0.txt", "identity_1.txt", "identity_0_cuts.json", "identity_1_cuts.json"] {
        assert!(d.path().join("out").join(f).exists(), "{f}");
    }
    assert!(!d.path().join("out/identity_2.txt").exists());
    let clusters = read_json(&d.path().join("out/clusters.json"));
    assert_eq!(clusters["tracks"].as_array().unwrap().len(), 4);

    let out = run(d.path(), &["reid", "--manifest", "manifest.json", "--provider", "synthetic", "--k", "9"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn uncertain_cluster_falls_back_to_the_group() {
    let d = tempfile::tempdir().unwrap();
    production(d.path(), &["enter_exit"], 300, 7);
    ok(d.path(), &["track", "--manifest", "manifest.json"]);
    let traces = read_json(&d.path().join("out/traces.json"));
    let mut people: Vec<(u64, u64)> = traces["traces"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|t| t["kind"] == "individual")
        .map(|t| (t["entries"][0][0].as_u64().unwrap(), t["id"].as_u64().unwrap()))
        .collect();
    people.sort();
    assert_eq!(people.len(), 3);
    // first person alone; the other two close together but far from the centroid
    let lines = [
        format!("{} 3 1 0 0", people[0].1),
        format!("{} 3 0 1 0", people[1].1),
        format!("{} 3 0 0.8 0.6", people[2].1),
    ];
    std::fs::write(d.path().join("features.txt"), lines.join("\n") + "\n").unwrap();
    ok(d.path(), &["reid", "--manifest", "manifest.json", "--traces", "out/traces.json", "--features", "features.txt", "--k", "2", "--margin", "0.05"]);
    let clusters = read_json(&d.path().join("out/clusters.json"));
    let tracks = clusters["tracks"].as_array().unwrap();
    let first = tracks.iter().find(|t| t["track_id"] == people[0].1).unwrap();
    assert_eq!(first["uncertain"], false);
    assert!(tracks.iter().filter(|t| t["track_id"] != people[0].1).all(|t| t["uncertain"] == true));

    let other = 1 - first["cluster"].as_u64().unwrap();
    let identity = std::fs::read_to_string(d.path().join(format!("out/identity_{other}.txt"))).unwrap();
    edit_manifest(d.path(), |m| m["director"]["streams"][0]["track_individuals"] = false.into());
    ok(d.path(), &["direct", "--manifest", "manifest.json", "--traces", "out/traces.json", "--out", "groups"]);
    let groups = std::fs::read_to_string(d.path().join("groups/instructions.txt")).unwrap();
    assert_eq!(identity, groups);
    let rows = instruction_lines(&groups);
    assert!(rows.iter().filter(|r| r[4] > 1.0).count() > 250);
}
