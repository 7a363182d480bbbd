//! Independent oracles and fixtures shared by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;

use autodirector::pipeline::{Outputs, PipelineManifest, StreamInput};
use autodirector::projection::Lens;
use autodirector::sim::{simulate_scene, GroundTruth, Scenario, SimParams};
use autodirector::tracking::Trace;
use autodirector::{DirectorConfig, FrameGeometry, StreamConfig};

/// Minimum total cost over every maximal matching, by enumeration.
pub fn brute_force_assignment(c: &[Vec<f64>]) -> f64 {
    let n = c.len();
    let m = c.first().map_or(0, Vec::len);
    if n == 0 || m == 0 {
        return 0.0;
    }
    fn rec(c: &[Vec<f64>], row: usize, used: &mut Vec<bool>, left: usize, acc: f64, best: &mut f64) {
        let n = c.len();
        if left == 0 {
            *best = best.min(acc);
            return;
        }
        if n - row < left {
            return;
        }
        // this row may stay unmatched only if enough rows remain
        if n - row > left {
            rec(c, row + 1, used, left, acc, best);
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                rec(c, row + 1, used, left - 1, acc + c[row][j], best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    rec(c, 0, &mut vec![false; m], n.min(m), 0.0, &mut best);
    best
}

/// Share of a trace's observed entries whose box best matches its
/// majority entity.
pub fn identity_purity(trace: &Trace, gt: &GroundTruth) -> f64 {
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for e in trace.entries.iter().filter(|e| e.observed) {
        if let Some(id) = gt.best_match(e.frame, &e.bbox) {
            *counts.entry(id).or_default() += 1;
        }
    }
    counts.values().max().copied().unwrap_or(0) as f64 / trace.observed_count().max(1) as f64
}

pub fn hd() -> FrameGeometry {
    FrameGeometry::new(1920, 1080, 30.0).unwrap()
}

/// Simulated multi-stream production written under `dir`.
pub fn sim_manifest(dir: &std::path::Path, scenarios: &[Scenario], frames: u64, seed: u64) -> PipelineManifest {
    let mut inputs = Vec::new();
    for (s, sc) in scenarios.iter().enumerate() {
        let mut p = SimParams::new(*sc, frames, seed.wrapping_add(s as u64)).noise(2.0, 0.1);
        p.stream = s;
        let (set, truth) = simulate_scene(&p).unwrap();
        std::fs::write(dir.join(format!("det{s}.txt")), set.to_text()).unwrap();
        std::fs::write(dir.join(format!("gt{s}.txt")), truth.to_text(s, &p.geometry)).unwrap();
        inputs.push(StreamInput {
            stream: s,
            detections: format!("det{s}.txt").into(),
            lens: Lens::Flat,
            ground_truth: Some(format!("gt{s}.txt").into()),
            frames_dir: None,
            min_confidence: 0.0,
            track_class: 0,
        });
    }
    let mut streams = vec![StreamConfig::default(); scenarios.len()];
    streams.iter_mut().for_each(|s| s.track_groups = true);
    let mut director = DirectorConfig::new(streams, vec![hd(); scenarios.len()]);
    director.rng_seed = seed;
    PipelineManifest {
        director,
        inputs,
        tracker: None,
        delayed: None,
        frames: Some(frames),
        outputs: Outputs::default(),
        base: dir.to_path_buf(),
    }
}
