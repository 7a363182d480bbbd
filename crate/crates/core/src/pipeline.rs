//! Whole-pipeline runs described by a manifest file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::director::{direct, Direction, InterestObjects};
use crate::error::{Error, Result};
use crate::evaluation::{instructions_to_cuts, CutArray};
use crate::exec::Exec;
use crate::ingest::{apply_mask, parse_detections, BinaryMask, DetectionSet};
use crate::model::{DirectorConfig, TrackMode};
use crate::projection::Lens;
use crate::smoothing::{build_camera_track, build_delayed_track, CameraTrack, DelayedParams};
use crate::tracking::{run_tracker, track_groups, Trace, TraceKind, TrackerParams};

/// Inputs of one stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamInput {
    pub stream: usize,
    pub detections: PathBuf,
    #[serde(default)]
    pub lens: Lens,
    #[serde(default)]
    pub ground_truth: Option<PathBuf>,
    /// Directory of `frame_NNNNNN.ppm` images.
    #[serde(default)]
    pub frames_dir: Option<PathBuf>,
    #[serde(default)]
    pub min_confidence: f64,
    /// Detection class that is tracked as people.
    #[serde(default)]
    pub track_class: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs { dir: default_out_dir() }
    }
}

/// Description of a multi-stream run. Relative paths are resolved against
/// the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineManifest {
    pub director: DirectorConfig,
    pub inputs: Vec<StreamInput>,
    /// Tracker settings; derived from stream 0's frame rate when absent.
    #[serde(default)]
    pub tracker: Option<TrackerParams>,
    /// Delayed smoothing settings for `track_mode = delayed`.
    #[serde(default)]
    pub delayed: Option<DelayedParams>,
    /// Production length in frames; defaults to the last detected frame.
    #[serde(default)]
    pub frames: Option<u64>,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(skip)]
    pub base: PathBuf,
}

impl PipelineManifest {
    pub fn from_json(text: &str, base: impl Into<PathBuf>) -> Result<Self> {
        let mut m: PipelineManifest = serde_json::from_str(text)?;
        m.base = base.into();
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text, base).map_err(|e| e.in_file(path))
    }

    pub fn validate(&self) -> Result<()> {
        self.director.validate()?;
        if self.inputs.len() != self.director.streams.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} inputs", self.director.streams.len()),
                found: self.inputs.len().to_string(),
            });
        }
        for (i, input) in self.inputs.iter().enumerate() {
            if input.stream != i {
                return Err(Error::invalid(format!("input {i} declares stream {}; streams must be dense from 0", input.stream)));
            }
        }
        if let Some(t) = &self.tracker {
            t.validate()?;
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve(&self.outputs.dir)
    }

    pub fn tracker_params(&self) -> TrackerParams {
        self.tracker.unwrap_or_else(|| TrackerParams::for_fps(self.director.geometry[0].fps))
    }

    pub fn delayed_params(&self, stream: usize) -> DelayedParams {
        self.delayed.unwrap_or_else(|| DelayedParams::for_fps(self.director.geometry[stream].fps))
    }
}

/// Detection files of every stream, read in parallel; masks applied.
pub fn load_detections(m: &PipelineManifest, exec: Exec) -> Result<Vec<DetectionSet>> {
    exec.map(&m.inputs, |input| {
        let path = m.resolve(&input.detections);
        let geom = &m.director.geometry[input.stream];
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let set = parse_detections(&bytes, Some(geom)).map_err(|e| e.in_file(&path))?;
        if set.stream != input.stream {
            return Err(Error::invalid(format!("file holds stream {}, manifest expects {}", set.stream, input.stream)).in_file(&path));
        }
        match &m.director.streams[input.stream].mask {
            Some(mask) => {
                let mpath = m.resolve(Path::new(mask));
                let bytes = std::fs::read(&mpath).map_err(|e| Error::io(&mpath, e))?;
                let mask = BinaryMask::from_pgm(&bytes).map_err(|e| e.in_file(&mpath))?;
                apply_mask(&set, &mask).map_err(|e| e.in_file(&mpath))
            }
            None => Ok(set),
        }
    })
    .into_iter()
    .collect()
}

/// Frames `0..n` of the production.
pub fn production_frames(m: &PipelineManifest, sets: &[DetectionSet]) -> u64 {
    m.frames.unwrap_or_else(|| sets.iter().map(DetectionSet::frame_end).max().unwrap_or(0))
}

/// Every finalized trace of a run, ids unique across streams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceFile {
    pub traces: Vec<Trace>,
}

impl TraceFile {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("traces serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: TraceFile = serde_json::from_str(text)?;
        for t in &f.traces {
            t.validate()?;
        }
        Ok(f)
    }

    pub fn count(&self, stream: usize, kind: TraceKind) -> usize {
        self.traces.iter().filter(|t| t.stream == stream && t.kind == kind).count()
    }
}

/// Track every stream in parallel, then add group traces. Ids are
/// renumbered from 1 in stream order, individuals before groups.
pub fn track_all(m: &PipelineManifest, sets: &[DetectionSet], exec: Exec) -> Result<TraceFile> {
    let params = m.tracker_params();
    let per_stream: Vec<Result<Vec<Trace>>> = exec.map(sets, |set| {
        let input = &m.inputs[set.stream];
        let people = set.of_class(input.track_class).with_min_confidence(input.min_confidence);
        run_tracker(&people, &params)
    });
    let mut traces = Vec::new();
    let mut next = 1;
    for (set, individuals) in sets.iter().zip(per_stream) {
        let mut individuals = individuals?;
        for t in &mut individuals {
            t.id = next;
            next += 1;
        }
        let groups = if m.director.streams[set.stream].track_groups {
            track_groups(&individuals, &set.geometry, &params, next)
        } else {
            Vec::new()
        };
        next += groups.len() as u64;
        traces.extend(individuals);
        traces.extend(groups);
    }
    Ok(TraceFile { traces })
}

/// Camera tracks for the trace kinds each stream has enabled.
pub fn camera_tracks(m: &PipelineManifest, traces: &TraceFile, exec: Exec) -> Result<Vec<CameraTrack>> {
    let cfg = &m.director;
    if let Some(t) = traces.traces.iter().find(|t| t.stream >= cfg.streams.len()) {
        return Err(Error::invalid(format!("trace {} on unknown stream {}", t.id, t.stream)));
    }
    let wanted: Vec<&Trace> = traces
        .traces
        .iter()
        .filter(|t| {
            let s = &cfg.streams[t.stream];
            match t.kind {
                TraceKind::Individual => s.track_individuals,
                TraceKind::Group => s.track_groups,
            }
        })
        .collect();
    exec.map(&wanted, |t| {
        let geom = &cfg.geometry[t.stream];
        match cfg.track_mode {
            TrackMode::Spline => build_camera_track(t, geom, cfg.streams[t.stream].fitting),
            TrackMode::Delayed => build_delayed_track(t, geom, m.delayed_params(t.stream)),
        }
    })
    .into_iter()
    .collect()
}

/// Output of the directing stage.
#[derive(Debug, Clone, PartialEq)]
pub struct Directed {
    pub tracks: Vec<CameraTrack>,
    pub direction: Direction,
    pub cuts: CutArray,
}

/// Direct a production from existing traces.
pub fn direct_all(m: &PipelineManifest, sets: &[DetectionSet], traces: &TraceFile, exec: Exec) -> Result<Directed> {
    let n = production_frames(m, sets);
    if n == 0 {
        return Err(Error::invalid("production has no frames; set `frames` in the manifest"));
    }
    let tracks = camera_tracks(m, traces, exec)?;
    let interest = InterestObjects::from_sets(sets, &m.director.objects_of_interest);
    let direction = direct(&tracks, 0..n, &interest, &m.director, exec)?;
    let cuts = instructions_to_cuts(&direction.instructions, m.director.geometry[0].fps, None)?;
    Ok(Directed { tracks, direction, cuts })
}

/// Detections, traces, and the directed result in one call.
pub fn run(m: &PipelineManifest, exec: Exec) -> Result<(Vec<DetectionSet>, TraceFile, Directed)> {
    let sets = load_detections(m, exec)?;
    let traces = track_all(m, &sets, exec)?;
    let directed = direct_all(m, &sets, &traces, exec)?;
    Ok((sets, traces, directed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FrameGeometry, StreamConfig};
    use crate::sim::{simulate_scene, Scenario, SimParams};

    fn manifest(dir: &Path, streams: usize, scenario: Scenario) -> PipelineManifest {
        let geom = FrameGeometry::new(1920, 1080, 30.0).unwrap();
        let mut inputs = Vec::new();
        for s in 0..streams {
            let mut p = SimParams::new(scenario, 200, 7 + s as u64).noise(1.0, 0.05);
            p.stream = s;
            let (set, _) = simulate_scene(&p).unwrap();
            let name = format!("det{s}.txt");
            std::fs::write(dir.join(&name), set.to_text()).unwrap();
            inputs.push(StreamInput {
                stream: s,
                detections: name.into(),
                lens: Lens::Flat,
                ground_truth: None,
                frames_dir: None,
                min_confidence: 0.0,
                track_class: 0,
            });
        }
        let mut streams_cfg = vec![StreamConfig::default(); streams];
        streams_cfg.iter_mut().for_each(|s| s.track_groups = true);
        PipelineManifest {
            director: DirectorConfig::new(streams_cfg, vec![geom; streams]),
            inputs,
            tracker: None,
            delayed: None,
            frames: None,
            outputs: Outputs::default(),
            base: dir.to_path_buf(),
        }
    }

    #[test]
    fn end_to_end_two_streams() {
        let dir = tempfile::tempdir().unwrap();
        let m = manifest(dir.path(), 2, Scenario::Crossing);
        let (sets, traces, d) = run(&m, Exec::Parallel).unwrap();
        assert_eq!(sets.len(), 2);
        for s in 0..2 {
            assert_eq!(traces.count(s, TraceKind::Individual), 2);
            assert_eq!(traces.count(s, TraceKind::Group), 1);
        }
        let mut ids: Vec<u64> = traces.traces.iter().map(|t| t.id).collect();
        ids.dedup();
        assert_eq!(ids, (1..=6).collect::<Vec<_>>());
        assert_eq!(d.direction.instructions.len(), 200);
        assert_eq!(d.cuts.duration, 200.0 / 30.0);
        assert_eq!(TraceFile::from_json(&traces.to_json()).unwrap(), traces);

        let (_, t2, d2) = run(&m, Exec::Sequential).unwrap();
        assert_eq!((t2, d2), (traces, d));
    }

    #[test]
    fn manifest_checks() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = manifest(dir.path(), 2, Scenario::Bouncing);
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(PipelineManifest::from_json(&text, dir.path()).unwrap(), m);
        m.inputs[1].stream = 5;
        assert!(m.validate().is_err());
        m.inputs.pop();
        assert!(m.validate().is_err());
    }

    #[test]
    fn missing_and_corrupt_files_are_named() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = manifest(dir.path(), 1, Scenario::Bouncing);
        std::fs::write(dir.path().join("bad.txt"), "autodirector-detections v1 0 1920 1080 30\n1 0 0.9 x 1 1 1\n").unwrap();
        m.inputs[0].detections = "bad.txt".into();
        let e = load_detections(&m, Exec::Sequential).unwrap_err().to_string();
        assert!(e.contains("bad.txt") && e.contains("line 2"), "{e}");
        m.inputs[0].detections = "nope.txt".into();
        assert!(load_detections(&m, Exec::Sequential).unwrap_err().to_string().contains("nope.txt"));
    }

    #[test]
    fn delayed_mode_runs() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = manifest(dir.path(), 1, Scenario::Crossing);
        m.director.track_mode = TrackMode::Delayed;
        let (_, _, d) = run(&m, Exec::Parallel).unwrap();
        assert_eq!(d.direction.instructions.len(), 200);
    }
}
