//! Multi-object tracking: Kalman prediction plus Hungarian assignment on
//! `1 - IoU`, and merged group traces.

mod group;
pub mod hungarian;
pub mod kalman;

use serde::{Deserialize, Serialize};

pub use group::{group_box, track_groups};
pub use hungarian::hungarian;
pub use kalman::{KalmanParams, KalmanState};

use crate::error::{Error, Result};
use crate::ingest::DetectionSet;
use crate::model::{BoundingBox, Detection};

/// Intersection over union of two boxes, in `[0, 1]`.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inter = a.intersection_area(b);
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    Individual,
    Group,
}

type EntryRepr = (u64, f64, f64, f64, f64, bool);

/// One frame of a trace. Serialized as `[frame, cx, cy, w, h, observed]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "EntryRepr", into = "EntryRepr")]
pub struct TraceEntry {
    pub frame: u64,
    pub bbox: BoundingBox,
    /// A detection was matched at this frame.
    pub observed: bool,
}

impl From<EntryRepr> for TraceEntry {
    fn from((frame, cx, cy, w, h, observed): EntryRepr) -> Self {
        TraceEntry { frame, bbox: BoundingBox { cx, cy, w, h }, observed }
    }
}

impl From<TraceEntry> for EntryRepr {
    fn from(e: TraceEntry) -> Self {
        (e.frame, e.bbox.cx, e.bbox.cy, e.bbox.w, e.bbox.h, e.observed)
    }
}

/// Identity-consistent run of boxes over consecutive frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trace {
    pub id: u64,
    pub stream: usize,
    pub kind: TraceKind,
    pub entries: Vec<TraceEntry>,
}

impl Trace {
    pub fn start(&self) -> u64 {
        self.entries.first().map_or(0, |e| e.frame)
    }

    /// Last frame, inclusive.
    pub fn end(&self) -> u64 {
        self.entries.last().map_or(0, |e| e.frame)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, frame: u64) -> bool {
        !self.entries.is_empty() && frame >= self.start() && frame <= self.end()
    }

    pub fn at(&self, frame: u64) -> Option<&TraceEntry> {
        if !self.contains(frame) {
            return None;
        }
        self.entries.get((frame - self.start()) as usize)
    }

    /// Box at `frame`, holding the first/last box outside the range.
    pub fn box_at_clamped(&self, frame: u64) -> BoundingBox {
        let f = frame.clamp(self.start(), self.end());
        self.entries[(f - self.start()) as usize].bbox
    }

    pub fn observed_count(&self) -> usize {
        self.entries.iter().filter(|e| e.observed).count()
    }

    pub fn observed_ratio(&self) -> f64 {
        if self.entries.is_empty() {
            0.0
        } else {
            self.observed_count() as f64 / self.entries.len() as f64
        }
    }

    /// Drop trailing unobserved entries.
    pub fn strip_tail(&mut self) {
        while self.entries.last().is_some_and(|e| !e.observed) {
            self.entries.pop();
        }
    }

    /// Contiguous frames, valid boxes, at least one observation, observed tail.
    pub fn validate(&self) -> Result<()> {
        if self.observed_count() == 0 {
            return Err(Error::invalid(format!("trace {} has no observed entry", self.id)));
        }
        for w in self.entries.windows(2) {
            if w[1].frame != w[0].frame + 1 {
                return Err(Error::invalid(format!(
                    "trace {} not contiguous at frame {}",
                    self.id, w[0].frame
                )));
            }
        }
        for e in &self.entries {
            e.bbox.validate()?;
        }
        if !self.entries.last().is_some_and(|e| e.observed) {
            return Err(Error::invalid(format!("trace {} ends unobserved", self.id)));
        }
        Ok(())
    }
}

/// Gating and lifetime parameters, in frames where applicable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackerParams {
    /// Minimum IoU for an assignment to count as a match.
    pub iou_gate: f64,
    /// A trace is closed after more than this many frames without a match.
    pub max_coast: u64,
    pub min_trace_len: usize,
    pub min_observed_ratio: f64,
    /// Group outlier radius as a fraction of the frame diagonal.
    pub group_outlier_fraction: f64,
    #[serde(default)]
    pub kalman: KalmanParams,
}

impl TrackerParams {
    /// Defaults: coast for one second, keep traces of two seconds or more.
    pub fn for_fps(fps: f64) -> Self {
        TrackerParams {
            iou_gate: 0.3,
            max_coast: (fps.round() as u64).max(1),
            min_trace_len: ((2.0 * fps).round() as usize).max(1),
            min_observed_ratio: 0.6,
            group_outlier_fraction: 0.3,
            kalman: KalmanParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.iou_gate > 0.0 && self.iou_gate < 1.0) {
            return Err(Error::invalid(format!("iou_gate {} outside (0, 1)", self.iou_gate)));
        }
        if self.max_coast < 1 {
            return Err(Error::invalid("max_coast must be at least 1"));
        }
        if !(self.min_observed_ratio > 0.0 && self.min_observed_ratio <= 1.0) {
            return Err(Error::invalid("min_observed_ratio outside (0, 1]"));
        }
        if !(self.group_outlier_fraction > 0.0) {
            return Err(Error::invalid("group_outlier_fraction must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct ActiveTrace {
    id: u64,
    filter: KalmanState,
    entries: Vec<TraceEntry>,
    misses: u64,
}

impl ActiveTrace {
    fn close(self, stream: usize) -> Trace {
        Trace { id: self.id, stream, kind: TraceKind::Individual, entries: self.entries }
    }
}

/// Frame-by-frame tracker for one stream.
#[derive(Debug, Clone)]
pub struct Tracker {
    stream: usize,
    params: TrackerParams,
    active: Vec<ActiveTrace>,
    closed: Vec<Trace>,
    next_id: u64,
    last_frame: Option<u64>,
}

impl Tracker {
    pub fn new(stream: usize, params: TrackerParams) -> Self {
        Tracker { stream, params, active: Vec::new(), closed: Vec::new(), next_id: 0, last_frame: None }
    }

    pub fn active_count(&self) -> usize {
        self.active.len()
    }

    /// Process the detections of `frame`. Skipped frames are treated as
    /// frames without detections.
    pub fn step(&mut self, frame: u64, detections: &[Detection]) -> Result<()> {
        if let Some(last) = self.last_frame {
            if frame <= last {
                return Err(Error::OutOfOrderFrame { last, got: frame });
            }
            for f in last + 1..frame {
                self.step_one(f, &[]);
            }
        }
        if let Some(d) = detections.iter().find(|d| d.frame != frame) {
            return Err(Error::invalid(format!("detection of frame {} passed for frame {frame}", d.frame)));
        }
        self.step_one(frame, detections);
        self.last_frame = Some(frame);
        Ok(())
    }

    fn step_one(&mut self, frame: u64, detections: &[Detection]) {
        let kp = self.params.kalman;
        let predicted: Vec<(KalmanState, BoundingBox)> =
            self.active.iter().map(|t| t.filter.predict(&kp)).collect();

        let mut det_matched = vec![false; detections.len()];
        let mut trace_match: Vec<Option<usize>> = vec![None; self.active.len()];
        if !predicted.is_empty() && !detections.is_empty() {
            let cost: Vec<Vec<f64>> = predicted
                .iter()
                .map(|(_, p)| detections.iter().map(|d| 1.0 - iou(p, &d.bbox)).collect())
                .collect();
            for (i, j) in hungarian(&cost) {
                if 1.0 - cost[i][j] >= self.params.iou_gate {
                    trace_match[i] = Some(j);
                    det_matched[j] = true;
                }
            }
        }

        for ((t, (pred_state, pred_box)), m) in self.active.iter_mut().zip(predicted).zip(trace_match) {
            match m {
                Some(j) => {
                    t.filter = pred_state.correct(&detections[j].bbox, &kp);
                    t.entries.push(TraceEntry { frame, bbox: t.filter.bbox(), observed: true });
                    t.misses = 0;
                }
                None => {
                    t.filter = pred_state;
                    t.entries.push(TraceEntry { frame, bbox: pred_box, observed: false });
                    t.misses += 1;
                }
            }
        }

        for (d, _) in detections.iter().zip(&det_matched).filter(|(_, m)| !**m) {
            let filter = KalmanState::new(&d.bbox, &kp);
            self.active.push(ActiveTrace {
                id: self.next_id,
                filter,
                entries: vec![TraceEntry { frame, bbox: d.bbox, observed: true }],
                misses: 0,
            });
            self.next_id += 1;
        }

        let max_coast = self.params.max_coast;
        let (done, alive): (Vec<_>, Vec<_>) =
            std::mem::take(&mut self.active).into_iter().partition(|t| t.misses > max_coast);
        self.active = alive;
        self.closed.extend(done.into_iter().map(|t| t.close(self.stream)));
    }

    /// Close every remaining trace and return all traces, ordered by id.
    pub fn finish(mut self) -> Vec<Trace> {
        let stream = self.stream;
        self.closed.extend(self.active.into_iter().map(|t| t.close(stream)));
        self.closed.sort_by_key(|t| t.id);
        self.closed
    }
}

/// Strip unobserved tails, then keep traces long enough and observed often
/// enough.
pub fn finalize_traces(closed: Vec<Trace>, params: &TrackerParams) -> Vec<Trace> {
    closed
        .into_iter()
        .filter_map(|mut t| {
            t.strip_tail();
            (t.len() >= params.min_trace_len
                && t.observed_count() > 0
                && t.observed_ratio() >= params.min_observed_ratio)
                .then_some(t)
        })
        .collect()
}

/// Track every frame of `set` and return the finalized individual traces.
pub fn run_tracker(set: &DetectionSet, params: &TrackerParams) -> Result<Vec<Trace>> {
    params.validate()?;
    let mut tracker = Tracker::new(set.stream, *params);
    for (&frame, dets) in &set.frames {
        tracker.step(frame, dets)?;
    }
    Ok(finalize_traces(tracker.finish(), params))
}
