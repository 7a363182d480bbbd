use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exec::Exec;
use crate::model::DirectorConfig;
use crate::smoothing::CameraTrack;

use super::eligibility::{eligible_tracks, score, InterestObjects};

/// Identifies a camera track: stream index plus trace id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TrackKey {
    pub stream: usize,
    pub target: u64,
}

impl TrackKey {
    pub fn of(t: &CameraTrack) -> Self {
        TrackKey { stream: t.stream, target: t.target }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub key: TrackKey,
    pub score: f64,
}

/// Eligible candidates and their scores, per frame of a production range.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreTable {
    pub start: u64,
    pub frames: Vec<Vec<Candidate>>,
}

impl ScoreTable {
    /// Score every eligible track at every frame of `range`. Frames are
    /// independent and scored in parallel under [`Exec::Parallel`].
    pub fn build(
        tracks: &[CameraTrack],
        range: Range<u64>,
        interest: &InterestObjects,
        cfg: &DirectorConfig,
        exec: Exec,
    ) -> Self {
        let n = range.end.saturating_sub(range.start) as usize;
        let frames = exec.map_range(n, |i| {
            let frame = range.start + i as u64;
            eligible_tracks(tracks, frame, interest, cfg)
                .into_iter()
                .map(|j| {
                    let t = &tracks[j];
                    Candidate { key: TrackKey::of(t), score: score(t, frame, cfg.streams[t.stream].scoring_type, cfg) }
                })
                .collect()
        });
        ScoreTable { start: range.start, frames }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Highest score, ties to the smallest key.
fn best(cands: &[Candidate]) -> Option<Candidate> {
    cands.iter().copied().reduce(|a, b| {
        if b.score > a.score || (b.score == a.score && b.key < a.key) {
            b
        } else {
            a
        }
    })
}

/// The chosen track per frame; `None` shows the full frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionTimeline {
    pub start: u64,
    pub choices: Vec<Option<TrackKey>>,
}

impl SelectionTimeline {
    pub fn end(&self) -> u64 {
        self.start + self.choices.len() as u64
    }

    pub fn at(&self, frame: u64) -> Option<TrackKey> {
        frame.checked_sub(self.start).and_then(|i| self.choices.get(i as usize).copied().flatten())
    }

    /// Maximal runs of equal choices as `(first frame, length, choice)`.
    pub fn runs(&self) -> Vec<(u64, u64, Option<TrackKey>)> {
        let mut out: Vec<(u64, u64, Option<TrackKey>)> = Vec::new();
        for (i, c) in self.choices.iter().enumerate() {
            match out.last_mut() {
                Some((_, len, prev)) if prev == c => *len += 1,
                _ => out.push((self.start + i as u64, 1, *c)),
            }
        }
        out
    }
}

/// Best-viewpoint selection with a minimum hold time.
///
/// A shown track stays on screen for at least `min_cut_length`, past its own
/// end if necessary (its framing is held). Afterwards the best eligible
/// track takes over as soon as it scores strictly higher or the incumbent
/// is no longer eligible. Full-frame fallback ends as soon as any track is
/// eligible.
pub fn select_best(table: &ScoreTable, cfg: &DirectorConfig) -> SelectionTimeline {
    let mut choices = Vec::with_capacity(table.len());
    let mut current: Option<TrackKey> = None;
    let mut held = 0u64;
    for cands in &table.frames {
        let top = best(cands);
        let next = match current {
            Some(k) if held < cfg.min_cut_frames(k.stream) => Some(k),
            Some(k) => match (cands.iter().find(|c| c.key == k), top) {
                (_, None) => None,
                (Some(inc), Some(t)) if t.score <= inc.score => Some(k),
                (_, Some(t)) => Some(t.key),
            },
            None => top.map(|c| c.key),
        };
        if next == current {
            held += 1;
        } else {
            current = next;
            held = 1;
        }
        choices.push(current);
    }
    SelectionTimeline { start: table.start, choices }
}

/// One segment of a segmented selection, `len` frames from `start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub start: u64,
    pub len: u64,
    pub choice: Option<TrackKey>,
    /// Number of tracks eligible at the segment start.
    pub candidates: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segmentation {
    pub timeline: SelectionTimeline,
    pub segments: Vec<Segment>,
}

/// Segment length bounds in frames for `min_cut_length` seconds at `fps`:
/// `[ceil(l*fps), floor(4*l*fps)]`.
pub fn segment_bounds(min_cut_length: f64, fps: f64) -> (u64, u64) {
    let lo = (min_cut_length * fps - 1e-9).ceil().max(1.0) as u64;
    let hi = ((4.0 * min_cut_length * fps + 1e-9).floor() as u64).max(lo);
    (lo, hi)
}

/// Random-length segments, each showing its best track by mean score
/// unless that repeats the previous segment's track, in which case the
/// runner-up is shown.
///
/// Candidates are the tracks eligible at the segment's first frame; a
/// track's mean is taken over the segment frames where it is eligible.
/// Frames without any eligible track form fallback segments that end as
/// soon as a track becomes available.
pub fn select_segmented(table: &ScoreTable, cfg: &DirectorConfig, seed: u64) -> Segmentation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = segment_bounds(cfg.min_cut_length, cfg.geometry[0].fps);
    let n = table.len();
    let mut choices: Vec<Option<TrackKey>> = Vec::with_capacity(n);
    let mut segments = Vec::new();
    let mut prev: Option<TrackKey> = None;
    let mut pos = 0usize;
    while pos < n {
        let at_start = &table.frames[pos];
        if at_start.is_empty() {
            let len = table.frames[pos..].iter().take_while(|c| c.is_empty()).count();
            segments.push(Segment { start: table.start + pos as u64, len: len as u64, choice: None, candidates: 0 });
            choices.extend(std::iter::repeat_n(None, len));
            pos += len;
            continue;
        }
        let len = rng.random_range(lo..=hi) as usize;
        let end = (pos + len).min(n);
        let mut ranked: Vec<(TrackKey, f64)> = at_start
            .iter()
            .map(|c| {
                let (sum, count) = table.frames[pos..end]
                    .iter()
                    .filter_map(|cs| cs.iter().find(|x| x.key == c.key))
                    .fold((0.0, 0usize), |(s, k), x| (s + x.score, k + 1));
                (c.key, sum / count as f64)
            })
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut choice = ranked[0].0;
        if Some(choice) == prev && ranked.len() >= 2 {
            choice = ranked[1].0;
        }
        segments.push(Segment {
            start: table.start + pos as u64,
            len: (end - pos) as u64,
            choice: Some(choice),
            candidates: ranked.len(),
        });
        choices.extend(std::iter::repeat_n(Some(choice), end - pos));
        prev = Some(choice);
        pos = end;
    }
    Segmentation { timeline: SelectionTimeline { start: table.start, choices }, segments }
}
