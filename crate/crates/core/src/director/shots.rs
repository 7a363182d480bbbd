use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BoundingBox, CameraType, DirectorConfig, RenderingInstruction};
use crate::smoothing::{zoom_of_bbox, CameraTrack};

use super::eligibility::{adjust, track_instruction};
use super::selection::{SelectionTimeline, TrackKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotKind {
    Static,
    Panning,
    FallbackFullFrame,
}

/// Maximal run of frames showing the same track.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shot {
    pub stream: usize,
    pub track: Option<TrackKey>,
    pub start: u64,
    /// Inclusive.
    pub end: u64,
    pub kind: ShotKind,
}

impl Shot {
    pub fn len(&self) -> u64 {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Split a timeline into shots. Fallback shots use the most recently shown
/// stream, or stream 0 before anything was shown.
pub fn segment_shots(timeline: &SelectionTimeline, cfg: &DirectorConfig) -> Vec<Shot> {
    let mut last_stream = 0usize;
    timeline
        .runs()
        .into_iter()
        .map(|(start, len, choice)| {
            let end = start + len - 1;
            match choice {
                Some(k) => {
                    last_stream = k.stream;
                    let kind = match cfg.streams[k.stream].camera_type {
                        CameraType::Pan => ShotKind::Panning,
                        CameraType::Fixed => ShotKind::Static,
                    };
                    Shot { stream: k.stream, track: Some(k), start, end, kind }
                }
                None => Shot { stream: last_stream, track: None, start, end, kind: ShotKind::FallbackFullFrame },
            }
        })
        .collect()
}

/// Full-frame framing of `stream`, shown when nothing is eligible.
pub fn fallback_instruction(frame: u64, stream: usize, cfg: &DirectorConfig) -> RenderingInstruction {
    RenderingInstruction::full_frame(frame, stream, &cfg.geometry[stream])
}

/// Per-frame instructions of a shot.
///
/// Panning shots follow the track's curves. Static shots hold one framing
/// fitted to the union of the trace boxes inside the shot.
pub fn shot_instructions(
    shot: &Shot,
    tracks: &BTreeMap<TrackKey, &CameraTrack>,
    cfg: &DirectorConfig,
) -> Result<Vec<RenderingInstruction>> {
    let frames = shot.start..=shot.end;
    let Some(key) = shot.track else {
        return Ok(frames.map(|f| fallback_instruction(f, shot.stream, cfg)).collect());
    };
    let track = tracks
        .get(&key)
        .ok_or_else(|| Error::invalid(format!("shot references unknown track {key:?}")))?;
    match shot.kind {
        ShotKind::Panning | ShotKind::FallbackFullFrame => {
            Ok(frames.map(|f| track_instruction(track, f, cfg)).collect())
        }
        ShotKind::Static => {
            let trace = &track.trace;
            let inside: Vec<BoundingBox> =
                frames.clone().filter_map(|f| trace.at(f)).map(|e| e.bbox).collect();
            let enclosure = BoundingBox::enclose(inside.iter())
                .unwrap_or_else(|| trace.box_at_clamped(shot.start));
            let z = zoom_of_bbox(&enclosure, &cfg.geometry[shot.stream]);
            Ok(frames
                .map(|f| adjust(f, shot.stream, enclosure.cx, enclosure.cy, z, enclosure.h, cfg))
                .collect())
        }
    }
}

pub const INSTRUCTIONS_MAGIC: &str = "autodirector-instructions v1";

/// One `frame stream cx cy z` record per line after a header.
pub fn instructions_to_text(instrs: &[RenderingInstruction]) -> String {
    let mut out = format!("{INSTRUCTIONS_MAGIC}\n");
    for i in instrs {
        let _ = writeln!(out, "{} {} {} {} {}", i.frame, i.stream, i.cx, i.cy, i.zoom);
    }
    out
}

pub fn parse_instructions(text: &str) -> Result<Vec<RenderingInstruction>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == INSTRUCTIONS_MAGIC => {}
        _ => return Err(Error::Parse { line: 1, msg: "missing instructions header".into() }),
    }
    lines
        .map(|(i, l)| {
            let err = |m: &str| Error::Parse { line: i + 1, msg: m.to_string() };
            let t: Vec<&str> = l.split_whitespace().collect();
            if t.len() != 5 {
                return Err(err("expected `frame stream cx cy z`"));
            }
            let f = |s: &str| s.parse::<f64>().map_err(|_| err("bad number"));
            let instr = RenderingInstruction {
                frame: t[0].parse().map_err(|_| err("bad frame"))?,
                stream: t[1].parse().map_err(|_| err("bad stream"))?,
                cx: f(t[2])?,
                cy: f(t[3])?,
                zoom: f(t[4])?,
            };
            if !(instr.zoom > 0.0) {
                return Err(err("zoom must be positive"));
            }
            Ok(instr)
        })
        .collect()
}
