//! Shot selection and rendering instructions.
//!
//! [`ScoreTable::build`] gathers the eligible tracks and their scores for
//! every frame; [`select_best`] or [`select_segmented`] turn that into a
//! [`SelectionTimeline`]; [`segment_shots`] and [`shot_instructions`] turn
//! the timeline into one [`RenderingInstruction`] per frame.

mod eligibility;
mod selection;
mod shots;

use std::collections::BTreeMap;
use std::ops::Range;

pub use eligibility::{eligible_tracks, score, track_instruction, InterestObjects};
pub use selection::{
    segment_bounds, select_best, select_segmented, Candidate, ScoreTable, Segment, Segmentation,
    SelectionTimeline, TrackKey,
};
pub use shots::{
    fallback_instruction, instructions_to_text, parse_instructions, segment_shots, shot_instructions,
    Shot, ShotKind,
};

use crate::error::Result;
use crate::exec::Exec;
use crate::model::{DirectorConfig, RenderingInstruction};
use crate::smoothing::CameraTrack;

/// Everything the director decided for a production range.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    pub timeline: SelectionTimeline,
    pub segments: Option<Vec<Segment>>,
    pub shots: Vec<Shot>,
    pub instructions: Vec<RenderingInstruction>,
}

/// Run the configured selection mode over `tracks` and render it.
pub fn direct(
    tracks: &[CameraTrack],
    range: Range<u64>,
    interest: &InterestObjects,
    cfg: &DirectorConfig,
    exec: Exec,
) -> Result<Direction> {
    cfg.validate()?;
    let table = ScoreTable::build(tracks, range, interest, cfg, exec);
    let (timeline, segments) = if cfg.best_viewpoint_always {
        (select_best(&table, cfg), None)
    } else {
        let s = select_segmented(&table, cfg, cfg.rng_seed);
        (s.timeline, Some(s.segments))
    };
    render(tracks, timeline, segments, cfg)
}

/// Shots and instructions for an existing timeline.
pub fn render(
    tracks: &[CameraTrack],
    timeline: SelectionTimeline,
    segments: Option<Vec<Segment>>,
    cfg: &DirectorConfig,
) -> Result<Direction> {
    let lookup: BTreeMap<TrackKey, &CameraTrack> = tracks.iter().map(|t| (TrackKey::of(t), t)).collect();
    let shots = segment_shots(&timeline, cfg);
    let mut instructions = Vec::with_capacity(timeline.choices.len());
    for shot in &shots {
        instructions.extend(shot_instructions(shot, &lookup, cfg)?);
    }
    Ok(Direction { timeline, segments, shots, instructions })
}
