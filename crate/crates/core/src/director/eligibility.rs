use std::collections::BTreeMap;

use crate::ingest::DetectionSet;
use crate::model::{crop_rect, BoundingBox, DirectorConfig, RenderingInstruction, ScoringType, ZoomScoreAxis, ZoomType};
use crate::smoothing::CameraTrack;
use crate::tracking::TraceKind;

/// Boxes of the interest classes, per `(stream, frame)`.
#[derive(Debug, Clone, Default)]
pub struct InterestObjects {
    boxes: BTreeMap<(usize, u64), Vec<BoundingBox>>,
}

impl InterestObjects {
    pub fn from_sets(sets: &[DetectionSet], classes: &[u32]) -> Self {
        let mut boxes: BTreeMap<(usize, u64), Vec<BoundingBox>> = BTreeMap::new();
        for set in sets {
            for d in set.iter().filter(|d| classes.contains(&d.class_id)) {
                boxes.entry((set.stream, d.frame)).or_default().push(d.bbox);
            }
        }
        InterestObjects { boxes }
    }

    pub fn insert(&mut self, stream: usize, frame: u64, b: BoundingBox) {
        self.boxes.entry((stream, frame)).or_default().push(b);
    }

    pub fn at(&self, stream: usize, frame: u64) -> &[BoundingBox] {
        self.boxes.get(&(stream, frame)).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Panning framing of `track` at `frame` after the per-stream zoom type
/// and zoom factor adjustments, clamped into the frame.
pub fn track_instruction(track: &CameraTrack, frame: u64, cfg: &DirectorConfig) -> RenderingInstruction {
    let (x, y, z) = track.framing(frame);
    let box_h = track.trace.box_at_clamped(frame).h;
    adjust(frame, track.stream, x, y, z, box_h, cfg)
}

/// Apply upper-body framing, the stream zoom factor and frame clamping.
pub(crate) fn adjust(frame: u64, stream: usize, x: f64, y: f64, z: f64, box_h: f64, cfg: &DirectorConfig) -> RenderingInstruction {
    let sc = &cfg.streams[stream];
    let (mut cy, mut zoom) = (y, z);
    if sc.zoom_type == ZoomType::UpperBody {
        zoom *= cfg.upper_body_zoom;
        cy -= box_h / 4.0;
    }
    zoom = (zoom * sc.zoom_factor).max(1.0);
    let raw = RenderingInstruction { frame, stream, cx: x, cy, zoom };
    let rect = crop_rect(&raw, &cfg.geometry[stream]).expect("zoom floored at 1");
    let (cx, cy) = rect.center();
    RenderingInstruction { cx, cy, ..raw }
}

/// Tracks that may be shown at `frame`, as indices into `tracks`.
///
/// Period filter first. With interest objects configured: individual
/// tracks framing an object, else group tracks framing one, else every
/// period-eligible track. Without: per stream, the preferred kind when
/// that stream has any.
pub fn eligible_tracks(
    tracks: &[CameraTrack],
    frame: u64,
    interest: &InterestObjects,
    cfg: &DirectorConfig,
) -> Vec<usize> {
    let period: Vec<usize> = (0..tracks.len()).filter(|&i| tracks[i].contains(frame)).collect();
    if period.is_empty() {
        return period;
    }
    if !cfg.objects_of_interest.is_empty() {
        let with_object: Vec<usize> = period
            .iter()
            .copied()
            .filter(|&i| {
                let t = &tracks[i];
                let rect = crop_rect(&track_instruction(t, frame, cfg), &cfg.geometry[t.stream])
                    .expect("valid framing")
                    .as_box();
                interest.at(t.stream, frame).iter().any(|b| b.intersects(&rect))
            })
            .collect();
        for kind in [TraceKind::Individual, TraceKind::Group] {
            let pick: Vec<usize> = with_object.iter().copied().filter(|&i| tracks[i].kind == kind).collect();
            if !pick.is_empty() {
                return pick;
            }
        }
        return period;
    }
    let mut out: Vec<usize> = Vec::with_capacity(period.len());
    let mut streams: Vec<usize> = period.iter().map(|&i| tracks[i].stream).collect();
    streams.sort_unstable();
    streams.dedup();
    for s in streams {
        let preferred = if cfg.streams[s].prefer_individual { TraceKind::Individual } else { TraceKind::Group };
        let of_stream = period.iter().copied().filter(|&i| tracks[i].stream == s);
        let pref: Vec<usize> = of_stream.clone().filter(|&i| tracks[i].kind == preferred).collect();
        if pref.is_empty() {
            out.extend(of_stream);
        } else {
            out.extend(pref);
        }
    }
    out.sort_unstable();
    out
}

/// Interest of showing `track` at `frame`.
///
/// Zoom scoring is the screen size times the rate of change of `1/zoom`
/// (positive while the target approaches). Movement scoring is the speed of
/// the framing center in pixels per frame.
pub fn score(track: &CameraTrack, frame: u64, scoring: ScoringType, cfg: &DirectorConfig) -> f64 {
    let (dx, dy, dz) = track.rates(frame);
    match scoring {
        ScoringType::Movement => dx.hypot(dy),
        ScoringType::Zoom => {
            let g = &cfg.geometry[track.stream];
            let screen = match cfg.zoom_score_axis {
                ZoomScoreAxis::Width => g.width as f64,
                ZoomScoreAxis::Height => g.height as f64,
            };
            let z = track.framing(frame).2;
            -screen * dz / (z * z)
        }
    }
}
