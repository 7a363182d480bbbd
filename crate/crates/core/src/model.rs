//! Domain types shared by every stage: boxes, frame geometry, detections,
//! rendering instructions, and the per-stream / director configuration.
//!
//! Image coordinates have their origin at the top-left corner with `y`
//! growing downward. Boxes are stored by center and size.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box, center-based, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    /// Validated constructor: sizes must be positive and everything finite.
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self> {
        let b = BoundingBox { cx, cy, w, h };
        b.validate()?;
        Ok(b)
    }

    pub fn from_corners(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        Self::new((x0 + x1) / 2.0, (y0 + y1) / 2.0, x1 - x0, y1 - y0)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.cx, self.cy, self.w, self.h].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid(format!("non-finite box {self:?}")));
        }
        if self.w <= 0.0 || self.h <= 0.0 {
            return Err(Error::invalid(format!(
                "box size must be positive, got {}x{}",
                self.w, self.h
            )));
        }
        Ok(())
    }

    pub fn left(&self) -> f64 {
        self.cx - self.w / 2.0
    }
    pub fn right(&self) -> f64 {
        self.cx + self.w / 2.0
    }
    pub fn top(&self) -> f64 {
        self.cy - self.h / 2.0
    }
    pub fn bottom(&self) -> f64 {
        self.cy + self.h / 2.0
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Width over height.
    pub fn aspect(&self) -> f64 {
        self.w / self.h
    }

    pub fn intersection_area(&self, other: &BoundingBox) -> f64 {
        let ix = (self.right().min(other.right()) - self.left().max(other.left())).max(0.0);
        let iy = (self.bottom().min(other.bottom()) - self.top().max(other.top())).max(0.0);
        ix * iy
    }

    /// True when the interiors overlap (touching edges do not count).
    pub fn intersects(&self, other: &BoundingBox) -> bool {
        self.intersection_area(other) > 0.0
    }

    /// Smallest box containing both.
    pub fn union(&self, other: &BoundingBox) -> BoundingBox {
        let x0 = self.left().min(other.left());
        let y0 = self.top().min(other.top());
        let x1 = self.right().max(other.right());
        let y1 = self.bottom().max(other.bottom());
        BoundingBox { cx: (x0 + x1) / 2.0, cy: (y0 + y1) / 2.0, w: x1 - x0, h: y1 - y0 }
    }

    /// Smallest box containing every box of the iterator, `None` when empty.
    pub fn enclose<'a, I>(boxes: I) -> Option<BoundingBox>
    where
        I: IntoIterator<Item = &'a BoundingBox>,
    {
        boxes.into_iter().fold(None, |acc: Option<BoundingBox>, b| {
            Some(match acc {
                Some(a) => a.union(b),
                None => *b,
            })
        })
    }

    /// Clip to `[0, width] x [0, height]`. `None` if nothing (or less than a
    /// pixel in either direction) remains.
    pub fn clip_to(&self, geom: &FrameGeometry) -> Option<BoundingBox> {
        let (fw, fh) = (geom.width as f64, geom.height as f64);
        if self.left() >= 0.0 && self.top() >= 0.0 && self.right() <= fw && self.bottom() <= fh {
            return Some(*self);
        }
        let x0 = self.left().max(0.0);
        let y0 = self.top().max(0.0);
        let x1 = self.right().min(fw);
        let y1 = self.bottom().min(fh);
        if x1 - x0 < 1.0 || y1 - y0 < 1.0 {
            return None;
        }
        Some(BoundingBox { cx: (x0 + x1) / 2.0, cy: (y0 + y1) / 2.0, w: x1 - x0, h: y1 - y0 })
    }

    pub fn center_distance(&self, other: &BoundingBox) -> f64 {
        (self.cx - other.cx).hypot(self.cy - other.cy)
    }
}

/// Top-left based rectangle, used for crops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Rect {
    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn as_box(&self) -> BoundingBox {
        let (cx, cy) = self.center();
        BoundingBox { cx, cy, w: self.w, h: self.h }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameGeometry {
    pub width: u32,
    pub height: u32,
    pub fps: f64,
}

impl FrameGeometry {
    pub fn new(width: u32, height: u32, fps: f64) -> Result<Self> {
        let g = FrameGeometry { width, height, fps };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("frame dimensions must be positive"));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::invalid(format!("fps must be positive, got {}", self.fps)));
        }
        Ok(())
    }

    pub fn diagonal(&self) -> f64 {
        (self.width as f64).hypot(self.height as f64)
    }

    pub fn center(&self) -> (f64, f64) {
        (self.width as f64 / 2.0, self.height as f64 / 2.0)
    }

    /// Whole seconds expressed in frames, rounded to the nearest frame.
    pub fn frames_for(&self, seconds: f64) -> u64 {
        (seconds * self.fps).round().max(0.0) as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub frame: u64,
    pub class_id: u32,
    pub confidence: f64,
    pub bbox: BoundingBox,
}

impl Detection {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(Error::invalid(format!(
                "confidence {} outside [0, 1]",
                self.confidence
            )));
        }
        self.bbox.validate()
    }
}

/// Per-frame virtual camera: which stream to show and where to crop it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderingInstruction {
    pub frame: u64,
    pub stream: usize,
    pub cx: f64,
    pub cy: f64,
    pub zoom: f64,
}

impl RenderingInstruction {
    /// Full-frame framing of `stream`.
    pub fn full_frame(frame: u64, stream: usize, geom: &FrameGeometry) -> Self {
        let (cx, cy) = geom.center();
        RenderingInstruction { frame, stream, cx, cy, zoom: 1.0 }
    }
}

/// Crop implied by an instruction: `(width/zoom, height/zoom)` centered on
/// `(cx, cy)` and shifted the least amount needed to stay inside the frame.
pub fn crop_rect(instr: &RenderingInstruction, geom: &FrameGeometry) -> Result<Rect> {
    let z = instr.zoom;
    if !z.is_finite() || z <= 0.0 {
        return Err(Error::invalid(format!("zoom must be positive, got {z}")));
    }
    if z < 1.0 {
        return Err(Error::ZoomOutOfRange(z));
    }
    if !(instr.cx.is_finite() && instr.cy.is_finite()) {
        return Err(Error::invalid("non-finite crop center"));
    }
    let (fw, fh) = (geom.width as f64, geom.height as f64);
    let (w, h) = (fw / z, fh / z);
    let x = (instr.cx - w / 2.0).clamp(0.0, fw - w);
    let y = (instr.cy - h / 2.0).clamp(0.0, fh - h);
    Ok(Rect { x, y, w, h })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZoomType {
    FullBody,
    UpperBody,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CameraType {
    Pan,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoringType {
    Zoom,
    Movement,
}

/// Operator settings for one input stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StreamConfig {
    pub track_individuals: bool,
    pub track_groups: bool,
    pub prefer_individual: bool,
    pub zoom_type: ZoomType,
    pub camera_type: CameraType,
    pub zoom_factor: f64,
    /// Keypoints per frame of trace used for spline fitting.
    pub fitting: f64,
    pub scoring_type: ScoringType,
    #[serde(default)]
    pub mask: Option<String>,
}

impl Default for StreamConfig {
    fn default() -> Self {
        StreamConfig {
            track_individuals: true,
            track_groups: false,
            prefer_individual: true,
            zoom_type: ZoomType::FullBody,
            camera_type: CameraType::Pan,
            zoom_factor: 1.0,
            fitting: 0.1,
            scoring_type: ScoringType::Movement,
            mask: None,
        }
    }
}

impl StreamConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.track_individuals && !self.track_groups {
            return Err(Error::invalid("stream tracks neither individuals nor groups"));
        }
        if !(self.fitting > 0.0 && self.fitting <= 1.0) {
            return Err(Error::invalid(format!("fitting {} outside (0, 1]", self.fitting)));
        }
        if !(self.zoom_factor.is_finite() && self.zoom_factor > 0.0) {
            return Err(Error::invalid(format!("zoom_factor must be positive, got {}", self.zoom_factor)));
        }
        Ok(())
    }
}

/// Screen dimension multiplying the zoom score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ZoomScoreAxis {
    #[default]
    Width,
    Height,
}

/// How camera tracks are derived from traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TrackMode {
    /// Offline natural cubic splines through keypoints.
    #[default]
    Spline,
    /// Online delayed FIFO smoothing.
    Delayed,
}

fn default_upper_body_zoom() -> f64 {
    1.25
}

/// Global director settings plus the per-stream configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectorConfig {
    /// Minimum shot duration in seconds.
    pub min_cut_length: f64,
    pub best_viewpoint_always: bool,
    #[serde(default)]
    pub objects_of_interest: Vec<u32>,
    #[serde(default)]
    pub rng_seed: u64,
    pub streams: Vec<StreamConfig>,
    pub geometry: Vec<FrameGeometry>,
    #[serde(default = "default_upper_body_zoom")]
    pub upper_body_zoom: f64,
    #[serde(default)]
    pub zoom_score_axis: ZoomScoreAxis,
    #[serde(default)]
    pub track_mode: TrackMode,
}

impl DirectorConfig {
    pub fn new(streams: Vec<StreamConfig>, geometry: Vec<FrameGeometry>) -> Self {
        DirectorConfig {
            min_cut_length: 2.0,
            best_viewpoint_always: true,
            objects_of_interest: Vec::new(),
            rng_seed: 0,
            streams,
            geometry,
            upper_body_zoom: default_upper_body_zoom(),
            zoom_score_axis: ZoomScoreAxis::Width,
            track_mode: TrackMode::Spline,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min_cut_length.is_finite() && self.min_cut_length > 0.0) {
            return Err(Error::invalid("min_cut_length must be positive"));
        }
        if self.streams.is_empty() {
            return Err(Error::invalid("no streams configured"));
        }
        if self.streams.len() != self.geometry.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} geometries", self.streams.len()),
                found: format!("{}", self.geometry.len()),
            });
        }
        if !(self.upper_body_zoom.is_finite() && self.upper_body_zoom > 0.0) {
            return Err(Error::invalid("upper_body_zoom must be positive"));
        }
        for s in &self.streams {
            s.validate()?;
        }
        for g in &self.geometry {
            g.validate()?;
        }
        Ok(())
    }

    /// `min_cut_length` in frames of the given stream, at least one frame.
    pub fn min_cut_frames(&self, stream: usize) -> u64 {
        self.geometry[stream].frames_for(self.min_cut_length).max(1)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: DirectorConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}
