//! Camera tracks: smooth `(x, y, zoom)` framings derived from traces.

mod delayed;
mod spline;

use serde::{Deserialize, Serialize};

pub use delayed::{DelayedParams, DelayedSmoother, EaseProfile};
pub use spline::{fit_natural_cubic_spline, Segment, Spline};

use crate::error::{Error, Result};
use crate::model::{BoundingBox, FrameGeometry};
use crate::tracking::{Trace, TraceKind};

/// Zoom at which the frame exactly fits `b`, never below 1 (full frame).
pub fn zoom_of_bbox(b: &BoundingBox, geom: &FrameGeometry) -> f64 {
    (geom.height as f64 / b.h).min(geom.width as f64 / b.w).max(1.0)
}

/// `max(2, round(fitting * len))` keypoints equally spaced over the trace,
/// first and last entry always included.
pub fn select_keypoints(trace: &Trace, fitting: f64) -> Vec<(u64, BoundingBox)> {
    let len = trace.len();
    if len == 0 {
        return Vec::new();
    }
    if len == 1 {
        let e = trace.entries[0];
        return vec![(e.frame, e.bbox)];
    }
    let k = ((fitting * len as f64).round() as usize).clamp(2, len);
    let step = len as f64 / (k - 1) as f64;
    (0..k)
        .map(|i| if i + 1 == k { len - 1 } else { (i as f64 * step).floor() as usize })
        .map(|i| (trace.entries[i].frame, trace.entries[i].bbox))
        .collect()
}

/// Framing curves of a camera track.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackCurve {
    Spline { x: Spline, y: Spline, zoom: Spline },
    /// One value per frame from the track start.
    Sampled { x: Vec<f64>, y: Vec<f64>, zoom: Vec<f64> },
}

/// Half-width of the finite-difference window used on sampled curves.
const SAMPLED_HALF_WINDOW: i64 = 2;

fn sampled_value(v: &[f64], i: i64) -> f64 {
    v[i.clamp(0, v.len() as i64 - 1) as usize]
}

fn sampled_slope(v: &[f64], i: i64) -> f64 {
    let n = v.len() as i64;
    if n < 2 || i < 0 || i >= n {
        return 0.0;
    }
    let lo = (i - SAMPLED_HALF_WINDOW).max(0);
    let hi = (i + SAMPLED_HALF_WINDOW).min(n - 1);
    (v[hi as usize] - v[lo as usize]) / (hi - lo) as f64
}

/// Smooth framing for one target on one stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraTrack {
    pub stream: usize,
    pub target: u64,
    pub kind: TraceKind,
    pub start: u64,
    /// Inclusive.
    pub end: u64,
    pub curve: TrackCurve,
    pub trace: Trace,
}

impl CameraTrack {
    pub fn contains(&self, frame: u64) -> bool {
        frame >= self.start && frame <= self.end
    }

    /// `(x, y, zoom)` at `frame`, held constant outside the range.
    pub fn framing(&self, frame: u64) -> (f64, f64, f64) {
        let n = frame.clamp(self.start, self.end);
        match &self.curve {
            TrackCurve::Spline { x, y, zoom } => {
                let t = n as f64;
                (x.eval(t), y.eval(t), zoom.eval(t))
            }
            TrackCurve::Sampled { x, y, zoom } => {
                let i = (n - self.start) as i64;
                (sampled_value(x, i), sampled_value(y, i), sampled_value(zoom, i))
            }
        }
    }

    /// Per-frame rates of `(x, y, zoom)`; zero outside the range.
    pub fn rates(&self, frame: u64) -> (f64, f64, f64) {
        if !self.contains(frame) {
            return (0.0, 0.0, 0.0);
        }
        match &self.curve {
            TrackCurve::Spline { x, y, zoom } => {
                let t = frame as f64;
                (x.deriv(t), y.deriv(t), zoom.deriv(t))
            }
            TrackCurve::Sampled { x, y, zoom } => {
                let i = (frame - self.start) as i64;
                (sampled_slope(x, i), sampled_slope(y, i), sampled_slope(zoom, i))
            }
        }
    }
}

/// Offline camera track: splines through keypoint centers and zooms.
pub fn build_camera_track(trace: &Trace, geom: &FrameGeometry, fitting: f64) -> Result<CameraTrack> {
    if trace.is_empty() {
        return Err(Error::invalid(format!("trace {} is empty", trace.id)));
    }
    if !(fitting > 0.0 && fitting <= 1.0) {
        return Err(Error::invalid(format!("fitting {fitting} outside (0, 1]")));
    }
    let keys = select_keypoints(trace, fitting);
    let curve = if keys.len() == 1 {
        let (f, b) = keys[0];
        let t = f as f64;
        TrackCurve::Spline {
            x: Spline::constant(t, t, b.cx),
            y: Spline::constant(t, t, b.cy),
            zoom: Spline::constant(t, t, zoom_of_bbox(&b, geom)),
        }
    } else {
        let pts = |f: &dyn Fn(&BoundingBox) -> f64| -> Vec<(f64, f64)> {
            keys.iter().map(|(fr, b)| (*fr as f64, f(b))).collect()
        };
        TrackCurve::Spline {
            x: fit_natural_cubic_spline(&pts(&|b| b.cx))?,
            y: fit_natural_cubic_spline(&pts(&|b| b.cy))?,
            zoom: fit_natural_cubic_spline(&pts(&|b| zoom_of_bbox(b, geom)))?,
        }
    };
    Ok(CameraTrack {
        stream: trace.stream,
        target: trace.id,
        kind: trace.kind,
        start: trace.start(),
        end: trace.end(),
        curve,
        trace: trace.clone(),
    })
}

/// Online camera track: the trace replayed through a [`DelayedSmoother`].
/// The queue is flushed at the end so the track covers the whole trace.
pub fn build_delayed_track(trace: &Trace, geom: &FrameGeometry, params: DelayedParams) -> Result<CameraTrack> {
    if trace.is_empty() {
        return Err(Error::invalid(format!("trace {} is empty", trace.id)));
    }
    let mut sm = DelayedSmoother::new(trace.start(), params);
    let mut out = Vec::with_capacity(trace.len());
    for e in &trace.entries {
        if let Some(k) = sm.push(e.bbox) {
            out.extend(k);
        }
    }
    if let Some(k) = sm.finish() {
        out.extend(k);
    }
    let x = out.iter().map(|(_, b)| b.cx).collect();
    let y = out.iter().map(|(_, b)| b.cy).collect();
    let zoom = out.iter().map(|(_, b)| zoom_of_bbox(b, geom)).collect();
    Ok(CameraTrack {
        stream: trace.stream,
        target: trace.id,
        kind: trace.kind,
        start: trace.start(),
        end: trace.end(),
        curve: TrackCurve::Sampled { x, y, zoom },
        trace: trace.clone(),
    })
}
