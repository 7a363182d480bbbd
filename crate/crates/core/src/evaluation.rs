//! Edit comparison metrics over cut arrays.
//!
//! A [`CutArray`] is a total timeline: the first cut sits at `t = 0` and each
//! cut holds its angle until the next one or the end of the video.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::RenderingInstruction;

/// Default sampling rate for [`f1_per_angle`].
pub const DEFAULT_F1_RATE: f64 = 30.0;

/// A switch to `angle` at `time` seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub time: f64,
    pub angle: u32,
}

/// Ordered cuts plus the video duration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutArray {
    pub duration: f64,
    pub cuts: Vec<Cut>,
    /// Editor self-rating carried through from capture sessions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experience: Option<String>,
}

impl CutArray {
    pub fn new(duration: f64, cuts: Vec<Cut>) -> Result<Self> {
        let a = CutArray { duration, cuts, experience: None };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::invalid(format!("duration {} must be positive", self.duration)));
        }
        let Some(first) = self.cuts.first() else {
            return Err(Error::invalid("cut array has no cuts"));
        };
        if first.time != 0.0 {
            return Err(Error::invalid(format!("first cut at {} instead of 0", first.time)));
        }
        for c in &self.cuts {
            if !c.time.is_finite() || c.time >= self.duration {
                return Err(Error::invalid(format!("cut time {} outside [0, {})", c.time, self.duration)));
            }
        }
        for (i, w) in self.cuts.windows(2).enumerate() {
            if w[1].time <= w[0].time {
                return Err(Error::invalid(format!("cut {} at {} not after {}", i + 1, w[1].time, w[0].time)));
            }
            if w[1].angle == w[0].angle {
                return Err(Error::invalid(format!("cut {} repeats angle {}", i + 1, w[1].angle)));
            }
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let a: CutArray = serde_json::from_str(s)?;
        a.validate()?;
        Ok(a)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("cut array serializes");
        s.push('\n');
        s
    }

    /// End time of cut `i`.
    pub fn end_of(&self, i: usize) -> f64 {
        self.cuts.get(i + 1).map_or(self.duration, |c| c.time)
    }

    /// `(start, end, angle)` for every cut.
    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64, u32)> + '_ {
        self.cuts.iter().enumerate().map(|(i, c)| (c.time, self.end_of(i), c.angle))
    }

    /// Angle visible at time `t` (clamped to the timeline).
    pub fn angle_at(&self, t: f64) -> u32 {
        let i = self.cuts.partition_point(|c| c.time <= t);
        self.cuts[i.saturating_sub(1)].angle
    }

    pub fn angles(&self) -> BTreeSet<u32> {
        self.cuts.iter().map(|c| c.angle).collect()
    }

    /// Rebuild from a per-frame angle sequence.
    pub fn from_frame_angles(angles: &[u32], fps: f64, duration: f64) -> Result<Self> {
        let mut cuts = Vec::new();
        for (i, &a) in angles.iter().enumerate() {
            if cuts.last().is_none_or(|c: &Cut| c.angle != a) {
                cuts.push(Cut { time: i as f64 / fps, angle: a });
            }
        }
        CutArray::new(duration, cuts)
    }

    /// Angle of each of `n` frames at `fps`.
    pub fn frame_angles(&self, fps: f64, n: usize) -> Vec<u32> {
        (0..n).map(|i| self.angle_at(i as f64 / fps)).collect()
    }
}

/// Cut array from per-frame instructions; `duration` defaults to `len / fps`.
pub fn instructions_to_cuts(
    instructions: &[RenderingInstruction],
    fps: f64,
    duration: Option<f64>,
) -> Result<CutArray> {
    if !(fps.is_finite() && fps > 0.0) {
        return Err(Error::invalid(format!("fps {fps} must be positive")));
    }
    let Some(first) = instructions.first() else {
        return Err(Error::invalid("no instructions"));
    };
    for (i, ins) in instructions.iter().enumerate() {
        if ins.frame != first.frame + i as u64 {
            return Err(Error::invalid(format!("instruction {i} has frame {}, expected {}", ins.frame, first.frame + i as u64)));
        }
    }
    let angles: Vec<u32> = instructions.iter().map(|i| i.stream as u32).collect();
    let duration = duration.unwrap_or(instructions.len() as f64 / fps);
    CutArray::from_frame_angles(&angles, fps, duration)
}

fn check_durations(a: &CutArray, b: &CutArray) -> Result<()> {
    if (a.duration - b.duration).abs() > 1e-9 * a.duration.max(1.0) {
        return Err(Error::DurationMismatch(a.duration, b.duration));
    }
    Ok(())
}

/// Root mean square distance from each cut in `a` to its nearest cut in `b`.
///
/// Directional: `rmse_cuts(a, b)` and `rmse_cuts(b, a)` differ in general.
pub fn rmse_cuts(a: &CutArray, b: &CutArray) -> Result<f64> {
    if a.cuts.is_empty() {
        return Err(Error::invalid("reference cut array is empty"));
    }
    if b.cuts.is_empty() {
        return Err(Error::invalid("compared cut array is empty"));
    }
    let times: Vec<f64> = b.cuts.iter().map(|c| c.time).collect();
    let sum: f64 = a
        .cuts
        .iter()
        .map(|c| {
            let i = times.partition_point(|&t| t < c.time);
            let mut d = f64::INFINITY;
            if i < times.len() {
                d = d.min(times[i] - c.time);
            }
            if i > 0 {
                d = d.min(c.time - times[i - 1]);
            }
            d * d
        })
        .sum();
    Ok((sum / a.cuts.len() as f64).sqrt())
}

/// Which cut pairs contribute to [`overlap_with`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapMode {
    /// Only pairs showing the same angle.
    #[default]
    SameAngle,
    /// Every pair, regardless of angle.
    Raw,
}

fn overlap_filtered(a: &CutArray, b: &CutArray, keep: impl Fn(u32, u32) -> bool) -> Result<f64> {
    check_durations(a, b)?;
    let (mut kept, mut rest) = (0.0, 0.0);
    for (sa, ea, aa) in a.intervals() {
        for (sb, eb, ab) in b.intervals() {
            let r = (ea.min(eb) - sa.max(sb)).max(0.0);
            if keep(aa, ab) {
                kept += r;
            } else {
                rest += r;
            }
        }
    }
    // All pairs together tile the video, so kept + rest is the duration of
    // `a` up to rounding; dividing by it keeps exact 0 and 1 exact.
    Ok(kept / (kept + rest))
}

/// Fraction of the video during which both arrays show the same angle.
pub fn overlap(a: &CutArray, b: &CutArray) -> Result<f64> {
    overlap_with(a, b, OverlapMode::SameAngle)
}

pub fn overlap_with(a: &CutArray, b: &CutArray, mode: OverlapMode) -> Result<f64> {
    match mode {
        OverlapMode::SameAngle => overlap_filtered(a, b, |x, y| x == y),
        OverlapMode::Raw => overlap_filtered(a, b, |_, _| true),
    }
}

/// Same-angle overlap restricted to `angle`.
pub fn overlap_per_angle(a: &CutArray, b: &CutArray, angle: u32) -> Result<f64> {
    overlap_filtered(a, b, |x, y| x == angle && y == angle)
}

/// Frame counts for one angle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl Confusion {
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        if self.tp + self.fp == 0 || self.tp + self.fn_ == 0 {
            return 0.0;
        }
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

fn ratio(n: u64, d: u64) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

/// Number of samples at `rate` covering `[0, duration)`.
pub fn sample_count(duration: f64, rate: f64) -> usize {
    let n = (duration * rate).ceil() as usize;
    // guard against k / rate landing on duration through rounding
    (0..=n).rev().find(|&k| k == 0 || ((k - 1) as f64) / rate < duration).unwrap_or(0)
}

/// Per-angle confusion counts with `a` as reference and `b` as prediction.
pub fn confusion_per_angle(a: &CutArray, b: &CutArray, rate: f64) -> Result<BTreeMap<u32, Confusion>> {
    check_durations(a, b)?;
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::invalid(format!("sample rate {rate} must be positive")));
    }
    let mut out: BTreeMap<u32, Confusion> = a.angles().union(&b.angles()).map(|&k| (k, Confusion::default())).collect();
    for k in 0..sample_count(a.duration, rate) {
        let t = k as f64 / rate;
        let (x, y) = (a.angle_at(t), b.angle_at(t));
        if x == y {
            out.get_mut(&x).unwrap().tp += 1;
        } else {
            out.get_mut(&y).unwrap().fp += 1;
            out.get_mut(&x).unwrap().fn_ += 1;
        }
    }
    Ok(out)
}

/// F1 score per angle used by either array.
pub fn f1_per_angle(a: &CutArray, b: &CutArray, rate: f64) -> Result<BTreeMap<u32, f64>> {
    Ok(confusion_per_angle(a, b, rate)?.into_iter().map(|(k, c)| (k, c.f1())).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClipStats {
    pub mean_clip_length: f64,
    pub cut_count: usize,
    pub angle_fraction: BTreeMap<u32, f64>,
}

pub fn clip_stats(a: &CutArray) -> ClipStats {
    let mut frac = BTreeMap::new();
    for (s, e, angle) in a.intervals() {
        *frac.entry(angle).or_insert(0.0) += (e - s) / a.duration;
    }
    ClipStats {
        mean_clip_length: a.duration / a.cuts.len() as f64,
        cut_count: a.cuts.len() - 1,
        angle_fraction: frac,
    }
}

/// Every metric for one comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rmse: f64,
    pub overlap: f64,
    pub overlap_per_angle: BTreeMap<u32, f64>,
    pub f1_per_angle: BTreeMap<u32, f64>,
    pub clips_a: ClipStats,
    pub clips_b: ClipStats,
}

pub fn compare(a: &CutArray, b: &CutArray, rate: f64, mode: OverlapMode) -> Result<Comparison> {
    let angles: BTreeSet<u32> = a.angles().union(&b.angles()).copied().collect();
    let mut per = BTreeMap::new();
    for &k in &angles {
        per.insert(k, overlap_per_angle(a, b, k)?);
    }
    Ok(Comparison {
        rmse: rmse_cuts(a, b)?,
        overlap: overlap_with(a, b, mode)?,
        overlap_per_angle: per,
        f1_per_angle: f1_per_angle(a, b, rate)?,
        clips_a: clip_stats(a),
        clips_b: clip_stats(b),
    })
}

fn pct(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

/// Aligned two-table text report.
pub fn report(c: &Comparison) -> String {
    let mut rows: Vec<[String; 3]> = vec![
        ["Clip length".into(), format!("{:.3}s", c.clips_a.mean_clip_length), format!("{:.3}s", c.clips_b.mean_clip_length)],
        ["Cut count".into(), c.clips_a.cut_count.to_string(), c.clips_b.cut_count.to_string()],
    ];
    let angles: BTreeSet<u32> = c.clips_a.angle_fraction.keys().chain(c.clips_b.angle_fraction.keys()).copied().collect();
    for k in &angles {
        let get = |s: &ClipStats| pct(s.angle_fraction.get(k).copied().unwrap_or(0.0));
        rows.push([format!("Angle {k}"), get(&c.clips_a), get(&c.clips_b)]);
    }
    let mut out = String::new();
    table(&mut out, ["Metric", "A", "B"], &rows);
    out.push('\n');

    let mut rows: Vec<[String; 2]> = vec![["Overlap all angles".into(), pct(c.overlap)]];
    for (k, v) in &c.overlap_per_angle {
        rows.push([format!("Overlap angle {k}"), pct(*v)]);
    }
    rows.push(["RMSE all angles".into(), format!("{:.3}", c.rmse)]);
    for (k, v) in &c.f1_per_angle {
        rows.push([format!("F-score angle {k}"), pct(*v)]);
    }
    table(&mut out, ["Metric", "A versus B"], &rows);
    out
}

fn table<const N: usize>(out: &mut String, header: [&str; N], rows: &[[String; N]]) {
    let mut width = header.map(str::len);
    for r in rows {
        for (w, cell) in width.iter_mut().zip(r) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |out: &mut String, cells: &mut dyn Iterator<Item = &str>| {
        let mut s = String::new();
        for (i, cell) in cells.enumerate() {
            if i == 0 {
                let _ = write!(s, "{cell:<w$}", w = width[0]);
            } else {
                let _ = write!(s, "  {cell:>w$}", w = width[i]);
            }
        }
        out.push_str(s.trim_end());
        out.push('\n');
    };
    line(out, &mut header.iter().copied());
    let rule: Vec<String> = width.iter().map(|w| "-".repeat(*w)).collect();
    line(out, &mut rule.iter().map(String::as_str));
    for r in rows {
        line(out, &mut r.iter().map(String::as_str));
    }
}
