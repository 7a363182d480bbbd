//! Online smoothing: buffer `N` boxes, ease from the last shown box to the
//! buffer average plus a lead offset that hides the buffering delay.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::model::BoundingBox;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EaseProfile {
    /// `3u^2 - 2u^3`
    #[default]
    Smoothstep,
    Linear,
}

impl EaseProfile {
    pub fn apply(self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match self {
            EaseProfile::Smoothstep => u * u * (3.0 - 2.0 * u),
            EaseProfile::Linear => u,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelayedParams {
    /// Queue length in frames.
    pub capacity: usize,
    /// Multiplier on the delay compensation offset.
    pub gain: f64,
    #[serde(default)]
    pub ease: EaseProfile,
}

impl DelayedParams {
    /// Half a second of frames, unit gain, smoothstep easing.
    pub fn for_fps(fps: f64) -> Self {
        DelayedParams { capacity: ((0.5 * fps).round() as usize).max(1), gain: 1.0, ease: EaseProfile::Smoothstep }
    }
}

#[derive(Debug, Clone)]
pub struct DelayedSmoother {
    params: DelayedParams,
    queue: VecDeque<BoundingBox>,
    last: Option<BoundingBox>,
    next_frame: u64,
}

impl DelayedSmoother {
    /// The first pushed box belongs to `start_frame`; later boxes to the
    /// following frames.
    pub fn new(start_frame: u64, params: DelayedParams) -> Self {
        assert!(params.capacity >= 1, "queue capacity must be positive");
        DelayedSmoother { params, queue: VecDeque::with_capacity(params.capacity), last: None, next_frame: start_frame }
    }

    /// Last emitted box.
    pub fn position(&self) -> Option<BoundingBox> {
        self.last
    }

    /// Queue a box. Returns the keyframes once the queue is full.
    pub fn push(&mut self, b: BoundingBox) -> Option<Vec<(u64, BoundingBox)>> {
        self.queue.push_back(b);
        self.next_frame += 1;
        (self.queue.len() >= self.params.capacity).then(|| self.flush())
    }

    /// Emit keyframes for a partially filled queue, if any.
    pub fn finish(&mut self) -> Option<Vec<(u64, BoundingBox)>> {
        (!self.queue.is_empty()).then(|| self.flush())
    }

    fn flush(&mut self) -> Vec<(u64, BoundingBox)> {
        let n = self.queue.len();
        let nf = n as f64;
        let mean = |f: fn(&BoundingBox) -> f64| self.queue.iter().map(f).sum::<f64>() / nf;
        let (first, lastq) = (self.queue[0], self.queue[n - 1]);
        // mean per-frame displacement of the center across the queue
        let (dx, dy) = if n >= 2 {
            ((lastq.cx - first.cx) / (nf - 1.0), (lastq.cy - first.cy) / (nf - 1.0))
        } else {
            (0.0, 0.0)
        };
        let target = BoundingBox {
            cx: mean(|b| b.cx) + self.params.gain * dx * nf,
            cy: mean(|b| b.cy) + self.params.gain * dy * nf,
            w: mean(|b| b.w),
            h: mean(|b| b.h),
        };
        let from = self.last.unwrap_or(first);
        let start = self.next_frame - n as u64;
        let lerp = |a: f64, b: f64, e: f64| a + (b - a) * e;
        let frames = (1..=n)
            .map(|j| {
                let e = if j == n { 1.0 } else { self.params.ease.apply(j as f64 / nf) };
                let b = BoundingBox {
                    cx: lerp(from.cx, target.cx, e),
                    cy: lerp(from.cy, target.cy, e),
                    w: lerp(from.w, target.w, e).max(1.0),
                    h: lerp(from.h, target.h, e).max(1.0),
                };
                (start + j as u64 - 1, b)
            })
            .collect();
        self.last = Some(target);
        self.queue.clear();
        frames
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(cx: f64) -> BoundingBox {
        BoundingBox { cx, cy: 300.0, w: 80.0, h: 200.0 }
    }

    #[test]
    fn silent_until_full() {
        let mut s = DelayedSmoother::new(0, DelayedParams { capacity: 4, gain: 1.0, ease: EaseProfile::Smoothstep });
        for i in 0..3 {
            assert!(s.push(bx(i as f64)).is_none());
        }
        assert_eq!(s.push(bx(3.0)).unwrap().len(), 4);
    }

    #[test]
    fn constant_input_is_fixed_point() {
        let mut s = DelayedSmoother::new(10, DelayedParams { capacity: 5, gain: 1.0, ease: EaseProfile::Smoothstep });
        let mut out = Vec::new();
        for _ in 0..15 {
            if let Some(k) = s.push(bx(500.0)) {
                out.extend(k);
            }
        }
        assert_eq!(out.len(), 15);
        assert!(out.iter().all(|(_, b)| *b == bx(500.0)));
        let frames: Vec<u64> = out.iter().map(|(f, _)| *f).collect();
        assert_eq!(frames, (10..25).collect::<Vec<_>>());
    }

    #[test]
    fn compensation_arithmetic() {
        let mut s = DelayedSmoother::new(0, DelayedParams { capacity: 4, gain: 1.0, ease: EaseProfile::Smoothstep });
        let mut out = None;
        for cx in [0.0, 10.0, 20.0, 30.0] {
            out = s.push(bx(cx));
        }
        let out = out.unwrap();
        // average 15, lead 10 px/frame * 4 frames
        assert_eq!(out.last().unwrap().1.cx, 55.0);
        assert_eq!(s.position().unwrap().cx, 55.0);
        // smoothstep(1/4) = 0.15625 of the way from p = 0
        assert!((out[0].1.cx - 55.0 * 0.15625).abs() < 1e-12);
    }

    #[test]
    fn monotone_between_p_and_target() {
        for ease in [EaseProfile::Smoothstep, EaseProfile::Linear] {
            let mut s = DelayedSmoother::new(0, DelayedParams { capacity: 8, gain: 0.5, ease });
            let mut all = Vec::new();
            for i in 0..64 {
                let x = 100.0 + 40.0 * (i as f64 * 0.2).sin();
                if let Some(k) = s.push(bx(x)) {
                    all.push(k);
                }
            }
            for chunk in &all {
                let xs: Vec<f64> = chunk.iter().map(|(_, b)| b.cx).collect();
                let up = xs.windows(2).all(|w| w[1] >= w[0] - 1e-12);
                let down = xs.windows(2).all(|w| w[1] <= w[0] + 1e-12);
                assert!(up || down, "{xs:?}");
            }
        }
    }

    #[test]
    fn finish_flushes_partial() {
        let mut s = DelayedSmoother::new(0, DelayedParams::for_fps(30.0));
        for _ in 0..3 {
            s.push(bx(1.0));
        }
        assert_eq!(s.finish().unwrap().len(), 3);
        assert!(s.finish().is_none());
    }
}
