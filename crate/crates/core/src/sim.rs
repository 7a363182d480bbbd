//! Synthetic detection scenarios with ground truth.
//!
//! Entities move at constant velocity and bounce off the frame borders.
//! Emitted detections are the true boxes plus zero-mean Gaussian noise on
//! all four box fields, each independently dropped with `drop_rate`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::DetectionSet;
use crate::model::{BoundingBox, Detection, FrameGeometry};

pub const TRUTH_MAGIC: &str = "autodirector-truth";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Two people walking diagonally, meeting at the frame center halfway.
    Crossing,
    /// Two people bouncing around the frame.
    Bouncing,
    /// Four people walking together.
    GroupDrift,
    /// Three people on separate lanes, each visible for part of the clip.
    EnterExit,
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "crossing" => Ok(Scenario::Crossing),
            "bouncing" => Ok(Scenario::Bouncing),
            "group_drift" | "group-drift" => Ok(Scenario::GroupDrift),
            "enter_exit" | "enter-exit" => Ok(Scenario::EnterExit),
            _ => Err(Error::invalid(format!("unknown scenario {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    pub scenario: Scenario,
    pub frames: u64,
    pub geometry: FrameGeometry,
    pub noise_sigma: f64,
    pub drop_rate: f64,
    pub seed: u64,
    pub stream: usize,
}

impl SimParams {
    pub fn new(scenario: Scenario, frames: u64, seed: u64) -> Self {
        SimParams {
            scenario,
            frames,
            geometry: FrameGeometry { width: 1920, height: 1080, fps: 30.0 },
            noise_sigma: 0.0,
            drop_rate: 0.0,
            seed,
            stream: 0,
        }
    }

    pub fn noise(mut self, sigma: f64, drop_rate: f64) -> Self {
        self.noise_sigma = sigma;
        self.drop_rate = drop_rate;
        self
    }
}

/// True boxes per frame, tagged with stable entity ids.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruth {
    pub frames: BTreeMap<u64, Vec<(u32, BoundingBox)>>,
}

impl GroundTruth {
    pub fn entity_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.frames.values().flatten().map(|(id, _)| *id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn at(&self, frame: u64) -> &[(u32, BoundingBox)] {
        self.frames.get(&frame).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn box_of(&self, frame: u64, entity: u32) -> Option<BoundingBox> {
        self.at(frame).iter().find(|(id, _)| *id == entity).map(|(_, b)| *b)
    }

    /// Entity whose true box overlaps `b` the most at `frame`.
    pub fn best_match(&self, frame: u64, b: &BoundingBox) -> Option<u32> {
        self.at(frame)
            .iter()
            .map(|(id, t)| (*id, crate::tracking::iou(t, b)))
            .filter(|(_, v)| *v > 0.0)
            .max_by(|x, y| x.1.total_cmp(&y.1).then(y.0.cmp(&x.0)))
            .map(|(id, _)| id)
    }

    pub fn to_text(&self, stream: usize, geom: &FrameGeometry) -> String {
        let mut out = format!("{TRUTH_MAGIC} v1 {stream} {} {} {}\n", geom.width, geom.height, geom.fps);
        for (f, ents) in &self.frames {
            for (id, b) in ents {
                let _ = writeln!(out, "{f} {id} {} {} {} {}", b.cx, b.cy, b.w, b.h);
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.starts_with(TRUTH_MAGIC) => {}
            _ => return Err(Error::Parse { line: 1, msg: "missing ground-truth header".into() }),
        }
        let mut gt = GroundTruth::default();
        for (i, line) in lines {
            let err = |m: &str| Error::Parse { line: i + 1, msg: m.to_string() };
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.len() != 6 {
                return Err(err("expected `frame entity cx cy w h`"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| err("bad number"));
            let frame: u64 = t[0].parse().map_err(|_| err("bad frame"))?;
            let id: u32 = t[1].parse().map_err(|_| err("bad entity"))?;
            let b = BoundingBox::new(num(t[2])?, num(t[3])?, num(t[4])?, num(t[5])?)
                .map_err(|e| err(&e.to_string()))?;
            gt.frames.entry(frame).or_default().push((id, b));
        }
        Ok(gt)
    }
}

struct Entity {
    id: u32,
    pos: (f64, f64),
    vel: (f64, f64),
    size: (f64, f64),
    active: std::ops::Range<u64>,
}

impl Entity {
    fn bbox(&self) -> BoundingBox {
        BoundingBox { cx: self.pos.0, cy: self.pos.1, w: self.size.0, h: self.size.1 }
    }

    /// Advance one frame, reflecting off the borders.
    fn step(&mut self, geom: &FrameGeometry) {
        let (hw, hh) = (self.size.0 / 2.0, self.size.1 / 2.0);
        let reflect = |p: &mut f64, v: &mut f64, lo: f64, hi: f64| {
            *p += *v;
            if *p < lo {
                *p = 2.0 * lo - *p;
                *v = -*v;
            } else if *p > hi {
                *p = 2.0 * hi - *p;
                *v = -*v;
            }
        };
        reflect(&mut self.pos.0, &mut self.vel.0, hw, geom.width as f64 - hw);
        reflect(&mut self.pos.1, &mut self.vel.1, hh, geom.height as f64 - hh);
    }
}

fn entities(p: &SimParams) -> Vec<Entity> {
    let (w, h) = (p.geometry.width as f64, p.geometry.height as f64);
    let s = w / 1920.0;
    let n = p.frames.max(2) as f64;
    let all = 0..p.frames;
    match p.scenario {
        Scenario::Crossing => {
            // both reach the center at frame n/2
            let x0 = 0.12 * w;
            let (ya, yb) = (0.3 * h, 0.7 * h);
            let t = n / 2.0;
            let vx = (w / 2.0 - x0) / t;
            let vy = (h / 2.0 - ya) / t;
            vec![
                Entity { id: 0, pos: (x0, ya), vel: (vx, vy), size: (80.0 * s, 200.0 * s), active: all.clone() },
                Entity { id: 1, pos: (x0, yb), vel: (vx, -vy), size: (80.0 * s, 200.0 * s), active: all },
            ]
        }
        Scenario::Bouncing => vec![
            Entity { id: 0, pos: (0.15 * w, 0.35 * h), vel: (7.0 * s, 5.0 * s), size: (90.0 * s, 210.0 * s), active: all.clone() },
            Entity { id: 1, pos: (0.8 * w, 0.65 * h), vel: (-6.0 * s, 4.0 * s), size: (80.0 * s, 190.0 * s), active: all },
        ],
        Scenario::GroupDrift => [(-160.0, -40.0), (-55.0, 30.0), (55.0, -25.0), (165.0, 35.0)]
            .iter()
            .enumerate()
            .map(|(i, (dx, dy))| Entity {
                id: i as u32,
                pos: (0.3 * w + dx * s, 0.5 * h + dy * s),
                vel: (2.5 * s, 0.6 * s),
                size: (70.0 * s, 180.0 * s),
                active: all.clone(),
            })
            .collect(),
        Scenario::EnterExit => {
            let f = p.frames as f64;
            let span = |a: f64, b: f64| (a * f) as u64..(b * f) as u64;
            vec![
                Entity { id: 0, pos: (0.1 * w, 0.23 * h), vel: (4.0 * s, 0.0), size: (80.0 * s, 200.0 * s), active: span(0.0, 0.6) },
                Entity { id: 1, pos: (0.9 * w, 0.5 * h), vel: (-4.0 * s, 0.0), size: (80.0 * s, 200.0 * s), active: span(0.2, 0.9) },
                Entity { id: 2, pos: (0.3 * w, 0.77 * h), vel: (3.0 * s, 0.0), size: (80.0 * s, 200.0 * s), active: span(0.45, 1.0) },
            ]
        }
    }
}

/// Generate detections and matching ground truth. Output depends only on
/// the parameters.
pub fn simulate_scene(p: &SimParams) -> Result<(DetectionSet, GroundTruth)> {
    if p.frames == 0 {
        return Err(Error::invalid("frames must be positive"));
    }
    if !(0.0..1.0).contains(&p.drop_rate) {
        return Err(Error::invalid(format!("drop_rate {} outside [0, 1)", p.drop_rate)));
    }
    if !(p.noise_sigma.is_finite() && p.noise_sigma >= 0.0) {
        return Err(Error::invalid("noise_sigma must be non-negative"));
    }
    p.geometry.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let noise = Normal::new(0.0, p.noise_sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let mut ents = entities(p);
    let mut set = DetectionSet::new(p.stream, p.geometry);
    let mut truth = GroundTruth::default();

    for frame in 0..p.frames {
        for e in &mut ents {
            if !e.active.contains(&frame) {
                continue;
            }
            let t = e.bbox();
            truth.frames.entry(frame).or_default().push((e.id, t));
            let dropped = rng.random::<f64>() < p.drop_rate;
            let mut jit = [0.0; 4];
            if p.noise_sigma > 0.0 {
                for j in &mut jit {
                    *j = noise.sample(&mut rng);
                }
            }
            if !dropped {
                let bbox = BoundingBox {
                    cx: t.cx + jit[0],
                    cy: t.cy + jit[1],
                    w: (t.w + jit[2]).max(1.0),
                    h: (t.h + jit[3]).max(1.0),
                };
                set.push(Detection { frame, class_id: 0, confidence: 0.9, bbox });
            }
        }
        for e in &mut ents {
            if e.active.contains(&frame) {
                e.step(&p.geometry);
            }
        }
    }
    Ok((set, truth))
}
