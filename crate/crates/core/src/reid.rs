//! Cross-camera re-identification.
//!
//! Each individual camera track gets a mean appearance feature computed over
//! a few unoccluded frames. K-means groups the features into identities, and
//! [`direct_person`] runs shot selection on one identity's tracks, falling
//! back to group shots and then to the full frame.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::Range;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::director::{
    render, select_best, select_segmented, Direction, InterestObjects, ScoreTable, SelectionTimeline, TrackKey,
};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::{BoundingBox, DirectorConfig};
use crate::projection::read_ppm;
use crate::sim::GroundTruth;
use crate::smoothing::CameraTrack;
use crate::tracking::{Trace, TraceKind};

pub const DEFAULT_REPRESENTATIVES: usize = 5;
pub const DEFAULT_UNCERTAINTY_MARGIN: f64 = 0.8;
pub const DEFAULT_MAX_ITER: usize = 100;

/// Unit-length appearance descriptor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    /// Normalize `values`; fails on non-finite or zero input.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("feature must be non-empty and finite"));
        }
        let n = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n == 0.0 {
            return Err(Error::invalid("feature has zero norm"));
        }
        Ok(FeatureVector(values.into_iter().map(|v| v / n).collect()))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Source of appearance features for detections.
pub trait FeatureProvider: Sync {
    /// Box aspect ratio (w/h) the provider works best with.
    fn aspect(&self) -> f64;
    fn dim(&self) -> usize;
    fn features(&self, stream: usize, frame: u64, bbox: &BoundingBox) -> Result<FeatureVector>;
}

/// Identity-coded features keyed to simulator ground truth.
///
/// Entity `e` maps to basis vector `e mod dim`; Gaussian noise of `noise`
/// per component is added, seeded by the query so repeated calls agree.
#[derive(Clone, Debug)]
pub struct SyntheticProvider {
    pub truth: Vec<GroundTruth>,
    pub dim: usize,
    pub noise: f64,
    pub seed: u64,
    pub aspect: f64,
}

impl SyntheticProvider {
    pub fn new(truth: Vec<GroundTruth>, seed: u64) -> Self {
        SyntheticProvider { truth, dim: 16, noise: 0.05, seed, aspect: 0.4 }
    }
}

impl FeatureProvider for SyntheticProvider {
    fn aspect(&self) -> f64 {
        self.aspect
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn features(&self, stream: usize, frame: u64, bbox: &BoundingBox) -> Result<FeatureVector> {
        let gt = self.truth.get(stream).ok_or_else(|| Error::Provider(format!("no ground truth for stream {stream}")))?;
        let entity = gt
            .best_match(frame, bbox)
            .ok_or_else(|| Error::Provider(format!("no entity under box at stream {stream} frame {frame}")))?;
        let mut key = self.seed ^ (stream as u64).rotate_left(48) ^ frame.rotate_left(20);
        for v in [bbox.cx, bbox.cy, bbox.w, bbox.h] {
            key = key.rotate_left(13) ^ v.to_bits();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        let normal = Normal::new(0.0, self.noise.max(0.0)).map_err(|e| Error::Provider(e.to_string()))?;
        let mut v: Vec<f64> = (0..self.dim).map(|_| normal.sample(&mut rng)).collect();
        v[entity as usize % self.dim] += 1.0;
        FeatureVector::new(v)
    }
}

/// 8×8×8 RGB histogram of the box crop in `frame_NNNNNN.ppm`.
#[derive(Clone, Debug)]
pub struct ColorHistogramProvider {
    pub frames_dirs: Vec<PathBuf>,
    pub aspect: f64,
}

impl ColorHistogramProvider {
    pub const BINS: usize = 8;

    pub fn new(frames_dirs: Vec<PathBuf>) -> Self {
        ColorHistogramProvider { frames_dirs, aspect: 0.4 }
    }

    pub fn frame_path(&self, stream: usize, frame: u64) -> Option<PathBuf> {
        self.frames_dirs.get(stream).map(|d| d.join(frame_file_name(frame)))
    }
}

/// File name of a frame image.
pub fn frame_file_name(frame: u64) -> String {
    format!("frame_{frame:06}.ppm")
}

impl FeatureProvider for ColorHistogramProvider {
    fn aspect(&self) -> f64 {
        self.aspect
    }

    fn dim(&self) -> usize {
        Self::BINS.pow(3)
    }

    fn features(&self, stream: usize, frame: u64, bbox: &BoundingBox) -> Result<FeatureVector> {
        let path = self.frame_path(stream, frame).ok_or_else(|| Error::Provider(format!("no frames for stream {stream}")))?;
        let img = read_ppm(&path)?;
        let (w, h) = (img.width() as f64, img.height() as f64);
        let x0 = bbox.left().max(0.0).floor() as u32;
        let y0 = bbox.top().max(0.0).floor() as u32;
        let x1 = bbox.right().min(w).ceil() as u32;
        let y1 = bbox.bottom().min(h).ceil() as u32;
        let mut hist = vec![0.0; self.dim()];
        let q = 256 / Self::BINS as u32;
        for y in y0..y1 {
            for x in x0..x1 {
                let [r, g, b] = img.get_pixel(x, y).0.map(|c| (c as u32 / q) as usize);
                hist[(r * Self::BINS + g) * Self::BINS + b] += 1.0;
            }
        }
        FeatureVector::new(hist).map_err(|_| Error::Provider(format!("empty crop at stream {stream} frame {frame}")))
    }
}

/// Frames chosen to describe a track.
#[derive(Clone, Debug, PartialEq)]
pub struct Representatives {
    pub frames: Vec<(u64, BoundingBox)>,
    /// False when every frame overlapped another trace.
    pub isolated: bool,
}

/// Up to `r` frames where `track` overlaps no other individual trace on its
/// stream, closest to the provider aspect first. Without such frames, all
/// frames are ranked by total overlap, then aspect distance.
pub fn representative_frames(track: &Trace, others: &[Trace], aspect: f64, r: usize) -> Representatives {
    let rivals: Vec<&Trace> = others
        .iter()
        .filter(|o| o.stream == track.stream && o.id != track.id && o.kind == TraceKind::Individual)
        .collect();
    let overlap = |frame: u64, b: &BoundingBox| -> f64 {
        rivals.iter().filter_map(|o| o.at(frame)).map(|e| e.bbox.intersection_area(b)).sum()
    };
    let mut scored: Vec<(f64, f64, u64, BoundingBox)> = track
        .entries
        .iter()
        .map(|e| (overlap(e.frame, &e.bbox), (e.bbox.aspect() - aspect).abs(), e.frame, e.bbox))
        .collect();
    let isolated = scored.iter().any(|s| s.0 == 0.0);
    if isolated {
        scored.retain(|s| s.0 == 0.0);
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    Representatives { frames: scored.into_iter().take(r).map(|s| (s.2, s.3)).collect(), isolated }
}

/// Normalized mean of the provider features over `frames`; frames the
/// provider rejects are skipped.
pub fn mean_feature(stream: usize, frames: &[(u64, BoundingBox)], provider: &dyn FeatureProvider) -> Result<FeatureVector> {
    let mut sum = vec![0.0; provider.dim()];
    let mut used = 0;
    let mut last_err = None;
    for (frame, b) in frames {
        match provider.features(stream, *frame, b) {
            Ok(f) => {
                if f.dim() != sum.len() {
                    return Err(Error::DimensionMismatch { expected: sum.len().to_string(), found: f.dim().to_string() });
                }
                sum.iter_mut().zip(f.values()).for_each(|(s, v)| *s += v);
                used += 1;
            }
            Err(e) => last_err = Some(e),
        }
    }
    if used == 0 {
        return Err(last_err.unwrap_or_else(|| Error::Provider(format!("no representative frames on stream {stream}"))));
    }
    FeatureVector::new(sum)
}

/// Mean feature of one camera track.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackFeature {
    pub key: TrackKey,
    pub feature: FeatureVector,
    pub frames: Vec<u64>,
    pub isolated: bool,
}

/// Features for every individual track, extracted in parallel.
pub fn track_features(
    tracks: &[CameraTrack],
    provider: &dyn FeatureProvider,
    representatives: usize,
    exec: Exec,
) -> Result<Vec<TrackFeature>> {
    let traces: Vec<Trace> = tracks.iter().map(|t| t.trace.clone()).collect();
    let individuals: Vec<&CameraTrack> = tracks.iter().filter(|t| t.kind == TraceKind::Individual).collect();
    let out = exec.map(&individuals, |t| {
        let reps = representative_frames(&t.trace, &traces, provider.aspect(), representatives);
        let feature = mean_feature(t.stream, &reps.frames, provider)?;
        Ok(TrackFeature {
            key: TrackKey::of(t),
            feature,
            frames: reps.frames.iter().map(|f| f.0).collect(),
            isolated: reps.isolated,
        })
    });
    out.into_iter().collect()
}

/// Precomputed features, one `track_id d v1 ... vd` line per track.
pub fn parse_feature_file(text: &str) -> Result<BTreeMap<u64, FeatureVector>> {
    let mut out = BTreeMap::new();
    let mut dim = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::Parse { line: i + 1, msg };
        let mut it = line.split_whitespace();
        let id: u64 = it.next().unwrap().parse().map_err(|_| err("bad track id".into()))?;
        let d: usize = it.next().ok_or_else(|| err("missing dimension".into()))?.parse().map_err(|_| err("bad dimension".into()))?;
        let values: Vec<f64> = it.map(str::parse).collect::<std::result::Result<_, _>>().map_err(|_| err("bad value".into()))?;
        if values.len() != d {
            return Err(err(format!("expected {d} values, found {}", values.len())));
        }
        if *dim.get_or_insert(d) != d {
            return Err(err(format!("dimension {d} differs from earlier {}", dim.unwrap())));
        }
        let f = FeatureVector::new(values).map_err(|e| err(e.to_string()))?;
        if out.insert(id, f).is_some() {
            return Err(err(format!("duplicate track id {id}")));
        }
    }
    Ok(out)
}

pub fn feature_file_text(features: &[TrackFeature]) -> String {
    let mut s = String::new();
    for f in features {
        let _ = write!(s, "{} {}", f.key.target, f.feature.dim());
        for v in f.feature.values() {
            let _ = write!(s, " {v}");
        }
        s.push('\n');
    }
    s
}

/// Attach precomputed features to the individual tracks they name.
pub fn features_from_file(tracks: &[CameraTrack], by_id: &BTreeMap<u64, FeatureVector>) -> Result<Vec<TrackFeature>> {
    tracks
        .iter()
        .filter(|t| t.kind == TraceKind::Individual)
        .map(|t| {
            let f = by_id.get(&t.target).ok_or_else(|| Error::invalid(format!("no feature for track {}", t.target)))?;
            Ok(TrackFeature { key: TrackKey::of(t), feature: f.clone(), frames: Vec::new(), isolated: true })
        })
        .collect()
}

/// Lloyd's algorithm result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMeans {
    pub centroids: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// Objective after initialization and after every iteration.
    pub objective: Vec<f64>,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn objective(points: &[Vec<f64>], centroids: &[Vec<f64>], labels: &[usize]) -> f64 {
    points.iter().zip(labels).map(|(p, &l)| dist2(p, &centroids[l])).sum()
}

/// Greedy k-means++ seeding: each new center is the best of a few
/// D²-weighted draws.
fn seed_centers(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let trials = 2 + (k as f64).ln().floor() as usize;
    let mut centers = vec![points[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for _ in 0..trials {
            let pick = if total > 0.0 {
                let mut x = rng.random::<f64>() * total;
                d2.iter().position(|&d| {
                    x -= d;
                    x < 0.0
                })
                .unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).unwrap())
            } else {
                rng.random_range(0..n)
            };
            let cand: Vec<f64> = d2.iter().zip(points).map(|(&d, p)| d.min(dist2(p, &points[pick]))).collect();
            let pot: f64 = cand.iter().sum();
            if best.as_ref().is_none_or(|b| pot < b.0) {
                best = Some((pot, pick, cand));
            }
        }
        let (_, pick, cand) = best.unwrap();
        centers.push(points[pick].clone());
        d2 = cand;
    }
    centers
}

/// K-means with k-means++ seeding, best of `restarts` runs.
///
/// Every run asserts that its objective never increases.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, max_iter: usize, restarts: usize) -> Result<KMeans> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if k > points.len() {
        return Err(Error::TooFew { needed: k, got: points.len() });
    }
    let d = points[0].len();
    if points.iter().any(|p| p.len() != d || p.iter().any(|v| !v.is_finite())) {
        return Err(Error::invalid("points must share one dimension and be finite"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeans> = None;
    for _ in 0..restarts.max(1) {
        let run = lloyd(points, seed_centers(points, k, &mut rng), max_iter);
        if best.as_ref().is_none_or(|b| run.objective.last() < b.objective.last()) {
            best = Some(run);
        }
    }
    Ok(best.unwrap())
}

fn nearest(p: &[f64], centroids: &[Vec<f64>], current: Option<usize>) -> usize {
    let mut bi = current.unwrap_or(0);
    let mut bd = dist2(p, &centroids[bi]);
    for (i, c) in centroids.iter().enumerate() {
        let d = dist2(p, c);
        // move only on strict improvement so ties cannot oscillate
        if d < bd {
            bi = i;
            bd = d;
        }
    }
    bi
}

fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>, max_iter: usize) -> KMeans {
    let mut labels: Vec<usize> = points.iter().map(|p| nearest(p, &centroids, None)).collect();
    let mut history = vec![objective(points, &centroids, &labels)];
    for _ in 0..max_iter {
        let d = points[0].len();
        let mut sums = vec![vec![0.0; d]; centroids.len()];
        let mut counts = vec![0usize; centroids.len()];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            sums[l].iter_mut().zip(p).for_each(|(s, v)| *s += v);
        }
        for ((c, s), n) in centroids.iter_mut().zip(sums).zip(&counts) {
            // an empty cluster keeps its centroid
            if *n > 0 {
                *c = s.into_iter().map(|v| v / *n as f64).collect();
            }
        }
        let next: Vec<usize> = points.iter().zip(&labels).map(|(p, &l)| nearest(p, &centroids, Some(l))).collect();
        let obj = objective(points, &centroids, &next);
        let prev = *history.last().unwrap();
        assert!(obj <= prev + 1e-9 * prev.max(1.0), "k-means objective rose from {prev} to {obj}");
        history.push(obj);
        let done = next == labels;
        labels = next;
        if done {
            break;
        }
    }
    KMeans { centroids, labels, objective: history }
}

/// Cluster membership of one track.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub cluster: usize,
    pub distance: f64,
    pub second_distance: Option<f64>,
    pub uncertain: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityClusters {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub assignment: BTreeMap<TrackKey, Assignment>,
    pub objective: Vec<f64>,
}

impl IdentityClusters {
    /// Confident members of `cluster`.
    pub fn members(&self, cluster: usize) -> Vec<TrackKey> {
        self.assignment.iter().filter(|(_, a)| a.cluster == cluster && !a.uncertain).map(|(k, _)| *k).collect()
    }
}

/// Nearest centroid of `p`, flagged uncertain when the nearest distance
/// exceeds `margin` times the second-nearest.
pub fn assign(p: &[f64], centroids: &[Vec<f64>], margin: f64) -> Assignment {
    let mut d: Vec<(f64, usize)> = centroids.iter().enumerate().map(|(i, c)| (dist2(p, c).sqrt(), i)).collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let second = d.get(1).map(|x| x.0);
    let uncertain = second.is_some_and(|s| d[0].0 > margin * s);
    Assignment { cluster: d[0].1, distance: d[0].0, second_distance: second, uncertain }
}

/// Cluster track features into `k` identities. Input order does not
/// matter: features are sorted by track key first.
pub fn assign_identities(features: &[TrackFeature], k: usize, seed: u64, margin: f64) -> Result<IdentityClusters> {
    if features.len() < k {
        return Err(Error::TooFew { needed: k, got: features.len() });
    }
    let mut sorted: Vec<&TrackFeature> = features.iter().collect();
    sorted.sort_by_key(|f| f.key);
    let points: Vec<Vec<f64>> = sorted.iter().map(|f| f.feature.values().to_vec()).collect();
    let km = kmeans(&points, k, seed, DEFAULT_MAX_ITER, 5)?;
    let assignment = sorted.iter().zip(&points).map(|(f, p)| (f.key, assign(p, &km.centroids, margin))).collect();
    Ok(IdentityClusters { k, centroids: km.centroids, assignment, objective: km.objective })
}

#[derive(Serialize)]
struct ReportTrack {
    stream: usize,
    track_id: u64,
    cluster: usize,
    distance: f64,
    second_distance: Option<f64>,
    uncertain: bool,
}

#[derive(Serialize)]
struct Report<'a> {
    k: usize,
    centroids: &'a [Vec<f64>],
    objective: &'a [f64],
    tracks: Vec<ReportTrack>,
}

pub fn cluster_report(c: &IdentityClusters) -> String {
    let tracks = c
        .assignment
        .iter()
        .map(|(k, a)| ReportTrack {
            stream: k.stream,
            track_id: k.target,
            cluster: a.cluster,
            distance: a.distance,
            second_distance: a.second_distance,
            uncertain: a.uncertain,
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&Report { k: c.k, centroids: &c.centroids, objective: &c.objective, tracks })
        .expect("report serializes");
    s.push('\n');
    s
}

/// Directing restricted to one identity. Frames without a confident track
/// of the identity show a group track when one is available, else the full
/// frame.
pub fn direct_person(
    cluster: usize,
    clusters: &IdentityClusters,
    tracks: &[CameraTrack],
    range: Range<u64>,
    interest: &InterestObjects,
    cfg: &DirectorConfig,
    exec: Exec,
) -> Result<Direction> {
    if cluster >= clusters.k {
        return Err(Error::invalid(format!("cluster {cluster} out of range 0..{}", clusters.k)));
    }
    cfg.validate()?;
    let members = clusters.members(cluster);
    let pool: Vec<CameraTrack> = tracks.iter().filter(|t| members.contains(&TrackKey::of(t))).cloned().collect();
    let groups: Vec<CameraTrack> = tracks.iter().filter(|t| t.kind == TraceKind::Group).cloned().collect();

    let table = ScoreTable::build(&pool, range.clone(), interest, cfg, exec);
    let (person, segments) = if cfg.best_viewpoint_always {
        (select_best(&table, cfg), None)
    } else {
        let s = select_segmented(&table, cfg, cfg.rng_seed);
        (s.timeline, Some(s.segments))
    };
    let group = select_best(&ScoreTable::build(&groups, range, interest, cfg, exec), cfg);
    let choices = person.choices.iter().zip(&group.choices).map(|(p, g)| p.or(*g)).collect();
    render(tracks, SelectionTimeline { start: person.start, choices }, segments, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FrameGeometry;
    use crate::smoothing::build_camera_track;
    use crate::tracking::TraceEntry;

    fn trace(stream: usize, id: u64, kind: TraceKind, frames: Range<u64>, f: impl Fn(u64) -> BoundingBox) -> Trace {
        Trace { id, stream, kind, entries: frames.map(|fr| TraceEntry { frame: fr, bbox: f(fr), observed: true }).collect() }
    }

    fn fv(v: &[f64]) -> FeatureVector {
        FeatureVector::new(v.to_vec()).unwrap()
    }

    struct Fixed(BTreeMap<(usize, u64), Vec<f64>>);

    impl FeatureProvider for Fixed {
        fn aspect(&self) -> f64 {
            0.5
        }
        fn dim(&self) -> usize {
            2
        }
        fn features(&self, stream: usize, frame: u64, _: &BoundingBox) -> Result<FeatureVector> {
            self.0.get(&(stream, frame)).map(|v| fv(v)).ok_or_else(|| Error::Provider("missing".into()))
        }
    }

    #[test]
    fn feature_normalization() {
        let f = fv(&[3.0, 4.0]);
        assert_eq!(f.values(), &[0.6, 0.8]);
        assert!(FeatureVector::new(vec![0.0, 0.0]).is_err());
        assert!(FeatureVector::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn representatives() {
        let geom_box = |w: f64| move |_| BoundingBox { cx: 100.0, cy: 100.0, w, h: 100.0 };
        let alone = trace(0, 1, TraceKind::Individual, 0..10, |f| BoundingBox { cx: 100.0, cy: 100.0, w: if f == 3 { 50.0 } else { 60.0 }, h: 100.0 });
        let r = representative_frames(&alone, std::slice::from_ref(&alone), 0.5, 5);
        assert!(r.isolated);
        assert_eq!(r.frames.len(), 5);
        assert_eq!(r.frames[0].0, 3);

        let a = trace(0, 1, TraceKind::Individual, 0..10, geom_box(60.0));
        let b = trace(0, 2, TraceKind::Individual, 0..10, geom_box(60.0));
        let group = trace(0, 3, TraceKind::Group, 0..10, geom_box(500.0));
        let r = representative_frames(&a, &[a.clone(), b.clone(), group.clone()], 0.5, 5);
        assert!(!r.isolated);
        assert_eq!(r.frames.len(), 5);

        // b leaves after frame 4; group traces never count as occluders
        let b = trace(0, 2, TraceKind::Individual, 0..5, geom_box(60.0));
        let r = representative_frames(&a, &[b, group], 0.5, 5);
        assert!(r.isolated);
        assert!(r.frames.iter().all(|f| f.0 >= 5));
    }

    #[test]
    fn mean_features() {
        let p = Fixed(BTreeMap::from([((0, 0), vec![1.0, 0.0]), ((0, 1), vec![0.0, 1.0]), ((0, 2), vec![1.0, 0.0])]));
        let b = BoundingBox { cx: 1.0, cy: 1.0, w: 1.0, h: 1.0 };
        assert_eq!(mean_feature(0, &[(0, b)], &p).unwrap(), fv(&[1.0, 0.0]));
        assert_eq!(mean_feature(0, &[(0, b), (2, b)], &p).unwrap(), fv(&[1.0, 0.0]));
        let m = mean_feature(0, &[(0, b), (1, b)], &p).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((m.values()[0] - s).abs() < 1e-15 && (m.values()[1] - s).abs() < 1e-15);
        // failing frames are skipped; all failing is an error
        assert_eq!(mean_feature(0, &[(0, b), (9, b)], &p).unwrap(), fv(&[1.0, 0.0]));
        assert!(mean_feature(0, &[(9, b)], &p).is_err());
        assert!(mean_feature(0, &[], &p).is_err());
    }

    #[test]
    fn kmeans_examples() {
        let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let km = kmeans(&pts, 6, 1, 50, 1).unwrap();
        assert_eq!(*km.objective.last().unwrap(), 0.0);
        let mut l = km.labels.clone();
        l.sort();
        l.dedup();
        assert_eq!(l.len(), 6);

        let dup = vec![vec![0.3, -1.0]; 7];
        let km = kmeans(&dup, 1, 1, 50, 1).unwrap();
        assert_eq!(km.centroids[0], vec![0.3, -1.0]);
        assert!(kmeans(&dup, 3, 1, 50, 1).is_ok());
        assert!(matches!(kmeans(&dup, 8, 1, 50, 1), Err(Error::TooFew { .. })));
        assert!(kmeans(&dup, 0, 1, 50, 1).is_err());
        assert_eq!(kmeans(&pts, 2, 9, 50, 3).unwrap(), kmeans(&pts, 2, 9, 50, 3).unwrap());
    }

    fn feat(stream: usize, target: u64, v: &[f64]) -> TrackFeature {
        TrackFeature { key: TrackKey { stream, target }, feature: fv(v), frames: vec![], isolated: true }
    }

    #[test]
    fn identities() {
        let fs = vec![feat(0, 1, &[1.0, 0.02]), feat(1, 2, &[0.02, 1.0]), feat(1, 3, &[1.0, 0.0]), feat(0, 4, &[0.0, 1.0])];
        let c = assign_identities(&fs, 2, 5, DEFAULT_UNCERTAINTY_MARGIN).unwrap();
        let cl = |s, t| c.assignment[&TrackKey { stream: s, target: t }].cluster;
        assert_eq!(cl(0, 1), cl(1, 3));
        assert_eq!(cl(1, 2), cl(0, 4));
        assert_ne!(cl(0, 1), cl(1, 2));
        assert!(c.assignment.values().all(|a| !a.uncertain));

        let mut rev = fs.clone();
        rev.reverse();
        assert_eq!(assign_identities(&rev, 2, 5, 0.8).unwrap(), c);

        let same = vec![feat(0, 1, &[1.0, 1.0]), feat(1, 2, &[1.0, 1.0])];
        let c = assign_identities(&same, 1, 0, 0.8).unwrap();
        assert!(c.assignment.values().all(|a| a.cluster == 0 && !a.uncertain));
        assert!(assign_identities(&same, 3, 0, 0.8).is_err());
    }

    #[test]
    fn equidistant_is_uncertain() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let a = assign(&[s, s], &[vec![1.0, 0.0], vec![0.0, 1.0]], 0.9);
        assert!(a.uncertain && a.cluster == 0);
        assert!(!assign(&[1.0, 0.0], &[vec![1.0, 0.0], vec![0.0, 1.0]], 0.9).uncertain);
        assert!(!assign(&[1.0, 0.0], &[vec![1.0, 0.0]], 0.9).uncertain);

        let mut fs: Vec<TrackFeature> = (0..40).map(|i| feat(0, i, if i % 2 == 0 { &[1.0, 0.0] } else { &[0.0, 1.0] })).collect();
        fs.push(feat(1, 99, &[1.0, 1.0]));
        let c = assign_identities(&fs, 2, 1, 0.9).unwrap();
        let a = c.assignment[&TrackKey { stream: 1, target: 99 }];
        assert!(a.uncertain, "{a:?}");
        assert_eq!(c.members(0).len() + c.members(1).len(), 40);
    }

    #[test]
    fn feature_file() {
        let fs = vec![feat(0, 7, &[0.6, 0.8]), feat(1, 9, &[1.0, 0.0])];
        let text = feature_file_text(&fs);
        let parsed = parse_feature_file(&text).unwrap();
        assert_eq!(parsed[&7], fs[0].feature);
        assert_eq!(parsed[&9], fs[1].feature);
        assert!(parse_feature_file("1 2 0.5\n").is_err());
        assert!(parse_feature_file("1 2 0.5 0.5\n2 3 1 1 1\n").is_err());
        assert!(parse_feature_file("1 2 0.5 0.5\n1 2 1 1\n").is_err());
        assert!(matches!(parse_feature_file("\n\nx 1 1\n"), Err(Error::Parse { line: 3, .. })));
    }

    fn hd() -> FrameGeometry {
        FrameGeometry::new(1920, 1080, 30.0).unwrap()
    }

    fn cam(stream: usize, id: u64, kind: TraceKind, frames: Range<u64>, cx: f64, w: f64) -> CameraTrack {
        let t = trace(stream, id, kind, frames, move |_| BoundingBox { cx, cy: 500.0, w, h: 250.0 });
        build_camera_track(&t, &hd(), 0.1).unwrap()
    }

    fn clusters_of(entries: &[(usize, u64, usize, bool)], k: usize) -> IdentityClusters {
        IdentityClusters {
            k,
            centroids: vec![vec![0.0]; k],
            assignment: entries
                .iter()
                .map(|&(s, t, c, u)| (TrackKey { stream: s, target: t }, Assignment { cluster: c, distance: 0.0, second_distance: None, uncertain: u }))
                .collect(),
            objective: vec![],
        }
    }

    #[test]
    fn person_gap_uses_group_then_full_frame() {
        let cfg = DirectorConfig::new(vec![Default::default()], vec![hd()]);
        let tracks = vec![
            cam(0, 1, TraceKind::Individual, 0..100, 400.0, 100.0),
            cam(0, 2, TraceKind::Individual, 200..300, 900.0, 100.0),
            cam(0, 3, TraceKind::Individual, 0..300, 1500.0, 100.0),
            cam(0, 4, TraceKind::Group, 0..300, 960.0, 1400.0),
        ];
        let cl = clusters_of(&[(0, 1, 0, false), (0, 2, 0, false), (0, 3, 1, false)], 2);
        let d = direct_person(0, &cl, &tracks, 0..300, &InterestObjects::default(), &cfg, Exec::Parallel).unwrap();
        for f in 0..300u64 {
            let want = match f {
                0..100 => 1,
                100..200 => 4,
                _ => 2,
            };
            assert_eq!(d.timeline.at(f).map(|k| k.target), Some(want), "frame {f}");
        }
        let d = direct_person(1, &cl, &tracks, 0..300, &InterestObjects::default(), &cfg, Exec::Parallel).unwrap();
        assert!(d.timeline.choices.iter().all(|c| c.map(|k| k.target) == Some(3)));

        // without a group track the gap is full frame
        let d = direct_person(0, &cl, &tracks[..3], 0..300, &InterestObjects::default(), &cfg, Exec::Sequential).unwrap();
        assert!(d.instructions[100..200].iter().all(|i| i.zoom == 1.0));
        assert!(d.instructions[..100].iter().all(|i| i.zoom > 1.0));

        // uncertain members are not shown
        let cl = clusters_of(&[(0, 1, 0, true), (0, 2, 0, false), (0, 3, 1, false)], 2);
        let d = direct_person(0, &cl, &tracks, 0..300, &InterestObjects::default(), &cfg, Exec::Sequential).unwrap();
        assert!(d.timeline.choices[..200].iter().all(|c| c.map(|k| k.target) == Some(4)));
        assert!(direct_person(2, &cl, &tracks, 0..300, &InterestObjects::default(), &cfg, Exec::Sequential).is_err());
    }
}
