use crate::model::{BoundingBox, FrameGeometry};

use super::{finalize_traces, KalmanState, Trace, TraceEntry, TraceKind, TrackerParams};

/// Enclosing box of `boxes` after a single outlier pass: boxes whose center
/// lies farther than `radius` from the mean center are dropped.
pub fn group_box(boxes: &[BoundingBox], radius: f64) -> Option<BoundingBox> {
    if boxes.is_empty() {
        return None;
    }
    let n = boxes.len() as f64;
    let mx = boxes.iter().map(|b| b.cx).sum::<f64>() / n;
    let my = boxes.iter().map(|b| b.cy).sum::<f64>() / n;
    BoundingBox::enclose(boxes.iter().filter(|b| (b.cx - mx).hypot(b.cy - my) <= radius))
}

/// Build group traces from the finalized individual traces of one stream.
///
/// Each frame's individual boxes are merged into one box that corrects a
/// dedicated Kalman filter. Frames without boxes are coasted, and a group
/// trace closes after more than `max_coast` such frames.
pub fn track_groups(
    individuals: &[Trace],
    geom: &FrameGeometry,
    params: &TrackerParams,
    first_id: u64,
) -> Vec<Trace> {
    let Some(start) = individuals.iter().map(Trace::start).min() else {
        return Vec::new();
    };
    let end = individuals.iter().map(Trace::end).max().unwrap_or(start);
    let stream = individuals[0].stream;
    let radius = params.group_outlier_fraction * geom.diagonal();
    let kp = params.kalman;

    let mut closed = Vec::new();
    let mut current: Option<(KalmanState, Vec<TraceEntry>, u64)> = None;
    let mut next_id = first_id;

    for frame in start..=end {
        let boxes: Vec<BoundingBox> =
            individuals.iter().filter_map(|t| t.at(frame)).map(|e| e.bbox).collect();
        let merged = group_box(&boxes, radius);
        current = match (current.take(), merged) {
            (None, None) => None,
            (None, Some(m)) => Some((KalmanState::new(&m, &kp), vec![TraceEntry { frame, bbox: m, observed: true }], 0)),
            (Some((filter, mut entries, _)), Some(m)) => {
                let corrected = filter.predict(&kp).0.correct(&m, &kp);
                entries.push(TraceEntry { frame, bbox: corrected.bbox(), observed: true });
                Some((corrected, entries, 0))
            }
            (Some((filter, mut entries, misses)), None) => {
                let (pred, b) = filter.predict(&kp);
                entries.push(TraceEntry { frame, bbox: b, observed: false });
                if misses + 1 > params.max_coast {
                    closed.push(Trace { id: next_id, stream, kind: TraceKind::Group, entries });
                    next_id += 1;
                    None
                } else {
                    Some((pred, entries, misses + 1))
                }
            }
        };
    }
    if let Some((_, entries, _)) = current {
        closed.push(Trace { id: next_id, stream, kind: TraceKind::Group, entries });
    }
    finalize_traces(closed, params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(cx: f64, cy: f64, w: f64, h: f64) -> BoundingBox {
        BoundingBox { cx, cy, w, h }
    }

    fn trace(id: u64, frames: std::ops::Range<u64>, f: impl Fn(u64) -> BoundingBox) -> Trace {
        Trace {
            id,
            stream: 0,
            kind: TraceKind::Individual,
            entries: frames.map(|fr| TraceEntry { frame: fr, bbox: f(fr), observed: true }).collect(),
        }
    }

    fn hd() -> FrameGeometry {
        FrameGeometry { width: 1920, height: 1080, fps: 30.0 }
    }

    #[test]
    fn enclosure_of_two() {
        let g = group_box(&[b(100.0, 100.0, 50.0, 50.0), b(300.0, 300.0, 50.0, 50.0)], 1e9).unwrap();
        assert_eq!((g.left(), g.top(), g.right(), g.bottom()), (75.0, 75.0, 325.0, 325.0));
    }

    #[test]
    fn outlier_dropped() {
        let radius = 0.3 * hd().diagonal();
        let cluster = [b(200.0, 200.0, 60.0, 160.0), b(260.0, 210.0, 60.0, 160.0), b(230.0, 260.0, 60.0, 160.0)];
        let mut all = cluster.to_vec();
        all.push(b(1800.0, 1000.0, 60.0, 160.0));
        // mean center is (622.5, 417.5): cluster within ~470 px, outlier ~1320 px
        let g = group_box(&all, radius).unwrap();
        assert_eq!(g, BoundingBox::enclose(cluster.iter()).unwrap());
    }

    #[test]
    fn singleton_group_follows_individual() {
        let p = TrackerParams::for_fps(30.0);
        let ind = trace(3, 0..200, |f| b(300.0 + 2.0 * f as f64, 400.0, 80.0, 200.0));
        let groups = track_groups(std::slice::from_ref(&ind), &hd(), &p, 100);
        assert_eq!(groups.len(), 1);
        let g = &groups[0];
        assert_eq!(g.kind, TraceKind::Group);
        assert_eq!((g.start(), g.end()), (0, 199));
        for f in 60..200 {
            let (x, y) = (g.at(f).unwrap().bbox, ind.at(f).unwrap().bbox);
            assert!((x.cx - y.cx).abs() < 1.0 && (x.w - y.w).abs() < 1.0, "frame {f}");
        }
    }

    #[test]
    fn gap_closes_group() {
        let p = TrackerParams { min_trace_len: 10, ..TrackerParams::for_fps(30.0) };
        let t1 = trace(0, 0..50, |_| b(500.0, 500.0, 80.0, 200.0));
        let t2 = trace(1, 200..260, |_| b(900.0, 500.0, 80.0, 200.0));
        let groups = track_groups(&[t1, t2], &hd(), &p, 0);
        assert_eq!(groups.len(), 2);
        assert_eq!((groups[0].start(), groups[0].end()), (0, 49));
        assert_eq!((groups[1].start(), groups[1].end()), (200, 259));
        for g in &groups {
            g.validate().unwrap();
        }
    }
}
