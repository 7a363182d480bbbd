//! Detection files and region-of-interest masks.
//!
//! Detection file layout (whitespace separated, one record per line):
//!
//! ```text
//! autodirector-detections v1 <stream> <width> <height> <fps>
//! <frame> <class> <confidence> <cx> <cy> <w> <h>
//! ...
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Cursor;

use image::{ImageFormat, Luma};

use crate::error::{Error, Result};
use crate::model::{BoundingBox, Detection, FrameGeometry};

pub const DETECTIONS_MAGIC: &str = "autodirector-detections";
pub const DETECTIONS_VERSION: &str = "v1";

/// All detections of one stream, keyed by frame.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionSet {
    pub stream: usize,
    pub geometry: FrameGeometry,
    pub frames: BTreeMap<u64, Vec<Detection>>,
}

impl DetectionSet {
    pub fn new(stream: usize, geometry: FrameGeometry) -> Self {
        DetectionSet { stream, geometry, frames: BTreeMap::new() }
    }

    /// Add a detection, clipping its box to the frame. Boxes that end up
    /// with no area are dropped and `false` is returned.
    pub fn push(&mut self, mut det: Detection) -> bool {
        match det.bbox.clip_to(&self.geometry) {
            Some(b) => {
                det.bbox = b;
                self.frames.entry(det.frame).or_default().push(det);
                true
            }
            None => false,
        }
    }

    pub fn len(&self) -> usize {
        self.frames.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn at(&self, frame: u64) -> &[Detection] {
        self.frames.get(&frame).map(Vec::as_slice).unwrap_or(&[])
    }

    /// One past the last frame holding a detection.
    pub fn frame_end(&self) -> u64 {
        self.frames.keys().next_back().map_or(0, |f| f + 1)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Detection> {
        self.frames.values().flatten()
    }

    /// Keep detections matching `keep`; frames left empty are removed.
    pub fn retain(&self, mut keep: impl FnMut(&Detection) -> bool) -> DetectionSet {
        let frames = self
            .frames
            .iter()
            .filter_map(|(&f, dets)| {
                let kept: Vec<Detection> = dets.iter().copied().filter(|d| keep(d)).collect();
                (!kept.is_empty()).then_some((f, kept))
            })
            .collect();
        DetectionSet { stream: self.stream, geometry: self.geometry, frames }
    }

    pub fn with_min_confidence(&self, threshold: f64) -> DetectionSet {
        self.retain(|d| d.confidence >= threshold)
    }

    pub fn of_class(&self, class_id: u32) -> DetectionSet {
        self.retain(|d| d.class_id == class_id)
    }

    pub fn to_text(&self) -> String {
        let g = &self.geometry;
        let mut out = format!(
            "{DETECTIONS_MAGIC} {DETECTIONS_VERSION} {} {} {} {}\n",
            self.stream, g.width, g.height, g.fps
        );
        for d in self.iter() {
            let b = &d.bbox;
            let _ = writeln!(
                out,
                "{} {} {} {} {} {} {}",
                d.frame, d.class_id, d.confidence, b.cx, b.cy, b.w, b.h
            );
        }
        out
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn field<T: std::str::FromStr>(tok: &str, name: &str, line: usize) -> Result<T> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("{name}: cannot parse {tok:?}")))
}

/// Parse a detection file. When `expected` is given, the header geometry
/// must match it.
pub fn parse_detections(bytes: &[u8], expected: Option<&FrameGeometry>) -> Result<DetectionSet> {
    let text = std::str::from_utf8(bytes).map_err(|e| parse_err(0, format!("not UTF-8: {e}")))?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.first() != Some(&DETECTIONS_MAGIC) {
        return Err(parse_err(hline, "not a detection file"));
    }
    if toks.get(1) != Some(&DETECTIONS_VERSION) {
        return Err(parse_err(hline, format!("unknown version {:?}", toks.get(1).unwrap_or(&""))));
    }
    if toks.len() != 6 {
        return Err(parse_err(hline, "header needs: magic version stream width height fps"));
    }
    let stream: usize = field(toks[2], "stream", hline)?;
    let geometry = FrameGeometry::new(
        field(toks[3], "width", hline)?,
        field(toks[4], "height", hline)?,
        field(toks[5], "fps", hline)?,
    )
    .map_err(|e| parse_err(hline, e.to_string()))?;
    if let Some(exp) = expected {
        if *exp != geometry {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}@{}", exp.width, exp.height, exp.fps),
                found: format!("{}x{}@{}", geometry.width, geometry.height, geometry.fps),
            });
        }
    }

    let mut set = DetectionSet::new(stream, geometry);
    for (n, line) in lines {
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 7 {
            return Err(parse_err(n, format!("expected 7 fields, found {}", t.len())));
        }
        let det = Detection {
            frame: field(t[0], "frame", n)?,
            class_id: field(t[1], "class", n)?,
            confidence: field(t[2], "confidence", n)?,
            bbox: BoundingBox {
                cx: field(t[3], "cx", n)?,
                cy: field(t[4], "cy", n)?,
                w: field(t[5], "w", n)?,
                h: field(t[6], "h", n)?,
            },
        };
        det.validate().map_err(|e| parse_err(n, e.to_string()))?;
        set.push(det);
    }
    Ok(set)
}

/// Per-pixel region of interest. `true` pixels are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    pub width: u32,
    pub height: u32,
    bits: Vec<bool>,
    // (width+1) x (height+1) summed-area table of set pixels
    integral: Vec<u64>,
}

impl BinaryMask {
    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self::from_bits(width, height, bits)
    }

    pub fn from_bits(width: u32, height: u32, bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), width as usize * height as usize, "mask size");
        let (w, h) = (width as usize, height as usize);
        let mut integral = vec![0u64; (w + 1) * (h + 1)];
        for y in 0..h {
            let mut row = 0u64;
            for x in 0..w {
                row += bits[y * w + x] as u64;
                integral[(y + 1) * (w + 1) + x + 1] = integral[y * (w + 1) + x + 1] + row;
            }
        }
        BinaryMask { width, height, bits, integral }
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    /// Binary or ASCII PGM; pixels above 127 are set.
    pub fn from_pgm(bytes: &[u8]) -> Result<Self> {
        let img = image::load(Cursor::new(bytes), ImageFormat::Pnm)
            .map_err(|source| Error::Image { path: "<mask>".into(), source })?
            .to_luma8();
        let bits = img.pixels().map(|Luma([v])| *v > 127).collect();
        Ok(Self::from_bits(img.width(), img.height(), bits))
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.bits.iter().map(|&b| if b { 255u8 } else { 0 }));
        out
    }

    /// Number of set pixels in columns `x0..x1`, rows `y0..y1`.
    fn count(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> u64 {
        let w = self.width as usize + 1;
        self.integral[y1 * w + x1] + self.integral[y0 * w + x0]
            - self.integral[y0 * w + x1]
            - self.integral[y1 * w + x0]
    }

    /// Whether the box area covers at least one set pixel. Pixel `(i, j)`
    /// occupies `[i, i+1) x [j, j+1)`.
    pub fn covers(&self, b: &BoundingBox) -> bool {
        let clampx = |v: f64| v.clamp(0.0, self.width as f64);
        let clampy = |v: f64| v.clamp(0.0, self.height as f64);
        let x0 = clampx(b.left()).floor() as usize;
        let x1 = clampx(b.right()).ceil() as usize;
        let y0 = clampy(b.top()).floor() as usize;
        let y1 = clampy(b.bottom()).ceil() as usize;
        x1 > x0 && y1 > y0 && self.count(x0, y0, x1, y1) > 0
    }
}

/// Drop detections whose box does not touch the mask.
pub fn apply_mask(set: &DetectionSet, mask: &BinaryMask) -> Result<DetectionSet> {
    if mask.width != set.geometry.width || mask.height != set.geometry.height {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", set.geometry.width, set.geometry.height),
            found: format!("{}x{}", mask.width, mask.height),
        });
    }
    Ok(set.retain(|d| mask.covers(&d.bbox)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HEADER: &str = "autodirector-detections v1 0 1920 1080 30\n";

    fn hd() -> FrameGeometry {
        FrameGeometry::new(1920, 1080, 30.0).unwrap()
    }

    #[test]
    fn empty_body() {
        let set = parse_detections(HEADER.as_bytes(), Some(&hd())).unwrap();
        assert!(set.frames.is_empty());
        assert_eq!(set.geometry, hd());
    }

    #[test]
    fn single_record() {
        let text = format!("{HEADER}0 0 0.9 100 100 50 80\n");
        let set = parse_detections(text.as_bytes(), None).unwrap();
        assert_eq!(set.frames.len(), 1);
        let d = set.at(0)[0];
        assert_eq!(d.class_id, 0);
        assert_eq!(d.confidence, 0.9);
        assert_eq!(d.bbox, BoundingBox { cx: 100.0, cy: 100.0, w: 50.0, h: 80.0 });
    }

    #[test]
    fn negative_size_names_line() {
        let text = format!("{HEADER}0 0 0.9 100 100 50 80\n1 0 0.9 100 100 -5 80\n");
        match parse_detections(text.as_bytes(), None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_version_and_garbage() {
        let e = parse_detections(b"autodirector-detections v9 0 10 10 30\n", None);
        assert!(matches!(e, Err(Error::Parse { line: 1, .. })));
        let text = format!("{HEADER}0 0 0.9 abc 100 50 80\n");
        assert!(matches!(parse_detections(text.as_bytes(), None), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn geometry_mismatch() {
        let g = FrameGeometry::new(1280, 720, 30.0).unwrap();
        assert!(matches!(
            parse_detections(HEADER.as_bytes(), Some(&g)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sorts_and_clamps() {
        let text = format!("{HEADER}5 0 0.5 10 10 40 40\n2 0 0.5 1900 500 100 100\n");
        let set = parse_detections(text.as_bytes(), None).unwrap();
        let frames: Vec<u64> = set.frames.keys().copied().collect();
        assert_eq!(frames, vec![2, 5]);
        let b = set.at(5)[0].bbox;
        assert_eq!((b.left(), b.top(), b.right(), b.bottom()), (0.0, 0.0, 30.0, 30.0));
        let b = set.at(2)[0].bbox;
        assert_eq!(b.right(), 1920.0);
    }

    fn sample_set() -> DetectionSet {
        let mut s = DetectionSet::new(0, hd());
        for (f, cx) in [(0, 900.0), (0, 1400.0), (1, 300.0)] {
            s.push(Detection { frame: f, class_id: 0, confidence: 1.0, bbox: BoundingBox::new(cx, 500.0, 100.0, 200.0).unwrap() });
        }
        s
    }

    #[test]
    fn mask_identity_and_annihilator() {
        let s = sample_set();
        let all = BinaryMask::from_fn(1920, 1080, |_, _| true);
        let none = BinaryMask::from_fn(1920, 1080, |_, _| false);
        assert_eq!(apply_mask(&s, &all).unwrap(), s);
        assert!(apply_mask(&s, &none).unwrap().is_empty());
    }

    #[test]
    fn mask_left_half() {
        let s = sample_set();
        let left = BinaryMask::from_fn(1920, 1080, |x, _| x < 960);
        let out = apply_mask(&s, &left).unwrap();
        let kept: Vec<f64> = out.iter().map(|d| d.bbox.cx).collect();
        assert_eq!(kept, vec![900.0, 300.0]);
    }

    #[test]
    fn mask_thin_line_inside_box() {
        let s = sample_set();
        // a single set column crossing the 1400 box only
        let line = BinaryMask::from_fn(1920, 1080, |x, _| x == 1420);
        let out = apply_mask(&s, &line).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out.iter().next().unwrap().bbox.cx, 1400.0);
    }

    #[test]
    fn mask_dimension_mismatch() {
        let small = BinaryMask::from_fn(10, 10, |_, _| true);
        assert!(apply_mask(&sample_set(), &small).is_err());
    }

    #[test]
    fn pgm_round_trip() {
        let m = BinaryMask::from_fn(7, 5, |x, y| (x + y) % 3 == 0);
        let back = BinaryMask::from_pgm(&m.to_pgm()).unwrap();
        assert_eq!(back, m);
    }

    fn small() -> FrameGeometry {
        FrameGeometry::new(320, 180, 30.0).unwrap()
    }

    fn arb_set() -> impl Strategy<Value = DetectionSet> {
        prop::collection::vec((0u64..20, 0.0f64..320.0, 0.0f64..180.0, 1.5f64..80.0, 1.5f64..80.0), 0..40)
            .prop_map(|recs| {
                let mut s = DetectionSet::new(0, small());
                for (f, cx, cy, w, h) in recs {
                    s.push(Detection { frame: f, class_id: 0, confidence: 0.5, bbox: BoundingBox { cx, cy, w, h } });
                }
                s
            })
    }

    proptest! {
        #[test]
        fn mask_idempotent_and_subset(set in arb_set(), seed in 0u32..7) {
            let mask = BinaryMask::from_fn(320, 180, |x, y| (x / 17 + y / 13 + seed) % 4 == 0);
            let once = apply_mask(&set, &mask).unwrap();
            let twice = apply_mask(&once, &mask).unwrap();
            prop_assert_eq!(&once, &twice);
            // order-preserving subsequence of the input
            let mut input = set.iter();
            for d in once.iter() {
                prop_assert!(input.any(|x| x == d));
            }
        }

        #[test]
        fn text_round_trip(set in arb_set()) {
            let back = parse_detections(set.to_text().as_bytes(), Some(&small())).unwrap();
            prop_assert_eq!(back, set);
        }
    }
}
