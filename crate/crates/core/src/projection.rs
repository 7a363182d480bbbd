//! Virtual pinhole cameras over equirectangular sources, plus the flat crop
//! path for ordinary wide-angle streams.
//!
//! Angles: yaw turns about the vertical axis (positive to the right), pitch
//! about the transverse axis (positive up). World axes are `x` right, `y` up,
//! `z` forward, so yaw = pitch = 0 looks along `+z`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::io::Cursor;
use std::path::Path;

use image::{ImageFormat, RgbImage};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::{crop_rect, BoundingBox, FrameGeometry, Rect, RenderingInstruction};

pub const MIN_FOV: f64 = 0.05;
pub const MAX_FOV: f64 = 2.8;

/// How a stream's pixels map to viewing directions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lens {
    #[default]
    Flat,
    Equirect,
}

impl std::str::FromStr for Lens {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(Lens::Flat),
            "equirect" => Ok(Lens::Equirect),
            _ => Err(Error::invalid(format!("unknown lens {s:?} (expected flat or equirect)"))),
        }
    }
}

/// Equirectangular image covering `h_span` × `v_span` radians centered on
/// the forward direction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquirectGeometry {
    pub width: u32,
    pub height: u32,
    pub h_span: f64,
    pub v_span: f64,
}

impl EquirectGeometry {
    /// Full 360 × 180 sphere; requires `width = 2 * height`.
    pub fn full_sphere(width: u32, height: u32) -> Result<Self> {
        if width == 0 || width != 2 * height {
            return Err(Error::invalid(format!("full sphere needs width = 2 * height, got {width}x{height}")));
        }
        Ok(EquirectGeometry { width, height, h_span: TAU, v_span: PI })
    }

    pub fn span(width: u32, height: u32, h_span: f64, v_span: f64) -> Result<Self> {
        let g = EquirectGeometry { width, height, h_span, v_span };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("equirect image is empty"));
        }
        if !(self.h_span > 0.0 && self.h_span <= TAU) || !(self.v_span > 0.0 && self.v_span <= PI) {
            return Err(Error::invalid(format!("spans {} x {} outside (0, 2pi] x (0, pi]", self.h_span, self.v_span)));
        }
        if self.is_full_sphere() && self.width != 2 * self.height {
            return Err(Error::invalid("full sphere needs width = 2 * height"));
        }
        Ok(())
    }

    pub fn is_full_sphere(&self) -> bool {
        self.h_span == TAU && self.v_span == PI
    }

    /// Equirect geometry of a stream: full sphere when the aspect is 2:1,
    /// otherwise a span proportional to the pixel size at the same density.
    pub fn from_frame(geom: &FrameGeometry) -> Result<Self> {
        if geom.width == 2 * geom.height {
            return Self::full_sphere(geom.width, geom.height);
        }
        let per_px = TAU / geom.width as f64;
        Self::span(geom.width, geom.height, TAU, (per_px * geom.height as f64).min(PI))
    }
}

/// `(yaw, pitch)` of continuous pixel coordinates `(u, v)`.
pub fn pixel_to_angles(u: f64, v: f64, eq: &EquirectGeometry) -> (f64, f64) {
    let yaw = eq.h_span * (u / eq.width as f64 - 0.5);
    let pitch = eq.v_span * (0.5 - v / eq.height as f64);
    (yaw, pitch)
}

/// Inverse of [`pixel_to_angles`].
pub fn angles_to_pixel(yaw: f64, pitch: f64, eq: &EquirectGeometry) -> (f64, f64) {
    let u = (yaw / eq.h_span + 0.5) * eq.width as f64;
    let v = (0.5 - pitch / eq.v_span) * eq.height as f64;
    (u, v)
}

/// Unit direction for `(yaw, pitch)`.
pub fn angles_to_ray(yaw: f64, pitch: f64) -> Vector3<f64> {
    Vector3::new(pitch.cos() * yaw.sin(), pitch.sin(), pitch.cos() * yaw.cos())
}

/// `(yaw, pitch)` of a direction; yaw in `(-pi, pi]`.
pub fn ray_to_angles(r: &Vector3<f64>) -> (f64, f64) {
    let yaw = r.x.atan2(r.z);
    let pitch = r.y.atan2(r.x.hypot(r.z));
    (yaw, pitch)
}

/// Horizontal field of view for a box, divided by `zoom_factor`.
pub fn bbox_to_fov(b: &BoundingBox, eq: &EquirectGeometry, zoom_factor: f64) -> f64 {
    (b.w / eq.width as f64 * eq.h_span / zoom_factor).clamp(MIN_FOV, MAX_FOV)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VirtualCamera {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
    pub fov_h: f64,
    pub width: u32,
    pub height: u32,
}

impl VirtualCamera {
    pub fn new(yaw: f64, pitch: f64, fov_h: f64, width: u32, height: u32) -> Result<Self> {
        let c = VirtualCamera { yaw, pitch, roll: 0.0, fov_h, width, height };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fov_h > 0.0 && self.fov_h < PI) {
            return Err(Error::invalid(format!("fov {} outside (0, pi)", self.fov_h)));
        }
        if !(self.pitch.abs() <= FRAC_PI_2) || !self.yaw.is_finite() {
            return Err(Error::invalid(format!("bad orientation yaw {} pitch {}", self.yaw, self.pitch)));
        }
        if self.roll != 0.0 {
            return Err(Error::invalid("roll is fixed at 0"));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("camera output is empty"));
        }
        Ok(())
    }

    /// Focal length in output pixels.
    pub fn focal(&self) -> f64 {
        self.width as f64 / 2.0 / (self.fov_h / 2.0).tan()
    }

    /// Continuous output pixel where `ray` lands, if it is in front.
    pub fn project(&self, ray: &Vector3<f64>) -> Option<(f64, f64)> {
        let (sy, cy) = self.yaw.sin_cos();
        let (sp, cp) = self.pitch.sin_cos();
        // inverse yaw, then inverse pitch
        let x1 = cy * ray.x - sy * ray.z;
        let z1 = sy * ray.x + cy * ray.z;
        let y2 = cp * ray.y - sp * z1;
        let z2 = sp * ray.y + cp * z1;
        if z2 <= 0.0 {
            return None;
        }
        let f = self.focal();
        Some((self.width as f64 / 2.0 + f * x1 / z2, self.height as f64 / 2.0 - f * y2 / z2))
    }
}

/// World ray through continuous output coordinates `(x, y)`; pixel `(i, j)`
/// has its center at `(i + 0.5, j + 0.5)`.
pub fn camera_ray(x: f64, y: f64, cam: &VirtualCamera) -> Vector3<f64> {
    let f = cam.focal();
    let d = Vector3::new(x - cam.width as f64 / 2.0, cam.height as f64 / 2.0 - y, f).normalize();
    let (sp, cp) = cam.pitch.sin_cos();
    let (sy, cy) = cam.yaw.sin_cos();
    // pitch about x, then yaw about y
    let (y1, z1) = (cp * d.y + sp * d.z, -sp * d.y + cp * d.z);
    let r = Vector3::new(cy * d.x + sy * z1, y1, -sy * d.x + cy * z1);
    r / r.norm()
}

/// Camera for an instruction on an equirect stream.
pub fn instruction_to_camera(
    instr: &RenderingInstruction,
    eq: &EquirectGeometry,
    width: u32,
    height: u32,
) -> Result<VirtualCamera> {
    if !(instr.zoom.is_finite() && instr.zoom > 0.0) {
        return Err(Error::invalid(format!("zoom {} must be positive", instr.zoom)));
    }
    let (yaw, pitch) = pixel_to_angles(instr.cx, instr.cy, eq);
    let fov = (eq.h_span / instr.zoom).clamp(MIN_FOV, MAX_FOV);
    VirtualCamera::new(yaw, pitch.clamp(-FRAC_PI_2, FRAC_PI_2), fov, width, height)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    #[default]
    Bilinear,
    Nearest,
}

/// Texel with horizontal wrap (full circle) or clamp, vertical clamp.
fn texel(src: &RgbImage, x: i64, y: i64, wrap: bool) -> [f64; 3] {
    let (w, h) = (src.width() as i64, src.height() as i64);
    let x = if wrap { x.rem_euclid(w) } else { x.clamp(0, w - 1) };
    let p = src.get_pixel(x as u32, y.clamp(0, h - 1) as u32).0;
    p.map(f64::from)
}

/// Sample `src` at continuous coordinates.
fn sample(src: &RgbImage, u: f64, v: f64, wrap: bool, mode: Sampling) -> [u8; 3] {
    let (x, y) = (u - 0.5, v - 0.5);
    let px = match mode {
        Sampling::Nearest => texel(src, x.round() as i64, y.round() as i64, wrap),
        Sampling::Bilinear => {
            let (x0, y0) = (x.floor(), y.floor());
            let (fx, fy) = (x - x0, y - y0);
            let (x0, y0) = (x0 as i64, y0 as i64);
            let t = |dx: i64, dy: i64| texel(src, x0 + dx, y0 + dy, wrap);
            let (a, b, c, d) = (t(0, 0), t(1, 0), t(0, 1), t(1, 1));
            std::array::from_fn(|k| {
                let top = a[k] + (b[k] - a[k]) * fx;
                let bot = c[k] + (d[k] - c[k]) * fx;
                top + (bot - top) * fy
            })
        }
    };
    px.map(|c| c.round().clamp(0.0, 255.0) as u8)
}

/// Render `cam`'s view of an equirect source.
pub fn remap(src: &RgbImage, eq: &EquirectGeometry, cam: &VirtualCamera, mode: Sampling, exec: Exec) -> Result<RgbImage> {
    if src.width() != eq.width || src.height() != eq.height {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", eq.width, eq.height),
            found: format!("{}x{}", src.width(), src.height()),
        });
    }
    cam.validate()?;
    let wrap = eq.h_span == TAU;
    let row = cam.width as usize * 3;
    let mut out = RgbImage::new(cam.width, cam.height);
    exec.for_each_chunk_mut(&mut out, row, |j, line| {
        for i in 0..cam.width as usize {
            let r = camera_ray(i as f64 + 0.5, j as f64 + 0.5, cam);
            let (yaw, pitch) = ray_to_angles(&r);
            let (u, v) = angles_to_pixel(yaw, pitch, eq);
            let covered = wrap || ((0.0..=eq.width as f64).contains(&u) && (0.0..=eq.height as f64).contains(&v));
            let px = if covered { sample(src, u, v, wrap, mode) } else { [0, 0, 0] };
            line[3 * i..3 * i + 3].copy_from_slice(&px);
        }
    });
    Ok(out)
}

/// Integer pixel rectangle covered by a fractional crop.
pub fn pixel_rect(r: &Rect, geom: &FrameGeometry) -> (u32, u32, u32, u32) {
    let x0 = (r.x.round().max(0.0) as u32).min(geom.width - 1);
    let y0 = (r.y.round().max(0.0) as u32).min(geom.height - 1);
    let x1 = ((r.x + r.w).round() as u32).clamp(x0 + 1, geom.width);
    let y1 = ((r.y + r.h).round() as u32).clamp(y0 + 1, geom.height);
    (x0, y0, x1 - x0, y1 - y0)
}

/// Flat path: cut the instruction's crop out of the frame.
pub fn extract_crop(src: &RgbImage, geom: &FrameGeometry, instr: &RenderingInstruction) -> Result<RgbImage> {
    if src.width() != geom.width || src.height() != geom.height {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", geom.width, geom.height),
            found: format!("{}x{}", src.width(), src.height()),
        });
    }
    let (x, y, w, h) = pixel_rect(&crop_rect(instr, geom)?, geom);
    Ok(image::imageops::crop_imm(src, x, y, w, h).to_image())
}

pub fn decode_ppm(bytes: &[u8], path: &Path) -> Result<RgbImage> {
    Ok(image::load(Cursor::new(bytes), ImageFormat::Pnm)
        .map_err(|source| Error::Image { path: path.to_path_buf(), source })?
        .to_rgb8())
}

pub fn read_ppm(path: &Path) -> Result<RgbImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_ppm(&bytes, path)
}

/// Binary P6 encoding.
pub fn encode_ppm(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.as_raw());
    out
}
