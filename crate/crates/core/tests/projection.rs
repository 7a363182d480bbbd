use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, PI};

use autodirector::projection::{
    bbox_to_fov, camera_ray, instruction_to_camera, pixel_to_angles, remap, EquirectGeometry, Sampling, VirtualCamera,
};
use autodirector::{BoundingBox, Exec, RenderingInstruction};
use image::{Rgb, RgbImage};

#[test]
fn angle_examples() {
    let eq = EquirectGeometry::full_sphere(2048, 1024).unwrap();
    let (yaw, pitch) = pixel_to_angles(1536.0, 512.0, &eq);
    assert!((yaw - FRAC_PI_2).abs() < 1e-12 && pitch.abs() < 1e-12);
    let b = BoundingBox::new(1000.0, 500.0, 256.0, 300.0).unwrap();
    assert!((bbox_to_fov(&b, &eq, 1.0) - FRAC_PI_4).abs() < 1e-12);
    assert!((bbox_to_fov(&b, &eq, 2.0) - FRAC_PI_8).abs() < 1e-12);

    let cam = VirtualCamera::new(FRAC_PI_2, 0.0, 1.0, 640, 360).unwrap();
    let r = camera_ray(320.0, 180.0, &cam);
    assert!((r - nalgebra::Vector3::new(1.0, 0.0, 0.0)).norm() < 1e-12);

    let instr = RenderingInstruction { frame: 0, stream: 0, cx: 1536.0, cy: 512.0, zoom: 4.0 };
    let cam = instruction_to_camera(&instr, &eq, 640, 360).unwrap();
    assert!((cam.yaw - FRAC_PI_2).abs() < 1e-12);
    assert!((cam.fov_h - eq.h_span / 4.0).abs() < 1e-12);
}

#[test]
fn meridian_renders_straight() {
    let (w, h) = (2048u32, 1024u32);
    let eq = EquirectGeometry::full_sphere(w, h).unwrap();
    // dark band three texels wide around the meridian at yaw 0.7
    let col = (0.7 / (2.0 * PI) + 0.5) * w as f64;
    let src = RgbImage::from_fn(w, h, |u, _| {
        let d = (u as f64 + 0.5 - col).abs();
        if d < 1.5 { Rgb([0, 0, 0]) } else { Rgb([255, 255, 255]) }
    });
    for pitch in [0.0, 0.4, -0.8] {
        let cam = VirtualCamera::new(0.7, pitch, 1.0, 320, 240).unwrap();
        let out = remap(&src, &eq, &cam, Sampling::Bilinear, Exec::Parallel).unwrap();
        for y in 0..240 {
            let (mut sum, mut weight) = (0.0, 0.0);
            for x in 0..320 {
                let dark = 255.0 - out.get_pixel(x, y)[0] as f64;
                sum += dark * (x as f64 + 0.5);
                weight += dark;
            }
            assert!(weight > 0.0, "pitch {pitch} row {y}: line missing");
            let dev = (sum / weight - 160.0).abs();
            assert!(dev < 1.0, "pitch {pitch} row {y}: deviation {dev}");
        }
    }
}

#[test]
fn sequential_and_parallel_remap_agree() {
    let eq = EquirectGeometry::full_sphere(512, 256).unwrap();
    let src = RgbImage::from_fn(512, 256, |u, v| Rgb([(u % 256) as u8, (v % 256) as u8, ((u ^ v) % 256) as u8]));
    let cam = VirtualCamera::new(-2.0, 0.3, 1.4, 200, 120).unwrap();
    let a = remap(&src, &eq, &cam, Sampling::Bilinear, Exec::Sequential).unwrap();
    let b = remap(&src, &eq, &cam, Sampling::Bilinear, Exec::Parallel).unwrap();
    assert_eq!(a, b);
}
