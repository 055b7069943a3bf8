//! Synthetic frame rendering. The garment contour is posed into world
//! coordinates and filled with a scanline pass; optional Gaussian pixel
//! noise is seeded so frames are bit-reproducible.

use super::{CameraModel, GrayImage, PerceptionError};
use crate::geom::{Point2, Pose2};
use crate::noise::{sample_standard_normal, seeded_rng};

#[derive(Debug, Clone, Copy)]
pub struct RenderParams {
    pub width: usize,
    pub height: usize,
    /// Intensity of garment pixels.
    pub fill: u8,
    /// Intensity of everything else.
    pub background: u8,
    /// Additive Gaussian noise sigma in intensity levels; 0 disables the
    /// noise draw entirely.
    pub noise_sd: f64,
}

impl Default for RenderParams {
    fn default() -> Self {
        Self {
            width: 256,
            height: 256,
            fill: 200,
            background: 50,
            noise_sd: 0.0,
        }
    }
}

/// Render the garment at `garment_pose` as seen by `camera`.
///
/// A pixel is garment if its centre falls inside the posed contour; the
/// fill uses half-open crossing rules so a boundary passing exactly
/// through pixel centres never double-counts. Errors if the garment's
/// bounding box misses the frame entirely.
pub fn render_garment(
    contour: &[Point2],
    garment_pose: Pose2,
    camera: &CameraModel,
    params: &RenderParams,
    seed: u64,
) -> Result<GrayImage, PerceptionError> {
    if params.width == 0 || params.height == 0 {
        return Err(PerceptionError::EmptyImage);
    }
    if !(camera.scale_mm_per_px > 0.0) {
        return Err(PerceptionError::BadScale(camera.scale_mm_per_px));
    }
    if contour.len() < 3 {
        return Err(PerceptionError::TemplateTooSmall(contour.len()));
    }

    let posed: Vec<Point2> = contour.iter().map(|&p| garment_pose.apply(p)).collect();

    // Frame extent in world coordinates (pixel centres).
    let fx0 = camera.origin_offset.x;
    let fy0 = camera.origin_offset.y;
    let fx1 = fx0 + camera.scale_mm_per_px * (params.width - 1) as f64;
    let fy1 = fy0 + camera.scale_mm_per_px * (params.height - 1) as f64;
    let (mut gx0, mut gy0, mut gx1, mut gy1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in &posed {
        gx0 = gx0.min(p.x);
        gy0 = gy0.min(p.y);
        gx1 = gx1.max(p.x);
        gy1 = gy1.max(p.y);
    }
    if gx1 < fx0 || gx0 > fx1 || gy1 < fy0 || gy0 > fy1 {
        return Err(PerceptionError::OutsideFrame);
    }

    let mut img = GrayImage::new(params.width, params.height, params.background);
    let scale = camera.scale_mm_per_px;
    let n = posed.len();
    let closed_skip = if posed[0].dist(posed[n - 1]) < 1e-12 {
        1
    } else {
        0
    };
    let mut crossings: Vec<f64> = Vec::with_capacity(16);

    for j in 0..params.height {
        let y = fy0 + scale * j as f64;
        crossings.clear();
        for k in 0..n - closed_skip {
            let a = posed[k];
            let b = posed[(k + 1) % n];
            if (a.y <= y && y < b.y) || (b.y <= y && y < a.y) {
                crossings.push(a.x + (y - a.y) / (b.y - a.y) * (b.x - a.x));
            }
        }
        if crossings.is_empty() {
            continue;
        }
        crossings.sort_by(|p, q| p.partial_cmp(q).unwrap());
        for pair in crossings.chunks_exact(2) {
            // Pixel centres in [x0, x1).
            let i0 = ((pair[0] - fx0) / scale).ceil().max(0.0) as usize;
            let i1 = (((pair[1] - fx0) / scale).ceil().max(0.0) as usize).min(params.width);
            for i in i0..i1 {
                img.set(i, j, params.fill);
            }
        }
    }

    if params.noise_sd > 0.0 {
        let mut rng = seeded_rng(seed);
        for px in img.pixels.iter_mut() {
            let v = *px as f64 + params.noise_sd * sample_standard_normal(&mut rng);
            *px = v.round().clamp(0.0, 255.0) as u8;
        }
    }
    Ok(img)
}

/// Serialize a frame as binary PGM (P5, maxval 255).
pub fn write_pgm(img: &GrayImage) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", img.width, img.height);
    let mut out = header.into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square(side: f64) -> Vec<Point2> {
        vec![
            Point2::new(0.0, 0.0),
            Point2::new(side, 0.0),
            Point2::new(side, side),
            Point2::new(0.0, side),
            Point2::new(0.0, 0.0),
        ]
    }

    #[test]
    fn square_fill_hits_interior_not_corner() {
        // 10 mm square with a corner at the origin; needle camera puts the
        // origin exactly on pixel (128, 128).
        let cam = CameraModel::needle_camera();
        let img = render_garment(
            &unit_square(10.0),
            Pose2::identity(),
            &cam,
            &RenderParams::default(),
            0,
        )
        .unwrap();
        // Interior: world (5, 5) -> pixel (138, 138).
        assert_eq!(img.get(138, 138), 200);
        // The corner pixel at the top-right vertex (10, 10) -> (148, 148)
        // sits on the boundary; half-open rules leave it background.
        assert_eq!(img.get(148, 148), 50);
        // Outside.
        assert_eq!(img.get(100, 100), 50);
    }

    #[test]
    fn filled_area_matches_polygon_area() {
        let cam = CameraModel::needle_camera();
        let img = render_garment(
            &unit_square(20.0),
            Pose2::identity(),
            &cam,
            &RenderParams::default(),
            0,
        )
        .unwrap();
        let filled = img.pixels.iter().filter(|&&p| p == 200).count();
        // 20 mm at 0.5 mm/px spans 40 px per side.
        assert_eq!(filled, 40 * 40);
    }

    #[test]
    fn pose_translates_fill() {
        let cam = CameraModel::needle_camera();
        let pose = Pose2::new(7.0, -3.0, 0.0);
        let img =
            render_garment(&unit_square(10.0), pose, &cam, &RenderParams::default(), 0).unwrap();
        // World (12, 2) = garment (5, 5) -> pixel (152, 132).
        assert_eq!(img.get(152, 132), 200);
        assert_eq!(img.get(138, 138), 50);
    }

    #[test]
    fn garment_off_frame_is_an_error() {
        let cam = CameraModel::needle_camera();
        let err = render_garment(
            &unit_square(10.0),
            Pose2::new(10_000.0, 0.0, 0.0),
            &cam,
            &RenderParams::default(),
            0,
        )
        .unwrap_err();
        assert!(matches!(err, PerceptionError::OutsideFrame));
    }

    #[test]
    fn noise_is_seed_deterministic() {
        let cam = CameraModel::needle_camera();
        let params = RenderParams {
            noise_sd: 4.0,
            ..RenderParams::default()
        };
        let square = unit_square(10.0);
        let a = render_garment(&square, Pose2::identity(), &cam, &params, 9).unwrap();
        let b = render_garment(&square, Pose2::identity(), &cam, &params, 9).unwrap();
        let c = render_garment(&square, Pose2::identity(), &cam, &params, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn zero_noise_ignores_seed() {
        let cam = CameraModel::needle_camera();
        let square = unit_square(10.0);
        let a = render_garment(
            &square,
            Pose2::identity(),
            &cam,
            &RenderParams::default(),
            1,
        )
        .unwrap();
        let b = render_garment(
            &square,
            Pose2::identity(),
            &cam,
            &RenderParams::default(),
            2,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pgm_header_and_payload() {
        let img = GrayImage::new(3, 2, 7);
        let bytes = write_pgm(&img);
        assert!(bytes.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(bytes.len(), 11 + 6);
        assert_eq!(&bytes[11..], &[7u8; 6]);
    }
}
