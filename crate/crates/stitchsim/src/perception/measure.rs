//! Needle-relative edge distance: the quantity the seam controller keeps
//! at the commanded allowance. Comes in two flavours: measured from
//! detected edge pixels, and an exact oracle from the simulator's own
//! garment pose for tests and baselines.

use super::CameraModel;
use crate::dxf::DigitalThread;
use crate::geom::{signed_distance_to_polygon, Point2, Pose2};
use serde::Serialize;

/// One edge-distance sample. `edge_dist_mm` is signed: positive when the
/// needle is on the garment (interior) side of the contour.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EdgeMeasurement {
    pub edge_dist_mm: f64,
    /// World position of the nearest contour point used for the sample.
    pub nearest_edge_point: Point2,
    pub timestamp_s: f64,
    pub valid: bool,
}

impl EdgeMeasurement {
    pub fn invalid(timestamp_s: f64) -> Self {
        Self {
            edge_dist_mm: 0.0,
            nearest_edge_point: Point2::new(0.0, 0.0),
            timestamp_s,
            valid: false,
        }
    }
}

/// Distance from the needle to the nearest detected edge pixel inside a
/// square region of interest around the needle pixel.
///
/// The sample is only `valid` when the nearest pixel is within
/// `roi_half_extent_px` of the needle in Euclidean terms, so a valid
/// measurement always satisfies |d| <= half extent * scale; candidates in
/// the ROI corners beyond that radius are treated as no detection. The
/// sign comes from testing which side of the edge the needle shares with
/// `interior_hint` (any world point known to be on the garment).
pub fn needle_edge_distance(
    edges: &[(usize, usize)],
    camera: &CameraModel,
    roi_half_extent_px: usize,
    interior_hint: Point2,
    timestamp_s: f64,
) -> EdgeMeasurement {
    let (nx, ny) = camera.needle_px;
    let half = roi_half_extent_px as f64;

    let mut best: Option<(f64, (usize, usize))> = None;
    for &(x, y) in edges {
        let dx = x as f64 - nx;
        let dy = y as f64 - ny;
        if dx.abs() > half || dy.abs() > half {
            continue;
        }
        let d = dx.hypot(dy);
        if best.map_or(true, |(bd, _)| d < bd) {
            best = Some((d, (x, y)));
        }
    }

    let Some((px_dist, (ex, ey))) = best else {
        return EdgeMeasurement::invalid(timestamp_s);
    };
    if px_dist > half {
        // Corner of the square ROI: outside the trusted radius.
        return EdgeMeasurement::invalid(timestamp_s);
    }

    let edge_world = camera.pixel_to_world(ex as f64, ey as f64);
    let needle_world = camera.needle_world();
    let magnitude = px_dist * camera.scale_mm_per_px;
    let to_needle = needle_world.sub(edge_world);
    let to_interior = interior_hint.sub(edge_world);
    let sign = if to_needle.dot(to_interior) >= 0.0 {
        1.0
    } else {
        -1.0
    };
    EdgeMeasurement {
        edge_dist_mm: sign * magnitude,
        nearest_edge_point: edge_world,
        timestamp_s,
        valid: true,
    }
}

/// Exact edge distance computed from the true garment pose instead of a
/// camera frame. Used as ground truth in tests and as the sensor for
/// noise-free closed-loop baselines.
pub fn oracle_edge_distance(
    thread: &DigitalThread,
    garment_pose: Pose2,
    needle_world: Point2,
    timestamp_s: f64,
) -> EdgeMeasurement {
    let needle_garment = garment_pose.apply_inverse(needle_world);
    let (dist, nearest) = signed_distance_to_polygon(needle_garment, &thread.contour);
    EdgeMeasurement {
        edge_dist_mm: dist,
        nearest_edge_point: garment_pose.apply(nearest),
        timestamp_s,
        valid: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dxf::{extract_thread, parse_dxf, SeamSpec};
    use crate::perception::{detect_edges, render_garment, RenderParams};

    fn rect_dxf() -> String {
        let mut s = String::new();
        let mut line = |c: i32, v: &str| {
            s.push_str(&format!("{c}\n{v}\n"));
        };
        line(0, "SECTION");
        line(2, "ENTITIES");
        for (p1, p2) in [
            ((0.0, 0.0), (200.0, 0.0)),
            ((200.0, 0.0), (200.0, 120.0)),
            ((200.0, 120.0), (0.0, 120.0)),
            ((0.0, 120.0), (0.0, 0.0)),
        ] {
            line(0, "LINE");
            line(62, "7");
            line(10, &p1.0.to_string());
            line(20, &p1.1.to_string());
            line(11, &p2.0.to_string());
            line(21, &p2.1.to_string());
        }
        line(0, "LINE");
        line(62, "1");
        line(10, "0");
        line(20, "20");
        line(11, "200");
        line(21, "20");
        line(0, "ENDSEC");
        line(0, "EOF");
        s
    }

    fn rect_thread() -> DigitalThread {
        let parsed = parse_dxf(&rect_dxf()).unwrap();
        extract_thread(&parsed.entities, SeamSpec::default(), 0.01).unwrap()
    }

    #[test]
    fn oracle_distance_matches_construction() {
        let thread = rect_thread();
        // Put the garment so that the needle (world origin) sits 20 mm
        // inside the bottom edge: garment point (50, 20) at the needle.
        let pose = Pose2::new(-50.0, -20.0, 0.0);
        let m = oracle_edge_distance(&thread, pose, Point2::new(0.0, 0.0), 0.0);
        assert!(m.valid);
        assert!(
            (m.edge_dist_mm - 20.0).abs() < 1e-9,
            "got {}",
            m.edge_dist_mm
        );
        // Nearest contour point is straight down on the bottom edge.
        assert!((m.nearest_edge_point.y - -20.0).abs() < 1e-9);
    }

    #[test]
    fn oracle_distance_is_negative_off_garment() {
        let thread = rect_thread();
        // Needle 5 mm below the bottom edge.
        let pose = Pose2::new(-50.0, 5.0, 0.0);
        let m = oracle_edge_distance(&thread, pose, Point2::new(0.0, 0.0), 0.0);
        assert!(
            (m.edge_dist_mm + 5.0).abs() < 1e-9,
            "got {}",
            m.edge_dist_mm
        );
    }

    #[test]
    fn measured_distance_tracks_rendered_edge() {
        let thread = rect_thread();
        let cam = CameraModel::needle_camera();
        // Needle 20 mm above the bottom edge of the garment.
        let pose = Pose2::new(-50.0, -20.0, 0.0);
        let img = render_garment(&thread.contour, pose, &cam, &RenderParams::default(), 0).unwrap();
        let edges = detect_edges(&img, 20.0, 60.0);
        let hint = pose.apply(Point2::new(50.0, 60.0)); // garment centre region
        let m = needle_edge_distance(&edges, &cam, 60, hint, 0.25);
        assert!(m.valid);
        assert!(
            (m.edge_dist_mm - 20.0).abs() <= 1.0,
            "measured {} mm, want ~20",
            m.edge_dist_mm
        );
        assert_eq!(m.timestamp_s, 0.25);
    }

    #[test]
    fn measured_sign_flips_when_needle_leaves_garment() {
        let thread = rect_thread();
        let cam = CameraModel::needle_camera();
        // Needle 6 mm below the garment's bottom edge.
        let pose = Pose2::new(-50.0, 6.0, 0.0);
        let img = render_garment(&thread.contour, pose, &cam, &RenderParams::default(), 0).unwrap();
        let edges = detect_edges(&img, 20.0, 60.0);
        let hint = pose.apply(Point2::new(50.0, 60.0));
        let m = needle_edge_distance(&edges, &cam, 60, hint, 0.0);
        assert!(m.valid);
        assert!(
            (m.edge_dist_mm + 6.0).abs() <= 1.0,
            "measured {} mm, want ~-6",
            m.edge_dist_mm
        );
    }

    #[test]
    fn empty_roi_is_invalid() {
        let cam = CameraModel::needle_camera();
        let m = needle_edge_distance(&[], &cam, 40, Point2::new(0.0, 1.0), 1.5);
        assert!(!m.valid);
        assert_eq!(m.edge_dist_mm, 0.0);
        assert_eq!(m.timestamp_s, 1.5);
    }

    #[test]
    fn corner_of_square_roi_does_not_count() {
        let cam = CameraModel::needle_camera();
        // An edge pixel at the ROI corner: inside the square, outside the
        // trusted radius.
        let edges = vec![(128 + 38, 128 + 38)];
        let m = needle_edge_distance(&edges, &cam, 40, Point2::new(0.0, 1.0), 0.0);
        assert!(!m.valid, "corner candidate must not produce a sample");
        // The same pixel straight up is fine; the interior hint below the
        // edge puts the needle on the garment side, so the sign is positive.
        let edges = vec![(128, 128 + 38)];
        let m = needle_edge_distance(&edges, &cam, 40, Point2::new(0.0, 5.0), 0.0);
        assert!(m.valid);
        assert!((m.edge_dist_mm - 19.0).abs() < 1e-9);
    }

    #[test]
    fn valid_measurement_bounded_by_roi() {
        // Any valid sample's magnitude is at most half extent * scale.
        let cam = CameraModel::needle_camera();
        for (ex, ey) in [(100, 100), (128, 90), (166, 128), (150, 150)] {
            let m = needle_edge_distance(&[(ex, ey)], &cam, 40, Point2::new(0.0, 0.1), 0.0);
            if m.valid {
                assert!(m.edge_dist_mm.abs() <= 40.0 * 0.5 + 1e-9);
            }
        }
    }
}
