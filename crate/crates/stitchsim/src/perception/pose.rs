//! Whole-garment pose registration: segment the garment out of an
//! overhead frame by background subtraction, then fit the pattern contour
//! to the observed boundary with a rotation sweep plus golden-section
//! refinement.

use super::{CameraModel, GrayImage, PerceptionError};
use crate::geom::{normalize_angle, point_in_polygon, polygon_centroid, Point2, Pose2};
use crate::trajectory::resample_equidistant;

/// Minimum foreground blob size to accept as a garment.
const MIN_BLOB_PX: usize = 100;
/// Background subtraction threshold in intensity levels.
const DIFF_THRESHOLD: i16 = 25;
/// Template perimeter sampling step in mm.
const TEMPLATE_STEP_MM: f64 = 0.5;
/// Angular refinement stops below this window (radians; 0.05 degrees).
const ANGLE_TOL_RAD: f64 = 0.05 * std::f64::consts::PI / 180.0;

#[derive(Debug, Clone, Copy)]
pub struct PoseEstimate {
    /// Garment-to-world transform.
    pub pose: Pose2,
    /// Registration quality in (0, 1]: 1 / (1 + mean boundary misfit in mm).
    pub score: f64,
    /// A point on the garment interior suitable for gripping, in world
    /// coordinates.
    pub grasp_point: Point2,
}

/// Estimate the garment pose from an overhead frame.
///
/// `template` is the pattern contour in garment coordinates (closed, last
/// vertex repeating the first). The fit aligns sample centroids for
/// translation and sweeps rotation in 1 degree steps before refining, so
/// it finds the global basin even for large initial misalignment. For
/// rotationally symmetric templates any symmetry-equivalent pose is a
/// valid answer.
pub fn estimate_pose(
    img: &GrayImage,
    background: &GrayImage,
    template: &[Point2],
    camera: &CameraModel,
) -> Result<PoseEstimate, PerceptionError> {
    if img.width != background.width || img.height != background.height {
        return Err(PerceptionError::BackgroundMismatch {
            bg_w: background.width,
            bg_h: background.height,
            img_w: img.width,
            img_h: img.height,
        });
    }
    if img.width == 0 || img.height == 0 {
        return Err(PerceptionError::EmptyImage);
    }
    if template.len() < 3 {
        return Err(PerceptionError::TemplateTooSmall(template.len()));
    }

    let obs_px = garment_boundary_pixels(img, background)?;
    let obs: Vec<Point2> = obs_px
        .iter()
        .map(|&(x, y)| camera.pixel_to_world(x as f64, y as f64))
        .collect();
    let obs_centroid = mean_point(&obs);

    let tmpl = sample_template(template)?;
    let tmpl_centroid = mean_point(&tmpl);
    let tmpl_centered: Vec<Point2> = tmpl.iter().map(|&p| p.sub(tmpl_centroid)).collect();

    // Subsample both sets for the sweep; the final score uses everything.
    let obs_sub = stride_sample(&obs, 200);
    let tmpl_sub = stride_sample(&tmpl_centered, 400);

    let cost = |theta: f64, tmpl_set: &[Point2], obs_set: &[Point2]| -> f64 {
        let mut acc = 0.0;
        for &p in tmpl_set {
            let q = p.rotate(theta).add(obs_centroid);
            let mut best = f64::INFINITY;
            for &o in obs_set {
                let d2 = (q.x - o.x) * (q.x - o.x) + (q.y - o.y) * (q.y - o.y);
                if d2 < best {
                    best = d2;
                }
            }
            acc += best.sqrt();
        }
        acc / tmpl_set.len() as f64
    };

    let deg = std::f64::consts::PI / 180.0;
    let mut best_theta = 0.0;
    let mut best_cost = f64::INFINITY;
    for k in 0..360 {
        let theta = k as f64 * deg;
        let c = cost(theta, &tmpl_sub, &obs_sub);
        if c < best_cost {
            best_cost = c;
            best_theta = theta;
        }
    }

    // Golden-section refinement around the best grid cell.
    let golden = 0.5 * (3.0 - 5.0f64.sqrt());
    let mut a = best_theta - 1.5 * deg;
    let mut b = best_theta + 1.5 * deg;
    let mut x1 = a + golden * (b - a);
    let mut x2 = b - golden * (b - a);
    let mut f1 = cost(x1, &tmpl_sub, &obs_sub);
    let mut f2 = cost(x2, &tmpl_sub, &obs_sub);
    while b - a > ANGLE_TOL_RAD {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = a + golden * (b - a);
            f1 = cost(x1, &tmpl_sub, &obs_sub);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = b - golden * (b - a);
            f2 = cost(x2, &tmpl_sub, &obs_sub);
        }
    }
    let theta = normalize_angle(0.5 * (a + b));

    let translation = obs_centroid.sub(tmpl_centroid.rotate(theta));
    let pose = Pose2::new(translation.x, translation.y, theta);
    let final_cost = cost(theta, &tmpl_centered, &obs);
    let score = 1.0 / (1.0 + final_cost);

    let grasp_garment = clamp_to_interior(polygon_centroid(template), template);
    let grasp_point = pose.apply(grasp_garment);

    Ok(PoseEstimate {
        pose,
        score,
        grasp_point,
    })
}

/// Foreground mask, largest 8-connected blob, then its boundary pixels
/// (those with a 4-neighbour off the blob or on the image border).
fn garment_boundary_pixels(
    img: &GrayImage,
    background: &GrayImage,
) -> Result<Vec<(usize, usize)>, PerceptionError> {
    let (w, h) = (img.width, img.height);
    let mask: Vec<bool> = img
        .pixels
        .iter()
        .zip(&background.pixels)
        .map(|(&a, &b)| (a as i16 - b as i16).abs() > DIFF_THRESHOLD)
        .collect();

    let mut label = vec![0u32; w * h];
    let mut next = 1u32;
    let mut largest: (u32, usize) = (0, 0);
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !mask[start] || label[start] != 0 {
            continue;
        }
        let id = next;
        next += 1;
        let mut size = 0usize;
        label[start] = id;
        stack.push(start);
        while let Some(i) = stack.pop() {
            size += 1;
            let (x, y) = (i % w, i / w);
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let nx = x as i64 + dx;
                    let ny = y as i64 + dy;
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let ni = ny as usize * w + nx as usize;
                    if mask[ni] && label[ni] == 0 {
                        label[ni] = id;
                        stack.push(ni);
                    }
                }
            }
        }
        if size > largest.1 {
            largest = (id, size);
        }
    }
    if largest.1 < MIN_BLOB_PX {
        return Err(PerceptionError::GarmentNotFound {
            largest_px: largest.1,
            min_px: MIN_BLOB_PX,
        });
    }

    let id = largest.0;
    let mut boundary = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if label[y * w + x] != id {
                continue;
            }
            let on_border = x == 0 || y == 0 || x == w - 1 || y == h - 1;
            let exposed = on_border
                || label[y * w + x - 1] != id
                || label[y * w + x + 1] != id
                || label[(y - 1) * w + x] != id
                || label[(y + 1) * w + x] != id;
            if exposed {
                boundary.push((x, y));
            }
        }
    }
    Ok(boundary)
}

fn sample_template(template: &[Point2]) -> Result<Vec<Point2>, PerceptionError> {
    let mut pts = resample_equidistant(template, TEMPLATE_STEP_MM)
        .map_err(|_| PerceptionError::TemplateTooSmall(template.len()))?;
    // Closed contours resample with a repeated endpoint; drop it so the
    // centroid is unbiased.
    if pts.len() > 1 && pts[0].dist(pts[pts.len() - 1]) < 1e-9 {
        pts.pop();
    }
    Ok(pts)
}

fn mean_point(pts: &[Point2]) -> Point2 {
    let mut acc = Point2::new(0.0, 0.0);
    for &p in pts {
        acc = acc.add(p);
    }
    acc.scale(1.0 / pts.len() as f64)
}

fn stride_sample(pts: &[Point2], target: usize) -> Vec<Point2> {
    let stride = (pts.len() / target).max(1);
    pts.iter().step_by(stride).copied().collect()
}

/// Return `c` if it lies inside the polygon; otherwise the midpoint of
/// the horizontal interior span nearest to it. Concave parts can push the
/// area centroid outside the cloth, where a grasp would close on air.
fn clamp_to_interior(c: Point2, poly: &[Point2]) -> Point2 {
    if point_in_polygon(c, poly) {
        return c;
    }
    let mut xs: Vec<f64> = Vec::new();
    for w in poly.windows(2) {
        let (a, b) = (w[0], w[1]);
        if (a.y <= c.y && c.y < b.y) || (b.y <= c.y && c.y < a.y) {
            xs.push(a.x + (c.y - a.y) / (b.y - a.y) * (b.x - a.x));
        }
    }
    if xs.len() < 2 {
        // Degenerate line; fall back to the polygon's vertex mean.
        return mean_point(&poly[..poly.len() - 1]);
    }
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let mut best = Point2::new(0.5 * (xs[0] + xs[1]), c.y);
    let mut best_gap = f64::INFINITY;
    for pair in xs.chunks_exact(2) {
        let mid = 0.5 * (pair[0] + pair[1]);
        let gap = (mid - c.x).abs();
        if gap < best_gap {
            best_gap = gap;
            best = Point2::new(mid, c.y);
        }
    }
    best
}
