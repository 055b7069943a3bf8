//! Planar geometry primitives shared across the pipeline.
//!
//! Everything is in millimetres. Polylines are `Vec<Point2>`; a closed
//! polyline repeats its first vertex at the end.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn add(self, other: Point2) -> Point2 {
        Point2::new(self.x + other.x, self.y + other.y)
    }

    pub fn sub(self, other: Point2) -> Point2 {
        Point2::new(self.x - other.x, self.y - other.y)
    }

    pub fn scale(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z component of the cross product, useful for sidedness tests.
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point2) -> f64 {
        self.sub(other).norm()
    }

    pub fn lerp(self, other: Point2, t: f64) -> Point2 {
        Point2::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
    }

    pub fn rotate(self, angle: f64) -> Point2 {
        let (s, c) = angle.sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

/// Rigid planar pose: rotation by `theta` followed by translation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub const fn new(x: f64, y: f64, theta: f64) -> Self {
        Pose2 { x, y, theta }
    }

    pub const fn identity() -> Self {
        Pose2::new(0.0, 0.0, 0.0)
    }

    pub fn translation(self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    /// Map a body-frame point into the world frame.
    pub fn apply(self, p: Point2) -> Point2 {
        p.rotate(self.theta).add(self.translation())
    }

    /// Map a world-frame point into the body frame.
    pub fn apply_inverse(self, p: Point2) -> Point2 {
        p.sub(self.translation()).rotate(-self.theta)
    }
}

/// Normalize an angle to (-pi, pi].
pub fn normalize_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut r = a.rem_euclid(two_pi);
    if r > std::f64::consts::PI {
        r -= two_pi;
    }
    // rem_euclid can land exactly on -pi via the subtraction above only
    // when r == pi, which stays pi; guard the -pi representation anyway.
    if r <= -std::f64::consts::PI {
        r += two_pi;
    }
    r
}

/// Smallest absolute difference between two angles.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    normalize_angle(a - b).abs()
}

pub fn polyline_length(pts: &[Point2]) -> f64 {
    pts.windows(2).map(|w| w[0].dist(w[1])).sum()
}

/// Cumulative arc length at every vertex, starting at 0.
pub fn cumulative_lengths(pts: &[Point2]) -> Vec<f64> {
    let mut out = Vec::with_capacity(pts.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in pts.windows(2) {
        acc += w[0].dist(w[1]);
        out.push(acc);
    }
    out
}

/// Point on the polyline at arc length `s` (clamped to the ends).
pub fn point_at_arc_length(pts: &[Point2], cum: &[f64], s: f64) -> Point2 {
    debug_assert_eq!(pts.len(), cum.len());
    let total = *cum.last().unwrap();
    if s <= 0.0 {
        return pts[0];
    }
    if s >= total {
        return *pts.last().unwrap();
    }
    // binary search for the containing segment
    let mut lo = 0usize;
    let mut hi = cum.len() - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if cum[mid] <= s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let seg_len = cum[hi] - cum[lo];
    if seg_len <= 0.0 {
        return pts[lo];
    }
    pts[lo].lerp(pts[hi], (s - cum[lo]) / seg_len)
}

/// Nearest point on segment `ab` to `p`, with its distance.
pub fn nearest_on_segment(p: Point2, a: Point2, b: Point2) -> (Point2, f64) {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    let t = if len2 <= 0.0 {
        0.0
    } else {
        (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0)
    };
    let q = a.lerp(b, t);
    (q, p.dist(q))
}

/// Nearest point on a polyline to `p`: (point, distance, segment index).
pub fn nearest_on_polyline(p: Point2, pts: &[Point2]) -> (Point2, f64, usize) {
    assert!(pts.len() >= 2, "polyline needs at least two vertices");
    let mut best = (pts[0], f64::INFINITY, 0usize);
    for (i, w) in pts.windows(2).enumerate() {
        let (q, d) = nearest_on_segment(p, w[0], w[1]);
        if d < best.1 {
            best = (q, d, i);
        }
    }
    best
}

/// Arc-length position along the polyline of the projection of `p`.
pub fn project_onto_polyline(p: Point2, pts: &[Point2], cum: &[f64]) -> f64 {
    let (q, _, seg) = nearest_on_polyline(p, pts);
    cum[seg] + pts[seg].dist(q)
}

/// Even-odd point-in-polygon test. `poly` is closed (first == last).
/// Points exactly on the boundary may land on either side; callers that
/// care use `signed_distance_to_polygon` with a tolerance instead.
pub fn point_in_polygon(p: Point2, poly: &[Point2]) -> bool {
    let mut inside = false;
    for w in poly.windows(2) {
        let (a, b) = (w[0], w[1]);
        // half-open rule keeps vertices from double-counting
        if (a.y <= p.y && p.y < b.y) || (b.y <= p.y && p.y < a.y) {
            let x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

/// Signed distance from `p` to a closed polygon boundary, positive inside.
/// Also returns the nearest boundary point.
pub fn signed_distance_to_polygon(p: Point2, poly: &[Point2]) -> (f64, Point2) {
    let (q, d, _) = nearest_on_polyline(p, poly);
    if point_in_polygon(p, poly) {
        (d, q)
    } else {
        (-d, q)
    }
}

/// Area of a closed polygon (first == last), always non-negative.
pub fn polygon_area(poly: &[Point2]) -> f64 {
    let mut acc = 0.0;
    for w in poly.windows(2) {
        acc += w[0].cross(w[1]);
    }
    (acc / 2.0).abs()
}

/// Signed area: positive for counter-clockwise winding.
pub fn polygon_signed_area(poly: &[Point2]) -> f64 {
    let mut acc = 0.0;
    for w in poly.windows(2) {
        acc += w[0].cross(w[1]);
    }
    acc / 2.0
}

/// Area centroid of a closed polygon (first == last).
pub fn polygon_centroid(poly: &[Point2]) -> Point2 {
    let mut a = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for w in poly.windows(2) {
        let cr = w[0].cross(w[1]);
        a += cr;
        cx += (w[0].x + w[1].x) * cr;
        cy += (w[0].y + w[1].y) * cr;
    }
    if a.abs() < 1e-12 {
        // degenerate: fall back to the vertex mean
        let n = (poly.len() - 1) as f64;
        let sx: f64 = poly[..poly.len() - 1].iter().map(|p| p.x).sum();
        let sy: f64 = poly[..poly.len() - 1].iter().map(|p| p.y).sum();
        return Point2::new(sx / n, sy / n);
    }
    Point2::new(cx / (3.0 * a), cy / (3.0 * a))
}

/// Proper intersection test between segments `ab` and `cd`, including
/// collinear overlap. Shared endpoints alone do not count.
pub fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    fn orient(p: Point2, q: Point2, r: Point2) -> f64 {
        q.sub(p).cross(r.sub(p))
    }
    fn on_segment(p: Point2, q: Point2, r: Point2) -> bool {
        r.x >= p.x.min(q.x) - 1e-12
            && r.x <= p.x.max(q.x) + 1e-12
            && r.y >= p.y.min(q.y) - 1e-12
            && r.y <= p.y.max(q.y) + 1e-12
    }
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    if d1 == 0.0 && on_segment(c, d, a) && a != c && a != d {
        return true;
    }
    if d2 == 0.0 && on_segment(c, d, b) && b != c && b != d {
        return true;
    }
    if d3 == 0.0 && on_segment(a, b, c) && c != a && c != b {
        return true;
    }
    if d4 == 0.0 && on_segment(a, b, d) && d != a && d != b {
        return true;
    }
    false
}

/// Check a closed polygon for self-intersection. Returns the first pair of
/// non-adjacent segment indices that cross, if any.
pub fn find_self_intersection(poly: &[Point2]) -> Option<(usize, usize)> {
    let n = poly.len() - 1; // segment count
    for i in 0..n {
        for j in (i + 1)..n {
            // skip adjacent segments, including the wrap-around pair
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_intersect(poly[i], poly[i + 1], poly[j], poly[j + 1]) {
                return Some((i, j));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_normalization_lands_in_half_open_interval() {
        for k in -8..8 {
            let a = 0.3 + k as f64 * std::f64::consts::PI;
            let n = normalize_angle(a);
            assert!(
                n > -std::f64::consts::PI && n <= std::f64::consts::PI,
                "{a} -> {n}"
            );
        }
        assert_eq!(normalize_angle(std::f64::consts::PI), std::f64::consts::PI);
        assert_eq!(normalize_angle(-std::f64::consts::PI), std::f64::consts::PI);
    }

    #[test]
    fn arc_length_walk_on_l_shape() {
        let pts = vec![
            Point2::new(0.0, 0.0),
            Point2::new(5.0, 0.0),
            Point2::new(5.0, 5.0),
        ];
        let cum = cumulative_lengths(&pts);
        let p = point_at_arc_length(&pts, &cum, 6.0);
        assert!(p.dist(Point2::new(5.0, 1.0)) < 1e-12);
    }

    #[test]
    fn signed_distance_sign_matches_containment() {
        let square = vec![
            Point2::new(0.0, 0.0),
            Point2::new(10.0, 0.0),
            Point2::new(10.0, 10.0),
            Point2::new(0.0, 10.0),
            Point2::new(0.0, 0.0),
        ];
        let (din, _) = signed_distance_to_polygon(Point2::new(5.0, 5.0), &square);
        assert!((din - 5.0).abs() < 1e-12);
        let (dout, q) = signed_distance_to_polygon(Point2::new(5.0, -3.0), &square);
        assert!((dout + 3.0).abs() < 1e-12);
        assert!(q.dist(Point2::new(5.0, 0.0)) < 1e-12);
    }

    #[test]
    fn centroid_of_rectangle() {
        let rect = vec![
            Point2::new(1.0, 2.0),
            Point2::new(5.0, 2.0),
            Point2::new(5.0, 4.0),
            Point2::new(1.0, 4.0),
            Point2::new(1.0, 2.0),
        ];
        let c = polygon_centroid(&rect);
        assert!(c.dist(Point2::new(3.0, 3.0)) < 1e-12);
        assert!((polygon_area(&rect) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn self_intersection_found_in_bowtie() {
        let bowtie = vec![
            Point2::new(0.0, 0.0),
            Point2::new(10.0, 10.0),
            Point2::new(10.0, 0.0),
            Point2::new(0.0, 10.0),
            Point2::new(0.0, 0.0),
        ];
        assert!(find_self_intersection(&bowtie).is_some());
        let square = vec![
            Point2::new(0.0, 0.0),
            Point2::new(10.0, 0.0),
            Point2::new(10.0, 10.0),
            Point2::new(0.0, 10.0),
            Point2::new(0.0, 0.0),
        ];
        assert!(find_self_intersection(&square).is_none());
    }
}
