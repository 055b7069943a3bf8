//! Flattening entities into polylines with a bounded chord error.

use super::{DxfEntity, ThreadError};
use crate::geom::{nearest_on_segment, Point2};

/// Smallest chord tolerance we accept, to keep sample counts finite.
const MIN_CHORD_TOL: f64 = 1e-6;

/// Flatten one entity into a polyline whose maximum deviation from the true
/// curve (the sagitta of each chord) stays within `max_chord_error` mm.
///
/// Lines and polylines pass through unchanged; arcs are split uniformly by
/// angle, splines adaptively by parameter span.
pub fn sample_entity(entity: &DxfEntity, max_chord_error: f64) -> Result<Vec<Point2>, ThreadError> {
    let tol = max_chord_error.max(MIN_CHORD_TOL);
    match entity {
        DxfEntity::Line { p1, p2, .. } => {
            if p1.dist(*p2) == 0.0 {
                return Err(ThreadError::DegenerateEntity {
                    kind: "LINE",
                    reason: format!("zero length at ({}, {})", p1.x, p1.y),
                });
            }
            Ok(vec![*p1, *p2])
        }
        DxfEntity::LwPolyline {
            vertices, closed, ..
        } => {
            let mut pts = vertices.clone();
            if *closed {
                pts.push(pts[0]);
            }
            if pts.windows(2).any(|w| w[0].dist(w[1]) == 0.0) {
                return Err(ThreadError::DegenerateEntity {
                    kind: "LWPOLYLINE",
                    reason: "repeated consecutive vertex".to_string(),
                });
            }
            Ok(pts)
        }
        DxfEntity::Arc {
            center,
            radius,
            start_angle_deg,
            end_angle_deg,
            ..
        } => sample_arc(*center, *radius, *start_angle_deg, *end_angle_deg, tol),
        DxfEntity::Spline {
            degree,
            control_points,
            knots,
            ..
        } => sample_spline(*degree, control_points, knots.as_deref(), tol),
    }
}

fn sample_arc(
    center: Point2,
    radius: f64,
    start_deg: f64,
    end_deg: f64,
    tol: f64,
) -> Result<Vec<Point2>, ThreadError> {
    if radius <= 0.0 {
        return Err(ThreadError::DegenerateEntity {
            kind: "ARC",
            reason: format!("radius {radius} is not positive"),
        });
    }
    let sweep_deg = (end_deg - start_deg).rem_euclid(360.0);
    if sweep_deg == 0.0 {
        return Err(ThreadError::DegenerateEntity {
            kind: "ARC",
            reason: "zero sweep".to_string(),
        });
    }
    let sweep = sweep_deg.to_radians();
    // chord over angle step `a` has sagitta r*(1 - cos(a/2)); cap the step
    // so the sagitta stays within tol
    let cos_half = (1.0 - tol / radius).clamp(-1.0, 1.0);
    let max_step = (2.0 * cos_half.acos()).min(std::f64::consts::FRAC_PI_2);
    let n = (sweep / max_step).ceil().max(1.0) as usize;
    let start = start_deg.to_radians();
    let mut pts = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let a = start + sweep * (k as f64) / (n as f64);
        pts.push(Point2::new(
            center.x + radius * a.cos(),
            center.y + radius * a.sin(),
        ));
    }
    Ok(pts)
}

/// Clamped uniform knot vector for `n` control points of the given degree.
fn clamped_uniform_knots(n: usize, degree: usize) -> Vec<f64> {
    let spans = n - degree; // number of interior intervals
    let mut knots = Vec::with_capacity(n + degree + 1);
    for _ in 0..=degree {
        knots.push(0.0);
    }
    for k in 1..spans {
        knots.push(k as f64 / spans as f64);
    }
    for _ in 0..=degree {
        knots.push(1.0);
    }
    knots
}

/// de Boor evaluation of a clamped B-spline at parameter `t`.
fn de_boor(degree: usize, ctrl: &[Point2], knots: &[f64], t: f64) -> Point2 {
    let n = ctrl.len();
    let lo = knots[degree];
    let hi = knots[n];
    let t = t.clamp(lo, hi);
    // find the knot span k with knots[k] <= t < knots[k+1]
    let mut k = degree;
    while k + 1 < n && knots[k + 1] <= t {
        k += 1;
    }
    let mut d: Vec<Point2> = (0..=degree).map(|j| ctrl[j + k - degree]).collect();
    for r in 1..=degree {
        for j in (r..=degree).rev() {
            let i = j + k - degree;
            let denom = knots[i + degree + 1 - r] - knots[i];
            let alpha = if denom == 0.0 {
                0.0
            } else {
                (t - knots[i]) / denom
            };
            d[j] = d[j - 1].lerp(d[j], alpha);
        }
    }
    d[degree]
}

fn sample_spline(
    degree: usize,
    ctrl: &[Point2],
    knots: Option<&[f64]>,
    tol: f64,
) -> Result<Vec<Point2>, ThreadError> {
    let owned;
    let knots: &[f64] = match knots {
        Some(k) => k,
        None => {
            owned = clamped_uniform_knots(ctrl.len(), degree);
            &owned
        }
    };
    let lo = knots[degree];
    let hi = knots[ctrl.len()];
    if hi <= lo {
        return Err(ThreadError::DegenerateEntity {
            kind: "SPLINE",
            reason: "empty parameter domain".to_string(),
        });
    }
    let eval = |t: f64| de_boor(degree, ctrl, knots, t);
    let mut pts = vec![eval(lo)];
    subdivide(&eval, lo, hi, tol, 0, &mut pts);
    if crate::geom::polyline_length(&pts) == 0.0 {
        return Err(ThreadError::DegenerateEntity {
            kind: "SPLINE",
            reason: "all control points coincide".to_string(),
        });
    }
    Ok(pts)
}

/// Recursively split the span until the chord fits the curve within tol.
/// The error estimate probes three interior parameters; the split rule
/// depends only on the span, so a tighter tol always splits a superset of
/// spans (sample counts grow monotonically as tol shrinks).
fn subdivide(
    eval: &dyn Fn(f64) -> Point2,
    a: f64,
    b: f64,
    tol: f64,
    depth: usize,
    out: &mut Vec<Point2>,
) {
    let pa = eval(a);
    let pb = eval(b);
    let mut err = 0.0f64;
    for frac in [0.25, 0.5, 0.75] {
        let p = eval(a + (b - a) * frac);
        let (_, d) = nearest_on_segment(p, pa, pb);
        err = err.max(d);
    }
    if err > tol && depth < 24 {
        let mid = 0.5 * (a + b);
        subdivide(eval, a, mid, tol, depth + 1, out);
        subdivide(eval, mid, b, tol, depth + 1, out);
    } else {
        // drop exact duplicates from coincident clamped ends
        if out.last().map(|p| p.dist(pb) > 0.0).unwrap_or(true) {
            out.push(pb);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dxf::EntityCommon;
    use crate::geom::{nearest_on_polyline, polyline_length};

    fn arc_entity(r: f64, a0: f64, a1: f64) -> DxfEntity {
        DxfEntity::Arc {
            center: Point2::new(0.0, 0.0),
            radius: r,
            start_angle_deg: a0,
            end_angle_deg: a1,
            common: EntityCommon::default(),
        }
    }

    #[test]
    fn quarter_arc_length_approaches_analytic() {
        let arc = arc_entity(100.0, 0.0, 90.0);
        let pts = sample_entity(&arc, 0.01).unwrap();
        let analytic = 100.0 * std::f64::consts::FRAC_PI_2;
        let sampled = polyline_length(&pts);
        assert!(sampled <= analytic);
        assert!(
            (analytic - sampled) / analytic < 1e-4,
            "sampled {sampled} vs {analytic}"
        );
        // endpoints are exact
        assert!(pts[0].dist(Point2::new(100.0, 0.0)) < 1e-12);
        assert!(pts.last().unwrap().dist(Point2::new(0.0, 100.0)) < 1e-12);
    }

    #[test]
    fn arc_sagitta_stays_within_tolerance() {
        let arc = arc_entity(50.0, 10.0, 220.0);
        for tol in [1.0, 0.1, 0.01] {
            let pts = sample_entity(&arc, tol).unwrap();
            for w in pts.windows(2) {
                let mid = w[0].lerp(w[1], 0.5);
                let sagitta = 50.0 - mid.norm();
                assert!(
                    sagitta <= tol * (1.0 + 1e-9),
                    "tol {tol}: sagitta {sagitta}"
                );
            }
        }
    }

    #[test]
    fn halving_tolerance_never_reduces_arc_samples() {
        let arc = arc_entity(80.0, -30.0, 150.0);
        let mut tol = 2.0;
        let mut last = sample_entity(&arc, tol).unwrap().len();
        for _ in 0..8 {
            tol /= 2.0;
            let n = sample_entity(&arc, tol).unwrap().len();
            assert!(n >= last, "tol {tol}: {n} < {last}");
            last = n;
        }
    }

    #[test]
    fn spline_samples_stay_near_curve() {
        // degree-2 spline without knots: clamped uniform is synthesized
        let spline = DxfEntity::Spline {
            degree: 2,
            control_points: vec![
                Point2::new(0.0, 0.0),
                Point2::new(30.0, 40.0),
                Point2::new(60.0, 0.0),
            ],
            knots: None,
            common: EntityCommon::default(),
        };
        let tol = 0.01;
        let pts = sample_entity(&spline, tol).unwrap();
        assert!(pts.len() > 10);
        // single-span degree-2 clamped B-spline is the quadratic Bezier:
        // check dense curve points sit within tol of the sampled polyline
        for k in 0..=200 {
            let t = k as f64 / 200.0;
            let b = Point2::new(0.0, 0.0)
                .scale((1.0 - t) * (1.0 - t))
                .add(Point2::new(30.0, 40.0).scale(2.0 * (1.0 - t) * t))
                .add(Point2::new(60.0, 0.0).scale(t * t));
            let (_, d, _) = nearest_on_polyline(b, &pts);
            assert!(
                d <= tol * 1.01,
                "t={t}: curve point {d} mm off the polyline"
            );
        }
    }

    #[test]
    fn spline_with_explicit_knots_matches_synthesized() {
        let ctrl = vec![
            Point2::new(0.0, 0.0),
            Point2::new(10.0, 20.0),
            Point2::new(30.0, 20.0),
            Point2::new(40.0, 0.0),
        ];
        let a = DxfEntity::Spline {
            degree: 3,
            control_points: ctrl.clone(),
            knots: None,
            common: EntityCommon::default(),
        };
        let b = DxfEntity::Spline {
            degree: 3,
            control_points: ctrl,
            knots: Some(vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0]),
            common: EntityCommon::default(),
        };
        let pa = sample_entity(&a, 0.05).unwrap();
        let pb = sample_entity(&b, 0.05).unwrap();
        assert_eq!(pa.len(), pb.len());
        for (x, y) in pa.iter().zip(&pb) {
            assert!(x.dist(*y) < 1e-12);
        }
    }

    #[test]
    fn degenerate_entities_are_rejected() {
        let line = DxfEntity::Line {
            p1: Point2::new(1.0, 1.0),
            p2: Point2::new(1.0, 1.0),
            common: EntityCommon::default(),
        };
        assert!(matches!(
            sample_entity(&line, 0.1),
            Err(ThreadError::DegenerateEntity { kind: "LINE", .. })
        ));
    }
}
