//! Seam trajectory generation.
//!
//! The seam polyline is resampled at the stitch pitch, each waypoint gets
//! the orientation of the local edge normal, the feed speed is synced to
//! the stitch rate, and the whole path is time-parameterized with a
//! trapezoidal speed profile (triangular when the path is too short to
//! reach the target speed).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dxf::DigitalThread;
use crate::geom::{
    cumulative_lengths, normalize_angle, point_at_arc_length, polygon_centroid, Point2,
};

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("spacing must be positive, got {0}")]
    InvalidSpacing(f64),
    #[error("path length {length:.3} mm is shorter than the spacing {spacing:.3} mm")]
    PathTooShort { length: f64, spacing: f64 },
    #[error("need at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("consecutive duplicate waypoint at index {0}")]
    DuplicateWaypoint(usize),
    #[error("normal direction at segment {0} cannot be disambiguated")]
    AmbiguousNormal(usize),
    #[error("stitch rate {rate:.3}/s exceeds the needle's maximum {max:.3}/s")]
    NeedleSpeedExceeded { rate: f64, max: f64 },
    #[error("invalid feed parameter: {0}")]
    InvalidFeedParameter(String),
    #[error("target speed {v:.3} mm/s is outside (0, {v_max:.3}] mm/s")]
    TargetSpeedInvalid { v: f64, v_max: f64 },
    #[error("invalid motion limits: v_max {v_max}, a_max {a_max}")]
    InvalidLimits { v_max: f64, a_max: f64 },
}

/// Axis limits of the gantry carrying the garment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionLimits {
    pub v_max: f64,
    pub a_max: f64,
}

impl Default for MotionLimits {
    fn default() -> Self {
        // desk-scale gantry defaults
        MotionLimits {
            v_max: 250.0,
            a_max: 1000.0,
        }
    }
}

/// Sewing machine feed parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MachineParams {
    pub stitch_rate_hz: f64,
    pub needle_rate_max_hz: f64,
}

impl Default for MachineParams {
    fn default() -> Self {
        MachineParams {
            stitch_rate_hz: 10.0,
            needle_rate_max_hz: 25.0,
        }
    }
}

/// One planned sample of the seam: position plus the orientation of the
/// local edge normal, which is also the direction a lateral correction for
/// this stretch of seam acts along.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub pos: Point2,
    /// radians in (-pi, pi]
    pub theta: f64,
}

/// Trapezoidal (or degenerate triangular) speed profile over a fixed path
/// length. Speeds are along-path; time and length pin each other.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedProfile {
    pub v: f64,
    pub a: f64,
    pub t_ramp: f64,
    pub d_ramp: f64,
    pub length: f64,
    pub duration: f64,
}

impl SpeedProfile {
    pub fn new(length: f64, v_target: f64, a_max: f64) -> SpeedProfile {
        // cap at the speed reachable by symmetric ramps over this length
        let v = v_target.min((a_max * length).sqrt());
        let t_ramp = v / a_max;
        let d_ramp = 0.5 * a_max * t_ramp * t_ramp;
        let cruise = (length - 2.0 * d_ramp).max(0.0);
        let duration = 2.0 * t_ramp + cruise / v;
        SpeedProfile {
            v,
            a: a_max,
            t_ramp,
            d_ramp,
            length,
            duration,
        }
    }

    /// True when the path never reaches the requested target speed.
    pub fn is_triangular(&self) -> bool {
        self.length <= 2.0 * self.d_ramp + 1e-12
    }

    /// Time at which arc length `s` is reached.
    pub fn time_at(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.length);
        if s <= self.d_ramp {
            (2.0 * s / self.a).sqrt()
        } else if s < self.length - self.d_ramp {
            self.t_ramp + (s - self.d_ramp) / self.v
        } else {
            self.duration - (2.0 * (self.length - s) / self.a).sqrt()
        }
    }

    /// Arc length covered by time `t`.
    pub fn arc_length_at(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.duration);
        if t <= self.t_ramp {
            0.5 * self.a * t * t
        } else if t < self.duration - self.t_ramp {
            self.d_ramp + self.v * (t - self.t_ramp)
        } else {
            let r = self.duration - t;
            self.length - 0.5 * self.a * r * r
        }
    }

    pub fn speed_at(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.duration);
        if t <= self.t_ramp {
            self.a * t
        } else if t < self.duration - self.t_ramp {
            self.v
        } else {
            self.a * (self.duration - t)
        }
    }
}

/// A time-parameterized seam plan.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub waypoints: Vec<Waypoint>,
    /// strictly increasing, starts at 0, one entry per waypoint
    pub timestamps: Vec<f64>,
    pub v_target: f64,
    pub limits: MotionLimits,
    /// cumulative arc length at each waypoint
    pub arc_lengths: Vec<f64>,
    pub profile: SpeedProfile,
}

impl Trajectory {
    pub fn duration(&self) -> f64 {
        self.profile.duration
    }

    pub fn length(&self) -> f64 {
        self.profile.length
    }

    /// Planned position at time `t`, following the speed profile along the
    /// waypoint polyline.
    pub fn position_at(&self, t: f64) -> Point2 {
        let s = self.profile.arc_length_at(t).clamp(0.0, self.length());
        let mut lo = 0usize;
        let mut hi = self.arc_lengths.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.arc_lengths[mid] <= s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let seg = self.arc_lengths[hi] - self.arc_lengths[lo];
        if seg <= 0.0 {
            return self.waypoints[lo].pos;
        }
        let f = ((s - self.arc_lengths[lo]) / seg).clamp(0.0, 1.0);
        self.waypoints[lo].pos.lerp(self.waypoints[hi].pos, f)
    }

    /// Index of the waypoint whose timestamp is nearest below `t`.
    pub fn waypoint_index_at(&self, t: f64) -> usize {
        match self
            .timestamps
            .binary_search_by(|x| x.partial_cmp(&t).unwrap())
        {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        }
    }
}

/// Resample a polyline at equal arc-length steps.
///
/// The first and last input endpoints are always included; every gap is
/// exactly `spacing` except possibly the final one, which is shorter.
pub fn resample_equidistant(
    polyline: &[Point2],
    spacing: f64,
) -> Result<Vec<Point2>, TrajectoryError> {
    if spacing <= 0.0 {
        return Err(TrajectoryError::InvalidSpacing(spacing));
    }
    if polyline.len() < 2 {
        return Err(TrajectoryError::TooFewPoints(polyline.len()));
    }
    let cum = cumulative_lengths(polyline);
    let total = *cum.last().unwrap();
    if total < spacing {
        return Err(TrajectoryError::PathTooShort {
            length: total,
            spacing,
        });
    }
    let mut out = vec![polyline[0]];
    let mut s = spacing;
    while s < total - 1e-9 {
        out.push(point_at_arc_length(polyline, &cum, s));
        s += spacing;
    }
    out.push(*polyline.last().unwrap());
    Ok(out)
}

/// Compute per-waypoint edge-normal orientations.
///
/// Each segment has two unit normals; the one whose half-plane contains
/// `needle_ref` is chosen. When `needle_ref` is collinear with a segment
/// the optional `fallback_ref` breaks the tie, and failing that the
/// previous segment's side is carried forward. The last waypoint inherits
/// the last segment's normal.
pub fn compute_normals_with_fallback(
    points: &[Point2],
    needle_ref: Point2,
    fallback_ref: Option<Point2>,
) -> Result<Vec<Waypoint>, TrajectoryError> {
    if points.len() < 2 {
        return Err(TrajectoryError::TooFewPoints(points.len()));
    }
    let mut out: Vec<Waypoint> = Vec::with_capacity(points.len());
    let mut prev_side: Option<f64> = None;
    for (i, w) in points.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        let chord = b.sub(a);
        let len = chord.norm();
        if len == 0.0 {
            return Err(TrajectoryError::DuplicateWaypoint(i));
        }
        let tangent = chord.scale(1.0 / len);
        let left = Point2::new(-tangent.y, tangent.x);
        let mid = a.lerp(b, 0.5);
        let side_of = |r: Point2| {
            let v = r.sub(mid);
            let d = left.dot(v);
            if d.abs() <= 1e-9 * (1.0 + v.norm()) {
                0.0
            } else {
                d.signum()
            }
        };
        let mut side = side_of(needle_ref);
        if side == 0.0 {
            if let Some(f) = fallback_ref {
                side = side_of(f);
            }
        }
        if side == 0.0 {
            side = prev_side.ok_or(TrajectoryError::AmbiguousNormal(i))?;
        }
        prev_side = Some(side);
        let n = left.scale(side);
        out.push(Waypoint {
            pos: a,
            theta: normalize_angle(n.y.atan2(n.x)),
        });
    }
    let last_theta = out.last().unwrap().theta;
    out.push(Waypoint {
        pos: *points.last().unwrap(),
        theta: last_theta,
    });
    Ok(out)
}

/// [`compute_normals_with_fallback`] without a tie-break reference.
pub fn compute_normals(
    points: &[Point2],
    needle_ref: Point2,
) -> Result<Vec<Waypoint>, TrajectoryError> {
    compute_normals_with_fallback(points, needle_ref, None)
}

/// Feed speed that lays stitches of the requested length at the machine's
/// stitch rate: v = stitch_length * stitch_rate.
pub fn sync_feed_velocity(
    stitch_length_mm: f64,
    machine: &MachineParams,
) -> Result<f64, TrajectoryError> {
    if stitch_length_mm <= 0.0 {
        return Err(TrajectoryError::InvalidFeedParameter(format!(
            "stitch length {stitch_length_mm} mm"
        )));
    }
    if machine.stitch_rate_hz <= 0.0 {
        return Err(TrajectoryError::InvalidFeedParameter(format!(
            "stitch rate {}/s",
            machine.stitch_rate_hz
        )));
    }
    if machine.stitch_rate_hz > machine.needle_rate_max_hz {
        return Err(TrajectoryError::NeedleSpeedExceeded {
            rate: machine.stitch_rate_hz,
            max: machine.needle_rate_max_hz,
        });
    }
    Ok(stitch_length_mm * machine.stitch_rate_hz)
}

/// Attach timestamps to waypoints using a trapezoidal speed profile.
pub fn time_parameterize(
    waypoints: Vec<Waypoint>,
    v_target: f64,
    limits: MotionLimits,
) -> Result<Trajectory, TrajectoryError> {
    if waypoints.len() < 2 {
        return Err(TrajectoryError::TooFewPoints(waypoints.len()));
    }
    if limits.v_max <= 0.0 || limits.a_max <= 0.0 {
        return Err(TrajectoryError::InvalidLimits {
            v_max: limits.v_max,
            a_max: limits.a_max,
        });
    }
    if v_target <= 0.0 || v_target > limits.v_max {
        return Err(TrajectoryError::TargetSpeedInvalid {
            v: v_target,
            v_max: limits.v_max,
        });
    }
    let pts: Vec<Point2> = waypoints.iter().map(|w| w.pos).collect();
    if let Some(i) = pts.windows(2).position(|w| w[0].dist(w[1]) == 0.0) {
        return Err(TrajectoryError::DuplicateWaypoint(i));
    }
    let arc_lengths = cumulative_lengths(&pts);
    let length = *arc_lengths.last().unwrap();
    let profile = SpeedProfile::new(length, v_target, limits.a_max);
    let timestamps: Vec<f64> = arc_lengths.iter().map(|&s| profile.time_at(s)).collect();
    debug_assert!(timestamps.windows(2).all(|w| w[1] > w[0]));
    Ok(Trajectory {
        waypoints,
        timestamps,
        v_target,
        limits,
        arc_lengths,
        profile,
    })
}

/// Rectangular workspace of the gantry, axis aligned, boundary inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceBounds {
    pub min: Point2,
    pub max: Point2,
}

/// Indices of waypoints that leave the workspace.
pub fn check_workspace(waypoints: &[Waypoint], bounds: &WorkspaceBounds) -> Vec<usize> {
    waypoints
        .iter()
        .enumerate()
        .filter(|(_, w)| {
            w.pos.x < bounds.min.x
                || w.pos.x > bounds.max.x
                || w.pos.y < bounds.min.y
                || w.pos.y > bounds.max.y
        })
        .map(|(i, _)| i)
        .collect()
}

/// Full planning pipeline: seam resampled at the stitch pitch, edge
/// normals resolved against the needle (the seam start, with the outline
/// centroid breaking collinear ties), feed speed synced, profile attached.
pub fn plan_trajectory(
    thread: &DigitalThread,
    machine: &MachineParams,
    limits: MotionLimits,
) -> Result<Trajectory, TrajectoryError> {
    let seam_pts = resample_equidistant(&thread.seam, thread.spec.stitch_length_mm)?;
    let needle_ref = seam_pts[0];
    let fallback = polygon_centroid(&thread.contour);
    let waypoints = compute_normals_with_fallback(&seam_pts, needle_ref, Some(fallback))?;
    let v_target = sync_feed_velocity(thread.spec.stitch_length_mm, machine)?;
    time_parameterize(waypoints, v_target, limits)
}
