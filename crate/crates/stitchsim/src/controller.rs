//! Closed-loop seam control: watch the edge distance at the needle every
//! control cycle, and when it drifts out of the tolerance band, shift the
//! commanded origin along the waypoint's edge normal so the next cycle
//! flies the correction. A correction of d at normal angle theta is the
//! pair (d cos theta, d sin theta); corrections accumulate through the
//! origin, never by editing the plan itself.

use crate::dxf::DigitalThread;
use crate::geom::{polygon_centroid, Point2};
use crate::perception::{
    detect_edges, dynamic_thresholds, needle_edge_distance, oracle_edge_distance, render_garment,
    CameraModel, EdgeMeasurement, GrayImage, RenderParams,
};
use crate::trajectory::Trajectory;
use crate::workcell::{execute_plan, BoundaryAction, SlipModel, WorkcellError, WorkcellState};
use serde::{Deserialize, Serialize};

/// Default half-width of the tolerance band around the seam allowance.
pub const DEFAULT_TOL_MM: f64 = 1.0;
/// Coast on the plan through measurement dropouts up to this long, then
/// give up.
pub const DROPOUT_ABORT_S: f64 = 1.0;

#[derive(Debug, Clone, Copy)]
pub struct ControlState {
    /// Accumulated command-origin shift (world frame).
    pub origin: Point2,
    /// Waypoint the controller last acted at.
    pub waypoint_index: usize,
    /// Set when a deviation is detected, cleared once the correction is
    /// folded into the origin.
    pub corr: bool,
    /// Tolerance band half-width, mm.
    pub tol_mm: f64,
    /// Commanded seam allowance (the desired edge distance), mm.
    pub desired_allowance_mm: f64,
}

impl ControlState {
    pub fn new(tol_mm: f64, desired_allowance_mm: f64) -> Self {
        ControlState {
            origin: Point2::new(0.0, 0.0),
            waypoint_index: 0,
            corr: false,
            tol_mm,
            desired_allowance_mm,
        }
    }
}

/// One lateral correction: `d` is the signed deviation that drove it and
/// (x, y) = d * (cos theta, sin theta) for the active waypoint's theta.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CorrectionCommand {
    pub d_mm: f64,
    pub x_mm: f64,
    pub y_mm: f64,
}

/// Decide whether a measurement warrants a correction.
///
/// Inside the tolerance band (|edge_dist - allowance| <= tol) the edges
/// are considered aligned and nothing is commanded. Outside it, the full
/// deviation is flown back along the waypoint normal. Invalid
/// measurements yield no correction; the caller logs the dropout and
/// coasts.
pub fn compute_correction(
    measurement: &EdgeMeasurement,
    ctrl: &ControlState,
    theta: f64,
) -> Option<CorrectionCommand> {
    if !measurement.valid {
        return None;
    }
    let deviation = measurement.edge_dist_mm - ctrl.desired_allowance_mm;
    if deviation.abs() <= ctrl.tol_mm {
        return None;
    }
    Some(CorrectionCommand {
        d_mm: deviation,
        x_mm: deviation * theta.cos(),
        y_mm: deviation * theta.sin(),
    })
}

/// Fold a correction into the origin. Subsequent commanded positions are
/// plan + origin, so the remaining waypoints are re-anchored in one
/// assignment; timestamps are untouched because the correction flies
/// inside the already-scheduled next cycle.
pub fn apply_correction_and_replan(ctrl: &mut ControlState, cmd: &CorrectionCommand) {
    ctrl.origin = ctrl.origin.add(Point2::new(cmd.x_mm, cmd.y_mm));
    ctrl.corr = false;
}

/// Edge-distance measurement source for the control loop.
pub trait Sensor {
    fn measure(&mut self, work: &WorkcellState, thread: &DigitalThread) -> EdgeMeasurement;
}

/// Ground-truth sensor: exact signed distance from the simulator's own
/// garment pose. Fast, noise-free, and the reference the camera path is
/// validated against.
pub struct OracleSensor;

impl Sensor for OracleSensor {
    fn measure(&mut self, work: &WorkcellState, thread: &DigitalThread) -> EdgeMeasurement {
        oracle_edge_distance(thread, work.garment, Point2::new(0.0, 0.0), work.t_s)
    }
}

/// Camera-path sensor: renders the needle camera's view each cycle, runs
/// edge detection with thresholds re-derived every second from the frame
/// window, and measures the nearest edge inside the ROI.
pub struct RasterSensor {
    pub camera: CameraModel,
    pub render: RenderParams,
    pub roi_half_extent_px: usize,
    frame_seed: u64,
    frames_rendered: u64,
    window: Vec<GrayImage>,
    window_start_s: f64,
    thresholds: Option<(f64, f64)>,
}

impl RasterSensor {
    pub fn new(
        camera: CameraModel,
        render: RenderParams,
        roi_half_extent_px: usize,
        seed: u64,
    ) -> Self {
        RasterSensor {
            camera,
            render,
            roi_half_extent_px,
            frame_seed: seed,
            frames_rendered: 0,
            window: Vec::new(),
            window_start_s: 0.0,
            thresholds: None,
        }
    }
}

impl Sensor for RasterSensor {
    fn measure(&mut self, work: &WorkcellState, thread: &DigitalThread) -> EdgeMeasurement {
        let seed = self.frame_seed.wrapping_add(self.frames_rendered);
        self.frames_rendered += 1;
        let Ok(img) = render_garment(
            &thread.contour,
            work.garment,
            &self.camera,
            &self.render,
            seed,
        ) else {
            // Garment out of frame: a dropout, not a crash.
            return EdgeMeasurement::invalid(work.t_s);
        };

        if self.window.is_empty() {
            self.window_start_s = work.t_s;
        }
        self.window.push(img);
        let current = self.window.last().unwrap();
        let (low, high) = match self.thresholds {
            Some(th) => th,
            None => dynamic_thresholds(std::slice::from_ref(current)),
        };
        let edges = detect_edges(current, low, high);
        if work.t_s - self.window_start_s >= 1.0 {
            self.thresholds = Some(dynamic_thresholds(&self.window));
            self.window.clear();
        }

        let hint = work.garment.apply(polygon_centroid(&thread.contour));
        needle_edge_distance(
            &edges,
            &self.camera,
            self.roi_half_extent_px,
            hint,
            work.t_s,
        )
    }
}

/// Everything the control loop logged, one entry per notable cycle.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ControlEvent {
    Correction {
        t_s: f64,
        waypoint: usize,
        d_mm: f64,
        theta_rad: f64,
        x_mm: f64,
        y_mm: f64,
    },
    Dropout {
        t_s: f64,
    },
    Abort {
        t_s: f64,
        reason: String,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub events: Vec<ControlEvent>,
    pub corrections: usize,
    /// Reason the run stopped early, if it did.
    pub aborted: Option<String>,
    /// Final accumulated origin shift, world frame.
    pub origin: Point2,
}

/// Run the plan under visual servo control.
///
/// Each control cycle spans one waypoint interval: fly the cycle, measure
/// the edge distance, and if the deviation leaves the tolerance band,
/// shift the origin so the correction executes during the next cycle.
/// Measurement dropouts coast on the plan; more than `DROPOUT_ABORT_S` of
/// continuous dropout aborts the run with "tracking lost".
pub fn run_closed_loop(
    work: &mut WorkcellState,
    thread: &DigitalThread,
    traj: &Trajectory,
    slip: &SlipModel,
    sensor: &mut dyn Sensor,
    tol_mm: f64,
    dt: f64,
) -> Result<RunReport, WorkcellError> {
    let mut ctrl = ControlState::new(tol_mm, thread.spec.seam_allowance_mm);
    let mut events: Vec<ControlEvent> = Vec::new();
    let mut corrections = 0usize;
    let mut last_valid_s = work.t_s;

    let aborted = execute_plan(work, traj, slip, dt, |work, waypoint| {
        ctrl.waypoint_index = waypoint;
        let m = sensor.measure(work, thread);
        if !m.valid {
            events.push(ControlEvent::Dropout { t_s: work.t_s });
            if work.t_s - last_valid_s > DROPOUT_ABORT_S {
                let reason = format!("tracking lost at t={:.2} s", work.t_s);
                events.push(ControlEvent::Abort {
                    t_s: work.t_s,
                    reason: reason.clone(),
                });
                return BoundaryAction::Abort(reason);
            }
            return BoundaryAction::Proceed;
        }
        last_valid_s = work.t_s;
        let theta = traj.waypoints[waypoint].theta;
        match compute_correction(&m, &ctrl, theta) {
            None => BoundaryAction::Proceed,
            Some(cmd) => {
                ctrl.corr = true;
                corrections += 1;
                events.push(ControlEvent::Correction {
                    t_s: work.t_s,
                    waypoint,
                    d_mm: cmd.d_mm,
                    theta_rad: theta,
                    x_mm: cmd.x_mm,
                    y_mm: cmd.y_mm,
                });
                apply_correction_and_replan(&mut ctrl, &cmd);
                BoundaryAction::ShiftOrigin(Point2::new(cmd.x_mm, cmd.y_mm))
            }
        }
    })?;

    Ok(RunReport {
        events,
        corrections,
        aborted,
        origin: ctrl.origin,
    })
}
