//! Seam quality: the per-10mm-segment deviation metric, the paired-seed
//! benchmark comparing open- and closed-loop execution with and without
//! slippage, and plain-text report emission (CSV tables, SVG seam plots).

use crate::controller::{run_closed_loop, ControlEvent, OracleSensor};
use crate::dxf::DigitalThread;
use crate::geom::{
    cumulative_lengths, polyline_length, project_onto_polyline, signed_distance_to_polygon, Point2,
    Pose2,
};
use crate::trajectory::{plan_trajectory, MachineParams, MotionLimits, TrajectoryError};
use crate::workcell::{
    place_garment, run_open_loop, SewingMachineState, SlipModel, Stitch, WorkcellError, SIM_DT,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("a seam error needs at least one stitch")]
    NoStitches,
    #[error("seam length {len_mm:.3} mm is shorter than one {segment_mm} mm segment")]
    SeamTooShort { len_mm: f64, segment_mm: f64 },
    #[error("segment length must be positive, got {0}")]
    BadSegmentLength(f64),
    #[error("planning failed for fixture {fixture}: {source}")]
    Planning {
        fixture: String,
        source: TrajectoryError,
    },
    #[error("run failed for fixture {fixture}: {source}")]
    Run {
        fixture: String,
        source: WorkcellError,
    },
    #[error("run aborted for fixture {fixture}: {reason}")]
    Aborted { fixture: String, reason: String },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SegmentError {
    pub index: usize,
    /// Mean signed stitch-to-contour distance in this segment, mm.
    pub a_mm: f64,
    /// Desired distance (the seam allowance), mm.
    pub d_mm: f64,
    pub stitch_count: usize,
}

/// Seam error report: one row per scored 10 mm segment plus the average
/// absolute deviation E.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeamErrorReport {
    pub segments: Vec<SegmentError>,
    /// floor(seam length / segment length); segments a run never stitched
    /// (aborted early, say) are not scored and carry no row.
    pub n_segments: usize,
    pub e_mm: f64,
}

/// Average absolute deviation between stitched and desired edge distance,
/// segment by segment.
///
/// Stitches are assigned to segments by their arc position along the
/// planned seam (nearest-point projection), so a laterally drifted stitch
/// still counts against the stretch of seam it was meant for. A_i is the
/// mean signed distance from the segment's stitches to the garment
/// contour, measured in the garment frame where the thread physically
/// sits.
pub fn seam_error(
    stitches: &[Stitch],
    thread: &DigitalThread,
    desired_allowance_mm: f64,
    segment_length_mm: f64,
) -> Result<SeamErrorReport, EvalError> {
    if !(segment_length_mm > 0.0) {
        return Err(EvalError::BadSegmentLength(segment_length_mm));
    }
    if stitches.is_empty() {
        return Err(EvalError::NoStitches);
    }
    let seam_len = polyline_length(&thread.seam);
    if seam_len < segment_length_mm {
        return Err(EvalError::SeamTooShort {
            len_mm: seam_len,
            segment_mm: segment_length_mm,
        });
    }
    let n = (seam_len / segment_length_mm).floor() as usize;
    let cum = cumulative_lengths(&thread.seam);

    let mut sums = vec![(0.0f64, 0usize); n];
    for st in stitches {
        let s = project_onto_polyline(st.garment_point, &thread.seam, &cum);
        let i = ((s / segment_length_mm).floor() as usize).min(n - 1);
        let (d, _) = signed_distance_to_polygon(st.garment_point, &thread.contour);
        sums[i].0 += d;
        sums[i].1 += 1;
    }

    let mut segments = Vec::new();
    let mut total = 0.0;
    for (i, &(sum, count)) in sums.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let a = sum / count as f64;
        segments.push(SegmentError {
            index: i,
            a_mm: a,
            d_mm: desired_allowance_mm,
            stitch_count: count,
        });
        total += (a - desired_allowance_mm).abs();
    }
    let e = total / segments.len() as f64;
    Ok(SeamErrorReport {
        segments,
        n_segments: n,
        e_mm: e,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopType {
    Open,
    Closed,
}

impl LoopType {
    pub fn as_str(self) -> &'static str {
        match self {
            LoopType::Open => "open",
            LoopType::Closed => "closed",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkResult {
    pub loop_type: LoopType,
    pub disturbed: bool,
    pub runs: usize,
    pub seeds: Vec<u64>,
    /// One E per run; a run sews every fixture with the same seed and
    /// averages their seam errors.
    pub e_values_mm: Vec<f64>,
    pub mean_e_mm: f64,
}

/// One fixture to sew, with the slip model its disturbed conditions use.
/// Slip magnitudes are calibrated per geometry, so they travel with the
/// fixture rather than the benchmark.
pub struct BenchFixtureRun {
    pub name: String,
    pub thread: DigitalThread,
    pub slip_disturbed: SlipModel,
}

/// Benchmark inputs: fixtures to sew and the seed list shared by all four
/// conditions so comparisons are paired.
pub struct BenchmarkSpec<'a> {
    pub fixtures: &'a [BenchFixtureRun],
    pub tol_mm: f64,
    pub machine: MachineParams,
    pub limits: MotionLimits,
    pub seeds: &'a [u64],
    pub segment_length_mm: f64,
}

/// Sew one fixture once and score it.
fn run_one(
    name: &str,
    thread: &DigitalThread,
    loop_type: LoopType,
    slip: &SlipModel,
    spec: &BenchmarkSpec,
    seed: u64,
) -> Result<f64, EvalError> {
    let traj = plan_trajectory(thread, &spec.machine, spec.limits).map_err(|source| {
        EvalError::Planning {
            fixture: name.to_string(),
            source,
        }
    })?;
    let machine_state =
        SewingMachineState::new(spec.machine.stitch_rate_hz, thread.spec.stitch_length_mm);
    let mut work = place_garment(
        thread,
        Pose2::identity(),
        machine_state,
        spec.limits.v_max,
        seed,
    );
    match loop_type {
        LoopType::Open => {
            run_open_loop(&mut work, &traj, slip, SIM_DT).map_err(|source| EvalError::Run {
                fixture: name.to_string(),
                source,
            })?;
        }
        LoopType::Closed => {
            let report = run_closed_loop(
                &mut work,
                thread,
                &traj,
                slip,
                &mut OracleSensor,
                spec.tol_mm,
                SIM_DT,
            )
            .map_err(|source| EvalError::Run {
                fixture: name.to_string(),
                source,
            })?;
            if let Some(reason) = report.aborted {
                return Err(EvalError::Aborted {
                    fixture: name.to_string(),
                    reason,
                });
            }
        }
    }
    let report = seam_error(
        &work.stitches,
        thread,
        thread.spec.seam_allowance_mm,
        spec.segment_length_mm,
    )?;
    Ok(report.e_mm)
}

/// Run the four-condition comparison: open/closed loop, slippage off/on,
/// every condition over the same seed list. Runs fan out over the current
/// rayon pool; results are ordered, so output is deterministic regardless
/// of worker count.
pub fn run_benchmark(spec: &BenchmarkSpec) -> Result<Vec<BenchmarkResult>, EvalError> {
    let conditions = [
        (LoopType::Open, false),
        (LoopType::Open, true),
        (LoopType::Closed, false),
        (LoopType::Closed, true),
    ];
    let mut results = Vec::with_capacity(4);
    for (loop_type, disturbed) in conditions {
        let e_values: Vec<f64> = spec
            .seeds
            .par_iter()
            .map(|&seed| {
                let mut per_fixture = Vec::with_capacity(spec.fixtures.len());
                for f in spec.fixtures {
                    let slip = if disturbed {
                        f.slip_disturbed
                    } else {
                        SlipModel::none()
                    };
                    per_fixture.push(run_one(&f.name, &f.thread, loop_type, &slip, spec, seed)?);
                }
                Ok(per_fixture.iter().sum::<f64>() / per_fixture.len() as f64)
            })
            .collect::<Result<_, EvalError>>()?;
        let mean = e_values.iter().sum::<f64>() / e_values.len() as f64;
        results.push(BenchmarkResult {
            loop_type,
            disturbed,
            runs: spec.seeds.len(),
            seeds: spec.seeds.to_vec(),
            e_values_mm: e_values,
            mean_e_mm: mean,
        });
    }
    Ok(results)
}

/// Benchmark results as CSV: one row per run, then a per-condition
/// summary block.
pub fn benchmark_csv(results: &[BenchmarkResult]) -> String {
    let mut out = String::from("loop_type,disturbance,run,seed,E_mm\n");
    for r in results {
        let dist = if r.disturbed { "on" } else { "off" };
        for (i, (&seed, &e)) in r.seeds.iter().zip(&r.e_values_mm).enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{:.6}\n",
                r.loop_type.as_str(),
                dist,
                i + 1,
                seed,
                e
            ));
        }
    }
    out.push_str("\nsummary\nloop_type,disturbance,runs,mean_E_mm\n");
    for r in results {
        let dist = if r.disturbed { "on" } else { "off" };
        out.push_str(&format!(
            "{},{},{},{:.6}\n",
            r.loop_type.as_str(),
            dist,
            r.runs,
            r.mean_e_mm
        ));
    }
    out
}

/// Plot a run as an SVG document: garment contour, the planned seam,
/// every stitch, and markers where corrections fired (placed at the
/// stitch nearest in time). Everything is drawn in garment-frame mm.
pub fn render_run(thread: &DigitalThread, stitches: &[Stitch], events: &[ControlEvent]) -> String {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in thread.contour.iter().chain(thread.seam.iter()) {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    for s in stitches {
        x0 = x0.min(s.garment_point.x);
        y0 = y0.min(s.garment_point.y);
        x1 = x1.max(s.garment_point.x);
        y1 = y1.max(s.garment_point.y);
    }
    let margin = 12.0;
    let (vx, vy) = (x0 - margin, y0 - margin);
    let (vw, vh) = (x1 - x0 + 2.0 * margin, y1 - y0 + 2.0 * margin);

    let path_of = |pts: &[Point2]| -> String {
        let mut d = String::new();
        for (i, p) in pts.iter().enumerate() {
            let cmd = if i == 0 { 'M' } else { 'L' };
            d.push_str(&format!("{cmd}{:.3} {:.3} ", p.x, p.y));
        }
        d.trim_end().to_string()
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{vx:.1} {vy:.1} {vw:.1} {vh:.1}\" \
         width=\"800\" height=\"{:.0}\">\n",
        800.0 * vh / vw
    ));
    svg.push_str(&format!(
        "<g transform=\"translate(0 {:.3}) scale(1 -1)\">\n",
        y0 + y1
    ));
    // Frame and axis captions double as the mm scale reference.
    svg.push_str(&format!(
        "<rect x=\"{x0:.1}\" y=\"{y0:.1}\" width=\"{:.1}\" height=\"{:.1}\" \
         fill=\"none\" stroke=\"#bbb\" stroke-width=\"0.4\"/>\n",
        x1 - x0,
        y1 - y0
    ));
    svg.push_str(&format!(
        "<path d=\"{}\" fill=\"none\" stroke=\"#333\" stroke-width=\"0.8\"/>\n",
        path_of(&thread.contour)
    ));
    svg.push_str(&format!(
        "<path d=\"{}\" fill=\"none\" stroke=\"#2a7\" stroke-width=\"0.6\" \
         stroke-dasharray=\"3 2\"/>\n",
        path_of(&thread.seam)
    ));
    for s in stitches {
        svg.push_str(&format!(
            "<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"0.7\" fill=\"#c33\"/>\n",
            s.garment_point.x, s.garment_point.y
        ));
    }
    for ev in events {
        if let ControlEvent::Correction { t_s, .. } = ev {
            if let Some(nearest) = stitches.iter().min_by(|a, b| {
                (a.t_s - t_s)
                    .abs()
                    .partial_cmp(&(b.t_s - t_s).abs())
                    .unwrap()
            }) {
                let p = nearest.garment_point;
                svg.push_str(&format!(
                    "<path d=\"M{:.3} {:.3} l2 2 M{:.3} {:.3} l2 -2\" stroke=\"#06c\" \
                     stroke-width=\"0.5\" fill=\"none\"/>\n",
                    p.x - 1.0,
                    p.y - 1.0,
                    p.x - 1.0,
                    p.y + 1.0
                ));
            }
        }
    }
    svg.push_str("</g>\n");
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"4\" fill=\"#666\">x / mm</text>\n",
        x0 + (x1 - x0) / 2.0 - 8.0,
        y0 + y1 - (y0 - margin) - 3.0
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"4\" fill=\"#666\" \
         transform=\"rotate(-90 {:.1} {:.1})\">y / mm</text>\n",
        vx + 3.0,
        y0 + y1 - (y0 + (y1 - y0) / 2.0),
        vx + 3.0,
        y0 + y1 - (y0 + (y1 - y0) / 2.0)
    ));
    svg.push_str("</svg>\n");
    svg
}
