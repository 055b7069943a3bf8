//! Sew the straight fixture under the same slippage twice, open loop and
//! closed loop, and watch the edge-referenced corrections hold the seam
//! on the allowance.
//!
//!     cargo run --example closed_loop_run

use stitchsim::config::fixtures_dir;
use stitchsim::controller::{run_closed_loop, ControlEvent, OracleSensor};
use stitchsim::dxf::{extract_thread, parse_dxf, SeamSpec};
use stitchsim::eval::{render_run, seam_error};
use stitchsim::geom::Pose2;
use stitchsim::trajectory::{plan_trajectory, MachineParams, MotionLimits};
use stitchsim::workcell::{
    place_garment, run_open_loop, SewingMachineState, SlipMode, SlipModel, SIM_DT,
};

fn main() {
    let path = fixtures_dir().join("straight_seam.dxf");
    let text = std::fs::read_to_string(&path).expect("fixture should be readable");
    let parsed = parse_dxf(&text).unwrap();
    let thread = extract_thread(
        &parsed.entities,
        SeamSpec::from_header(&parsed.header),
        0.01,
    )
    .unwrap();

    let machine = MachineParams::default();
    let limits = MotionLimits::default();
    let traj = plan_trajectory(&thread, &machine, limits).unwrap();
    let slip = SlipModel {
        mode: SlipMode::ConstantDrift,
        drift_velocity: (0.0, 2.9),
        noise_sd: 0.1,
        ..SlipModel::none()
    };
    let seed = 42;

    // Open loop: same plan, no feedback.
    let ms = SewingMachineState::new(machine.stitch_rate_hz, thread.spec.stitch_length_mm);
    let mut open = place_garment(&thread, Pose2::identity(), ms, limits.v_max, seed);
    run_open_loop(&mut open, &traj, &slip, SIM_DT).unwrap();
    let e_open = seam_error(&open.stitches, &thread, thread.spec.seam_allowance_mm, 10.0)
        .unwrap()
        .e_mm;

    // Closed loop: measure the edge each cycle, shift the plan origin
    // whenever the deviation leaves the 1 mm dead band.
    let ms = SewingMachineState::new(machine.stitch_rate_hz, thread.spec.stitch_length_mm);
    let mut closed = place_garment(&thread, Pose2::identity(), ms, limits.v_max, seed);
    let report = run_closed_loop(
        &mut closed,
        &thread,
        &traj,
        &slip,
        &mut OracleSensor,
        1.0,
        SIM_DT,
    )
    .unwrap();
    let e_closed = seam_error(
        &closed.stitches,
        &thread,
        thread.spec.seam_allowance_mm,
        10.0,
    )
    .unwrap()
    .e_mm;

    println!("same drift, same seed:");
    println!("  open loop    E = {e_open:.3} mm");
    println!(
        "  closed loop  E = {e_closed:.3} mm after {} corrections",
        report.corrections
    );

    println!("\nfirst corrections:");
    for ev in report.events.iter().take(5) {
        if let ControlEvent::Correction {
            t_s,
            d_mm,
            x_mm,
            y_mm,
            ..
        } = ev
        {
            println!("  t={t_s:6.3} s  d={d_mm:+.3} mm  shift=({x_mm:+.3}, {y_mm:+.3}) mm");
        }
    }

    let svg = std::env::temp_dir().join("stitchsim_closed_loop.svg");
    std::fs::write(&svg, render_run(&thread, &closed.stitches, &report.events)).unwrap();
    println!("\nplot: {}", svg.display());
}
