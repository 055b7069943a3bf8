//! Sew the straight fixture open loop, first on a rigidly gripped
//! garment and then with the cloth slipping, and score both seams.
//!
//!     cargo run --example open_loop_run

use stitchsim::config::fixtures_dir;
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

    let drift = SlipModel {
        mode: SlipMode::ConstantDrift,
        drift_velocity: (0.0, 2.9),
        noise_sd: 0.1,
        ..SlipModel::none()
    };

    for (label, slip) in [("rigid grip", SlipModel::none()), ("slipping", drift)] {
        let ms = SewingMachineState::new(machine.stitch_rate_hz, thread.spec.stitch_length_mm);
        let mut work = place_garment(&thread, Pose2::identity(), ms, limits.v_max, 42);
        run_open_loop(&mut work, &traj, &slip, SIM_DT).unwrap();

        let report =
            seam_error(&work.stitches, &thread, thread.spec.seam_allowance_mm, 10.0).unwrap();
        println!(
            "{label:10}  {} stitches, E = {:.3} mm over {} segments",
            work.stitches.len(),
            report.e_mm,
            report.n_segments
        );
        // Worst segment tells the story: under drift the tail of the seam
        // has wandered far from the allowance.
        let worst = report
            .segments
            .iter()
            .max_by(|a, b| {
                (a.a_mm - a.d_mm)
                    .abs()
                    .partial_cmp(&(b.a_mm - b.d_mm).abs())
                    .unwrap()
            })
            .unwrap();
        println!(
            "            worst segment {}: sewn at {:.2} mm, wanted {:.0} mm",
            worst.index, worst.a_mm, worst.d_mm
        );

        let svg =
            std::env::temp_dir().join(format!("stitchsim_open_{}.svg", label.replace(' ', "_")));
        std::fs::write(&svg, render_run(&thread, &work.stitches, &[])).unwrap();
        println!("            plot: {}", svg.display());
    }
}
