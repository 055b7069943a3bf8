//! Turn the curved back-panel seam into a timed needle trajectory and
//! inspect the speed profile.
//!
//!     cargo run --example plan_trajectory

use stitchsim::config::fixtures_dir;
use stitchsim::dxf::{extract_thread, parse_dxf, SeamSpec};
use stitchsim::trajectory::{plan_trajectory, MachineParams, MotionLimits};

fn main() {
    let path = fixtures_dir().join("back_panel.dxf");
    let text = std::fs::read_to_string(&path).expect("fixture should be readable");
    let parsed = parse_dxf(&text).unwrap();
    let thread = extract_thread(
        &parsed.entities,
        SeamSpec::from_header(&parsed.header),
        0.01,
    )
    .unwrap();

    let machine = MachineParams::default();
    let traj = plan_trajectory(&thread, &machine, MotionLimits::default()).unwrap();

    // Feed speed is slaved to the machine: stitch length times stitch
    // rate, so stitches land on the designed pitch at cruise.
    println!(
        "feed {:.1} mm/s = {:.0} stitches/s x {} mm pitch",
        traj.v_target, machine.stitch_rate_hz, thread.spec.stitch_length_mm
    );
    println!(
        "{} waypoints, {:.2} mm of seam, {:.3} s end to end",
        traj.waypoints.len(),
        traj.length(),
        traj.duration()
    );
    println!(
        "ramps: {:.3} s / {:.2} mm each end, cruise at {:.1} mm/s",
        traj.profile.t_ramp, traj.profile.d_ramp, traj.profile.v
    );

    println!("\n  t        x        y        theta");
    let n = traj.waypoints.len();
    for k in [0usize, 1, n / 2, n - 2, n - 1] {
        let w = &traj.waypoints[k];
        println!(
            "  {:7.3}  {:7.2}  {:7.2}  {:6.3}",
            traj.timestamps[k], w.pos.x, w.pos.y, w.theta
        );
    }

    // position_at interpolates between waypoints; the midpoint of the
    // run sits mid-seam at cruise speed.
    let mid = traj.position_at(traj.duration() / 2.0);
    println!("\nneedle at t/2: ({:.2}, {:.2}) mm", mid.x, mid.y);
}
