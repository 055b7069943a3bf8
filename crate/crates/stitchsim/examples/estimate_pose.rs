//! Drop a garment somewhere on the table, take an overhead frame, and
//! recover where it landed by matching the pattern contour against the
//! segmented boundary.
//!
//!     cargo run --example estimate_pose

use stitchsim::config::fixtures_dir;
use stitchsim::dxf::{extract_thread, parse_dxf, SeamSpec};
use stitchsim::geom::{normalize_angle, Pose2};
use stitchsim::perception::{estimate_pose, render_garment, CameraModel, GrayImage, RenderParams};

fn main() {
    let path = fixtures_dir().join("pocket_curve.dxf");
    let text = std::fs::read_to_string(&path).expect("fixture should be readable");
    let parsed = parse_dxf(&text).unwrap();
    let thread = extract_thread(
        &parsed.entities,
        SeamSpec::from_header(&parsed.header),
        0.01,
    )
    .unwrap();

    let camera = CameraModel::overhead_camera();
    let params = RenderParams {
        width: 720,
        height: 720,
        noise_sd: 2.0,
        ..RenderParams::default()
    };
    let background = GrayImage::new(params.width, params.height, params.background);

    // Ground truth the perception side never sees.
    let truth = Pose2::new(22.0, -41.0, 0.35);
    let frame = render_garment(&thread.contour, truth, &camera, &params, 99).unwrap();

    let est = estimate_pose(&frame, &background, &thread.contour, &camera).unwrap();
    let dtheta = normalize_angle(est.pose.theta - truth.theta);
    println!(
        "true pose   ({:7.2}, {:7.2}) mm, {:6.2} deg",
        truth.x,
        truth.y,
        truth.theta.to_degrees()
    );
    println!(
        "estimated   ({:7.2}, {:7.2}) mm, {:6.2} deg  (score {:.4})",
        est.pose.x,
        est.pose.y,
        est.pose.theta.to_degrees(),
        est.score
    );
    println!(
        "off by      ({:7.2}, {:7.2}) mm, {:6.2} deg",
        est.pose.x - truth.x,
        est.pose.y - truth.y,
        dtheta.to_degrees()
    );
    println!(
        "grasp point ({:.2}, {:.2}) mm on the cloth",
        est.grasp_point.x, est.grasp_point.y
    );
}
