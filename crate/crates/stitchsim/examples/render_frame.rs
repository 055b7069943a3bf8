//! Render a synthetic needle-camera frame of a posed garment, detect its
//! edges, and measure the needle-to-edge distance both ways: from pixels
//! and from exact geometry.
//!
//!     cargo run --example render_frame

use stitchsim::config::fixtures_dir;
use stitchsim::dxf::{extract_thread, parse_dxf, SeamSpec};
use stitchsim::geom::{polygon_centroid, Point2, Pose2};
use stitchsim::perception::{
    detect_edges, dynamic_thresholds, needle_edge_distance, oracle_edge_distance, render_garment,
    write_pgm, CameraModel, RenderParams,
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

    // Put the garment edge 18 mm below the needle, slightly rotated, with
    // a little sensor noise on the pixels.
    let pose = Pose2::new(-30.0, -18.0, 0.05);
    let camera = CameraModel::needle_camera();
    let params = RenderParams {
        noise_sd: 2.0,
        ..RenderParams::default()
    };
    let img = render_garment(&thread.contour, pose, &camera, &params, 7).unwrap();

    let out = std::env::temp_dir().join("stitchsim_frame.pgm");
    std::fs::write(&out, write_pgm(&img)).unwrap();
    println!("wrote {} ({}x{} px)", out.display(), img.width, img.height);

    // Thresholds come from the frame itself: half and one-and-a-half
    // times the median intensity.
    let (low, high) = dynamic_thresholds(std::slice::from_ref(&img));
    let edges = detect_edges(&img, low, high);
    println!(
        "thresholds ({low:.0}, {high:.0}), {} edge pixels",
        edges.len()
    );

    let hint = pose.apply(polygon_centroid(&thread.contour));
    let measured = needle_edge_distance(&edges, &camera, 64, hint, 0.0);
    let exact = oracle_edge_distance(&thread, pose, Point2::new(0.0, 0.0), 0.0);
    println!(
        "needle to edge: {:.2} mm from pixels, {:.2} mm exact ({:.2} mm apart)",
        measured.edge_dist_mm,
        exact.edge_dist_mm,
        (measured.edge_dist_mm - exact.edge_dist_mm).abs()
    );
}
