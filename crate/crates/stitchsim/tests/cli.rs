//! End-to-end runs of the `stitchsim` binary: exit codes, output files,
//! and determinism of everything it writes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stitchsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn parse_reports_contour_and_seam() {
    let dxf = fixtures().join("straight_seam.dxf");
    let out = run(&["parse", dxf.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("contour"), "missing contour summary: {text}");
    assert!(text.contains("seam"), "missing seam summary: {text}");
    assert!(text.contains("200.000"), "seam length not reported: {text}");
}

#[test]
fn parse_emits_machine_readable_thread() {
    let dxf = fixtures().join("pocket_curve.dxf");
    let out = run(&["parse", dxf.to_str().unwrap(), "--emit-json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("valid JSON");
    assert!(v["contour"].as_array().unwrap().len() >= 5);
    assert!(v["seam"].as_array().unwrap().len() >= 2);
    assert_eq!(v["spec"]["seam_allowance_mm"].as_f64().unwrap(), 20.0);
}

#[test]
fn parse_missing_file_fails_and_names_it() {
    let out = run(&["parse", "/nonexistent/missing.dxf"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("missing.dxf"),
        "error does not name the file: {}",
        stderr(&out)
    );
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = run(&["parse", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_and_version_exit_clean() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    let h = run(&["--help"]);
    for sub in ["parse", "plan", "perceive", "simulate", "bench", "render"] {
        assert!(stdout(&h).contains(sub), "help does not list `{sub}`");
    }
}

#[test]
fn plan_emits_waypoint_csv() {
    let dxf = fixtures().join("straight_seam.dxf");
    let out = run(&["plan", dxf.to_str().unwrap(), "--emit-csv"]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x,y,theta"));
    let mut rows = 0;
    let mut last_t = -1.0f64;
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols.len(), 4, "bad row: {line}");
        assert!(cols[0] > last_t, "timestamps not increasing");
        last_t = cols[0];
        rows += 1;
    }
    assert!(rows >= 10, "only {rows} waypoints");
}

#[test]
fn perceive_writes_pgm_and_measures() {
    let dir = tempfile::tempdir().unwrap();
    let pgm = dir.path().join("frame.pgm");
    let dxf = fixtures().join("straight_seam.dxf");
    let out = run(&[
        "perceive",
        dxf.to_str().unwrap(),
        "--pose=-30,-18,2",
        "--render",
        pgm.to_str().unwrap(),
        "--measure",
        "--noise-sd",
        "1.5",
        "--seed",
        "9",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    let bytes = std::fs::read(&pgm).unwrap();
    assert!(bytes.starts_with(b"P5"), "not a binary PGM");

    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("measurement JSON");
    assert!(v["valid"].as_bool().unwrap());
    assert!(v["edge_dist_mm"].as_f64().unwrap().abs() < 64.0);
}

#[test]
fn perceive_rejects_malformed_pose() {
    let dxf = fixtures().join("straight_seam.dxf");
    let out = run(&["perceive", dxf.to_str().unwrap(), "--pose", "1,2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let dxf = fixtures().join("straight_seam.dxf");
    let slip = fixtures().join("slip_straight.json");
    let mut outputs = Vec::new();
    for name in ["a.json", "b.json"] {
        let path = dir.path().join(name);
        let out = run(&[
            "simulate",
            "--dxf",
            dxf.to_str().unwrap(),
            "--slip",
            slip.to_str().unwrap(),
            "--mode",
            "closed",
            "--seed",
            "7",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "stderr: {}", stderr(&out));
        outputs.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(
        outputs[0], outputs[1],
        "same seed produced different run records"
    );
}

#[test]
fn simulate_closed_loop_records_corrections() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    let dxf = fixtures().join("straight_seam.dxf");
    let slip = fixtures().join("slip_straight.json");
    let out = run(&[
        "simulate",
        "--dxf",
        dxf.to_str().unwrap(),
        "--slip",
        slip.to_str().unwrap(),
        "--mode",
        "closed",
        "--seed",
        "3",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    // Control events stream to stdout as JSON lines.
    let events: Vec<serde_json::Value> = stdout(&out)
        .lines()
        .filter(|l| l.starts_with('{'))
        .map(|l| serde_json::from_str(l).expect("event line JSON"))
        .collect();
    assert!(!events.is_empty(), "no event lines on stdout");

    let run_record: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(run_record["mode"], "closed");
    assert!(run_record["events"].as_array().unwrap().len() >= events.len());
    assert!(run_record["seam_error"]["e_mm"].as_f64().unwrap() < 3.5);
    assert!(run_record["final_state"]["stitch_count"].as_u64().unwrap() > 10);
    // Under this drift the controller must have intervened.
    let corrections = run_record["events"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| e["event"] == "correction")
        .count();
    assert!(corrections > 0, "no corrections under constant drift");
}

#[test]
fn simulate_open_loop_under_drift_scores_worse() {
    let dir = tempfile::tempdir().unwrap();
    let dxf = fixtures().join("straight_seam.dxf");
    let slip = fixtures().join("slip_straight.json");
    let mut e = Vec::new();
    for mode in ["open", "closed"] {
        let path = dir.path().join(format!("{mode}.json"));
        let out = run(&[
            "simulate",
            "--dxf",
            dxf.to_str().unwrap(),
            "--slip",
            slip.to_str().unwrap(),
            "--mode",
            mode,
            "--seed",
            "5",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        e.push(v["seam_error"]["e_mm"].as_f64().unwrap());
    }
    assert!(
        e[1] < e[0],
        "closed loop ({}) not better than open ({})",
        e[1],
        e[0]
    );
}

#[test]
fn simulate_reports_tracking_loss_as_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    let slip = dir.path().join("slip.json");
    // A 10 Hz correction cycle tolerates surprisingly fast drift; to lose
    // tracking the edge has to clear the 32 mm ROI between two frames.
    std::fs::write(
        &slip,
        r#"{"mode":"constant_drift","drift_velocity":[0.0,-400.0],"noise_sd":0.0}"#,
    )
    .unwrap();
    let dxf = fixtures().join("straight_seam.dxf");
    let out = run(&[
        "simulate",
        "--dxf",
        dxf.to_str().unwrap(),
        "--slip",
        slip.to_str().unwrap(),
        "--mode",
        "closed",
        "--sensor",
        "raster",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));
    assert!(
        stderr(&out).contains("tracking lost"),
        "abort reason missing: {}",
        stderr(&out)
    );
    // The partial run record is still written for post-mortems.
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(v["final_state"]["aborted"]
        .as_str()
        .unwrap()
        .contains("tracking lost"));
}

#[test]
fn bench_writes_csv_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("results.csv");
    let plots = dir.path().join("plots");
    let config = dir.path().join("bench.json");
    std::fs::write(
        &config,
        format!(
            r#"{{
  "fixtures": [
    {{"dxf": "{}", "slip": {{"mode": "constant_drift", "drift_velocity": [0.0, 2.9], "noise_sd": 0.1}}}}
  ],
  "seeds": [11, 12, 13],
  "tol_mm": 1.0,
  "segment_length_mm": 10.0,
  "run": {{}}
}}"#,
            fixtures().join("straight_seam.dxf").display()
        ),
    )
    .unwrap();

    let args = [
        "bench",
        "--config",
        config.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
        "--plots",
        plots.to_str().unwrap(),
        "--jobs",
        "2",
    ];
    let out = run(&args);
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("loop_type,disturbance,run,seed,E_mm"));
    let data_rows = text.lines().skip(1).take_while(|l| !l.is_empty()).count();
    assert_eq!(data_rows, 12, "4 conditions x 3 seeds expected:\n{text}");
    assert!(text.contains("summary"), "missing summary block");

    for name in [
        "open_slip_off.svg",
        "open_slip_on.svg",
        "closed_slip_off.svg",
        "closed_slip_on.svg",
    ] {
        let p = plots.join(name);
        let svg = std::fs::read_to_string(&p)
            .unwrap_or_else(|e| panic!("{} not written: {e}", p.display()));
        assert!(svg.starts_with("<svg"), "{name} is not an SVG");
    }

    // Byte-determinism of the whole artifact.
    let first = std::fs::read(&csv).unwrap();
    let out2 = run(&args);
    assert!(out2.status.success());
    assert_eq!(
        first,
        std::fs::read(&csv).unwrap(),
        "bench CSV not reproducible"
    );
}

#[test]
fn bench_resolves_fixture_names_via_env_override() {
    let dir = tempfile::tempdir().unwrap();
    let fixture_home = dir.path().join("patterns");
    std::fs::create_dir(&fixture_home).unwrap();
    std::fs::copy(
        fixtures().join("straight_seam.dxf"),
        fixture_home.join("renamed_panel.dxf"),
    )
    .unwrap();

    let csv = dir.path().join("out.csv");
    let config = dir.path().join("bench.json");
    std::fs::write(
        &config,
        r#"{
  "fixtures": [
    {"dxf": "renamed_panel.dxf", "slip": {"mode": "constant_drift", "drift_velocity": [0.0, 2.9], "noise_sd": 0.1}}
  ],
  "seeds": [21],
  "run": {}
}"#,
    )
    .unwrap();

    let out = Command::new(env!("CARGO_BIN_EXE_stitchsim"))
        .args([
            "bench",
            "--config",
            config.to_str().unwrap(),
            "--out",
            csv.to_str().unwrap(),
        ])
        .env("STITCHSIM_FIXTURES", &fixture_home)
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(csv.exists());
}

#[test]
fn render_turns_a_run_into_svg() {
    let dir = tempfile::tempdir().unwrap();
    let run_path = dir.path().join("run.json");
    let svg_path = dir.path().join("run.svg");
    let dxf = fixtures().join("back_panel.dxf");

    let sim = run(&[
        "simulate",
        "--dxf",
        dxf.to_str().unwrap(),
        "--mode",
        "open",
        "--out",
        run_path.to_str().unwrap(),
    ]);
    assert!(sim.status.success(), "stderr: {}", stderr(&sim));

    let out = run(&[
        "render",
        "--run",
        run_path.to_str().unwrap(),
        "--dxf",
        dxf.to_str().unwrap(),
        "--out",
        svg_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("circle"), "no stitches plotted");
}

#[test]
fn bad_config_is_a_validation_failure_with_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    std::fs::write(&config, r#"{"stitch_length_mm": -3.0}"#).unwrap();
    let dxf = fixtures().join("straight_seam.dxf");
    let out_file = dir.path().join("never.json");
    let out = run(&[
        "simulate",
        "--dxf",
        dxf.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--mode",
        "open",
        "--out",
        out_file.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr(&out));
    assert!(!out_file.exists(), "failed run left a partial output file");
}
