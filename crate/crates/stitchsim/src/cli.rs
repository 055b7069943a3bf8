//! Command-line front end. Every subcommand is a thin wrapper over the
//! library: parse → plan → perceive → simulate → bench → render.
//!
//! Exit codes: 0 on success, 1 when inputs fail validation (bad flags,
//! unreadable files, malformed patterns, bad configs), 2 when a valid run
//! fails at runtime. Diagnostics go to stderr; data goes to stdout or to
//! the requested output files.

use crate::config::{
    fixtures_dir, load_slip, resolve_path, BenchConfig, FinalState, RunConfig, RunOutput,
};
use crate::controller::{run_closed_loop, OracleSensor, RasterSensor, Sensor};
use crate::dxf::{extract_thread, parse_dxf, DigitalThread};
use crate::eval::{
    benchmark_csv, render_run, run_benchmark, seam_error, BenchFixtureRun, BenchmarkSpec, LoopType,
};
use crate::geom::{polyline_length, signed_distance_to_polygon, Pose2};
use crate::perception::{
    detect_edges, dynamic_thresholds, needle_edge_distance, render_garment, write_pgm, CameraModel,
    RenderParams,
};
use crate::trajectory::plan_trajectory;
use crate::workcell::{place_garment, run_open_loop, SewingMachineState, SlipModel, SIM_DT};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "stitchsim",
    version,
    about = "Simulated sewing cell: plan seams from DXF patterns and sew them open- or closed-loop"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read a DXF pattern and report the extracted contour and seam
    Parse(ParseArgs),
    /// Plan the sewing trajectory for a pattern
    Plan(PlanArgs),
    /// Render a synthetic needle-camera frame and measure the edge
    Perceive(PerceiveArgs),
    /// Sew a pattern under a slip model, open- or closed-loop
    Simulate(SimulateArgs),
    /// Run the four-condition open/closed benchmark
    Bench(BenchArgs),
    /// Plot a recorded run as SVG
    Render(RenderArgs),
}

#[derive(Args)]
struct ParseArgs {
    /// DXF pattern file
    dxf: PathBuf,
    /// JSON seam/machine config overlay
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the extracted digital thread as JSON
    #[arg(long)]
    emit_json: bool,
}

#[derive(Args)]
struct PlanArgs {
    dxf: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the timed waypoints as CSV rows `t,x,y,theta`
    #[arg(long)]
    emit_csv: bool,
}

#[derive(Args)]
struct PerceiveArgs {
    dxf: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Garment pose as `x,y,deg` (mm, mm, degrees)
    #[arg(long, default_value = "0,0,0")]
    pose: String,
    /// Write the synthetic frame as binary PGM
    #[arg(long)]
    render: Option<PathBuf>,
    /// Print the needle-to-edge measurement as JSON
    #[arg(long)]
    measure: bool,
    /// Pixel noise seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Gaussian pixel noise standard deviation
    #[arg(long, default_value_t = 0.0)]
    noise_sd: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Open,
    Closed,
}

#[derive(Clone, Copy, ValueEnum)]
enum SensorKind {
    Oracle,
    Raster,
}

#[derive(Args)]
struct SimulateArgs {
    /// DXF pattern file
    #[arg(long)]
    dxf: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Slip model JSON; omitted means no slippage
    #[arg(long)]
    slip: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Mode,
    /// Measurement source for closed-loop runs
    #[arg(long, value_enum, default_value_t = SensorKind::Oracle)]
    sensor: SensorKind,
    /// Correction dead band, mm
    #[arg(long, default_value_t = 1.0)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the full run record (JSON) here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    /// Results CSV path
    #[arg(long)]
    out: PathBuf,
    /// Directory for per-condition SVG plots
    #[arg(long)]
    plots: Option<PathBuf>,
    /// Worker threads for the run fan-out (0 = rayon default)
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args)]
struct RenderArgs {
    /// run.json produced by `simulate --out`
    #[arg(long)]
    run: PathBuf,
    /// The pattern the run sewed
    #[arg(long)]
    dxf: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output SVG path
    #[arg(long)]
    out: PathBuf,
}

/// Failures split by exit code.
#[derive(Debug)]
enum CliError {
    Validation(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<crate::config::ConfigError> for CliError {
    fn from(e: crate::config::ConfigError) -> Self {
        CliError::Validation(e.to_string())
    }
}

pub fn run<I: IntoIterator<Item = OsString>>(args: I) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own usage text; --help and --version land
            // here too and must exit 0.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Parse(a) => cmd_parse(a),
        Command::Plan(a) => cmd_plan(a),
        Command::Perceive(a) => cmd_perceive(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Render(a) => cmd_render(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig, CliError> {
    match path {
        Some(p) => Ok(RunConfig::load(p)?),
        None => Ok(RunConfig::default()),
    }
}

fn load_thread(dxf: &Path, cfg: &RunConfig) -> Result<DigitalThread, CliError> {
    let text = std::fs::read_to_string(dxf)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", dxf.display())))?;
    let parsed =
        parse_dxf(&text).map_err(|e| CliError::Validation(format!("{}: {e}", dxf.display())))?;
    for note in &parsed.skipped {
        eprintln!("note: {}: {note}", dxf.display());
    }
    let spec = cfg.seam_spec(&parsed.header);
    extract_thread(&parsed.entities, spec, cfg.chord_tol())
        .map_err(|e| CliError::Validation(format!("{}: {e}", dxf.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn cmd_parse(a: ParseArgs) -> Result<(), CliError> {
    let cfg = load_config(&a.config)?;
    let thread = load_thread(&a.dxf, &cfg)?;
    if a.emit_json {
        println!("{}", serde_json::to_string_pretty(&thread).unwrap());
    } else {
        println!(
            "contour: {} vertices, {:.3} mm",
            thread.contour.len(),
            polyline_length(&thread.contour)
        );
        println!(
            "seam: {} vertices, {:.3} mm, allowance {} mm, stitch length {} mm",
            thread.seam.len(),
            polyline_length(&thread.seam),
            thread.spec.seam_allowance_mm,
            thread.spec.stitch_length_mm
        );
    }
    Ok(())
}

fn cmd_plan(a: PlanArgs) -> Result<(), CliError> {
    let cfg = load_config(&a.config)?;
    let thread = load_thread(&a.dxf, &cfg)?;
    let traj = plan_trajectory(&thread, &cfg.machine(), cfg.limits())
        .map_err(|e| CliError::Validation(format!("{}: {e}", a.dxf.display())))?;
    if a.emit_csv {
        let mut out = String::from("t,x,y,theta\n");
        for (t, w) in traj.timestamps.iter().zip(&traj.waypoints) {
            let _ = writeln!(out, "{:.6},{:.6},{:.6},{:.6}", t, w.pos.x, w.pos.y, w.theta);
        }
        print!("{out}");
    } else {
        println!(
            "{} waypoints over {:.3} mm, {:.4} s at {:.1} mm/s feed",
            traj.waypoints.len(),
            traj.length(),
            traj.duration(),
            traj.v_target
        );
    }
    Ok(())
}

fn parse_pose(raw: &str) -> Result<Pose2, CliError> {
    let parts: Vec<&str> = raw.split(',').collect();
    if parts.len() != 3 {
        return Err(CliError::Validation(format!(
            "pose must be x,y,deg, got {raw:?}"
        )));
    }
    let nums: Result<Vec<f64>, _> = parts.iter().map(|s| s.trim().parse::<f64>()).collect();
    let nums =
        nums.map_err(|e| CliError::Validation(format!("pose must be numeric x,y,deg: {e}")))?;
    Ok(Pose2::new(nums[0], nums[1], nums[2].to_radians()))
}

fn cmd_perceive(a: PerceiveArgs) -> Result<(), CliError> {
    let cfg = load_config(&a.config)?;
    if a.noise_sd < 0.0 {
        return Err(CliError::Validation(format!(
            "noise_sd must be nonnegative, got {}",
            a.noise_sd
        )));
    }
    let thread = load_thread(&a.dxf, &cfg)?;
    let pose = parse_pose(&a.pose)?;
    let camera = CameraModel::needle_camera();
    let params = RenderParams {
        noise_sd: a.noise_sd,
        ..RenderParams::default()
    };
    let img = render_garment(&thread.contour, pose, &camera, &params, a.seed)
        .map_err(|e| CliError::Runtime(format!("render failed: {e}")))?;
    if let Some(out) = &a.render {
        write_file(out, &write_pgm(&img))?;
        eprintln!("wrote {}", out.display());
    }
    if a.measure {
        let (low, high) = dynamic_thresholds(std::slice::from_ref(&img));
        let edges = detect_edges(&img, low, high);
        let hint = pose.apply(crate::geom::polygon_centroid(&thread.contour));
        let m = needle_edge_distance(&edges, &camera, 64, hint, 0.0);
        println!("{}", serde_json::to_string_pretty(&m).unwrap());
    }
    if a.render.is_none() && !a.measure {
        eprintln!("nothing to do: pass --render and/or --measure");
    }
    Ok(())
}

fn cmd_simulate(a: SimulateArgs) -> Result<(), CliError> {
    let cfg = load_config(&a.config)?;
    if !(a.tol > 0.0) {
        return Err(CliError::Validation(format!(
            "tol must be positive, got {}",
            a.tol
        )));
    }
    let slip = match &a.slip {
        Some(p) => load_slip(p)?,
        None => SlipModel::none(),
    };
    let thread = load_thread(&a.dxf, &cfg)?;
    let traj = plan_trajectory(&thread, &cfg.machine(), cfg.limits())
        .map_err(|e| CliError::Validation(format!("{}: {e}", a.dxf.display())))?;

    let machine =
        SewingMachineState::new(cfg.machine().stitch_rate_hz, thread.spec.stitch_length_mm);
    let mut work = place_garment(
        &thread,
        Pose2::identity(),
        machine,
        cfg.limits().v_max,
        a.seed,
    );

    let (mode_name, events, aborted) = match a.mode {
        Mode::Open => {
            run_open_loop(&mut work, &traj, &slip, SIM_DT)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            ("open", Vec::new(), None)
        }
        Mode::Closed => {
            let mut sensor: Box<dyn Sensor> = match a.sensor {
                SensorKind::Oracle => Box::new(OracleSensor),
                SensorKind::Raster => Box::new(RasterSensor::new(
                    CameraModel::needle_camera(),
                    RenderParams::default(),
                    64,
                    a.seed,
                )),
            };
            let report = run_closed_loop(
                &mut work,
                &thread,
                &traj,
                &slip,
                &mut *sensor,
                a.tol,
                SIM_DT,
            )
            .map_err(|e| CliError::Runtime(e.to_string()))?;
            for ev in &report.events {
                println!("{}", serde_json::to_string(ev).unwrap());
            }
            ("closed", report.events, report.aborted)
        }
    };

    let oracle_distances: Vec<f64> = work
        .stitches
        .iter()
        .map(|s| signed_distance_to_polygon(s.garment_point, &thread.contour).0)
        .collect();
    let report = seam_error(&work.stitches, &thread, thread.spec.seam_allowance_mm, 10.0).ok();
    let output = RunOutput {
        mode: mode_name.to_string(),
        seed: a.seed,
        dxf: a.dxf.display().to_string(),
        stitches: work.stitches.clone(),
        oracle_distances_mm: oracle_distances,
        final_state: FinalState {
            t_s: work.t_s,
            ee_mm: [work.ee.x, work.ee.y],
            garment: work.garment,
            stitch_count: work.stitches.len(),
            aborted: aborted.clone(),
        },
        events,
        seam_error: report,
    };
    if let Some(out) = &a.out {
        let mut text = serde_json::to_string_pretty(&output).unwrap();
        text.push('\n');
        write_file(out, text.as_bytes())?;
        eprintln!("wrote {}", out.display());
    } else {
        println!("{}", serde_json::to_string_pretty(&output).unwrap());
    }
    if let Some(reason) = aborted {
        return Err(CliError::Runtime(format!("run aborted: {reason}")));
    }
    if let Some(r) = &output.seam_error {
        eprintln!(
            "seam error: {:.3} mm over {} segments",
            r.e_mm, r.n_segments
        );
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<(), CliError> {
    let cfg = BenchConfig::load(&a.config)?;
    let base = a
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));

    let mut fixtures = Vec::new();
    for f in &cfg.fixtures {
        let path = resolve_path(&f.dxf, &base);
        let thread = load_thread(&path, &cfg.run)?;
        fixtures.push(BenchFixtureRun {
            name: f.dxf.clone(),
            thread,
            slip_disturbed: f.slip,
        });
    }
    let spec = BenchmarkSpec {
        fixtures: &fixtures,
        tol_mm: cfg.tol_mm,
        machine: cfg.run.machine(),
        limits: cfg.run.limits(),
        seeds: &cfg.seeds,
        segment_length_mm: cfg.segment_length_mm,
    };

    let run_it = || run_benchmark(&spec);
    let results = if a.jobs > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(a.jobs)
            .build()
            .map_err(|e| CliError::Runtime(format!("cannot build worker pool: {e}")))?;
        pool.install(run_it)
    } else {
        run_it()
    }
    .map_err(|e| CliError::Runtime(e.to_string()))?;

    write_file(&a.out, benchmark_csv(&results).as_bytes())?;
    eprintln!("wrote {}", a.out.display());
    for r in &results {
        eprintln!(
            "{:>6} loop, slip {:>3}: mean E = {:.3} mm over {} runs",
            r.loop_type.as_str(),
            if r.disturbed { "on" } else { "off" },
            r.mean_e_mm,
            r.runs
        );
    }

    if let Some(dir) = &a.plots {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
        // One representative run per condition: first fixture, first seed.
        let f = &fixtures[0];
        let traj = plan_trajectory(&f.thread, &spec.machine, spec.limits)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        for r in &results {
            let slip = if r.disturbed {
                f.slip_disturbed
            } else {
                SlipModel::none()
            };
            let machine = SewingMachineState::new(
                spec.machine.stitch_rate_hz,
                f.thread.spec.stitch_length_mm,
            );
            let mut work = place_garment(
                &f.thread,
                Pose2::identity(),
                machine,
                spec.limits.v_max,
                cfg.seeds[0],
            );
            let events = match r.loop_type {
                LoopType::Open => {
                    run_open_loop(&mut work, &traj, &slip, SIM_DT)
                        .map_err(|e| CliError::Runtime(e.to_string()))?;
                    Vec::new()
                }
                LoopType::Closed => {
                    run_closed_loop(
                        &mut work,
                        &f.thread,
                        &traj,
                        &slip,
                        &mut OracleSensor,
                        spec.tol_mm,
                        SIM_DT,
                    )
                    .map_err(|e| CliError::Runtime(e.to_string()))?
                    .events
                }
            };
            let svg = render_run(&f.thread, &work.stitches, &events);
            let name = format!(
                "{}_slip_{}.svg",
                r.loop_type.as_str(),
                if r.disturbed { "on" } else { "off" }
            );
            write_file(&dir.join(name), svg.as_bytes())?;
        }
        eprintln!("wrote plots to {}", dir.display());
    }
    Ok(())
}

fn cmd_render(a: RenderArgs) -> Result<(), CliError> {
    let cfg = load_config(&a.config)?;
    let text = std::fs::read_to_string(&a.run)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", a.run.display())))?;
    let run: RunOutput = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", a.run.display())))?;
    let thread = load_thread(&a.dxf, &cfg)?;
    let svg = render_run(&thread, &run.stitches, &run.events);
    write_file(&a.out, svg.as_bytes())?;
    eprintln!("wrote {}", a.out.display());
    Ok(())
}

/// Locate a shipped pattern the same way the binary does.
pub fn default_fixture(name: &str) -> PathBuf {
    fixtures_dir().join(name)
}
