//! Desk-scale sewing cell simulator: garment patterns come in as DXF,
//! get turned into a seam plan, and are sewn by a simulated gantry that
//! either runs the plan blind or servoes on a measured cloth edge while
//! the fabric slips under the presser foot.
//!
//! Start with the examples: each one is a runnable walkthrough of a
//! single capability (`cargo run --example open_loop_run`, etc.). The
//! `stitchsim` binary wraps the same calls for batch use.
//!
//! Module map:
//! - [`dxf`]: minimal DXF subset reader/writer and seam extraction
//! - [`trajectory`]: equidistant resampling and trapezoidal timing
//! - [`workcell`]: the simulated machine, fabric slip, stitch recording
//! - [`perception`]: camera model, rasterizer, edge detection, pose fit
//! - [`controller`]: edge-referenced correction logic and the servo loop
//! - [`eval`]: seam scoring, the open/closed benchmark, CSV/SVG output

pub mod cli;
pub mod config;
pub mod controller;
pub mod dxf;
pub mod eval;
pub mod geom;
pub mod noise;
pub mod perception;
pub mod trajectory;
pub mod workcell;
