//! Run the shipped four-condition benchmark: open and closed loop, with
//! and without fabric slippage, ten paired seeds per condition.
//!
//!     cargo run --example seam_benchmark

use stitchsim::config::{fixtures_dir, resolve_path, BenchConfig};
use stitchsim::dxf::{extract_thread, parse_dxf, SeamSpec};
use stitchsim::eval::{benchmark_csv, run_benchmark, BenchFixtureRun, BenchmarkSpec};

fn main() {
    let cfg_path = fixtures_dir().join("bench.json");
    let cfg = BenchConfig::load(&cfg_path).expect("bench config should load");

    let mut fixtures = Vec::new();
    for f in &cfg.fixtures {
        let path = resolve_path(&f.dxf, &fixtures_dir());
        let text = std::fs::read_to_string(&path).unwrap();
        let parsed = parse_dxf(&text).unwrap();
        let thread = extract_thread(
            &parsed.entities,
            SeamSpec::from_header(&parsed.header),
            0.01,
        )
        .unwrap();
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
    let results = run_benchmark(&spec).unwrap();

    println!("condition            runs   mean E (mm)");
    for r in &results {
        println!(
            "{:>6} loop, slip {:>3}   {:>3}   {:>8.3}",
            r.loop_type.as_str(),
            if r.disturbed { "on" } else { "off" },
            r.runs,
            r.mean_e_mm
        );
    }

    // Paired seeds make the per-run comparison fair: same placement, same
    // slip noise, only the loop differs.
    let open_on = &results[1];
    let closed_on = &results[3];
    println!("\nper-seed E, disturbed (open vs closed):");
    for ((seed, eo), ec) in open_on
        .seeds
        .iter()
        .zip(&open_on.e_values_mm)
        .zip(&closed_on.e_values_mm)
    {
        println!("  seed {seed}: {eo:7.3} -> {ec:5.3}");
    }

    let out = std::env::temp_dir().join("stitchsim_results.csv");
    std::fs::write(&out, benchmark_csv(&results)).unwrap();
    println!("\nfull table: {}", out.display());
}
