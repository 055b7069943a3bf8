//! JSON config plumbing shared by the binary and the examples: run
//! configuration overlays, benchmark descriptions, the run.json output
//! document, and fixture path resolution.

use crate::controller::ControlEvent;
use crate::dxf::{HeaderValues, SeamSpec};
use crate::eval::SeamErrorReport;
use crate::geom::Pose2;
use crate::trajectory::{MachineParams, MotionLimits};
use crate::workcell::{SlipModel, Stitch};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("{path}: {reason}")]
    Invalid { path: String, reason: String },
}

/// Optional overrides applied on top of the fixture's header values and
/// the built-in machine defaults. Unknown keys are rejected so a typo
/// fails loudly instead of silently keeping a default.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seam_allowance_mm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stitch_length_mm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seam_color_index: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stitch_rate_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub needle_rate_max_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_max_mm_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_max_mm_s2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_mm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chord_tol_mm: Option<f64>,
}

fn check_positive(name: &str, v: Option<f64>, path: &str) -> Result<(), ConfigError> {
    if let Some(x) = v {
        if !(x > 0.0 && x.is_finite()) {
            return Err(ConfigError::Invalid {
                path: path.to_string(),
                reason: format!("{name} must be a positive number, got {x}"),
            });
        }
    }
    Ok(())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let display = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: display.clone(),
            source,
        })?;
        let cfg: RunConfig = serde_json::from_str(&text).map_err(|source| ConfigError::Json {
            path: display.clone(),
            source,
        })?;
        cfg.validate(&display)?;
        Ok(cfg)
    }

    pub fn validate(&self, path: &str) -> Result<(), ConfigError> {
        check_positive("seam_allowance_mm", self.seam_allowance_mm, path)?;
        check_positive("stitch_length_mm", self.stitch_length_mm, path)?;
        check_positive("stitch_rate_hz", self.stitch_rate_hz, path)?;
        check_positive("needle_rate_max_hz", self.needle_rate_max_hz, path)?;
        check_positive("v_max_mm_s", self.v_max_mm_s, path)?;
        check_positive("a_max_mm_s2", self.a_max_mm_s2, path)?;
        check_positive("tol_mm", self.tol_mm, path)?;
        check_positive("chord_tol_mm", self.chord_tol_mm, path)?;
        Ok(())
    }

    /// Seam spec: file header first, then config overrides.
    pub fn seam_spec(&self, header: &HeaderValues) -> SeamSpec {
        let mut spec = SeamSpec::from_header(header);
        if let Some(v) = self.seam_allowance_mm {
            spec.seam_allowance_mm = v;
        }
        if let Some(v) = self.stitch_length_mm {
            spec.stitch_length_mm = v;
        }
        if let Some(v) = self.seam_color_index {
            spec.seam_color_index = v;
        }
        spec
    }

    pub fn machine(&self) -> MachineParams {
        let mut m = MachineParams::default();
        if let Some(v) = self.stitch_rate_hz {
            m.stitch_rate_hz = v;
        }
        if let Some(v) = self.needle_rate_max_hz {
            m.needle_rate_max_hz = v;
        }
        m
    }

    pub fn limits(&self) -> MotionLimits {
        let mut l = MotionLimits::default();
        if let Some(v) = self.v_max_mm_s {
            l.v_max = v;
        }
        if let Some(v) = self.a_max_mm_s2 {
            l.a_max = v;
        }
        l
    }

    pub fn chord_tol(&self) -> f64 {
        self.chord_tol_mm.unwrap_or(crate::dxf::DEFAULT_CHORD_TOL)
    }
}

pub fn load_slip(path: &Path) -> Result<SlipModel, ConfigError> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: display.clone(),
        source,
    })?;
    let slip: SlipModel = serde_json::from_str(&text).map_err(|source| ConfigError::Json {
        path: display.clone(),
        source,
    })?;
    slip.validate().map_err(|e| ConfigError::Invalid {
        path: display,
        reason: e.to_string(),
    })?;
    Ok(slip)
}

/// One benchmark fixture: a pattern file plus the slip model used for its
/// disturbed conditions (calibration is geometry dependent, so it lives
/// with the fixture).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchFixture {
    pub dxf: String,
    pub slip: SlipModel,
}

fn default_tol() -> f64 {
    1.0
}
fn default_segment() -> f64 {
    10.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub fixtures: Vec<BenchFixture>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_tol")]
    pub tol_mm: f64,
    #[serde(default = "default_segment")]
    pub segment_length_mm: f64,
    #[serde(default)]
    pub run: RunConfig,
}

impl BenchConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let display = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: display.clone(),
            source,
        })?;
        let cfg: BenchConfig = serde_json::from_str(&text).map_err(|source| ConfigError::Json {
            path: display.clone(),
            source,
        })?;
        cfg.validate(&display)?;
        Ok(cfg)
    }

    pub fn validate(&self, path: &str) -> Result<(), ConfigError> {
        if self.fixtures.is_empty() {
            return Err(ConfigError::Invalid {
                path: path.to_string(),
                reason: "fixtures list is empty".into(),
            });
        }
        if self.seeds.is_empty() {
            return Err(ConfigError::Invalid {
                path: path.to_string(),
                reason: "seeds list is empty".into(),
            });
        }
        for f in &self.fixtures {
            f.slip.validate().map_err(|e| ConfigError::Invalid {
                path: path.to_string(),
                reason: format!("{}: {e}", f.dxf),
            })?;
        }
        if !(self.tol_mm > 0.0) {
            return Err(ConfigError::Invalid {
                path: path.to_string(),
                reason: format!("tol_mm must be positive, got {}", self.tol_mm),
            });
        }
        if !(self.segment_length_mm > 0.0) {
            return Err(ConfigError::Invalid {
                path: path.to_string(),
                reason: format!(
                    "segment_length_mm must be positive, got {}",
                    self.segment_length_mm
                ),
            });
        }
        self.run.validate(path)
    }
}

/// Snapshot of the workcell when a run ended.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FinalState {
    pub t_s: f64,
    pub ee_mm: [f64; 2],
    pub garment: Pose2,
    pub stitch_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aborted: Option<String>,
}

/// The run.json document a `simulate` invocation writes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunOutput {
    pub mode: String,
    pub seed: u64,
    pub dxf: String,
    pub stitches: Vec<Stitch>,
    /// Signed stitch-to-contour distance per stitch, garment frame, mm.
    pub oracle_distances_mm: Vec<f64>,
    pub final_state: FinalState,
    pub events: Vec<ControlEvent>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seam_error: Option<SeamErrorReport>,
}

/// Fixture directory: `STITCHSIM_FIXTURES` if set, else `fixtures/` next
/// to the workspace root.
pub fn fixtures_dir() -> PathBuf {
    if let Ok(dir) = std::env::var("STITCHSIM_FIXTURES") {
        return PathBuf::from(dir);
    }
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    manifest
        .parent()
        .and_then(|p| p.parent())
        .map(|root| root.join("fixtures"))
        .unwrap_or_else(|| PathBuf::from("fixtures"))
}

/// Resolve a possibly-relative path against a base directory (usually the
/// config file's parent), honoring the fixture override for bare names.
pub fn resolve_path(raw: &str, base: &Path) -> PathBuf {
    let p = Path::new(raw);
    if p.is_absolute() {
        return p.to_path_buf();
    }
    let relative = base.join(p);
    if relative.exists() {
        return relative;
    }
    let in_fixtures = fixtures_dir().join(p);
    if in_fixtures.exists() {
        return in_fixtures;
    }
    relative
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workcell::SlipMode;

    #[test]
    fn empty_config_keeps_defaults() {
        let cfg: RunConfig = serde_json::from_str("{}").unwrap();
        let m = cfg.machine();
        assert_eq!(m.stitch_rate_hz, 10.0);
        assert_eq!(m.needle_rate_max_hz, 25.0);
        let l = cfg.limits();
        assert_eq!(l.v_max, 250.0);
        assert_eq!(l.a_max, 1000.0);
        assert_eq!(cfg.chord_tol(), 0.01);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let r: Result<RunConfig, _> = serde_json::from_str(r#"{"stitch_rat_hz": 5}"#);
        assert!(r.is_err());
    }

    #[test]
    fn negative_values_fail_validation() {
        let cfg: RunConfig = serde_json::from_str(r#"{"v_max_mm_s": -5}"#).unwrap();
        assert!(cfg.validate("test").is_err());
    }

    #[test]
    fn slip_round_trips_through_json() {
        let text = r#"{"mode":"constant_drift","drift_velocity":[0.0,2.9],"noise_sd":0.1}"#;
        let slip: SlipModel = serde_json::from_str(text).unwrap();
        assert_eq!(slip.mode, SlipMode::ConstantDrift);
        assert_eq!(slip.drift_velocity, (0.0, 2.9));
        assert_eq!(slip.noise_sd, 0.1);
        assert!(slip.validate().is_ok());
    }

    #[test]
    fn bench_config_validates_contents() {
        let good = r#"{
            "fixtures": [{"dxf": "straight_seam.dxf",
                          "slip": {"mode": "constant_drift", "drift_velocity": [0.0, 2.9]}}],
            "seeds": [1, 2, 3]
        }"#;
        let cfg: BenchConfig = serde_json::from_str(good).unwrap();
        cfg.validate("test").unwrap();
        assert_eq!(cfg.tol_mm, 1.0);
        assert_eq!(cfg.segment_length_mm, 10.0);

        let bad: BenchConfig = serde_json::from_str(r#"{"fixtures": [], "seeds": [1]}"#).unwrap();
        assert!(bad.validate("test").is_err());
    }

    #[test]
    fn run_output_survives_round_trip() {
        let out = RunOutput {
            mode: "closed".into(),
            seed: 7,
            dxf: "straight_seam.dxf".into(),
            stitches: vec![],
            oracle_distances_mm: vec![],
            final_state: FinalState {
                t_s: 1.0,
                ee_mm: [0.0, 0.0],
                garment: Pose2::identity(),
                stitch_count: 0,
                aborted: None,
            },
            events: vec![],
            seam_error: None,
        };
        let text = serde_json::to_string_pretty(&out).unwrap();
        let back: RunOutput = serde_json::from_str(&text).unwrap();
        assert_eq!(back.mode, "closed");
        assert_eq!(back.seed, 7);
    }
}
