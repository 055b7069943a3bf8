//! Pattern file handling: a small ASCII DXF subset, entity sampling, and
//! extraction of the garment boundary plus the designed seam.
//!
//! The subset covers LINE, LWPOLYLINE, ARC and SPLINE entities, which is
//! what pattern drafting tools emit for cut lines and seam marks. The seam
//! is designated by color index (red, 1, by default); everything else is
//! treated as the garment outline.

mod parse;
mod sample;
mod thread;
mod write;

pub use parse::{parse_dxf, HeaderValues, ParsedDxf};
pub use sample::sample_entity;
pub use thread::{extract_thread, inside_or_on, DigitalThread, SeamSpec, DEFAULT_CHORD_TOL};
pub use write::write_dxf;

use crate::geom::Point2;
use thiserror::Error;

/// Attributes shared by every entity we read.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityCommon {
    pub layer: String,
    /// DXF color number (group 62). 256 means "by layer", the DXF default.
    pub color_index: i32,
    /// 1-based line number of the entity's type marker in the source file.
    pub line: usize,
}

impl Default for EntityCommon {
    fn default() -> Self {
        EntityCommon {
            layer: String::from("0"),
            color_index: 256,
            line: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DxfEntity {
    Line {
        p1: Point2,
        p2: Point2,
        common: EntityCommon,
    },
    LwPolyline {
        vertices: Vec<Point2>,
        closed: bool,
        common: EntityCommon,
    },
    /// Circular arc, counter-clockwise from `start_angle_deg` to
    /// `end_angle_deg` (degrees, per the DXF convention).
    Arc {
        center: Point2,
        radius: f64,
        start_angle_deg: f64,
        end_angle_deg: f64,
        common: EntityCommon,
    },
    /// B-spline of degree 2 or 3. Missing knots are synthesized as a
    /// clamped uniform vector.
    Spline {
        degree: usize,
        control_points: Vec<Point2>,
        knots: Option<Vec<f64>>,
        common: EntityCommon,
    },
}

impl DxfEntity {
    pub fn common(&self) -> &EntityCommon {
        match self {
            DxfEntity::Line { common, .. } => common,
            DxfEntity::LwPolyline { common, .. } => common,
            DxfEntity::Arc { common, .. } => common,
            DxfEntity::Spline { common, .. } => common,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            DxfEntity::Line { .. } => "LINE",
            DxfEntity::LwPolyline { .. } => "LWPOLYLINE",
            DxfEntity::Arc { .. } => "ARC",
            DxfEntity::Spline { .. } => "SPLINE",
        }
    }
}

#[derive(Debug, Error)]
pub enum DxfError {
    #[error("line {line}: expected an integer group code, got {raw:?}")]
    InvalidGroupCode { line: usize, raw: String },
    #[error("line {line}: group {code} value {raw:?} is not a number")]
    InvalidNumber { line: usize, code: i32, raw: String },
    #[error("line {line}: group code without a value line")]
    TruncatedPair { line: usize },
    #[error("no ENTITIES section found")]
    MissingEntitiesSection,
    #[error("{kind} entity at line {line}: missing group {code}")]
    MissingGroup {
        kind: &'static str,
        line: usize,
        code: i32,
    },
    #[error("{kind} entity at line {line}: {reason}")]
    InvalidEntity {
        kind: &'static str,
        line: usize,
        reason: String,
    },
}

#[derive(Debug, Error)]
pub enum ThreadError {
    #[error("{kind} entity is degenerate: {reason}")]
    DegenerateEntity { kind: &'static str, reason: String },
    #[error("no entity carries the seam color index {color}")]
    SeamNotDesignated { color: i32 },
    #[error("no outline entities besides the seam")]
    NoContourEntities,
    #[error("{what} chain is ambiguous near ({x:.3}, {y:.3}): {ends} endpoints meet within the chaining tolerance")]
    ChainAmbiguity {
        what: &'static str,
        x: f64,
        y: f64,
        ends: usize,
    },
    #[error(
        "outline does not close: dangling endpoints at ({x0:.3}, {y0:.3}) and ({x1:.3}, {y1:.3})"
    )]
    OpenContour { x0: f64, y0: f64, x1: f64, y1: f64 },
    #[error("{what} entities form {chains} disconnected chains")]
    DisconnectedChains { what: &'static str, chains: usize },
    #[error("outline is self-intersecting (segments {seg_a} and {seg_b} cross)")]
    SelfIntersectingContour { seg_a: usize, seg_b: usize },
    #[error("seam leaves the garment outline at ({x:.3}, {y:.3})")]
    SeamOutsideContour { x: f64, y: f64 },
}
