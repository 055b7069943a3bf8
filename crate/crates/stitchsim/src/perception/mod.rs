//! Simulated vision: synthetic camera frames of the garment, Canny edge
//! extraction, needle-relative edge distance, and whole-garment pose
//! registration against the pattern contour.
//!
//! Cameras map pixel (i, j) to a world point on the table plane:
//! `world = origin_offset + scale * (i, j)` at the pixel centre, so rows
//! grow with world y. The needle projects at a fixed pixel.

mod canny;
mod measure;
mod pose;
mod render;

pub use canny::{detect_edges, dynamic_thresholds};
pub use measure::{needle_edge_distance, oracle_edge_distance, EdgeMeasurement};
pub use pose::{estimate_pose, PoseEstimate};
pub use render::{render_garment, write_pgm, RenderParams};

use crate::geom::Point2;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PerceptionError {
    #[error("image dimensions must be nonzero")]
    EmptyImage,
    #[error("camera scale must be positive, got {0}")]
    BadScale(f64),
    #[error("garment lies entirely outside the camera frame")]
    OutsideFrame,
    #[error(
        "no garment found: largest foreground blob is {largest_px} px, need at least {min_px}"
    )]
    GarmentNotFound { largest_px: usize, min_px: usize },
    #[error("background frame is {bg_w}x{bg_h} but image is {img_w}x{img_h}")]
    BackgroundMismatch {
        bg_w: usize,
        bg_h: usize,
        img_w: usize,
        img_h: usize,
    },
    #[error("template contour needs at least 3 vertices, got {0}")]
    TemplateTooSmall(usize),
}

/// 8-bit grayscale frame, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, fill: u8) -> Self {
        Self {
            width,
            height,
            pixels: vec![fill; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }
}

/// Fixed overhead camera: uniform scale, no distortion.
#[derive(Debug, Clone, Copy)]
pub struct CameraModel {
    /// Millimetres spanned by one pixel.
    pub scale_mm_per_px: f64,
    /// World position of the centre of pixel (0, 0).
    pub origin_offset: Point2,
    /// Pixel coordinates where the needle projects.
    pub needle_px: (f64, f64),
}

impl CameraModel {
    /// Needle-mounted close-up view: 256x256 at 0.5 mm/px, needle at the
    /// frame centre over the world origin.
    pub fn needle_camera() -> Self {
        Self {
            scale_mm_per_px: 0.5,
            origin_offset: Point2::new(-64.0, -64.0),
            needle_px: (128.0, 128.0),
        }
    }

    /// Wide table view for pose estimation: 720x720 at 0.5 mm/px centred
    /// on the needle.
    pub fn overhead_camera() -> Self {
        Self {
            scale_mm_per_px: 0.5,
            origin_offset: Point2::new(-180.0, -180.0),
            needle_px: (360.0, 360.0),
        }
    }

    #[inline]
    pub fn pixel_to_world(&self, px: f64, py: f64) -> Point2 {
        Point2::new(
            self.origin_offset.x + self.scale_mm_per_px * px,
            self.origin_offset.y + self.scale_mm_per_px * py,
        )
    }

    #[inline]
    pub fn world_to_pixel(&self, p: Point2) -> (f64, f64) {
        (
            (p.x - self.origin_offset.x) / self.scale_mm_per_px,
            (p.y - self.origin_offset.y) / self.scale_mm_per_px,
        )
    }

    pub fn needle_world(&self) -> Point2 {
        self.pixel_to_world(self.needle_px.0, self.needle_px.1)
    }
}
