//! Emit a digital thread back to DXF text.
//!
//! The writer produces the same subset the parser reads: seam parameters as
//! header variables, the outline and seam as LWPOLYLINEs. Coordinates are
//! written with shortest round-trip float formatting, so parse(write(t))
//! reproduces vertices exactly.

use super::DigitalThread;
use crate::geom::Point2;
use std::fmt::Write as _;

fn push_polyline(out: &mut String, pts: &[Point2], closed: bool, color: i32, layer: &str) {
    let distinct = if closed { &pts[..pts.len() - 1] } else { pts };
    out.push_str("0\nLWPOLYLINE\n");
    let _ = writeln!(out, "8\n{layer}");
    let _ = writeln!(out, "62\n{color}");
    let _ = writeln!(out, "90\n{}", distinct.len());
    let _ = writeln!(out, "70\n{}", if closed { 1 } else { 0 });
    for p in distinct {
        let _ = writeln!(out, "10\n{}\n20\n{}", p.x, p.y);
    }
}

pub fn write_dxf(thread: &DigitalThread) -> String {
    let mut out = String::new();
    out.push_str("0\nSECTION\n2\nHEADER\n");
    let _ = writeln!(
        out,
        "9\n$SEAM_ALLOWANCE\n40\n{}",
        thread.spec.seam_allowance_mm
    );
    let _ = writeln!(
        out,
        "9\n$STITCH_LENGTH\n40\n{}",
        thread.spec.stitch_length_mm
    );
    let _ = writeln!(
        out,
        "9\n$SEAM_COLOR_INDEX\n70\n{}",
        thread.spec.seam_color_index
    );
    out.push_str("0\nENDSEC\n");
    out.push_str("0\nSECTION\n2\nENTITIES\n");
    push_polyline(&mut out, &thread.contour, true, 7, "CUT");
    let seam_closed = thread.seam_is_closed();
    push_polyline(
        &mut out,
        &thread.seam,
        seam_closed,
        thread.spec.seam_color_index,
        "SEAM",
    );
    out.push_str("0\nENDSEC\n0\nEOF\n");
    out
}
