//! Group-code level reader for the ASCII DXF subset.
//!
//! A DXF file is a flat list of (group code, value) line pairs. We scan the
//! HEADER section for the few $-variables that can carry seam parameters,
//! then read supported entities out of the ENTITIES section. Unsupported
//! entity kinds are skipped and counted, unknown group codes inside a
//! supported entity are ignored; both show up in real exports.

use super::{DxfEntity, DxfError, EntityCommon};
use crate::geom::Point2;

/// Seam parameters found in DXF header variables, if any. A sidecar config
/// file wins over these on conflict.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HeaderValues {
    pub seam_allowance_mm: Option<f64>,
    pub stitch_length_mm: Option<f64>,
    pub seam_color_index: Option<i32>,
}

#[derive(Debug)]
pub struct ParsedDxf {
    pub entities: Vec<DxfEntity>,
    /// Names of entity kinds we skipped, one per skipped entity.
    pub skipped: Vec<String>,
    pub header: HeaderValues,
}

struct Pair<'a> {
    code: i32,
    value: &'a str,
    /// line number of the value (code is on `line - 1`)
    line: usize,
}

fn read_pairs(text: &str) -> Result<Vec<Pair<'_>>, DxfError> {
    let lines: Vec<&str> = text.lines().collect();
    let mut pairs = Vec::with_capacity(lines.len() / 2);
    let mut i = 0;
    while i < lines.len() {
        let code_line = lines[i].trim();
        if i + 1 >= lines.len() {
            // a trailing blank line after EOF's value is fine
            if code_line.is_empty() {
                break;
            }
            return Err(DxfError::TruncatedPair { line: i + 1 });
        }
        let code: i32 = code_line.parse().map_err(|_| DxfError::InvalidGroupCode {
            line: i + 1,
            raw: code_line.to_string(),
        })?;
        pairs.push(Pair {
            code,
            value: lines[i + 1].trim(),
            line: i + 2,
        });
        i += 2;
    }
    Ok(pairs)
}

fn parse_f64(p: &Pair) -> Result<f64, DxfError> {
    p.value.parse().map_err(|_| DxfError::InvalidNumber {
        line: p.line,
        code: p.code,
        raw: p.value.to_string(),
    })
}

fn parse_i64(p: &Pair) -> Result<i64, DxfError> {
    // integer groups sometimes carry a decimal point in the wild
    if let Ok(v) = p.value.parse::<i64>() {
        return Ok(v);
    }
    parse_f64(p).map(|v| v as i64)
}

/// Parse DXF text into supported entities plus header seam values.
pub fn parse_dxf(text: &str) -> Result<ParsedDxf, DxfError> {
    let pairs = read_pairs(text)?;
    let mut header = HeaderValues::default();
    let mut entities = Vec::new();
    let mut skipped = Vec::new();
    let mut saw_entities_section = false;

    let mut i = 0;
    while i < pairs.len() {
        if pairs[i].code == 0 && pairs[i].value == "SECTION" {
            let name = pairs.get(i + 1).filter(|p| p.code == 2).map(|p| p.value);
            match name {
                Some("HEADER") => i = parse_header(&pairs, i + 2, &mut header)?,
                Some("ENTITIES") => {
                    saw_entities_section = true;
                    i = parse_entities(&pairs, i + 2, &mut entities, &mut skipped)?;
                }
                _ => i = skip_section(&pairs, i + 1),
            }
        } else {
            i += 1;
        }
    }

    if !saw_entities_section {
        return Err(DxfError::MissingEntitiesSection);
    }
    Ok(ParsedDxf {
        entities,
        skipped,
        header,
    })
}

fn skip_section(pairs: &[Pair], mut i: usize) -> usize {
    while i < pairs.len() {
        if pairs[i].code == 0 && pairs[i].value == "ENDSEC" {
            return i + 1;
        }
        i += 1;
    }
    i
}

fn parse_header(
    pairs: &[Pair],
    mut i: usize,
    header: &mut HeaderValues,
) -> Result<usize, DxfError> {
    while i < pairs.len() {
        let p = &pairs[i];
        if p.code == 0 && p.value == "ENDSEC" {
            return Ok(i + 1);
        }
        if p.code == 9 {
            let name = p.value.to_string();
            i += 1;
            // the variable's value is the next non-9, non-0 pair
            if i < pairs.len() && pairs[i].code != 9 && pairs[i].code != 0 {
                let v = &pairs[i];
                match name.as_str() {
                    "$SEAM_ALLOWANCE" => header.seam_allowance_mm = Some(parse_f64(v)?),
                    "$STITCH_LENGTH" => header.stitch_length_mm = Some(parse_f64(v)?),
                    "$SEAM_COLOR_INDEX" => header.seam_color_index = Some(parse_i64(v)? as i32),
                    _ => {}
                }
            }
        } else {
            i += 1;
        }
    }
    Ok(i)
}

fn parse_entities(
    pairs: &[Pair],
    mut i: usize,
    entities: &mut Vec<DxfEntity>,
    skipped: &mut Vec<String>,
) -> Result<usize, DxfError> {
    while i < pairs.len() {
        let p = &pairs[i];
        if p.code != 0 {
            i += 1;
            continue;
        }
        if p.value == "ENDSEC" {
            return Ok(i + 1);
        }
        // collect this entity's groups: everything up to the next code 0
        let start = i;
        let mut end = i + 1;
        while end < pairs.len() && pairs[end].code != 0 {
            end += 1;
        }
        let kind = pairs[start].value;
        let body = &pairs[start + 1..end];
        let line = pairs[start].line;
        match kind {
            "LINE" => entities.push(parse_line(body, line)?),
            "LWPOLYLINE" => entities.push(parse_lwpolyline(body, line)?),
            "ARC" => entities.push(parse_arc(body, line)?),
            "SPLINE" => entities.push(parse_spline(body, line)?),
            _ => skipped.push(kind.to_string()),
        }
        i = end;
    }
    Ok(i)
}

fn common_from(body: &[Pair], line: usize) -> Result<EntityCommon, DxfError> {
    let mut common = EntityCommon {
        line,
        ..EntityCommon::default()
    };
    for p in body {
        match p.code {
            8 => common.layer = p.value.to_string(),
            62 => common.color_index = parse_i64(p)? as i32,
            _ => {}
        }
    }
    Ok(common)
}

fn require(opt: Option<f64>, kind: &'static str, line: usize, code: i32) -> Result<f64, DxfError> {
    opt.ok_or(DxfError::MissingGroup { kind, line, code })
}

fn parse_line(body: &[Pair], line: usize) -> Result<DxfEntity, DxfError> {
    let (mut x1, mut y1, mut x2, mut y2) = (None, None, None, None);
    for p in body {
        match p.code {
            10 => x1 = Some(parse_f64(p)?),
            20 => y1 = Some(parse_f64(p)?),
            11 => x2 = Some(parse_f64(p)?),
            21 => y2 = Some(parse_f64(p)?),
            _ => {}
        }
    }
    Ok(DxfEntity::Line {
        p1: Point2::new(
            require(x1, "LINE", line, 10)?,
            require(y1, "LINE", line, 20)?,
        ),
        p2: Point2::new(
            require(x2, "LINE", line, 11)?,
            require(y2, "LINE", line, 21)?,
        ),
        common: common_from(body, line)?,
    })
}

fn parse_lwpolyline(body: &[Pair], line: usize) -> Result<DxfEntity, DxfError> {
    let mut vertices = Vec::new();
    let mut pending_x: Option<f64> = None;
    let mut closed = false;
    for p in body {
        match p.code {
            10 => {
                if pending_x.is_some() {
                    return Err(DxfError::InvalidEntity {
                        kind: "LWPOLYLINE",
                        line,
                        reason: format!("group 10 at line {} without a matching group 20", p.line),
                    });
                }
                pending_x = Some(parse_f64(p)?);
            }
            20 => {
                let x = pending_x.take().ok_or(DxfError::InvalidEntity {
                    kind: "LWPOLYLINE",
                    line,
                    reason: format!("group 20 at line {} without a preceding group 10", p.line),
                })?;
                vertices.push(Point2::new(x, parse_f64(p)?));
            }
            70 => closed = (parse_i64(p)? & 1) != 0,
            42 => {} // bulge factors are ignored: the subset is straight segments
            _ => {}
        }
    }
    if pending_x.is_some() {
        return Err(DxfError::InvalidEntity {
            kind: "LWPOLYLINE",
            line,
            reason: "trailing group 10 without a group 20".to_string(),
        });
    }
    if vertices.len() < 2 {
        return Err(DxfError::InvalidEntity {
            kind: "LWPOLYLINE",
            line,
            reason: format!("needs at least 2 vertices, has {}", vertices.len()),
        });
    }
    Ok(DxfEntity::LwPolyline {
        vertices,
        closed,
        common: common_from(body, line)?,
    })
}

fn parse_arc(body: &[Pair], line: usize) -> Result<DxfEntity, DxfError> {
    let (mut cx, mut cy, mut r, mut a0, mut a1) = (None, None, None, None, None);
    for p in body {
        match p.code {
            10 => cx = Some(parse_f64(p)?),
            20 => cy = Some(parse_f64(p)?),
            40 => r = Some(parse_f64(p)?),
            50 => a0 = Some(parse_f64(p)?),
            51 => a1 = Some(parse_f64(p)?),
            _ => {}
        }
    }
    let radius = require(r, "ARC", line, 40)?;
    if radius <= 0.0 {
        return Err(DxfError::InvalidEntity {
            kind: "ARC",
            line,
            reason: format!("radius must be positive, got {radius}"),
        });
    }
    let start = require(a0, "ARC", line, 50)?;
    let end = require(a1, "ARC", line, 51)?;
    if (end - start).rem_euclid(360.0) == 0.0 {
        return Err(DxfError::InvalidEntity {
            kind: "ARC",
            line,
            reason: format!("start and end angles coincide ({start} deg)"),
        });
    }
    Ok(DxfEntity::Arc {
        center: Point2::new(require(cx, "ARC", line, 10)?, require(cy, "ARC", line, 20)?),
        radius,
        start_angle_deg: start,
        end_angle_deg: end,
        common: common_from(body, line)?,
    })
}

fn parse_spline(body: &[Pair], line: usize) -> Result<DxfEntity, DxfError> {
    let mut degree: Option<usize> = None;
    let mut knots = Vec::new();
    let mut control_points = Vec::new();
    let mut pending_x: Option<f64> = None;
    let (mut knot_count, mut ctrl_count) = (None::<usize>, None::<usize>);
    for p in body {
        match p.code {
            71 => degree = Some(parse_i64(p)? as usize),
            72 => knot_count = Some(parse_i64(p)? as usize),
            73 => ctrl_count = Some(parse_i64(p)? as usize),
            74 => {} // fit point count; fit points are not part of the subset
            40 => knots.push(parse_f64(p)?),
            10 => {
                if pending_x.is_some() {
                    return Err(DxfError::InvalidEntity {
                        kind: "SPLINE",
                        line,
                        reason: format!("group 10 at line {} without a matching group 20", p.line),
                    });
                }
                pending_x = Some(parse_f64(p)?);
            }
            20 => {
                let x = pending_x.take().ok_or(DxfError::InvalidEntity {
                    kind: "SPLINE",
                    line,
                    reason: format!("group 20 at line {} without a preceding group 10", p.line),
                })?;
                control_points.push(Point2::new(x, parse_f64(p)?));
            }
            _ => {}
        }
    }
    let degree = degree.ok_or(DxfError::MissingGroup {
        kind: "SPLINE",
        line,
        code: 71,
    })?;
    if degree != 2 && degree != 3 {
        return Err(DxfError::InvalidEntity {
            kind: "SPLINE",
            line,
            reason: format!("only degree 2 and 3 are supported, got {degree}"),
        });
    }
    if control_points.len() < degree + 1 {
        return Err(DxfError::InvalidEntity {
            kind: "SPLINE",
            line,
            reason: format!(
                "degree {degree} needs at least {} control points, has {}",
                degree + 1,
                control_points.len()
            ),
        });
    }
    if let Some(n) = ctrl_count {
        if n != control_points.len() {
            return Err(DxfError::InvalidEntity {
                kind: "SPLINE",
                line,
                reason: format!(
                    "group 73 says {n} control points, found {}",
                    control_points.len()
                ),
            });
        }
    }
    let knots = if knots.is_empty() {
        None
    } else {
        if let Some(n) = knot_count {
            if n != knots.len() {
                return Err(DxfError::InvalidEntity {
                    kind: "SPLINE",
                    line,
                    reason: format!("group 72 says {n} knots, found {}", knots.len()),
                });
            }
        }
        let expected = control_points.len() + degree + 1;
        if knots.len() != expected {
            return Err(DxfError::InvalidEntity {
                kind: "SPLINE",
                line,
                reason: format!(
                    "knot vector length {} != control + degree + 1 = {expected}",
                    knots.len()
                ),
            });
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(DxfError::InvalidEntity {
                kind: "SPLINE",
                line,
                reason: "knot vector is not non-decreasing".to_string(),
            });
        }
        Some(knots)
    };
    Ok(DxfEntity::Spline {
        degree,
        control_points,
        knots,
        common: common_from(body, line)?,
    })
}
