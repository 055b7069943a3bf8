//! Turning a bag of entities into the garment outline and the seam to sew.

use serde::{Deserialize, Serialize};

use super::{sample_entity, DxfEntity, HeaderValues, ThreadError};
use crate::geom::{
    find_self_intersection, point_in_polygon, polygon_signed_area, signed_distance_to_polygon,
    Point2,
};

/// Endpoints closer than this are considered joined when chaining entities.
pub const CHAIN_TOL: f64 = 0.5;
/// Default flattening tolerance for curved entities.
pub const DEFAULT_CHORD_TOL: f64 = 0.01;
/// A seam vertex may sit this far outside the outline before it counts as
/// leaving the garment.
const CONTAINMENT_TOL: f64 = 1e-6;

/// Seam parameters, normally supplied as a small JSON sidecar next to the
/// pattern file. Header variables in the DXF fill gaps; the sidecar wins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeamSpec {
    #[serde(default = "default_seam_color")]
    pub seam_color_index: i32,
    #[serde(default = "default_allowance")]
    pub seam_allowance_mm: f64,
    #[serde(default = "default_stitch_length")]
    pub stitch_length_mm: f64,
}

fn default_seam_color() -> i32 {
    1
}
fn default_allowance() -> f64 {
    20.0
}
fn default_stitch_length() -> f64 {
    3.0
}

impl Default for SeamSpec {
    fn default() -> Self {
        SeamSpec {
            seam_color_index: default_seam_color(),
            seam_allowance_mm: default_allowance(),
            stitch_length_mm: default_stitch_length(),
        }
    }
}

impl SeamSpec {
    /// Overlay header-supplied values onto the defaults. Explicit sidecar
    /// values are applied by serde before this is ever needed, so this only
    /// runs when no sidecar was given.
    pub fn from_header(header: &HeaderValues) -> SeamSpec {
        let mut spec = SeamSpec::default();
        if let Some(c) = header.seam_color_index {
            spec.seam_color_index = c;
        }
        if let Some(a) = header.seam_allowance_mm {
            spec.seam_allowance_mm = a;
        }
        if let Some(s) = header.stitch_length_mm {
            spec.stitch_length_mm = s;
        }
        spec
    }
}

/// The machine-readable garment: outline polygon, seam polyline, and the
/// seam parameters that travel with them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DigitalThread {
    /// Closed outline, first vertex repeated at the end, CCW.
    pub contour: Vec<Point2>,
    /// Seam polyline. Closed seams repeat the first vertex at the end.
    pub seam: Vec<Point2>,
    pub spec: SeamSpec,
}

impl DigitalThread {
    pub fn seam_is_closed(&self) -> bool {
        self.seam.len() > 2 && self.seam[0] == *self.seam.last().unwrap()
    }
}

/// Build the digital thread from parsed entities.
///
/// Entities with `spec.seam_color_index` become the seam; everything else
/// is chained into the closed garment outline. Chains tolerate endpoint
/// gaps up to [`CHAIN_TOL`]; the outline's closing gap is snapped shut.
/// The result is canonical: input entity order does not matter.
pub fn extract_thread(
    entities: &[DxfEntity],
    spec: SeamSpec,
    max_chord_error: f64,
) -> Result<DigitalThread, ThreadError> {
    let (seam_entities, contour_entities): (Vec<_>, Vec<_>) = entities
        .iter()
        .partition(|e| e.common().color_index == spec.seam_color_index);
    if seam_entities.is_empty() {
        return Err(ThreadError::SeamNotDesignated {
            color: spec.seam_color_index,
        });
    }
    if contour_entities.is_empty() {
        return Err(ThreadError::NoContourEntities);
    }

    let seam_pieces = seam_entities
        .iter()
        .map(|e| sample_entity(e, max_chord_error))
        .collect::<Result<Vec<_>, _>>()?;
    let contour_pieces = contour_entities
        .iter()
        .map(|e| sample_entity(e, max_chord_error))
        .collect::<Result<Vec<_>, _>>()?;

    let (mut contour, contour_closed) = chain_pieces(contour_pieces, "outline")?;
    if !contour_closed {
        let a = contour[0];
        let b = *contour.last().unwrap();
        return Err(ThreadError::OpenContour {
            x0: a.x,
            y0: a.y,
            x1: b.x,
            y1: b.y,
        });
    }
    canonicalize_closed(&mut contour);

    if let Some((i, j)) = find_self_intersection(&contour) {
        return Err(ThreadError::SelfIntersectingContour { seg_a: i, seg_b: j });
    }

    let (mut seam, seam_closed) = chain_pieces(seam_pieces, "seam")?;
    if seam_closed {
        canonicalize_closed(&mut seam);
    } else {
        canonicalize_open(&mut seam);
    }

    for p in &seam {
        if !inside_or_on(*p, &contour) {
            return Err(ThreadError::SeamOutsideContour { x: p.x, y: p.y });
        }
    }

    Ok(DigitalThread {
        contour,
        seam,
        spec,
    })
}

/// Chain sampled pieces end-to-start into one polyline. Returns the chain
/// and whether it closed on itself.
fn chain_pieces(
    pieces: Vec<Vec<Point2>>,
    what: &'static str,
) -> Result<(Vec<Point2>, bool), ThreadError> {
    assert!(!pieces.is_empty());
    if pieces.len() == 1 {
        let mut p = pieces.into_iter().next().unwrap();
        let closed = p.len() > 2 && p[0].dist(*p.last().unwrap()) <= CHAIN_TOL;
        if closed {
            let first = p[0];
            *p.last_mut().unwrap() = first;
        }
        return Ok((p, closed));
    }

    // ends[i] = (start, end) of piece i
    let ends: Vec<(Point2, Point2)> = pieces.iter().map(|p| (p[0], *p.last().unwrap())).collect();
    let end_point = |i: usize, which: usize| if which == 0 { ends[i].0 } else { ends[i].1 };

    // count partners for every endpoint; more than one is a branch
    let mut free: Vec<(usize, usize)> = Vec::new();
    for i in 0..pieces.len() {
        for which in 0..2 {
            let p = end_point(i, which);
            let mut partners = 0;
            for j in 0..pieces.len() {
                for w in 0..2 {
                    if i == j {
                        continue;
                    }
                    if p.dist(end_point(j, w)) <= CHAIN_TOL {
                        partners += 1;
                    }
                }
            }
            match partners {
                0 => free.push((i, which)),
                1 => {}
                n => {
                    return Err(ThreadError::ChainAmbiguity {
                        what,
                        x: p.x,
                        y: p.y,
                        ends: n + 1,
                    })
                }
            }
        }
    }

    let closed = match free.len() {
        0 => true,
        2 => false,
        n => {
            return Err(ThreadError::DisconnectedChains {
                what,
                chains: n / 2,
            })
        }
    };

    // walk the chain, reversing pieces as needed
    let mut used = vec![false; pieces.len()];
    let (start_piece, start_reversed) = if closed {
        (0, false)
    } else {
        // begin at a free end so the walk covers the whole open chain
        (free[0].0, free[0].1 == 1)
    };
    let mut chain: Vec<Point2> = Vec::new();
    let push_piece = |chain: &mut Vec<Point2>, piece: &[Point2], reversed: bool| {
        let iter: Box<dyn Iterator<Item = &Point2>> = if reversed {
            Box::new(piece.iter().rev())
        } else {
            Box::new(piece.iter())
        };
        for &p in iter {
            if chain.last().map(|q| q.dist(p) > 1e-9).unwrap_or(true) {
                chain.push(p);
            }
        }
    };
    push_piece(&mut chain, &pieces[start_piece], start_reversed);
    used[start_piece] = true;
    for _ in 1..pieces.len() {
        let tail = *chain.last().unwrap();
        let mut next: Option<(usize, bool)> = None;
        for (j, piece_used) in used.iter().enumerate() {
            if *piece_used {
                continue;
            }
            if tail.dist(ends[j].0) <= CHAIN_TOL {
                next = Some((j, false));
                break;
            }
            if tail.dist(ends[j].1) <= CHAIN_TOL {
                next = Some((j, true));
                break;
            }
        }
        let (j, reversed) = match next {
            Some(n) => n,
            None => {
                let chains = used.iter().filter(|u| !**u).count() + 1;
                return Err(ThreadError::DisconnectedChains { what, chains });
            }
        };
        push_piece(&mut chain, &pieces[j], reversed);
        used[j] = true;
    }

    if closed {
        // snap the closing gap shut so downstream code sees first == last
        if chain[0].dist(*chain.last().unwrap()) <= CHAIN_TOL {
            let first = chain[0];
            if chain.last().unwrap().dist(first) > 1e-9 {
                chain.push(first);
            } else {
                *chain.last_mut().unwrap() = first;
            }
        }
        if chain[0] != *chain.last().unwrap() {
            chain.push(chain[0]);
        }
    }
    Ok((chain, closed))
}

fn lex_less(a: Point2, b: Point2) -> bool {
    (a.x, a.y) < (b.x, b.y)
}

/// Rotate a closed polyline to start at its lexicographically smallest
/// vertex and orient it counter-clockwise, so chaining results do not
/// depend on entity order in the file.
fn canonicalize_closed(poly: &mut Vec<Point2>) {
    if polygon_signed_area(poly) < 0.0 {
        poly.reverse();
    }
    let n = poly.len() - 1; // distinct vertices
    let mut best = 0;
    for i in 1..n {
        if lex_less(poly[i], poly[best]) {
            best = i;
        }
    }
    if best != 0 {
        let mut rotated = Vec::with_capacity(poly.len());
        rotated.extend_from_slice(&poly[best..n]);
        rotated.extend_from_slice(&poly[..=best]);
        *poly = rotated;
    }
}

/// Orient an open polyline so its lexicographically smaller endpoint comes
/// first.
fn canonicalize_open(pts: &mut [Point2]) {
    let first = pts[0];
    let last = *pts.last().unwrap();
    if lex_less(last, first) {
        pts.reverse();
    }
}

/// True if `p` is inside the closed contour or within `CONTAINMENT_TOL` of
/// its boundary.
pub fn inside_or_on(p: Point2, contour: &[Point2]) -> bool {
    if point_in_polygon(p, contour) {
        return true;
    }
    let (d, _) = signed_distance_to_polygon(p, contour);
    d >= -CONTAINMENT_TOL
}
