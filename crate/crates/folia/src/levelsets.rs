//! Level curves as oriented polylines and ordered level families.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contour;
use crate::domain::DomainShape;
use crate::curves::{frechet_refined, Polyline};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::Vector2;
use crate::regularity::{ArcKind, BoundaryDecomposition, Extremum};

/// A connected component of a level set: an open simple curve joining two
/// monotone boundary arcs, or a single point at a boundary extremum.
///
/// Curves are oriented with the gradient of `f` on their left, so for a
/// weakly regular field they run from the decreasing arc to the increasing one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelCurve {
    pub c: f64,
    pub points: Vec<Vector2>,
    pub start_arc: usize,
    pub end_arc: usize,
}

impl LevelCurve {
    pub fn is_point(&self) -> bool {
        self.points.len() == 1
    }

    pub fn start(&self) -> Vector2 {
        self.points[0]
    }

    pub fn end(&self) -> Vector2 {
        *self.points.last().unwrap()
    }

    pub fn polyline(&self) -> Result<Polyline> {
        Polyline::new(self.points.clone())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LevelFamily {
    pub shape: DomainShape,
    pub levels: Vec<f64>,
    pub curves: Vec<LevelCurve>,
    /// Grid spacing of the source field, used for refinement.
    pub grid_spacing: f64,
}

fn snap_tol(field: &ScalarField) -> f64 {
    1e-9 * (field.max_value() - field.min_value()).abs().max(f64::MIN_POSITIVE)
}

/// The boundary level arc at an extremum, traversed so that the gradient is on
/// its left: counter-clockwise for a minimum, clockwise for a maximum.
pub fn extremal_arc_curve(field: &ScalarField, dec: &BoundaryDecomposition, k: usize) -> LevelCurve {
    let arc = &dec.arcs[k];
    let mut points = arc.points(field.shape(), 0.5 * field.h());
    let (mut start_arc, mut end_arc) = (dec.prev(k), dec.next(k));
    if arc.extremum == Some(Extremum::Max) {
        points.reverse();
        std::mem::swap(&mut start_arc, &mut end_arc);
    }
    LevelCurve { c: arc.level.unwrap_or(f64::NAN), points, start_arc, end_arc }
}

/// Sum of `t x grad f` along the chain; positive when the gradient is on the left.
fn handedness(field: &ScalarField, pts: &[Vector2]) -> f64 {
    pts.windows(2)
        .map(|w| (w[1] - w[0]).cross(field.gradient_unchecked(w[0].lerp(w[1], 0.5))))
        .filter(|v| v.is_finite())
        .sum()
}

/// All components of the level set `f = c`.
///
/// At the level of a boundary extremum arc the arc itself is returned (a
/// single point when it is degenerate). Closed loops are an error, as is an
/// open curve ending off the monotone arcs.
pub fn extract_level(field: &ScalarField, dec: &BoundaryDecomposition, c: f64) -> Result<Vec<LevelCurve>> {
    let tol = snap_tol(field);
    let lo = field.min_value().min(dec.arcs.iter().filter_map(|a| a.level).fold(f64::INFINITY, f64::min));
    let hi = field.max_value().max(dec.arcs.iter().filter_map(|a| a.level).fold(f64::NEG_INFINITY, f64::max));
    if !c.is_finite() || c < lo - tol || c > hi + tol {
        return Err(Error::InvalidArgument(format!("level {c} outside the field range [{lo}, {hi}]")));
    }
    for (k, arc) in dec.level_arcs() {
        if arc.extremum.is_some() && (arc.level.unwrap() - c).abs() <= tol {
            return Ok(vec![extremal_arc_curve(field, dec, k)]);
        }
    }

    let shape = field.shape();
    let h = field.h();
    let s_tol = 2.0 * h / shape.perimeter();
    let mut out = Vec::new();
    for chain in contour::contour_chains(field, c) {
        if chain.closed {
            return Err(Error::ClosedLoop { level: c });
        }
        let mut points = chain.points;
        if handedness(field, &points) < 0.0 {
            points.reverse();
        }
        let arc_of = |p: Vector2| -> Result<usize> {
            let off_boundary = shape.boundary_distance(p) > 1e-6 * h;
            match dec.arc_at(shape.boundary_param(p), s_tol) {
                Some(k) if !off_boundary && dec.arcs[k].kind == ArcKind::Monotone => Ok(k),
                _ => Err(Error::EndpointNotOnMonotoneArc { level: c, at: p }),
            }
        };
        let start_arc = arc_of(points[0])?;
        let end_arc = arc_of(*points.last().unwrap())?;
        out.push(LevelCurve { c, points, start_arc, end_arc });
    }
    Ok(out)
}

/// `count` equally spaced levels from the boundary minimum to the boundary
/// maximum, one curve each; the end levels are the extremal boundary arcs.
pub fn level_family(field: &ScalarField, dec: &BoundaryDecomposition, count: usize) -> Result<LevelFamily> {
    if count < 2 {
        return Err(Error::InvalidArgument("a level family needs at least 2 levels".into()));
    }
    let (Some(kmin), Some(kmax)) = dec.extremal_arcs() else {
        return Err(Error::NotRegular("the boundary has no unique minimum and maximum arc".into()));
    };
    if dec.n_f != 2 {
        return Err(Error::NotRegular(format!("{} monotone boundary arcs", dec.n_f)));
    }
    let lo = dec.arcs[kmin].level.unwrap();
    let hi = dec.arcs[kmax].level.unwrap();
    let levels: Vec<f64> = (0..count)
        .map(|j| match j {
            0 => lo,
            _ if j + 1 == count => hi,
            _ => lo + (hi - lo) * j as f64 / (count - 1) as f64,
        })
        .collect();
    let curves = levels
        .par_iter()
        .enumerate()
        .map(|(j, &c)| {
            if j == 0 {
                return Ok(extremal_arc_curve(field, dec, kmin));
            }
            if j + 1 == count {
                return Ok(extremal_arc_curve(field, dec, kmax));
            }
            let mut comps = extract_level(field, dec, c)?;
            if comps.len() != 1 {
                return Err(Error::ComponentCount { level: c, found: comps.len() });
            }
            Ok(comps.pop().unwrap())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LevelFamily { shape: field.shape(), levels, curves, grid_spacing: field.h() })
}

/// `(|c_{j+1} - c_j|, Fréchet distance)` for consecutive curves of the family.
pub fn frechet_continuity_profile(family: &LevelFamily) -> Result<Vec<(f64, f64)>> {
    if family.curves.len() < 3 {
        return Err(Error::InvalidArgument("profile needs at least 3 levels".into()));
    }
    let spacing = 0.25 * family.grid_spacing;
    Ok(family
        .curves
        .par_windows(2)
        .map(|w| ((w[1].c - w[0].c).abs(), frechet_refined(&w[0].points, &w[1].points, spacing)))
        .collect())
}
