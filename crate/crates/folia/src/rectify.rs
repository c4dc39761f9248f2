//! Rectifying homeomorphisms: lattices on a model domain (square, half-disk or
//! disk) whose rows are the mu-resampled level curves of the field, so that
//! `f(H(x, y)) = a y + b`.

use std::sync::Arc as Shared;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::{mu_parameterize, resample_fractions, Polyline};
use crate::domain::DomainShape;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{self, point_segment_distance, Vector2};
use crate::levelsets::{extract_level, extremal_arc_curve, LevelCurve};
use crate::regularity::{classify_with, decompose_boundary, ClassifyParams, default_boundary_samples, BoundaryDecomposition, Extremum, Status};

/// Resolution and cap settings shared by all rectification models.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RectifyParams {
    /// Lattice rows `m` (levels).
    pub levels: usize,
    /// Lattice columns `k` (samples per level).
    pub samples: usize,
    /// Cap diameter below which the approach to a degenerate extremum stops;
    /// `None` means `2h`.
    pub eps_cap: Option<f64>,
    /// Boundary samples for the decomposition; `None` picks a default from the grid.
    pub boundary_samples: Option<usize>,
    /// Level-arc flatness tolerance; `None` means the field default.
    #[serde(default)]
    pub tol_level: Option<f64>,
    /// Gradient threshold for the regularity check; `None` means the field default.
    #[serde(default)]
    pub g_min: Option<f64>,
}

impl Default for RectifyParams {
    fn default() -> Self {
        Self { levels: 65, samples: 65, eps_cap: None, boundary_samples: None, tol_level: None, g_min: None }
    }
}

impl RectifyParams {
    fn check(&self) -> Result<()> {
        if self.levels < 2 || self.samples < 2 {
            return Err(Error::InvalidArgument("need at least 2 levels and 2 samples".into()));
        }
        if let Some(e) = self.eps_cap {
            if !(e > 0.0) {
                return Err(Error::InvalidArgument("eps_cap must be positive".into()));
            }
        }
        Ok(())
    }

    fn tol_level_for(&self, field: &ScalarField) -> f64 {
        self.tol_level.unwrap_or_else(|| field.default_tol_level())
    }

    fn eps_cap_for(&self, field: &ScalarField) -> f64 {
        self.eps_cap.unwrap_or(2.0 * field.h())
    }
}

/// A sampled homeomorphism `H: model -> D`. `grid[j][i]` is the image of the
/// model point with chart coordinates `(i / (k - 1), j / (m - 1))` on
/// `target_shape`; `source_shape` is the domain holding the images.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiscreteHomeomorphism {
    pub source_shape: DomainShape,
    pub target_shape: DomainShape,
    pub k: usize,
    pub m: usize,
    pub grid: Vec<Vec<Vector2>>,
    /// `f(H(x, y)) = a y + b` on the model.
    pub a: f64,
    pub b: f64,
    pub residual: f64,
    pub orientation_ok: bool,
    /// Largest disagreement between adjacent bands along their shared level.
    pub seam_mismatch: f64,
    pub bands: usize,
}

impl DiscreteHomeomorphism {
    /// Builds a map from its grid, computing orientation; residual is left at 0.
    pub fn from_grid(source_shape: DomainShape, target_shape: DomainShape, grid: Vec<Vec<Vector2>>) -> Result<Self> {
        let m = grid.len();
        let k = grid.first().map_or(0, Vec::len);
        if m < 2 || k < 2 || grid.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidArgument("grid must be rectangular with at least 2 x 2 points".into()));
        }
        let mut h = Self {
            source_shape,
            target_shape,
            k,
            m,
            grid,
            a: 1.0,
            b: 0.0,
            residual: 0.0,
            orientation_ok: true,
            seam_mismatch: 0.0,
            bands: 1,
        };
        h.orientation_ok = h.min_quad_area() > 0.0;
        Ok(h)
    }

    /// The identity on a shape's chart lattice.
    pub fn identity(shape: DomainShape, k: usize, m: usize) -> Result<Self> {
        let grid = (0..m)
            .map(|j| (0..k).map(|i| shape.from_chart(i as f64 / (k - 1) as f64, j as f64 / (m - 1) as f64)).collect())
            .collect();
        Self::from_grid(shape, shape, grid)
    }

    pub fn lattice_point(&self, i: usize, j: usize) -> Vector2 {
        self.target_shape.from_chart(i as f64 / (self.k - 1) as f64, j as f64 / (self.m - 1) as f64)
    }

    /// Largest lattice step on the model, in model length units.
    pub fn lattice_spacing(&self) -> f64 {
        let (lo, hi) = self.target_shape.bbox();
        ((hi.x - lo.x) / (self.k - 1) as f64).max((hi.y - lo.y) / (self.m - 1) as f64)
    }

    fn quad(&self, i: usize, j: usize) -> [Vector2; 4] {
        [self.grid[j][i], self.grid[j][i + 1], self.grid[j + 1][i + 1], self.grid[j + 1][i]]
    }

    /// Smallest signed area among the mapped lattice cells.
    pub fn min_quad_area(&self) -> f64 {
        let mut worst = f64::INFINITY;
        for j in 0..self.m - 1 {
            for i in 0..self.k - 1 {
                worst = worst.min(geometry::signed_area(&self.quad(i, j)));
            }
        }
        worst
    }

    /// `H` at chart coordinates `(tau, t)` by bilinear interpolation of the grid.
    pub fn apply_chart(&self, tau: f64, t: f64) -> Vector2 {
        let u = tau.clamp(0.0, 1.0) * (self.k - 1) as f64;
        let v = t.clamp(0.0, 1.0) * (self.m - 1) as f64;
        let i = (u.floor() as usize).min(self.k - 2);
        let j = (v.floor() as usize).min(self.m - 2);
        let (du, dv) = (u - i as f64, v - j as f64);
        let b = self.grid[j][i].lerp(self.grid[j][i + 1], du);
        let top = self.grid[j + 1][i].lerp(self.grid[j + 1][i + 1], du);
        b.lerp(top, dv)
    }

    /// `H(p)` for a point of the model.
    pub fn apply(&self, p: Vector2) -> Result<Vector2> {
        if !p.is_finite() || !self.target_shape.contains(p, 1e-9) {
            return Err(Error::OutsideDomain(p));
        }
        let (tau, t) = self.target_shape.to_chart(p);
        Ok(self.apply_chart(tau, t))
    }

    pub fn locator(&self) -> MeshLocator<'_> {
        MeshLocator::new(self)
    }

    /// Numerical inverse sampled on the chart lattice of the source domain.
    pub fn invert(&self) -> Result<Self> {
        let loc = self.locator();
        let (k, m) = (self.k, self.m);
        let src = self.source_shape;
        let rows: Vec<Vec<Vector2>> = (0..m)
            .into_par_iter()
            .map(|j| {
                (0..k)
                    .map(|i| {
                        let q = src.from_chart(i as f64 / (k - 1) as f64, j as f64 / (m - 1) as f64);
                        let (tau, t) = loc.locate(q)?;
                        Ok(self.target_shape.from_chart(tau, t))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let mut inv = Self::from_grid(self.target_shape, self.source_shape, rows)?;
        inv.a = self.a;
        inv.b = self.b;
        inv.residual = self.residual;
        inv.bands = self.bands;
        inv.seam_mismatch = self.seam_mismatch;
        Ok(inv)
    }

    /// `max |f(H(p)) - (a y + b)|` over the lattice, recomputed from the field.
    pub fn measure_residual(&self, field: &ScalarField) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..self.m {
            let y = self.target_shape.model_height(j as f64 / (self.m - 1) as f64);
            let want = self.a * y + self.b;
            for p in &self.grid[j] {
                let got = field.eval_unchecked(*p);
                let d = (got - want).abs();
                worst = if d.is_finite() { worst.max(d) } else { f64::INFINITY };
            }
        }
        worst
    }
}

/// Point location in the mapped lattice: a bucket grid over the cell
/// bounding boxes, then inverse bilinear interpolation per cell.
pub struct MeshLocator<'a> {
    map: &'a DiscreteHomeomorphism,
    lo: Vector2,
    cell: f64,
    nb: usize,
    buckets: Vec<Vec<(u32, u32)>>,
    max_edge: f64,
}

impl<'a> MeshLocator<'a> {
    pub fn new(map: &'a DiscreteHomeomorphism) -> Self {
        let pts = map.grid.iter().flatten();
        let (mut lo, mut hi) = (Vector2::new(f64::INFINITY, f64::INFINITY), Vector2::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for p in pts {
            lo = Vector2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vector2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let nb = map.k.max(map.m).clamp(4, 256);
        let cell = ((hi.x - lo.x).max(hi.y - lo.y) / nb as f64).max(1e-300);
        let mut buckets = vec![Vec::new(); nb * nb];
        let mut max_edge = 0.0f64;
        for j in 0..map.m - 1 {
            for i in 0..map.k - 1 {
                let q = map.quad(i, j);
                for w in 0..4 {
                    max_edge = max_edge.max(q[w].dist(q[(w + 1) % 4]));
                }
                let bx0 = q.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
                let bx1 = q.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
                let by0 = q.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
                let by1 = q.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
                let idx = |v: f64, o: f64| (((v - o) / cell).floor().max(0.0) as usize).min(nb - 1);
                for by in idx(by0, lo.y)..=idx(by1, lo.y) {
                    for bx in idx(bx0, lo.x)..=idx(bx1, lo.x) {
                        buckets[by * nb + bx].push((i as u32, j as u32));
                    }
                }
            }
        }
        Self { map, lo, cell, nb, buckets, max_edge }
    }

    /// Chart coordinates `(tau, t)` of the model point mapped to `q`.
    pub fn locate(&self, q: Vector2) -> Result<(f64, f64)> {
        let map = self.map;
        let bx = ((q.x - self.lo.x) / self.cell).floor();
        let by = ((q.y - self.lo.y) / self.cell).floor();
        if bx >= 0.0 && by >= 0.0 && (bx as usize) < self.nb && (by as usize) < self.nb {
            for &(i, j) in &self.buckets[by as usize * self.nb + bx as usize] {
                let (i, j) = (i as usize, j as usize);
                if let Some((u, v)) = inverse_bilinear(&map.quad(i, j), q) {
                    return Ok(((i as f64 + u) / (map.k - 1) as f64, (j as f64 + v) / (map.m - 1) as f64));
                }
            }
        }
        // just outside the mesh: nearest point on the outer ring of cells
        let mut best: Option<(f64, f64, f64)> = None;
        let (k, m) = (map.k, map.m);
        let mut consider = |a: (usize, usize), b: (usize, usize)| {
            let (pa, pb) = (map.grid[a.1][a.0], map.grid[b.1][b.0]);
            let (d, s) = point_segment_distance(q, pa, pb);
            if best.is_none_or(|(bd, _, _)| d < bd) {
                let tau = (a.0 as f64 + s * (b.0 as f64 - a.0 as f64)) / (k - 1) as f64;
                let t = (a.1 as f64 + s * (b.1 as f64 - a.1 as f64)) / (m - 1) as f64;
                best = Some((d, tau, t));
            }
        };
        for i in 0..k - 1 {
            consider((i, 0), (i + 1, 0));
            consider((i, m - 1), (i + 1, m - 1));
        }
        for j in 0..m - 1 {
            consider((0, j), (0, j + 1));
            consider((k - 1, j), (k - 1, j + 1));
        }
        match best {
            Some((d, tau, t)) if d <= 2.0 * self.max_edge => Ok((tau, t)),
            _ => Err(Error::NotLocatable(q)),
        }
    }
}

/// Local coordinates `(u, v) in [0, 1]^2` of `q` in the bilinear cell with
/// corners `c[0] = P(0,0), c[1] = P(1,0), c[2] = P(1,1), c[3] = P(0,1)`.
fn inverse_bilinear(c: &[Vector2; 4], q: Vector2) -> Option<(f64, f64)> {
    let scale = c.iter().map(|p| p.dist(c[0])).fold(0.0f64, f64::max).max(1e-300);
    let slack = 1e-9;
    // cheap reject by bounding box
    let minx = c.iter().map(|p| p.x).fold(f64::INFINITY, f64::min) - slack * scale;
    let maxx = c.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max) + slack * scale;
    let miny = c.iter().map(|p| p.y).fold(f64::INFINITY, f64::min) - slack * scale;
    let maxy = c.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max) + slack * scale;
    if q.x < minx || q.x > maxx || q.y < miny || q.y > maxy {
        return None;
    }
    let eval = |u: f64, v: f64| c[0].lerp(c[1], u).lerp(c[3].lerp(c[2], u), v);
    let inside = |u: f64, v: f64| (-slack..=1.0 + slack).contains(&u) && (-slack..=1.0 + slack).contains(&v);
    let (mut u, mut v) = (0.5, 0.5);
    for _ in 0..30 {
        let r = eval(u, v) - q;
        if r.norm() <= 1e-13 * scale {
            break;
        }
        let du = (c[1] - c[0]) * (1.0 - v) + (c[2] - c[3]) * v;
        let dv = (c[3] - c[0]) * (1.0 - u) + (c[2] - c[1]) * u;
        let det = du.cross(dv);
        if det.abs() <= 1e-14 * scale * scale {
            break;
        }
        let su = (r.x * dv.y - r.y * dv.x) / det;
        let sv = (du.x * r.y - du.y * r.x) / det;
        u -= su;
        v -= sv;
        if !u.is_finite() || !v.is_finite() {
            break;
        }
    }
    if u.is_finite() && v.is_finite() && eval(u, v).dist(q) <= 1e-9 * scale && inside(u, v) {
        return Some((u.clamp(0.0, 1.0), v.clamp(0.0, 1.0)));
    }
    // degenerate cells (collapsed rows): barycentric on the two triangles
    let params = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
    for tri in [[0usize, 1, 2], [0, 2, 3]] {
        let (a, b, d) = (c[tri[0]], c[tri[1]], c[tri[2]]);
        let area = (b - a).cross(d - a);
        if area.abs() <= 1e-14 * scale * scale {
            continue;
        }
        let l1 = (q - a).cross(d - a) / area;
        let l2 = (b - a).cross(q - a) / area;
        let l0 = 1.0 - l1 - l2;
        if l0 >= -slack && l1 >= -slack && l2 >= -slack {
            let pu = l0 * params[tri[0]].0 + l1 * params[tri[1]].0 + l2 * params[tri[2]].0;
            let pv = l0 * params[tri[0]].1 + l1 * params[tri[1]].1 + l2 * params[tri[2]].1;
            return Some((pu.clamp(0.0, 1.0), pv.clamp(0.0, 1.0)));
        }
    }
    None
}

/// Which side of a band its fibers run along.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FiberAxis {
    /// Fibers are vertical segments `{x} x [alpha(x), beta(x)]`.
    Vertical,
    /// Fibers are horizontal segments `[alpha(y), beta(y)] x {y}`.
    Horizontal,
}

type Bound = Shared<dyn Fn(f64) -> f64 + Send + Sync>;

/// The flattening `G(s, t) = (s, t beta(s) + (1 - t) alpha(s))` of a band
/// `{ s in [s0, s1], alpha(s) <= r <= beta(s) }` onto `[s0, s1] x [0, 1]`.
#[derive(Clone)]
pub struct FiberChart {
    pub s0: f64,
    pub s1: f64,
    pub axis: FiberAxis,
    alpha: Bound,
    beta: Bound,
}

impl std::fmt::Debug for FiberChart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FiberChart").field("s0", &self.s0).field("s1", &self.s1).field("axis", &self.axis).finish()
    }
}

impl FiberChart {
    pub fn new(
        s0: f64,
        s1: f64,
        axis: FiberAxis,
        alpha: impl Fn(f64) -> f64 + Send + Sync + 'static,
        beta: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(s1 > s0) {
            return Err(Error::InvalidArgument(format!("empty band [{s0}, {s1}]")));
        }
        for n in 0..=64 {
            let s = s0 + (s1 - s0) * n as f64 / 64.0;
            if !(alpha(s) < beta(s)) {
                return Err(Error::EmptyFiber { at: s });
            }
        }
        Ok(Self { s0, s1, axis, alpha: Shared::new(alpha), beta: Shared::new(beta) })
    }

    /// The horizontal band of a model shape between heights `y0` and `y1`.
    pub fn for_model(shape: DomainShape, y0: f64, y1: f64) -> Result<Self> {
        Self::new(y0, y1, FiberAxis::Horizontal, move |y| shape.fiber(y).0, move |y| shape.fiber(y).1)
    }

    pub fn alpha(&self, s: f64) -> f64 {
        (self.alpha)(s)
    }
    pub fn beta(&self, s: f64) -> f64 {
        (self.beta)(s)
    }

    /// `G(s, t)`: the point at fraction `t` along the fiber over `s`.
    pub fn unflatten(&self, s: f64, t: f64) -> Vector2 {
        let r = t * self.beta(s) + (1.0 - t) * self.alpha(s);
        match self.axis {
            FiberAxis::Vertical => Vector2::new(s, r),
            FiberAxis::Horizontal => Vector2::new(r, s),
        }
    }

    /// `G^{-1}(p) = (s, t)`.
    pub fn flatten(&self, p: Vector2) -> (f64, f64) {
        let (s, r) = match self.axis {
            FiberAxis::Vertical => (p.x, p.y),
            FiberAxis::Horizontal => (p.y, p.x),
        };
        let (a, b) = (self.alpha(s), self.beta(s));
        (s, (r - a) / (b - a))
    }
}

/// Builds the band chart of a model band.
pub fn band_chart(band: &Band) -> Result<FiberChart> {
    FiberChart::for_model(band.shape, band.y0, band.y1)
}

/// The part of `D` between two level curves, paired with the model band
/// `y in [y0, y1]` of `shape`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Band {
    pub shape: DomainShape,
    pub y0: f64,
    pub y1: f64,
    pub f0: f64,
    pub f1: f64,
    pub lower: LevelCurve,
    pub upper: LevelCurve,
    /// Boundary pieces joining the starts and the ends of the two curves.
    pub left_wall: Vec<Vector2>,
    pub right_wall: Vec<Vector2>,
}

impl Band {
    pub fn new(field: &ScalarField, dec: &BoundaryDecomposition, shape: DomainShape, y0: f64, y1: f64, f0: f64, f1: f64) -> Result<Self> {
        if f0 == f1 {
            return Err(Error::InvalidArgument("band levels must differ".into()));
        }
        let lower = single_level(field, dec, f0)?;
        let upper = single_level(field, dec, f1)?;
        let wall = |a: Vector2, b: Vector2| boundary_piece(field.shape(), a, b, 0.5 * field.h());
        let left_wall = wall(lower.start(), upper.start());
        let right_wall = wall(lower.end(), upper.end());
        Ok(Self { shape, y0, y1, f0, f1, lower, upper, left_wall, right_wall })
    }

    fn level_at(&self, y: f64) -> f64 {
        self.f0 + (y - self.y0) / (self.y1 - self.y0) * (self.f1 - self.f0)
    }
}

/// Shorter boundary piece between two boundary points.
fn boundary_piece(shape: DomainShape, a: Vector2, b: Vector2, spacing: f64) -> Vec<Vector2> {
    let (sa, sb) = (shape.boundary_param(a), shape.boundary_param(b));
    let fwd = (sb - sa).rem_euclid(1.0);
    let (from, span) = if fwd <= 0.5 { (sa, fwd) } else { (sb, 1.0 - fwd) };
    let n = ((span * shape.perimeter()) / spacing).ceil().max(1.0) as usize;
    let mut pts: Vec<Vector2> = (0..=n).map(|i| shape.boundary_point(from + span * i as f64 / n as f64)).collect();
    if fwd > 0.5 {
        pts.reverse();
    }
    pts
}

/// The one level component at `c`.
fn single_level(field: &ScalarField, dec: &BoundaryDecomposition, c: f64) -> Result<LevelCurve> {
    let mut comps = extract_level(field, dec, c)?;
    if comps.len() != 1 {
        return Err(Error::ComponentCount { level: c, found: comps.len() });
    }
    Ok(comps.pop().unwrap())
}

/// `k` points at equal mu-fractions along the curve; `reverse` flips its direction.
fn resample_row(curve: &LevelCurve, k: usize, reverse: bool) -> Result<Vec<Vector2>> {
    if curve.is_point() {
        return Ok(vec![curve.start(); k]);
    }
    let mut pts = curve.points.clone();
    if reverse {
        pts.reverse();
    }
    let Ok(pl) = Polyline::from_points_dedup(&pts, 0.0) else {
        return Ok(vec![pts[0]; k]);
    };
    Ok(resample_fractions(&mu_parameterize(&pl), k))
}

/// Rows of one band: the levels at model heights `ys` (all within the band),
/// each mu-resampled at the chart fractions of the model lattice.
#[derive(Clone, Debug)]
pub struct BandPiece {
    pub ys: Vec<f64>,
    pub rows: Vec<Vec<Vector2>>,
    pub lower_row: Vec<Vector2>,
    pub upper_row: Vec<Vector2>,
}

/// Rectifies one band: each model row `y` in `ys` is sent to the level
/// `f0 + (y - y0)/(y1 - y0) (f1 - f0)`, with the model point at fiber fraction
/// `tau` sent to the point at fraction `tau` of that level's mu-length.
/// The lower and upper band edges are the band's own curves.
pub fn rectify_band(field: &ScalarField, dec: &BoundaryDecomposition, band: &Band, k: usize, ys: &[f64], reverse: bool) -> Result<BandPiece> {
    let chart = band_chart(band)?;
    let fractions: Vec<f64> = (0..k).map(|i| i as f64 / (k - 1) as f64).collect();
    let lower_row = resample_row(&band.lower, k, reverse)?;
    let upper_row = resample_row(&band.upper, k, reverse)?;
    let rows = ys
        .par_iter()
        .map(|&y| {
            if y <= band.y0 {
                return Ok(lower_row.clone());
            }
            if y >= band.y1 {
                return Ok(upper_row.clone());
            }
            let curve = single_level(field, dec, band.level_at(y))?;
            let row = resample_row(&curve, k, reverse)?;
            // model lattice points flattened by the band chart give the fractions
            debug_assert!(fractions.iter().all(|&tau| {
                let p = chart.unflatten(y, tau);
                (chart.flatten(p).1 - tau).abs() < 1e-9
            }));
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BandPiece { ys: ys.to_vec(), rows, lower_row, upper_row })
}

/// Extremal boundary arcs of a decomposition with two monotone arcs.
fn extremal(dec: &BoundaryDecomposition) -> Result<(usize, usize)> {
    if dec.n_f != 2 {
        return Err(Error::NotRegular(format!("{} monotone boundary arcs", dec.n_f)));
    }
    match dec.extremal_arcs() {
        (Some(lo), Some(hi)) => Ok((lo, hi)),
        _ => Err(Error::NotRegular("no unique boundary minimum and maximum".into())),
    }
}

fn decomposition(field: &ScalarField, params: &RectifyParams) -> Result<BoundaryDecomposition> {
    let m = params.boundary_samples.unwrap_or_else(|| default_boundary_samples(field));
    decompose_boundary(field, m, params.tol_level_for(field), 0.0)
}

fn finish(
    field: &ScalarField,
    target: DomainShape,
    grid: Vec<Vec<Vector2>>,
    a: f64,
    b: f64,
    seam_mismatch: f64,
    bands: usize,
) -> Result<DiscreteHomeomorphism> {
    let mut h = DiscreteHomeomorphism::from_grid(field.shape(), target, grid)?;
    h.a = a;
    h.b = b;
    h.seam_mismatch = seam_mismatch;
    h.bands = bands;
    h.residual = h.measure_residual(field);
    Ok(h)
}

fn model_heights(shape: DomainShape, m: usize) -> Vec<f64> {
    (0..m).map(|j| shape.model_height(j as f64 / (m - 1) as f64)).collect()
}

/// Square model: `f` is constant on two disjoint boundary arcs. Rows run from
/// the minimum arc (`y = 0`) to the maximum arc (`y = 1`), and
/// `f(H(x, y)) = (1 - y) f0 + y f1`.
pub fn rectify_affine(field: &ScalarField, params: &RectifyParams) -> Result<DiscreteHomeomorphism> {
    params.check()?;
    let dec = decomposition(field, params)?;
    rectify_affine_with(field, &dec, params)
}

fn rectify_affine_with(field: &ScalarField, dec: &BoundaryDecomposition, params: &RectifyParams) -> Result<DiscreteHomeomorphism> {
    let (lo, hi) = extremal(dec)?;
    if dec.arcs[lo].degenerate || dec.arcs[hi].degenerate {
        return Err(Error::ModelMismatch("the square model needs two non-degenerate level arcs".into()));
    }
    let (f0, f1) = (dec.arcs[lo].level.unwrap(), dec.arcs[hi].level.unwrap());
    if f0 == f1 {
        return Err(Error::ModelMismatch("f0 = f1".into()));
    }
    let target = DomainShape::Square;
    let band = Band::new(field, dec, target, 0.0, 1.0, f0, f1)?;
    let ys = model_heights(target, params.levels);
    let piece = rectify_band(field, dec, &band, params.samples, &ys, false)?;
    finish(field, target, piece.rows, f1 - f0, f0, 0.0, 1)
}

/// Square model for a field with `f = 0` on the bottom arc and `f = 1` on the top arc.
pub fn rectify_square(field: &ScalarField, params: &RectifyParams) -> Result<DiscreteHomeomorphism> {
    params.check()?;
    let dec = decomposition(field, params)?;
    let (lo, hi) = extremal(&dec)?;
    let tol = params.tol_level_for(field);
    let (f0, f1) = (dec.arcs[lo].level.unwrap(), dec.arcs[hi].level.unwrap());
    if f0.abs() > tol || (f1 - 1.0).abs() > tol {
        return Err(Error::ModelMismatch(format!("expected boundary levels 0 and 1, found {f0} and {f1}")));
    }
    rectify_affine_with(field, &dec, params)
}

/// Levels `c_k = 1 - (1 - c_{k-1}) / 2` in the normalized coordinate `u`,
/// stopping once the cap `{u >= c_K}` has diameter at most `eps_cap`.
/// `level(u)` maps back to field values; `apex` is the degenerate extremum.
fn cap_levels(
    field: &ScalarField,
    dec: &BoundaryDecomposition,
    level: impl Fn(f64) -> f64,
    apex: Vector2,
    eps_cap: f64,
) -> Result<Vec<f64>> {
    let shape = field.shape();
    let mut cs = vec![0.0];
    let mut reached = f64::INFINITY;
    for _ in 0..60 {
        let c = 1.0 - (1.0 - cs.last().unwrap()) / 2.0;
        let curve = match single_level(field, dec, level(c)) {
            Ok(curve) if !curve.is_point() => curve,
            // the level vanished into the extremum: the previous cap is the last one
            _ => break,
        };
        let mut pts = curve.points.clone();
        let s_apex = shape.boundary_param(apex);
        let (sa, sb) = (shape.boundary_param(curve.start()), shape.boundary_param(curve.end()));
        // the boundary piece between the endpoints that passes the apex
        let (from, span) = if (s_apex - sa).rem_euclid(1.0) <= (sb - sa).rem_euclid(1.0) {
            (sa, (sb - sa).rem_euclid(1.0))
        } else {
            (sb, (sa - sb).rem_euclid(1.0))
        };
        let n = ((span * shape.perimeter()) / (0.5 * field.h())).ceil().max(1.0) as usize;
        pts.extend((0..=n).map(|i| shape.boundary_point(from + span * i as f64 / n as f64)));
        reached = geometry::diameter(&pts);
        cs.push(c);
        if reached <= eps_cap {
            return Ok(cs);
        }
    }
    Err(Error::CapNotShrinking { eps_cap, reached })
}

/// Rows for model heights `us` (normalized levels in `[0, 1]` growing toward
/// the apex): bands between consecutive `cs`, then a fan from the last level
/// curve to the apex. Returns rows, seam mismatch and band count.
#[allow(clippy::too_many_arguments)]
fn half_rows(
    field: &ScalarField,
    dec: &BoundaryDecomposition,
    model: DomainShape,
    level: &(dyn Fn(f64) -> f64 + Sync),
    cs: &[f64],
    base: Option<&LevelCurve>,
    apex: Vector2,
    us: &[f64],
    k: usize,
    reverse: bool,
) -> Result<(Vec<Vec<Vector2>>, f64, usize)> {
    let mut rows: Vec<Option<Vec<Vector2>>> = vec![None; us.len()];
    let mut seam = 0.0f64;
    let mut prev_upper: Option<Vec<Vector2>> = None;
    for w in cs.windows(2) {
        let (c0, c1) = (w[0], w[1]);
        let mut band = Band::new(field, dec, model, c0, c1, level(c0), level(c1))?;
        if c0 == 0.0 {
            if let Some(b) = base {
                band.lower = b.clone();
            }
        }
        let idx: Vec<usize> = (0..us.len()).filter(|&j| us[j] >= c0 && us[j] <= c1 && rows[j].is_none()).collect();
        let ys: Vec<f64> = idx.iter().map(|&j| us[j]).collect();
        let piece = rectify_band(field, dec, &band, k, &ys, reverse)?;
        if let Some(pu) = &prev_upper {
            let d = pu.iter().zip(&piece.lower_row).map(|(a, b)| a.dist(*b)).fold(0.0, f64::max);
            seam = seam.max(d);
        }
        prev_upper = Some(piece.upper_row.clone());
        for (n, j) in idx.into_iter().enumerate() {
            rows[j] = Some(piece.rows[n].clone());
        }
    }
    let c_cap = *cs.last().unwrap();
    let cap_row = match &prev_upper {
        Some(r) => r.clone(),
        None => resample_row(base.ok_or_else(|| Error::InvalidArgument("no base level".into()))?, k, reverse)?,
    };
    let out = rows
        .into_iter()
        .zip(us)
        .map(|(r, &u)| {
            r.unwrap_or_else(|| {
                let w = ((u - c_cap) / (1.0 - c_cap)).clamp(0.0, 1.0);
                cap_row.iter().map(|p| p.lerp(apex, w)).collect()
            })
        })
        .collect();
    Ok((out, seam, cs.len() - 1))
}

/// Half-disk model: one non-degenerate extremal arc (sent to the diameter)
/// and one degenerate extremum `v` (sent to `(0, 1)`), with
/// `f(H(x, y)) = a y + b`.
pub fn rectify_half_disk(field: &ScalarField, params: &RectifyParams) -> Result<DiscreteHomeomorphism> {
    params.check()?;
    let dec = decomposition(field, params)?;
    rectify_half_disk_with(field, &dec, params)
}

fn rectify_half_disk_with(field: &ScalarField, dec: &BoundaryDecomposition, params: &RectifyParams) -> Result<DiscreteHomeomorphism> {
    let (lo, hi) = extremal(dec)?;
    let degenerate = |k: usize| dec.arcs[k].degenerate;
    let (base_arc, apex_arc) = match (degenerate(lo), degenerate(hi)) {
        (false, true) => (lo, hi),
        (true, false) => (hi, lo),
        (true, true) => return Err(Error::MultipleExtrema("both boundary extrema are isolated points; use the disk model".into())),
        (false, false) => return Err(Error::ModelMismatch("no isolated boundary extremum".into())),
    };
    let b = dec.arcs[base_arc].level.unwrap();
    let fv = dec.arcs[apex_arc].level.unwrap();
    let a = fv - b;
    let apex = field.shape().boundary_point(dec.arcs[apex_arc].s_begin);
    let level = move |u: f64| b + a * u;
    let eps_cap = params.eps_cap_for(field);
    let cs = cap_levels(field, dec, level, apex, eps_cap)?;
    let base = extremal_arc_curve(field, dec, base_arc);
    let model = DomainShape::HalfDisk;
    let us = model_heights(model, params.levels);
    // with a < 0 the level curves run with the gradient on the model's right
    let reverse = a < 0.0;
    let (rows, seam, bands) = half_rows(field, dec, model, &level, &cs, Some(&base), apex, &us, params.samples, reverse)?;
    finish(field, model, rows, a, b, seam, bands)
}

/// Disk model: two isolated boundary extrema `v-` and `v+`, split at the
/// middle level `(f(v-) + f(v+)) / 2`; `f(H(x, y)) = ((1 - y) f(v-) + (1 + y) f(v+)) / 2`.
pub fn rectify_disk(field: &ScalarField, params: &RectifyParams) -> Result<DiscreteHomeomorphism> {
    params.check()?;
    let dec = decomposition(field, params)?;
    rectify_disk_with(field, &dec, params)
}

fn rectify_disk_with(field: &ScalarField, dec: &BoundaryDecomposition, params: &RectifyParams) -> Result<DiscreteHomeomorphism> {
    let (lo, hi) = extremal(dec)?;
    if !dec.arcs[lo].degenerate || !dec.arcs[hi].degenerate {
        return Err(Error::ModelMismatch("the disk model needs two isolated boundary extrema".into()));
    }
    let (fm, fp) = (dec.arcs[lo].level.unwrap(), dec.arcs[hi].level.unwrap());
    let a = (fp - fm) / 2.0;
    let b = (fp + fm) / 2.0;
    let shape = field.shape();
    let vp = shape.boundary_point(dec.arcs[hi].s_begin);
    let vm = shape.boundary_point(dec.arcs[lo].s_begin);
    let eps_cap = params.eps_cap_for(field);
    let model = DomainShape::Disk;
    let ys = model_heights(model, params.levels);

    let mid = single_level(field, dec, b)?;
    let upper_level = move |u: f64| b + a * u;
    let lower_level = move |u: f64| b - a * u;
    let cs_up = cap_levels(field, dec, upper_level, vp, eps_cap)?;
    let cs_down = cap_levels(field, dec, lower_level, vm, eps_cap)?;

    // upper half: u = y; lower half: u = -y, mirrored rows keep the gradient
    // on the left by reading the lower curves in the same direction
    let up_idx: Vec<usize> = (0..ys.len()).filter(|&j| ys[j] >= 0.0).collect();
    let down_idx: Vec<usize> = (0..ys.len()).filter(|&j| ys[j] < 0.0).collect();
    let us_up: Vec<f64> = up_idx.iter().map(|&j| ys[j]).collect();
    let us_down: Vec<f64> = down_idx.iter().map(|&j| -ys[j]).collect();
    let k = params.samples;
    let (rows_up, seam_up, bands_up) = half_rows(field, dec, model, &upper_level, &cs_up, Some(&mid), vp, &us_up, k, false)?;
    let (rows_down, seam_down, bands_down) =
        half_rows(field, dec, model, &lower_level, &cs_down, Some(&mid), vm, &us_down, k, false)?;
    let mut grid = vec![Vec::new(); ys.len()];
    for (n, j) in up_idx.into_iter().enumerate() {
        grid[j] = rows_up[n].clone();
    }
    for (n, j) in down_idx.into_iter().enumerate() {
        grid[j] = rows_down[n].clone();
    }
    // the two halves meet along the middle level; compare their first rows there
    let seam_mid = {
        let a_row = resample_row(&mid, k, false)?;
        let b_row = resample_row(&single_level(field, dec, b)?, k, false)?;
        a_row.iter().zip(&b_row).map(|(p, q)| p.dist(*q)).fold(0.0, f64::max)
    };
    let seam = seam_up.max(seam_down).max(seam_mid);
    finish(field, model, grid, a, b, seam, bands_up + bands_down)
}

/// Model choice from the extremal arcs: square when both are proper arcs,
/// disk when both are points, half-disk otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelChoice {
    Auto,
    Square,
    HalfDisk,
    Disk,
}

impl std::str::FromStr for ModelChoice {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "auto" => Ok(Self::Auto),
            "square" => Ok(Self::Square),
            "half_disk" => Ok(Self::HalfDisk),
            "disk" => Ok(Self::Disk),
            other => Err(format!("unknown model {other:?}")),
        }
    }
}

/// The model shape selected for a decomposition with two monotone arcs.
pub fn select_model(dec: &BoundaryDecomposition) -> Result<DomainShape> {
    let (lo, hi) = extremal(dec)?;
    Ok(match (dec.arcs[lo].degenerate, dec.arcs[hi].degenerate) {
        (false, false) => DomainShape::Square,
        (true, true) => DomainShape::Disk,
        _ => DomainShape::HalfDisk,
    })
}

/// Classifies the field, selects the model and rectifies.
pub fn rectify_auto(field: &ScalarField, params: &RectifyParams) -> Result<DiscreteHomeomorphism> {
    rectify_model(field, ModelChoice::Auto, params)
}

pub fn rectify_model(field: &ScalarField, model: ModelChoice, params: &RectifyParams) -> Result<DiscreteHomeomorphism> {
    params.check()?;
    let dec = decomposition(field, params)?;
    let cp = ClassifyParams {
        g_min: params.g_min.unwrap_or_else(|| field.default_g_min()),
        tol_level: params.tol_level_for(field),
    };
    let verdict = classify_with(field, &dec, cp);
    if verdict.status != Status::WeaklyRegular {
        let first = verdict.failures.first().map(|f| format!(": {} ({})", f.condition, f.detail)).unwrap_or_default();
        return Err(Error::NotRegular(format!("classified {}{first}", verdict.status)));
    }
    let shape = match model {
        ModelChoice::Auto => select_model(&dec)?,
        ModelChoice::Square => DomainShape::Square,
        ModelChoice::HalfDisk => DomainShape::HalfDisk,
        ModelChoice::Disk => DomainShape::Disk,
    };
    match shape {
        DomainShape::Square => rectify_affine_with(field, &dec, params),
        DomainShape::HalfDisk => rectify_half_disk_with(field, &dec, params),
        DomainShape::Disk => rectify_disk_with(field, &dec, params),
    }
}

/// Which extremum of `dec` sits at the model's apex, if the model has one.
pub fn apex_kind(dec: &BoundaryDecomposition) -> Option<Extremum> {
    let (lo, hi) = dec.extremal_arcs();
    match (lo.map(|k| dec.arcs[k].degenerate), hi.map(|k| dec.arcs[k].degenerate)) {
        (Some(true), Some(false)) => Some(Extremum::Min),
        (Some(false), Some(true)) => Some(Extremum::Max),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(m: usize, k: usize) -> RectifyParams {
        RectifyParams { levels: m, samples: k, ..Default::default() }
    }

    #[test]
    fn fiber_chart_examples() {
        let unit = FiberChart::new(0.0, 1.0, FiberAxis::Vertical, |_| 0.0, |_| 1.0).unwrap();
        assert_eq!(unit.unflatten(0.3, 0.7), Vector2::new(0.3, 0.7));
        let slanted = FiberChart::new(0.0, 1.0, FiberAxis::Vertical, |_| 0.0, |x| 1.0 + x).unwrap();
        assert_eq!(slanted.unflatten(0.5, 0.5), Vector2::new(0.5, 0.75));
        let disk = FiberChart::for_model(DomainShape::Disk, 0.0, 0.5).unwrap();
        for (y, t) in [(0.0, 0.0), (0.25, 0.3), (0.5, 1.0), (0.1, 0.5)] {
            let p = disk.unflatten(y, t);
            let (y2, t2) = disk.flatten(p);
            assert!((y2 - y).abs() <= 1e-12 && (t2 - t).abs() <= 1e-12);
            let w = (1.0f64 - y * y).sqrt();
            assert!((p.x - (-w + 2.0 * w * t)).abs() < 1e-12);
        }
        assert!(matches!(
            FiberChart::new(0.0, 1.0, FiberAxis::Vertical, |x| x, |_| 0.5),
            Err(Error::EmptyFiber { .. })
        ));
    }

    #[test]
    fn identity_for_linear_square() {
        let f = ScalarField::from_fn(DomainShape::Square, 129, 129, |_, y| y).unwrap();
        let h = rectify_square(&f, &params(17, 17)).unwrap();
        assert!(h.orientation_ok);
        for j in 0..17 {
            for i in 0..17 {
                assert!(h.grid[j][i].dist(h.lattice_point(i, j)) < 1e-4, "{i} {j} {:?}", h.grid[j][i]);
            }
        }
        assert_eq!((h.a, h.b), (1.0, 0.0));
        assert!(h.residual < 1e-12);
    }

    #[test]
    fn affine_rescaling() {
        let f = ScalarField::from_fn(DomainShape::Square, 129, 129, |_, y| 3.0 + 2.0 * y * y).unwrap();
        let h = rectify_affine(&f, &params(9, 9)).unwrap();
        assert!((h.a - 2.0).abs() < 1e-12 && (h.b - 3.0).abs() < 1e-12);
        for j in 0..9 {
            for i in 0..9 {
                let p = h.lattice_point(i, j);
                let want = Vector2::new(p.x, p.y.sqrt());
                assert!(h.grid[j][i].dist(want) < 2.0 * f.h(), "{:?} vs {want:?}", h.grid[j][i]);
            }
        }
        let flat = ScalarField::from_fn(DomainShape::Square, 17, 17, |_, _| 1.0).unwrap();
        assert!(rectify_affine(&flat, &params(5, 5)).is_err());
        assert!(matches!(rectify_square(&f, &params(5, 5)), Err(Error::ModelMismatch(_))));
    }

    #[test]
    fn half_disk_identity() {
        let f = ScalarField::from_fn(DomainShape::HalfDisk, 129, 65, |_, y| y).unwrap();
        let h = rectify_half_disk(&f, &params(17, 17)).unwrap();
        assert!(h.orientation_ok, "min area {}", h.min_quad_area());
        for j in 0..17 {
            for i in 0..17 {
                assert!(h.grid[j][i].dist(h.lattice_point(i, j)) < 2.0 * f.h());
            }
        }
        assert!(h.bands >= 2);
        assert!(h.seam_mismatch <= f.h());
    }

    #[test]
    fn two_maxima_are_rejected() {
        let f = ScalarField::from_fn(DomainShape::HalfDisk, 129, 65, |x, y| y * (1.0 + 0.8 * (3.0 * x).cos().powi(2))).unwrap();
        assert!(rectify_half_disk(&f, &params(9, 9)).is_err());
    }

    #[test]
    fn disk_identity_and_inverse() {
        let f = ScalarField::from_fn(DomainShape::Disk, 129, 129, |_, y| y).unwrap();
        let h = rectify_disk(&f, &params(17, 17)).unwrap();
        assert!(h.orientation_ok);
        assert!((h.a - 1.0).abs() < 1e-9 && h.b.abs() < 1e-9);
        for j in 0..17 {
            for i in 0..17 {
                assert!(h.grid[j][i].dist(h.lattice_point(i, j)) < 2.0 * f.h());
            }
        }
        let inv = h.invert().unwrap();
        let back = inv.invert().unwrap();
        for j in 0..17 {
            for i in 0..17 {
                assert!(back.grid[j][i].dist(h.grid[j][i]) < 4.0 * h.lattice_spacing());
            }
        }
    }

    #[test]
    fn inverse_of_square_root_map() {
        let grid: Vec<Vec<Vector2>> = (0..33)
            .map(|j| (0..33).map(|i| Vector2::new(i as f64 / 32.0, (j as f64 / 32.0).sqrt())).collect())
            .collect();
        let h = DiscreteHomeomorphism::from_grid(DomainShape::Square, DomainShape::Square, grid).unwrap();
        let inv = h.invert().unwrap();
        for j in 0..33 {
            for i in 0..33 {
                let p = inv.lattice_point(i, j);
                assert!(inv.grid[j][i].dist(Vector2::new(p.x, p.y * p.y)) <= 2.0 * h.lattice_spacing());
            }
        }
        let id = DiscreteHomeomorphism::identity(DomainShape::Square, 9, 9).unwrap();
        let inv = id.invert().unwrap();
        for (r, s) in inv.grid.iter().zip(&id.grid) {
            for (p, q) in r.iter().zip(s) {
                assert!(p.dist(*q) < 1e-12);
            }
        }
    }

    #[test]
    fn auto_selects_models() {
        let sq = ScalarField::from_fn(DomainShape::Square, 129, 129, |_, y| y).unwrap();
        let h = rectify_auto(&sq, &params(9, 9)).unwrap();
        assert_eq!(h.target_shape, DomainShape::Square);
        let xy = ScalarField::from_fn(DomainShape::Square, 129, 129, |x, y| x * y).unwrap();
        let h = rectify_auto(&xy, &params(17, 17)).unwrap();
        assert_eq!(h.target_shape, DomainShape::HalfDisk);
        assert!(h.orientation_ok, "{}", h.min_quad_area());
        assert!(h.residual <= xy.default_tol_rect(), "{}", h.residual);
        let plateau = ScalarField::from_fn(DomainShape::Square, 65, 65, |_, y| y.min(0.8)).unwrap();
        assert!(matches!(rectify_auto(&plateau, &params(9, 9)), Err(Error::NotRegular(_))));
    }
}
