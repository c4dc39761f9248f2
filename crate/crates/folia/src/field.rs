//! Grid-sampled scalar fields over a masked domain, with bilinear
//! reconstruction, finite-difference gradients and boundary sampling.

use std::collections::VecDeque;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::DomainShape;
use crate::error::{Error, Result};
use crate::geometry::Vector2;

/// Number of node layers outside the mask that are filled by extrapolation,
/// so that every cell meeting the domain has four usable corners.
const GHOST_LAYERS: usize = 3;

/// A function sampled on a regular grid whose lower-left node sits at the
/// lower-left corner of the shape's bounding box. Node `(i, j)` is at
/// `origin + h (i, j)`; storage is row-major with `j` the row.
#[derive(Clone, Debug)]
pub struct ScalarField {
    shape: DomainShape,
    nx: usize,
    ny: usize,
    h: f64,
    origin: Vector2,
    values: Vec<f64>,
    mask: Vec<bool>,
    /// `values` inside the mask, extrapolated ghost values around it, NaN elsewhere.
    ext: Vec<f64>,
    node_grad: Vec<Vector2>,
    min: f64,
    max: f64,
    max_grad: f64,
}

/// One sample of the boundary: parameter, position and field value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundarySample {
    pub s: f64,
    pub p: Vector2,
    pub value: f64,
}

impl ScalarField {
    /// Builds a field from row-major samples. Values outside the mask are
    /// ignored; the mask defaults to the grid nodes inside `shape`.
    pub fn new(
        shape: DomainShape,
        nx: usize,
        ny: usize,
        values: Vec<f64>,
        mask: Option<Vec<bool>>,
    ) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::Grid(format!("grid {nx}x{ny} is too small")));
        }
        if values.len() != nx * ny {
            return Err(Error::Grid(format!(
                "expected {} samples for a {nx}x{ny} grid, got {}",
                nx * ny,
                values.len()
            )));
        }
        let (lo, hi) = shape.bbox();
        let h = (hi.x - lo.x) / (nx - 1) as f64;
        if (ny - 1) as f64 * h < (hi.y - lo.y) * (1.0 - 1e-9) {
            return Err(Error::Grid(format!(
                "grid {nx}x{ny} does not cover the {shape} bounding box"
            )));
        }
        let origin = lo;
        let node = |i: usize, j: usize| Vector2::new(origin.x + h * i as f64, origin.y + h * j as f64);
        let mask = match mask {
            Some(m) => {
                if m.len() != nx * ny {
                    return Err(Error::Grid("mask size does not match grid".into()));
                }
                for j in 0..ny {
                    for i in 0..nx {
                        if m[j * nx + i] && !shape.contains(node(i, j), 0.5 * h) {
                            return Err(Error::MaskOutsideShape { i, j });
                        }
                    }
                }
                m
            }
            None => (0..ny)
                .flat_map(|j| (0..nx).map(move |i| (i, j)))
                .map(|(i, j)| shape.contains(node(i, j), 1e-12))
                .collect(),
        };
        for j in 0..ny {
            for i in 0..nx {
                if mask[j * nx + i] && !values[j * nx + i].is_finite() {
                    return Err(Error::NonFiniteSample { i, j });
                }
            }
        }
        check_mask_topology(&mask, nx, ny)?;

        let ext = fill_ghosts(&values, &mask, nx, ny);
        let mut field = Self {
            shape,
            nx,
            ny,
            h,
            origin,
            values,
            mask,
            ext,
            node_grad: Vec::new(),
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            max_grad: 0.0,
        };
        field.node_grad = field.compute_node_gradients();
        for k in 0..nx * ny {
            if field.mask[k] {
                field.min = field.min.min(field.values[k]);
                field.max = field.max.max(field.values[k]);
                field.max_grad = field.max_grad.max(field.node_grad[k].norm());
            }
        }
        Ok(field)
    }

    /// Samples `f` at every node inside `shape`.
    pub fn from_fn(
        shape: DomainShape,
        nx: usize,
        ny: usize,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let (lo, hi) = shape.bbox();
        let h = (hi.x - lo.x) / (nx.max(2) - 1) as f64;
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let p = Vector2::new(lo.x + h * i as f64, lo.y + h * j as f64);
                values.push(if shape.contains(p, 1e-12) { f(p.x, p.y) } else { f64::NAN });
            }
        }
        Self::new(shape, nx, ny, values, None)
    }

    pub fn shape(&self) -> DomainShape {
        self.shape
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    /// Grid spacing.
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn origin(&self) -> Vector2 {
        self.origin
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }
    pub fn in_mask(&self, i: usize, j: usize) -> bool {
        self.mask[j * self.nx + i]
    }
    /// Value at node `(i, j)`, including extrapolated ghost nodes (NaN when unavailable).
    pub fn node_value(&self, i: usize, j: usize) -> f64 {
        self.ext[j * self.nx + i]
    }
    pub fn node_position(&self, i: usize, j: usize) -> Vector2 {
        Vector2::new(self.origin.x + self.h * i as f64, self.origin.y + self.h * j as f64)
    }
    pub fn node_gradient(&self, i: usize, j: usize) -> Vector2 {
        self.node_grad[j * self.nx + i]
    }
    /// Smallest sample inside the mask.
    pub fn min_value(&self) -> f64 {
        self.min
    }
    pub fn max_value(&self) -> f64 {
        self.max
    }
    /// Largest node gradient norm inside the mask.
    pub fn max_gradient(&self) -> f64 {
        self.max_grad
    }

    /// Default regular-point threshold: `10 eps max|f| / h`.
    pub fn default_g_min(&self) -> f64 {
        let scale = self.min.abs().max(self.max.abs()).max(f64::MIN_POSITIVE);
        10.0 * f64::EPSILON * scale / self.h
    }

    /// Default level tolerance `2 (max|f| - min|f|) h`, with the spread of `|f|`
    /// taken over the mask.
    pub fn default_tol_level(&self) -> f64 {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (k, v) in self.values.iter().enumerate() {
            if self.mask[k] {
                lo = lo.min(v.abs());
                hi = hi.max(v.abs());
            }
        }
        let spread = (hi - lo).max(self.max - self.min);
        2.0 * spread * self.h
    }

    /// Default iso-value tolerance for extracted contours: `2 h max|grad f|`.
    pub fn default_tol_iso(&self) -> f64 {
        2.0 * self.h * self.max_grad
    }

    /// Default rectification tolerance: `3 h (1 + max|grad f|)`.
    pub fn default_tol_rect(&self) -> f64 {
        3.0 * self.h * (1.0 + self.max_grad)
    }

    fn cell_of(&self, p: Vector2) -> (usize, usize, f64, f64) {
        let fx = (p.x - self.origin.x) / self.h;
        let fy = (p.y - self.origin.y) / self.h;
        let i = (fx.floor().max(0.0) as usize).min(self.nx - 2);
        let j = (fy.floor().max(0.0) as usize).min(self.ny - 2);
        (i, j, fx - i as f64, fy - j as f64)
    }

    /// Bilinear reconstruction without the domain check; NaN where the
    /// surrounding cell has no usable corners.
    pub fn eval_unchecked(&self, p: Vector2) -> f64 {
        let (i, j, tx, ty) = self.cell_of(p);
        let k = j * self.nx + i;
        let (v00, v10, v01, v11) = (self.ext[k], self.ext[k + 1], self.ext[k + self.nx], self.ext[k + self.nx + 1]);
        let b = v00 + tx * (v10 - v00);
        let t = v01 + tx * (v11 - v01);
        b + ty * (t - b)
    }

    /// Bilinear interpolation of the four samples around `p`.
    pub fn eval(&self, p: Vector2) -> Result<f64> {
        if !p.is_finite() || !self.shape.contains(p, 0.5 * self.h) {
            return Err(Error::OutsideDomain(p));
        }
        let v = self.eval_unchecked(p);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::OutsideDomain(p))
        }
    }

    pub fn gradient_unchecked(&self, p: Vector2) -> Vector2 {
        let (i, j, tx, ty) = self.cell_of(p);
        let k = j * self.nx + i;
        let g = &self.node_grad;
        let b = g[k].lerp(g[k + 1], tx);
        let t = g[k + self.nx].lerp(g[k + self.nx + 1], tx);
        b.lerp(t, ty)
    }

    /// Finite-difference gradient at the nodes, bilinearly blended at `p`.
    pub fn gradient(&self, p: Vector2) -> Result<Vector2> {
        if !p.is_finite() || !self.shape.contains(p, 0.5 * self.h) {
            return Err(Error::OutsideDomain(p));
        }
        let g = self.gradient_unchecked(p);
        if g.is_finite() {
            Ok(g)
        } else {
            Err(Error::OutsideDomain(p))
        }
    }

    fn compute_node_gradients(&self) -> Vec<Vector2> {
        let (nx, ny, h) = (self.nx, self.ny, self.h);
        let mut out = vec![Vector2::new(f64::NAN, f64::NAN); nx * ny];
        // Central differences between mask nodes, one-sided at the mask edge,
        // falling back to ghost values only where the mask has no neighbour.
        let diff = |k: usize, lo: Option<usize>, hi: Option<usize>| -> f64 {
            let known = |q: Option<usize>, in_mask: bool| {
                q.filter(|&q| self.ext[q].is_finite() && (!in_mask || self.mask[q]))
            };
            for strict in [true, false] {
                match (known(lo, strict), known(hi, strict)) {
                    (Some(a), Some(b)) => return (self.ext[b] - self.ext[a]) / (2.0 * h),
                    (Some(a), None) => return (self.ext[k] - self.ext[a]) / h,
                    (None, Some(b)) => return (self.ext[b] - self.ext[k]) / h,
                    (None, None) => {}
                }
            }
            0.0
        };
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                if !self.ext[k].is_finite() {
                    continue;
                }
                let gx = diff(k, (i > 0).then(|| k - 1), (i + 1 < nx).then(|| k + 1));
                let gy = diff(k, (j > 0).then(|| k - nx), (j + 1 < ny).then(|| k + nx));
                out[k] = Vector2::new(gx, gy);
            }
        }
        out
    }

    /// `m` boundary samples at parameters `i / m`, counter-clockwise from the base point.
    pub fn boundary_samples(&self, m: usize) -> Result<Vec<BoundarySample>> {
        if m < 4 {
            return Err(Error::InvalidArgument(format!("need at least 4 boundary samples, got {m}")));
        }
        (0..m)
            .map(|i| {
                let s = i as f64 / m as f64;
                let p = self.shape.boundary_point(s);
                Ok(BoundarySample { s, p, value: self.eval(p)? })
            })
            .collect()
    }

    /// Field value at boundary parameter `s`.
    pub fn boundary_value(&self, s: f64) -> f64 {
        self.eval_unchecked(self.shape.boundary_point(s))
    }
}

fn check_mask_topology(mask: &[bool], nx: usize, ny: usize) -> Result<()> {
    let total = mask.iter().filter(|&&b| b).count();
    if total == 0 {
        return Err(Error::Grid("mask is empty".into()));
    }
    let start = mask.iter().position(|&b| b).unwrap();
    let mut seen = vec![false; nx * ny];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    let mut count = 0;
    while let Some(k) = queue.pop_front() {
        count += 1;
        let (i, j) = (k % nx, k / nx);
        let nbrs = [
            (i > 0).then(|| k - 1),
            (i + 1 < nx).then(|| k + 1),
            (j > 0).then(|| k - nx),
            (j + 1 < ny).then(|| k + nx),
        ];
        for q in nbrs.into_iter().flatten() {
            if mask[q] && !seen[q] {
                seen[q] = true;
                queue.push_back(q);
            }
        }
    }
    if count != total {
        return Err(Error::DisconnectedMask);
    }
    // Holes: complement components (8-connected) that do not reach the grid border.
    let mut outside = vec![false; nx * ny];
    let mut queue = VecDeque::new();
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            if !mask[k] && (i == 0 || j == 0 || i + 1 == nx || j + 1 == ny) {
                outside[k] = true;
                queue.push_back(k);
            }
        }
    }
    while let Some(k) = queue.pop_front() {
        let (i, j) = ((k % nx) as isize, (k / nx) as isize);
        for dj in -1..=1 {
            for di in -1..=1 {
                let (a, b) = (i + di, j + dj);
                if a < 0 || b < 0 || a >= nx as isize || b >= ny as isize {
                    continue;
                }
                let q = b as usize * nx + a as usize;
                if !mask[q] && !outside[q] {
                    outside[q] = true;
                    queue.push_back(q);
                }
            }
        }
    }
    if (0..nx * ny).any(|k| !mask[k] && !outside[k]) {
        return Err(Error::MaskWithHoles);
    }
    Ok(())
}

fn fill_ghosts(values: &[f64], mask: &[bool], nx: usize, ny: usize) -> Vec<f64> {
    let mut ext: Vec<f64> = values
        .iter()
        .zip(mask)
        .map(|(&v, &m)| if m { v } else { f64::NAN })
        .collect();
    let dirs: [(isize, isize); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];
    for _ in 0..GHOST_LAYERS {
        let prev = ext.clone();
        let at = |i: isize, j: isize| -> f64 {
            if i < 0 || j < 0 || i >= nx as isize || j >= ny as isize {
                f64::NAN
            } else {
                prev[j as usize * nx + i as usize]
            }
        };
        for j in 0..ny as isize {
            for i in 0..nx as isize {
                if prev[j as usize * nx + i as usize].is_finite() {
                    continue;
                }
                let (mut sum, mut n) = (0.0, 0usize);
                // axis stencils first: diagonal ones cross more curvature
                for group in [&dirs[..4], &dirs[4..]] {
                    for &(di, dj) in group {
                        let a = at(i + di, j + dj);
                        let b = at(i + 2 * di, j + 2 * dj);
                        if a.is_finite() && b.is_finite() {
                            sum += 2.0 * a - b;
                            n += 1;
                        }
                    }
                    if n > 0 {
                        break;
                    }
                }
                if n == 0 {
                    for &(di, dj) in &dirs {
                        let a = at(i + di, j + dj);
                        if a.is_finite() {
                            sum += a;
                            n += 1;
                        }
                    }
                }
                if n > 0 {
                    ext[j as usize * nx + i as usize] = sum / n as f64;
                }
            }
        }
    }
    ext
}

/// JSON field manifest: shape, grid size and paths to the CSV tables.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FieldManifest {
    pub shape: DomainShape,
    pub nx: usize,
    pub ny: usize,
    pub values: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<PathBuf>,
}

fn read_csv_table(path: &Path, nx: usize, ny: usize) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut out = Vec::with_capacity(nx * ny);
    let mut rows = 0;
    for (r, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        rows += 1;
        let before = out.len();
        for tok in line.split(',') {
            let tok = tok.trim();
            let v = match tok {
                "NaN" | "nan" | "NAN" => f64::NAN,
                _ => tok.parse::<f64>().map_err(|_| {
                    Error::Manifest(format!("{}: row {r}: bad number {tok:?}", path.display()))
                })?,
            };
            out.push(v);
        }
        if out.len() - before != nx {
            return Err(Error::Manifest(format!(
                "{}: row {r} has {} columns, expected {nx}",
                path.display(),
                out.len() - before
            )));
        }
    }
    if rows != ny {
        return Err(Error::Manifest(format!(
            "{}: {rows} rows, expected {ny}",
            path.display()
        )));
    }
    Ok(out)
}

/// Reads a field manifest and the tables it references. Relative table
/// paths are resolved against the manifest's directory.
pub fn load_field(manifest_path: impl AsRef<Path>) -> Result<ScalarField> {
    let manifest_path = manifest_path.as_ref();
    let text = std::fs::read_to_string(manifest_path).map_err(|source| Error::Io {
        path: manifest_path.display().to_string(),
        source,
    })?;
    let manifest: FieldManifest =
        serde_json::from_str(&text).map_err(|e| Error::Manifest(e.to_string()))?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    let values = read_csv_table(&resolve(&manifest.values), manifest.nx, manifest.ny)?;
    let mask = match &manifest.mask {
        Some(p) => Some(
            read_csv_table(&resolve(p), manifest.nx, manifest.ny)?
                .into_iter()
                .map(|v| v != 0.0 && !v.is_nan())
                .collect(),
        ),
        None => None,
    };
    ScalarField::new(manifest.shape, manifest.nx, manifest.ny, values, mask)
}

/// Writes `field` as `<stem>.json` plus `<stem>.csv` in `dir`.
pub fn save_field(field: &ScalarField, dir: impl AsRef<Path>, stem: &str) -> Result<PathBuf> {
    let dir = dir.as_ref();
    let csv_name = format!("{stem}.csv");
    let mut csv = String::new();
    for j in 0..field.ny {
        let row: Vec<String> = (0..field.nx)
            .map(|i| {
                let k = j * field.nx + i;
                if field.mask[k] {
                    format!("{:.17e}", field.values[k])
                } else {
                    "NaN".to_string()
                }
            })
            .collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    let io = |path: &Path, source| Error::Io { path: path.display().to_string(), source };
    let csv_path = dir.join(&csv_name);
    std::fs::write(&csv_path, csv).map_err(|e| io(&csv_path, e))?;
    let manifest = FieldManifest {
        shape: field.shape,
        nx: field.nx,
        ny: field.ny,
        values: PathBuf::from(csv_name),
        mask: None,
    };
    let path = dir.join(format!("{stem}.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(n: usize, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        ScalarField::from_fn(DomainShape::Square, n, n, f).unwrap()
    }

    #[test]
    fn constant_square_has_all_nodes_masked() {
        let f = ScalarField::new(DomainShape::Square, 3, 3, vec![1.0; 9], None).unwrap();
        assert_eq!(f.mask().iter().filter(|&&m| m).count(), 9);
    }

    #[test]
    fn disk_mask_is_unit_disk() {
        let f = ScalarField::from_fn(DomainShape::Disk, 129, 129, |_, y| y).unwrap();
        for j in 0..129 {
            for i in 0..129 {
                let p = f.node_position(i, j);
                assert_eq!(f.in_mask(i, j), p.norm_sq() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn nan_inside_mask_is_rejected() {
        let mut v = vec![0.0; 9];
        v[4] = f64::NAN;
        let err = ScalarField::new(DomainShape::Square, 3, 3, v, None).unwrap_err();
        assert!(err.to_string().contains("non-finite sample"));
    }

    #[test]
    fn disconnected_and_holed_masks_are_rejected() {
        let mut mask = vec![true; 25];
        for j in 0..5 {
            mask[j * 5 + 2] = false;
        }
        let e = ScalarField::new(DomainShape::Square, 5, 5, vec![0.0; 25], Some(mask)).unwrap_err();
        assert!(matches!(e, Error::DisconnectedMask));
        let mut mask = vec![true; 25];
        mask[12] = false;
        let e = ScalarField::new(DomainShape::Square, 5, 5, vec![0.0; 25], Some(mask)).unwrap_err();
        assert!(matches!(e, Error::MaskWithHoles));
    }

    #[test]
    fn eval_reproduces_linear_and_bilinear_fields() {
        let f = square(9, |_, y| y);
        assert!((f.eval(Vector2::new(0.5, 0.25)).unwrap() - 0.25).abs() < 1e-15);
        let g = square(9, |x, y| x * y);
        assert!((g.eval(Vector2::new(0.5, 0.5)).unwrap() - 0.25).abs() < 1e-15);
        assert!((g.eval(Vector2::new(0.3, 0.7)).unwrap() - 0.21).abs() < 1e-15);
        for j in 0..9 {
            for i in 0..9 {
                let p = g.node_position(i, j);
                assert_eq!(g.eval(p).unwrap(), g.values()[j * 9 + i]);
            }
        }
        assert!(matches!(f.eval(Vector2::new(1.5, 0.5)), Err(Error::OutsideDomain(_))));
    }

    #[test]
    fn gradients_of_reference_fields() {
        let n = 129;
        let h = 1.0 / 128.0;
        let f = square(n, |_, y| y);
        for p in [Vector2::new(0.5, 0.5), Vector2::new(0.01, 0.99), Vector2::new(0.0, 0.0)] {
            let g = f.gradient(p).unwrap();
            assert!(g.x.abs() < 1e-12 && (g.y - 1.0).abs() < 1e-12);
        }
        let g = square(n, |_, y| y * y).gradient(Vector2::new(0.5, 0.5)).unwrap();
        assert!(g.x.abs() < 1e-12 && (g.y - 1.0).abs() < h * h);
        let g = square(n, |x, y| x * y).gradient(Vector2::new(0.25, 0.75)).unwrap();
        assert!((g.x - 0.75).abs() < h * h && (g.y - 0.25).abs() < h * h);
    }

    #[test]
    fn disk_boundary_samples_of_height() {
        let f = ScalarField::from_fn(DomainShape::Disk, 129, 129, |_, y| y).unwrap();
        let s = f.boundary_samples(8).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let expected = [-1.0, -r, 0.0, r, 1.0, r, 0.0, -r];
        for (b, e) in s.iter().zip(expected) {
            assert!((b.value - e).abs() < 1e-12, "{b:?} vs {e}");
        }
    }

    #[test]
    fn square_boundary_samples_coarsest() {
        let f = square(5, |_, y| y);
        let s = f.boundary_samples(4).unwrap();
        let pts: Vec<_> = s.iter().map(|b| b.p).collect();
        assert_eq!(
            pts,
            vec![
                Vector2::new(1.0, 0.0),
                Vector2::new(1.0, 1.0),
                Vector2::new(0.0, 1.0),
                Vector2::new(0.0, 0.0)
            ]
        );
        assert!(f.boundary_samples(3).is_err());
    }

    #[test]
    fn half_disk_samples_increase() {
        let f = ScalarField::from_fn(DomainShape::HalfDisk, 129, 65, |_, y| y).unwrap();
        let s = f.boundary_samples(6).unwrap();
        assert!(s.windows(2).all(|w| w[1].s > w[0].s));
        let on_dia = s.iter().filter(|b| b.p.y.abs() < 1e-12 && b.p.x.abs() < 1.0).count();
        let on_arc = s.iter().filter(|b| (b.p.norm() - 1.0).abs() < 1e-12).count();
        assert!(on_dia >= 1 && on_arc >= 1);
    }

    #[test]
    fn ghost_values_extend_linear_fields_exactly() {
        let f = ScalarField::from_fn(DomainShape::Disk, 65, 65, |x, y| 2.0 * x - y + 0.5).unwrap();
        for j in 0..65 {
            for i in 0..65 {
                let v = f.node_value(i, j);
                if v.is_finite() {
                    let p = f.node_position(i, j);
                    assert!((v - (2.0 * p.x - p.y + 0.5)).abs() < 1e-12);
                }
            }
        }
        // every boundary point is evaluable
        for k in 0..1000 {
            let p = DomainShape::Disk.boundary_point(k as f64 / 1000.0);
            assert!(f.eval(p).is_ok());
        }
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let f = ScalarField::from_fn(DomainShape::Disk, 33, 33, |_, y| y).unwrap();
        let path = save_field(&f, dir.path(), "disk").unwrap();
        let g = load_field(&path).unwrap();
        assert_eq!(g.mask(), f.mask());
        assert_eq!(g.shape(), DomainShape::Disk);
        let p = Vector2::new(0.1, 0.3);
        assert_eq!(g.eval(p).unwrap(), f.eval(p).unwrap());
    }
}
