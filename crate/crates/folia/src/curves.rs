//! Polylines, mu-length and mu-parameterization, and the discrete Fréchet
//! distance.
//!
//! For a curve `λ` and `n >= 1`, `mu_n(λ)` is the largest `d` such that
//! `n + 1` points can be placed along `λ` in order with every consecutive
//! pair at distance at least `d`. The mu-length is `Σ mu_n / 2^n`. Unlike
//! arclength it is finite for every continuous curve and it does not depend
//! on the parameterization, which makes the cumulative mu-length a canonical
//! parameter for a class of curves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, Vector2};

/// Bisection steps used when solving for `mu_n`.
const MU_BISECTION_STEPS: usize = 40;

/// Relative truncation tolerance used by [`mu_parameterize`].
pub const DEFAULT_MU_REL_EPS: f64 = 1e-4;

/// An ordered chain of at least two vertices with distinct neighbours.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vector2>", into = "Vec<Vector2>")]
pub struct Polyline {
    vertices: Vec<Vector2>,
}

impl TryFrom<Vec<Vector2>> for Polyline {
    type Error = Error;
    fn try_from(v: Vec<Vector2>) -> Result<Self> {
        Polyline::new(v)
    }
}

impl From<Polyline> for Vec<Vector2> {
    fn from(p: Polyline) -> Self {
        p.vertices
    }
}

impl Polyline {
    pub fn new(vertices: Vec<Vector2>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::DegenerateCurve(format!(
                "a polyline needs at least two vertices, got {}",
                vertices.len()
            )));
        }
        if let Some(bad) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(Error::DegenerateCurve(format!("vertex {bad} is not finite")));
        }
        if let Some(i) = vertices.windows(2).position(|w| w[0] == w[1]) {
            return Err(Error::DegenerateCurve(format!("vertices {i} and {} coincide", i + 1)));
        }
        Ok(Self { vertices })
    }

    /// Drops consecutive vertices closer than `tol` (keeping both endpoints).
    pub fn from_points_dedup(points: &[Vector2], tol: f64) -> Result<Self> {
        let mut out: Vec<Vector2> = Vec::with_capacity(points.len());
        for &p in points {
            match out.last() {
                Some(&q) if q.dist(p) <= tol => {}
                _ => out.push(p),
            }
        }
        if out.len() >= 2 {
            if let Some(&last) = points.last() {
                let n = out.len();
                if out[n - 1] != last && out[n - 2].dist(last) > tol {
                    out[n - 1] = last;
                }
            }
        }
        Self::new(out)
    }

    pub fn vertices(&self) -> &[Vector2] {
        &self.vertices
    }
    pub fn len(&self) -> usize {
        self.vertices.len()
    }
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
    pub fn start(&self) -> Vector2 {
        self.vertices[0]
    }
    pub fn end(&self) -> Vector2 {
        *self.vertices.last().unwrap()
    }

    pub fn length(&self) -> f64 {
        self.vertices.windows(2).map(|w| w[0].dist(w[1])).sum()
    }

    pub fn diameter(&self) -> f64 {
        geometry::diameter(&self.vertices)
    }

    pub fn reversed(&self) -> Self {
        let mut v = self.vertices.clone();
        v.reverse();
        Self { vertices: v }
    }

    /// Subdivides every segment uniformly so that no piece exceeds `spacing`.
    pub fn refine(&self, spacing: f64) -> Self {
        Self { vertices: refine_points(&self.vertices, spacing) }
    }

    /// `true` when no two non-adjacent segments come within `tol` of each other.
    pub fn is_simple(&self, tol: f64) -> bool {
        let v = &self.vertices;
        let n = v.len();
        for i in 0..n - 1 {
            for j in i + 2..n - 1 {
                if i == 0 && j == n - 2 && v[0] == v[n - 1] {
                    continue;
                }
                if geometry::segment_segment_distance(v[i], v[i + 1], v[j], v[j + 1]) <= tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn point_at_arclength(&self, s: f64) -> Vector2 {
        let mut acc = 0.0;
        for w in self.vertices.windows(2) {
            let l = w[0].dist(w[1]);
            if acc + l >= s {
                return w[0].lerp(w[1], ((s - acc) / l).clamp(0.0, 1.0));
            }
            acc += l;
        }
        self.end()
    }
}

/// Subdivides every segment of a vertex chain into equal pieces no longer than `spacing`.
pub fn refine_points(points: &[Vector2], spacing: f64) -> Vec<Vector2> {
    if points.len() < 2 || !(spacing > 0.0) {
        return points.to_vec();
    }
    let mut out = Vec::with_capacity(points.len());
    out.push(points[0]);
    for w in points.windows(2) {
        let pieces = (w[0].dist(w[1]) / spacing).ceil().max(1.0) as usize;
        for k in 1..=pieces {
            out.push(w[0].lerp(w[1], k as f64 / pieces as f64));
        }
    }
    out
}

/// Greedy sweep: places points along the chain, each at the first position
/// whose distance from the previous one reaches `d`. Returns whether `need`
/// points fit.
fn greedy_fits(v: &[Vector2], d: f64, need: usize) -> bool {
    if need <= 1 {
        return true;
    }
    let mut q = v[0];
    let mut placed = 1;
    let mut seg = 0;
    let mut t = 0.0f64;
    let d2 = d * d;
    while seg + 1 < v.len() {
        let a = v[seg];
        let e = v[seg + 1] - a;
        let aq = a - q;
        let qa = e.norm_sq();
        let qb = 2.0 * aq.dot(e);
        let qc = aq.norm_sq() - d2;
        let g = |t: f64| (qa * t + qb) * t + qc;
        let hit = if g(t) >= 0.0 {
            Some(t)
        } else if qa > 0.0 {
            let disc = (qb * qb - 4.0 * qa * qc).max(0.0);
            // larger root of the convex quadratic
            let r = if qb <= 0.0 {
                (-qb + disc.sqrt()) / (2.0 * qa)
            } else {
                (2.0 * qc) / (-qb - disc.sqrt())
            };
            (r >= t && r <= 1.0).then_some(r.max(t))
        } else {
            None
        };
        match hit {
            Some(th) => {
                q = a + e * th;
                placed += 1;
                if placed >= need {
                    return true;
                }
                t = th;
            }
            None => {
                seg += 1;
                t = 0.0;
            }
        }
    }
    false
}

fn chain_fits(forward: &[Vector2], backward: &[Vector2], d: f64, need: usize) -> bool {
    greedy_fits(forward, d, need) || greedy_fits(backward, d, need)
}

/// `mu_n` of a vertex chain by bisection on `d` in `[lo, hi]`, stopping once
/// the bracket is narrower than `tol` or after the step limit.
fn mu_n_points(forward: &[Vector2], backward: &[Vector2], n: usize, lo: f64, hi: f64, tol: f64) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..MU_BISECTION_STEPS {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo {
            break;
        }
        if chain_fits(forward, backward, mid, n + 1) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Bisection tolerance for term `n` so that the weighted errors of all
/// `terms` terms add up to at most `eps`.
fn term_tol(eps: f64, n: usize, terms: usize) -> f64 {
    eps * 2f64.powi(n as i32) / terms as f64
}

/// `mu_n(λ)`: the largest minimum consecutive distance over ordered chains of
/// `n + 1` points on the curve. `mu_1` is the diameter; for `n >= 2` the value
/// is the best of a forward and a backward greedy placement.
pub fn mu_n(curve: &Polyline, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("mu_n needs n >= 1".into()));
    }
    let diam = curve.diameter();
    if n == 1 {
        return Ok(diam);
    }
    let fwd = curve.vertices();
    let bwd: Vec<Vector2> = fwd.iter().rev().copied().collect();
    Ok(mu_n_points(fwd, &bwd, n, 0.0, diam, 0.0))
}

/// Number of series terms so that the tail `diam * 2^-N` is at most `eps`.
pub fn series_terms(diam: f64, eps: f64) -> usize {
    if diam <= 0.0 || diam <= eps {
        return 1;
    }
    ((diam / eps).log2().ceil() as usize).max(1)
}

fn truncated_mu(forward: &[Vector2], terms: usize, eps: f64) -> f64 {
    let diam = geometry::diameter(forward);
    if diam == 0.0 {
        return 0.0;
    }
    let backward: Vec<Vector2> = forward.iter().rev().copied().collect();
    let mut sum = diam / 2.0;
    let mut w = 0.5;
    for n in 2..=terms {
        w *= 0.5;
        sum += w * mu_n_points(forward, &backward, n, 0.0, diam, term_tol(eps, n, terms));
    }
    sum
}

/// mu-length `Σ_{n <= N} mu_n / 2^n`, truncated where the tail bound drops below `eps`.
pub fn mu_length(curve: &Polyline, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument("mu_length needs eps > 0".into()));
    }
    let terms = series_terms(curve.diameter(), eps);
    Ok(truncated_mu(curve.vertices(), terms, eps))
}

/// A curve together with the mu-length of each of its vertex prefixes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MuParamCurve {
    pub base: Polyline,
    pub mu_cumulative: Vec<f64>,
    pub mu_total: f64,
}

/// mu-parameterization with truncation `eps = DEFAULT_MU_REL_EPS * diam`.
pub fn mu_parameterize(curve: &Polyline) -> MuParamCurve {
    let eps = DEFAULT_MU_REL_EPS * curve.diameter().max(f64::MIN_POSITIVE);
    mu_parameterize_with(curve, eps)
}

/// mu-parameterization with an explicit truncation tolerance. All prefixes
/// share the series length of the full curve. Each `mu_n` starts from the
/// previous prefix's value, since every chain on a prefix is also a chain on
/// the longer prefix, and appending a segment of length `l` raises `mu_n` by
/// at most `l`, which gives a narrow first bracket.
pub fn mu_parameterize_with(curve: &Polyline, eps: f64) -> MuParamCurve {
    let v = curve.vertices();
    let terms = series_terms(curve.diameter(), eps);
    let mut prev = vec![0.0f64; terms + 1];
    let mut cumulative = Vec::with_capacity(v.len());
    cumulative.push(0.0);
    let mut diam = 0.0f64;
    let mut backward: Vec<Vector2> = Vec::with_capacity(v.len());
    for i in 1..v.len() {
        for q in &v[..i] {
            diam = diam.max(q.dist(v[i]));
        }
        let step = v[i - 1].dist(v[i]);
        let prefix = &v[..=i];
        backward.clear();
        backward.extend(prefix.iter().rev().copied());
        prev[1] = diam;
        let mut sum = diam / 2.0;
        let mut w = 0.5;
        for n in 2..=terms {
            w *= 0.5;
            let lo = prev[n];
            let tol = term_tol(eps, n, terms);
            let cap = (lo + step).min(diam);
            let val = if lo >= diam {
                lo
            } else if cap < diam && chain_fits(prefix, &backward, cap, n + 1) {
                mu_n_points(prefix, &backward, n, cap, diam, tol)
            } else {
                mu_n_points(prefix, &backward, n, lo, cap, tol).max(lo)
            };
            prev[n] = val;
            sum += w * val;
        }
        let last = *cumulative.last().unwrap();
        cumulative.push(sum.max(last));
    }
    let mu_total = *cumulative.last().unwrap();
    MuParamCurve { base: curve.clone(), mu_cumulative: cumulative, mu_total }
}

impl MuParamCurve {
    /// Point at mu-parameter `mu in [0, mu_total]`, by inverse interpolation.
    pub fn point_at(&self, mu: f64) -> Vector2 {
        let v = self.base.vertices();
        let c = &self.mu_cumulative;
        if mu <= 0.0 {
            return v[0];
        }
        if mu >= self.mu_total {
            return *v.last().unwrap();
        }
        let idx = c.partition_point(|&x| x < mu).max(1);
        let (c0, c1) = (c[idx - 1], c[idx]);
        let t = if c1 > c0 { (mu - c0) / (c1 - c0) } else { 1.0 };
        v[idx - 1].lerp(v[idx], t)
    }

    /// Point at fraction `tau in [0, 1]` of the total mu-length.
    pub fn point_at_fraction(&self, tau: f64) -> Vector2 {
        self.point_at(tau * self.mu_total)
    }
}

/// `k` points at equal mu-increments `j mu_total / (k - 1)`.
pub fn resample_by_mu(curve: &MuParamCurve, k: usize) -> Result<Polyline> {
    if k < 2 {
        return Err(Error::InvalidArgument("resample_by_mu needs k >= 2".into()));
    }
    if !(curve.mu_total > 0.0) {
        return Err(Error::DegenerateCurve("mu-length is zero".into()));
    }
    let pts = resample_fractions(curve, k);
    Polyline::from_points_dedup(&pts, 0.0)
}

/// Points at the fractions `j / (k - 1)` of the mu-length, duplicates allowed.
pub fn resample_fractions(curve: &MuParamCurve, k: usize) -> Vec<Vector2> {
    let v = curve.base.vertices();
    (0..k)
        .map(|j| match j {
            0 => v[0],
            _ if j + 1 == k => *v.last().unwrap(),
            _ => curve.point_at_fraction(j as f64 / (k - 1) as f64),
        })
        .collect()
}

/// Discrete Fréchet distance between two vertex sequences (coupling DP).
pub fn discrete_frechet(a: &[Vector2], b: &[Vector2]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    let m = b.len();
    let mut prev = vec![0.0f64; m];
    let mut cur = vec![0.0f64; m];
    for (i, pa) in a.iter().enumerate() {
        for (j, pb) in b.iter().enumerate() {
            let d = pa.dist(*pb);
            cur[j] = match (i, j) {
                (0, 0) => d,
                (0, _) => d.max(cur[j - 1]),
                (_, 0) => d.max(prev[0]),
                _ => d.max(prev[j].min(prev[j - 1]).min(cur[j - 1])),
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m - 1]
}

/// Discrete Fréchet distance over the vertices of two polylines.
pub fn frechet(a: &Polyline, b: &Polyline) -> f64 {
    discrete_frechet(a.vertices(), b.vertices())
}

/// Discrete Fréchet distance after refining both chains to `spacing`.
pub fn frechet_refined(a: &[Vector2], b: &[Vector2], spacing: f64) -> f64 {
    discrete_frechet(&refine_points(a, spacing), &refine_points(b, spacing))
}
