//! Extending a level-preserving boundary homeomorphism to a conjugacy
//! `g(phi(p)) = f(p)` by composing rectifications.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::DomainShape;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{self, Vector2};
use crate::rectify::{rectify_auto, DiscreteHomeomorphism, RectifyParams};

/// A boundary homeomorphism sampled as pairs `(s_source, s_target)` of
/// boundary parameters. Targets are monotone modulo 1 in the source order,
/// increasing for an orientation-preserving map and decreasing otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct BoundaryMap {
    source: Vec<f64>,
    /// Targets unwrapped so that they are strictly monotone.
    target: Vec<f64>,
    reversing: bool,
}

impl TryFrom<Vec<[f64; 2]>> for BoundaryMap {
    type Error = Error;
    fn try_from(pairs: Vec<[f64; 2]>) -> Result<Self> {
        Self::new(pairs.into_iter().map(|[a, b]| (a, b)).collect())
    }
}

impl From<BoundaryMap> for Vec<[f64; 2]> {
    fn from(m: BoundaryMap) -> Self {
        m.pairs().into_iter().map(|(a, b)| [a, b]).collect()
    }
}

impl BoundaryMap {
    pub fn new(mut pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.len() < 3 {
            return Err(Error::BoundaryMap("need at least 3 pairs".into()));
        }
        if pairs.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
            return Err(Error::BoundaryMap("non-finite parameter".into()));
        }
        for p in &mut pairs {
            p.0 = p.0.rem_euclid(1.0);
            p.1 = p.1.rem_euclid(1.0);
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pairs.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::BoundaryMap("repeated source parameter".into()));
        }
        let n = pairs.len();
        let source: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        // cyclic steps of the target, taken forward and backward
        let fwd: Vec<f64> = (0..n).map(|i| (pairs[(i + 1) % n].1 - pairs[i].1).rem_euclid(1.0)).collect();
        let total: f64 = fwd.iter().sum();
        let reversing = if fwd.iter().all(|&d| d > 0.0) && (total - 1.0).abs() < 1e-9 {
            false
        } else {
            let bwd_ok = fwd.iter().all(|&d| d > 0.0 && d < 1.0);
            let bwd_total: f64 = fwd.iter().map(|d| 1.0 - d).sum();
            if bwd_ok && (bwd_total - 1.0).abs() < 1e-9 {
                true
            } else {
                return Err(Error::BoundaryMap("targets are not monotone modulo 1".into()));
            }
        };
        let mut target = vec![pairs[0].1];
        for i in 1..n {
            let step = if reversing { fwd[i - 1] - 1.0 } else { fwd[i - 1] };
            target.push(target[i - 1] + step);
        }
        Ok(Self { source, target, reversing })
    }

    /// Samples `s -> map(s)` at `n` equally spaced source parameters.
    pub fn from_fn(n: usize, map: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new((0..n).map(|i| i as f64 / n as f64).map(|s| (s, map(s))).collect())
    }

    /// Samples a point map of the boundary through the two parameterizations.
    pub fn from_point_map(source: DomainShape, target: DomainShape, n: usize, map: impl Fn(Vector2) -> Vector2) -> Result<Self> {
        Self::from_fn(n, |s| target.boundary_param(map(source.boundary_point(s))))
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_fn(n, |s| s)
    }

    pub fn is_reversing(&self) -> bool {
        self.reversing
    }

    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }

    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.source.iter().zip(&self.target).map(|(&a, &b)| (a, b.rem_euclid(1.0))).collect()
    }

    /// Piecewise-linear (modulo 1) interpolation of the sampled map.
    pub fn eval(&self, s: f64) -> f64 {
        let s = s.rem_euclid(1.0);
        let n = self.source.len();
        let k = self.source.partition_point(|&x| x <= s);
        // segment from sample i to sample i + 1, wrapping past the last one
        let (s0, s1, t0, t1) = if k == 0 {
            (self.source[n - 1] - 1.0, self.source[0], self.target[n - 1] - self.period(), self.target[0])
        } else if k == n {
            (self.source[n - 1], self.source[0] + 1.0, self.target[n - 1], self.target[0] + self.period())
        } else {
            (self.source[k - 1], self.source[k], self.target[k - 1], self.target[k])
        };
        let w = (s - s0) / (s1 - s0);
        (t0 + w * (t1 - t0)).rem_euclid(1.0)
    }

    fn period(&self) -> f64 {
        if self.reversing {
            -1.0
        } else {
            1.0
        }
    }

    pub fn inverse(&self) -> Result<Self> {
        Self::new(self.pairs().into_iter().map(|(a, b)| (b, a)).collect())
    }

    /// Largest `|g(b_target) - f(b_source)|` over the sample pairs.
    pub fn level_defect(&self, f: &ScalarField, g: &ScalarField) -> f64 {
        self.pairs()
            .iter()
            .map(|&(s, t)| (g.boundary_value(t) - f.boundary_value(s)).abs())
            .fold(0.0, f64::max)
    }
}

/// Tolerances and resolution of a conjugacy run.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ConjugacyParams {
    pub rectify: RectifyParams,
    /// `None` means `3h` with `h` the coarser grid spacing of the two fields.
    pub tol_conj: Option<f64>,
}

impl Default for ConjugacyParams {
    fn default() -> Self {
        Self { rectify: RectifyParams::default(), tol_conj: None }
    }
}

pub fn default_tol_conj(f: &ScalarField, g: &ScalarField) -> f64 {
    3.0 * f.h().max(g.h())
}

/// Outcome of checking `g(phi(p)) = f(p)` and `phi|boundary = phi0`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConjugacyReport {
    /// Max `|g(phi(p)) - f(p)|` over the lattice.
    pub residual: f64,
    /// Max distance between `phi(b(s))` and `b(phi0(s))` over the phi0 samples.
    pub boundary_deviation: f64,
    pub orientation_ok: bool,
    pub reversing: bool,
    pub tol: f64,
    pub lattice_spacing: f64,
    pub passed: bool,
    pub failures: Vec<String>,
}

/// The conjugacy and its verification.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Conjugacy {
    pub phi: DiscreteHomeomorphism,
    pub report: ConjugacyReport,
}

/// Signed areas of the mapped lattice cells all have the sign of the map's orientation.
fn orientation_consistent(phi: &DiscreteHomeomorphism, reversing: bool) -> bool {
    let mut ok = true;
    for j in 0..phi.m - 1 {
        for i in 0..phi.k - 1 {
            let q = [phi.grid[j][i], phi.grid[j][i + 1], phi.grid[j + 1][i + 1], phi.grid[j + 1][i]];
            let a = geometry::signed_area(&q);
            ok &= if reversing { a < 0.0 } else { a > 0.0 };
        }
    }
    ok
}

/// Checks a candidate conjugacy. Never fails; problems are listed in the report.
pub fn verify_conjugacy(f: &ScalarField, g: &ScalarField, phi: &DiscreteHomeomorphism, phi0: &BoundaryMap, tol: f64) -> ConjugacyReport {
    let mut failures = Vec::new();
    let mut residual = 0.0f64;
    for j in 0..phi.m {
        for i in 0..phi.k {
            let p = phi.lattice_point(i, j);
            let d = (g.eval_unchecked(phi.grid[j][i]) - f.eval_unchecked(p)).abs();
            residual = if d.is_finite() { residual.max(d) } else { f64::INFINITY };
        }
    }
    let spacing = phi.lattice_spacing();
    let (src, tgt) = (phi.target_shape, phi.source_shape);
    let mut boundary_deviation = 0.0f64;
    for (s, t) in phi0.pairs() {
        let p = src.boundary_point(s);
        let got = phi.apply(p).unwrap_or(Vector2::new(f64::INFINITY, f64::INFINITY));
        boundary_deviation = boundary_deviation.max(got.dist(tgt.boundary_point(t)));
    }
    let reversing = phi0.is_reversing();
    let orientation_ok = orientation_consistent(phi, reversing);
    if !(residual <= tol) {
        failures.push(format!("residual {residual:.3e} exceeds {tol:.3e}"));
    }
    if !(boundary_deviation <= 2.0 * spacing) {
        failures.push(format!("boundary deviation {boundary_deviation:.3e} exceeds {:.3e}", 2.0 * spacing));
    }
    if !orientation_ok {
        failures.push("mapped cells change orientation".into());
    }
    if reversing {
        failures.push("note: phi0 reverses orientation".into());
    }
    let passed = residual <= tol && boundary_deviation <= 2.0 * spacing && orientation_ok;
    ConjugacyReport { residual, boundary_deviation, orientation_ok, reversing, tol, lattice_spacing: spacing, passed, failures }
}

/// Boundary row `t` of the model (0 or 1) pushed through `phi0`: for each
/// lattice column of `h_f`'s row, the chart abscissa of its image in `h_g`.
fn row_map(
    hf: &DiscreteHomeomorphism,
    g_shape: DomainShape,
    loc_g: &crate::rectify::MeshLocator<'_>,
    phi0: &BoundaryMap,
    row: usize,
) -> Result<Vec<f64>> {
    let f_shape = hf.source_shape;
    let u: Vec<f64> = hf.grid[row]
        .iter()
        .map(|&p| {
            let q = g_shape.boundary_point(phi0.eval(f_shape.boundary_param(p)));
            loc_g.locate(q).map(|(tau, _)| tau)
        })
        .collect::<Result<_>>()?;
    let slack = 1e-6;
    let increasing = u.windows(2).all(|w| w[1] >= w[0] - slack);
    let decreasing = u.windows(2).all(|w| w[1] <= w[0] + slack);
    if !(increasing || decreasing) {
        return Err(Error::BoundaryMap("phi0 does not map extremal arcs monotonically onto extremal arcs".into()));
    }
    Ok(u)
}

fn interp(u: &[f64], tau: f64) -> f64 {
    let x = tau.clamp(0.0, 1.0) * (u.len() - 1) as f64;
    let i = (x.floor() as usize).min(u.len() - 2);
    u[i] + (x - i as f64) * (u[i + 1] - u[i])
}

/// `phi = H_g o Psi o H_f^{-1}` where `Psi(tau, t) = ((1 - t) u0(tau) + t u1(tau), t)`
/// in model chart coordinates; `u0, u1` come from `phi0` on the two extremal
/// rows, or are the identity (flip when reversing) on a row collapsed to a point.
pub fn conjugate(f: &ScalarField, g: &ScalarField, phi0: &BoundaryMap, params: &ConjugacyParams) -> Result<Conjugacy> {
    if f.shape() != g.shape() {
        return Err(Error::ModelMismatch("f and g live on different domain shapes".into()));
    }
    let tol = params.tol_conj.unwrap_or_else(|| default_tol_conj(f, g));
    let defect = phi0.level_defect(f, g);
    if defect > tol {
        return Err(Error::BoundaryMap(format!("g(phi0(p)) differs from f(p) by {defect:.3e} on the boundary")));
    }
    let hf = rectify_auto(f, &params.rectify)?;
    let hg = rectify_auto(g, &params.rectify)?;
    if hf.target_shape != hg.target_shape {
        return Err(Error::ModelMismatch(format!("models differ: {:?} vs {:?}", hf.target_shape, hg.target_shape)));
    }
    let ab_tol = 2.0 * f.default_tol_level().max(g.default_tol_level());
    let dab = (hf.a - hg.a).abs() + (hf.b - hg.b).abs();
    if dab > ab_tol {
        return Err(Error::ModelMismatch(format!("(a, b) differ by {dab:.3e}")));
    }
    let loc_f = hf.locator();
    let loc_g = hg.locator();
    let k = hf.k;
    let collapsed = |h: &DiscreteHomeomorphism, row: usize| {
        let r = &h.grid[row];
        r.iter().all(|p| p.dist(r[0]) <= 1e-12)
    };
    let fixed: Vec<f64> = (0..k)
        .map(|i| {
            let tau = i as f64 / (k - 1) as f64;
            if phi0.is_reversing() {
                1.0 - tau
            } else {
                tau
            }
        })
        .collect();
    let u0 = if collapsed(&hf, 0) { fixed.clone() } else { row_map(&hf, g.shape(), &loc_g, phi0, 0)? };
    let u1 = if collapsed(&hf, hf.m - 1) { fixed } else { row_map(&hf, g.shape(), &loc_g, phi0, hf.m - 1)? };

    let shape = f.shape();
    let (kk, mm) = (params.rectify.samples, params.rectify.levels);
    let rows = (0..mm)
        .into_par_iter()
        .map(|j| {
            (0..kk)
                .map(|i| {
                    let p = shape.from_chart(i as f64 / (kk - 1) as f64, j as f64 / (mm - 1) as f64);
                    let (tau, t) = loc_f.locate(p)?;
                    let x = (1.0 - t) * interp(&u0, tau) + t * interp(&u1, tau);
                    Ok(hg.apply_chart(x, t))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut phi = DiscreteHomeomorphism::from_grid(g.shape(), shape, rows)?;
    phi.a = 1.0;
    phi.b = 0.0;
    phi.orientation_ok = orientation_consistent(&phi, phi0.is_reversing());
    let report = verify_conjugacy(f, g, &phi, phi0, tol);
    phi.residual = report.residual;
    Ok(Conjugacy { phi, report })
}

/// Largest `|psi(phi(p)) - p|` over the lattice of `phi`.
pub fn round_trip_error(phi: &DiscreteHomeomorphism, psi: &DiscreteHomeomorphism) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..phi.m {
        for i in 0..phi.k {
            let q = phi.grid[j][i];
            let p = phi.lattice_point(i, j);
            let back = match psi.apply(q) {
                Ok(b) => b,
                Err(_) => {
                    // images on the rim may sit a rounding error outside the shape
                    let (tau, t) = psi.target_shape.to_chart(q);
                    psi.apply_chart(tau, t)
                }
            };
            worst = worst.max(back.dist(p));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_map_interpolation() {
        let id = BoundaryMap::identity(16).unwrap();
        for s in [0.0, 0.01, 0.5, 0.97] {
            assert!((id.eval(s) - s).abs() < 1e-12);
        }
        let shift = BoundaryMap::from_fn(10, |s| (s + 0.35).rem_euclid(1.0)).unwrap();
        assert!(!shift.is_reversing());
        assert!((shift.eval(0.95) - 0.30).abs() < 1e-12);
        let rev = BoundaryMap::from_fn(10, |s| (0.5 - s).rem_euclid(1.0)).unwrap();
        assert!(rev.is_reversing());
        assert!((rev.eval(0.55) - 0.95).abs() < 1e-12);
        let inv = rev.inverse().unwrap();
        assert!((inv.eval(rev.eval(0.123)) - 0.123).abs() < 1e-12);
        assert!(BoundaryMap::new(vec![(0.0, 0.0), (0.3, 0.6), (0.6, 0.3)]).unwrap().is_reversing());
        assert!(BoundaryMap::new(vec![(0.0, 0.0), (0.25, 0.5), (0.5, 0.25), (0.75, 0.75)]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = BoundaryMap::new(vec![(0.0, 0.5), (0.25, 0.75), (0.5, 0.0), (0.75, 0.25)]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        let back: BoundaryMap = serde_json::from_str(&s).unwrap();
        assert_eq!(m.pairs(), back.pairs());
    }

    fn params(n: usize) -> ConjugacyParams {
        ConjugacyParams { rectify: RectifyParams { levels: n, samples: n, ..Default::default() }, tol_conj: None }
    }

    #[test]
    fn identity_and_flip() {
        let f = ScalarField::from_fn(DomainShape::Square, 65, 65, |_, y| y).unwrap();
        let id = BoundaryMap::identity(256).unwrap();
        let c = conjugate(&f, &f, &id, &params(17)).unwrap();
        assert!(c.report.passed, "{:?}", c.report);
        for j in 0..17 {
            for i in 0..17 {
                assert!(c.phi.grid[j][i].dist(c.phi.lattice_point(i, j)) < 2.0 * f.h());
            }
        }
        let flip = BoundaryMap::from_point_map(DomainShape::Square, DomainShape::Square, 256, |p| Vector2::new(1.0 - p.x, p.y)).unwrap();
        assert!(flip.is_reversing());
        let c = conjugate(&f, &f, &flip, &params(17)).unwrap();
        assert!(c.report.passed, "{:?}", c.report);
        for j in 0..17 {
            for i in 0..17 {
                let p = c.phi.lattice_point(i, j);
                assert!(c.phi.grid[j][i].dist(Vector2::new(1.0 - p.x, p.y)) < 2.0 * f.h());
            }
        }
    }

    #[test]
    fn verification_flags_defects() {
        let f = ScalarField::from_fn(DomainShape::Square, 65, 65, |_, y| y * y).unwrap();
        let g = ScalarField::from_fn(DomainShape::Square, 65, 65, |_, y| y).unwrap();
        let id = DiscreteHomeomorphism::identity(DomainShape::Square, 33, 33).unwrap();
        let phi0 = BoundaryMap::identity(64).unwrap();
        let r = verify_conjugacy(&f, &g, &id, &phi0, 3.0 * f.h());
        assert!((r.residual - 0.25).abs() < 1e-3 && !r.passed);
        let mut bad = id.clone();
        bad.grid[5][5] = Vector2::new(0.5, 0.5);
        let r = verify_conjugacy(&g, &g, &bad, &phi0, 3.0 * f.h());
        assert!(!r.orientation_ok);
    }
}
