//! Boundary decomposition into monotone and level arcs, the weak-regularity
//! classifier, gradient-flow trajectories and the ELC diagnostic.

use std::collections::{HashSet, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contour;
use crate::curves::{refine_points, Polyline};
use crate::domain::DomainShape;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{point_chain_distance, Vector2};

/// Failure records kept per violated condition; the rest are only counted.
const MAX_FAILURES_PER_CONDITION: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArcKind {
    Monotone,
    Level,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increasing,
    Decreasing,
    Constant,
}

/// Whether a level arc is a boundary minimum or maximum, judged from the
/// monotone arcs on either side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extremum {
    Min,
    Max,
}

/// One boundary arc. `s_begin` lies in `[0, 1)` and `s_end >= s_begin` may run
/// past 1 when the arc wraps through the base point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub kind: ArcKind,
    pub direction: Direction,
    pub s_begin: f64,
    pub s_end: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    pub degenerate: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extremum: Option<Extremum>,
}

impl Arc {
    pub fn span(&self) -> f64 {
        self.s_end - self.s_begin
    }

    /// `true` when `s` lies on the arc, allowing `tol` slack in parameter.
    pub fn contains(&self, s: f64, tol: f64) -> bool {
        let d = (s - self.s_begin).rem_euclid(1.0);
        d <= self.span() + tol || d >= 1.0 - tol
    }

    /// Points along the arc in counter-clockwise order, spaced at most
    /// `spacing` apart, with the shape's corners kept exactly.
    pub fn points(&self, shape: DomainShape, spacing: f64) -> Vec<Vector2> {
        if self.degenerate || self.span() <= 0.0 {
            return vec![shape.boundary_point(self.s_begin)];
        }
        let mut params = vec![self.s_begin, self.s_end];
        for c in shape.corner_params() {
            for shift in [0.0, 1.0] {
                let s = c + shift;
                if s > self.s_begin && s < self.s_end {
                    params.push(s);
                }
            }
        }
        params.sort_by(f64::total_cmp);
        let pts: Vec<Vector2> = params.iter().map(|&s| shape.boundary_point(s)).collect();
        // Corners split the arc into straight or circular pieces; refine each
        // piece along the boundary rather than along the chord.
        let mut out = vec![pts[0]];
        for w in params.windows(2) {
            let len = (w[1] - w[0]) * shape.perimeter();
            let n = (len / spacing).ceil().max(1.0) as usize;
            for k in 1..=n {
                out.push(shape.boundary_point(w[0] + (w[1] - w[0]) * k as f64 / n as f64));
            }
        }
        out.dedup();
        out
    }
}

/// Alternating monotone/level arcs tiling the boundary. `arcs[0]` is the
/// increasing arc with the smallest starting parameter, so that for a weakly
/// regular field the arcs read (increasing, max, decreasing, min).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryDecomposition {
    pub shape: DomainShape,
    /// Starting parameters of the arcs, the points `z_1 .. z_2n`.
    pub points: Vec<f64>,
    pub arcs: Vec<Arc>,
    pub n_f: usize,
    pub failures: Vec<Failure>,
}

impl BoundaryDecomposition {
    /// Index of the arc containing parameter `s`, preferring monotone arcs.
    pub fn arc_at(&self, s: f64, tol: f64) -> Option<usize> {
        let mut hit = None;
        for (k, a) in self.arcs.iter().enumerate() {
            if a.contains(s, tol) {
                if a.kind == ArcKind::Monotone {
                    return Some(k);
                }
                hit.get_or_insert(k);
            }
        }
        hit
    }

    pub fn level_arcs(&self) -> impl Iterator<Item = (usize, &Arc)> {
        self.arcs.iter().enumerate().filter(|(_, a)| a.kind == ArcKind::Level)
    }

    /// The level arc at the boundary minimum and at the maximum, when unique.
    pub fn extremal_arcs(&self) -> (Option<usize>, Option<usize>) {
        let pick = |e: Extremum| {
            let mut it = self.level_arcs().filter(|(_, a)| a.extremum == Some(e));
            match (it.next(), it.next()) {
                (Some((k, _)), None) => Some(k),
                _ => None,
            }
        };
        (pick(Extremum::Min), pick(Extremum::Max))
    }

    pub fn prev(&self, k: usize) -> usize {
        (k + self.arcs.len() - 1) % self.arcs.len()
    }
    pub fn next(&self, k: usize) -> usize {
        (k + 1) % self.arcs.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub condition: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub at: Option<Vector2>,
    pub detail: String,
}

impl Failure {
    fn new(condition: &str, at: Option<Vector2>, detail: impl Into<String>) -> Self {
        Self { condition: condition.into(), at, detail: detail.into() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    WeaklyRegular,
    AlmostWeaklyRegular,
    NotRegular,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::WeaklyRegular => "weakly_regular",
            Status::AlmostWeaklyRegular => "almost_weakly_regular",
            Status::NotRegular => "not_regular",
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegularityVerdict {
    pub status: Status,
    pub n_f: usize,
    pub arcs: Vec<Arc>,
    pub failures: Vec<Failure>,
    /// Failures per condition, including those not listed individually.
    pub failure_counts: Vec<(String, usize)>,
    pub extremum_points: Vec<ExtremumPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremumPoint {
    pub kind: Extremum,
    pub at: Vector2,
    pub level: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Step {
    Up,
    Down,
    Flat,
}

/// `s mod 1` in `[0, 1)`; `rem_euclid` alone rounds tiny negatives up to 1.
fn wrap_unit(s: f64) -> f64 {
    let w = s.rem_euclid(1.0);
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Boundary parameters used for sampling: `i / m` merged with the corners.
fn sample_params(shape: DomainShape, m: usize) -> Vec<f64> {
    let mut s: Vec<f64> = (0..m).map(|i| i as f64 / m as f64).collect();
    s.extend(shape.corner_params());
    s.sort_by(f64::total_cmp);
    s.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    s
}

fn golden_extremum(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, maximize: bool) -> f64 {
    let g = |s: f64| if maximize { -f(s) } else { f(s) };
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (g(x1), g(x2));
    for _ in 0..100 {
        if hi - lo < 1e-15 {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = g(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = g(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    // never return something worse than the bracket ends
    [lo, mid, hi]
        .into_iter()
        .min_by(|a, b| g(*a).total_cmp(&g(*b)))
        .unwrap()
}

/// Largest `s` in `[inside, outside]` (either order) still on the level `c`.
fn bisect_level_end(f: impl Fn(f64) -> f64, c: f64, tol: f64, mut inside: f64, mut outside: f64) -> f64 {
    for _ in 0..60 {
        let mid = 0.5 * (inside + outside);
        if (f(mid) - c).abs() <= tol {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}

struct Run {
    step: Step,
    /// first and last step index (cyclic, `last >= first`, may exceed the count)
    first: usize,
    last: usize,
}

/// Maximal runs of equal steps, rotated so that no run wraps the start index.
fn cyclic_runs(steps: &[Step]) -> Vec<Run> {
    let n = steps.len();
    let start = (0..n).find(|&k| steps[k] != steps[(k + n - 1) % n]).unwrap_or(0);
    let mut runs: Vec<Run> = Vec::new();
    for off in 0..n {
        let k = start + off;
        let st = steps[k % n];
        match runs.last_mut() {
            Some(r) if r.step == st => r.last = k,
            _ => runs.push(Run { step: st, first: k, last: k }),
        }
    }
    runs
}

/// Bound on the error of the bilinear reconstruction: the largest second
/// difference of the samples along a grid line. Zero for affine fields.
pub fn noise_floor(field: &ScalarField) -> f64 {
    let (nx, ny) = (field.nx(), field.ny());
    let mut worst = 0.0f64;
    for j in 0..ny {
        for i in 0..nx {
            if !field.in_mask(i, j) {
                continue;
            }
            let v = field.node_value(i, j);
            if i > 0 && i + 1 < nx && field.in_mask(i - 1, j) && field.in_mask(i + 1, j) {
                worst = worst.max((field.node_value(i - 1, j) - 2.0 * v + field.node_value(i + 1, j)).abs());
            }
            if j > 0 && j + 1 < ny && field.in_mask(i, j - 1) && field.in_mask(i, j + 1) {
                worst = worst.max((field.node_value(i, j - 1) - 2.0 * v + field.node_value(i, j + 1)).abs());
            }
        }
    }
    worst
}

/// Repeatedly folds the shallowest monotone run sitting between two runs of
/// the opposite direction into its neighbours while its rise is below `floor`.
fn cancel_shallow_extrema(steps: &mut [Step], vals: &[f64], floor: f64) {
    if !(floor > 0.0) {
        return;
    }
    let n = steps.len();
    loop {
        let runs = cyclic_runs(steps);
        let r = runs.len();
        if r <= 2 {
            return;
        }
        let rise = |run: &Run| (vals[(run.last + 1) % n] - vals[run.first % n]).abs();
        let candidate = (0..r)
            .filter(|&i| {
                let (p, c, q) = (runs[(i + r - 1) % r].step, runs[i].step, runs[(i + 1) % r].step);
                c != Step::Flat && p != Step::Flat && p == q && p != c
            })
            .filter(|&i| rise(&runs[i]) < floor)
            .min_by(|&a, &b| rise(&runs[a]).total_cmp(&rise(&runs[b])));
        let Some(i) = candidate else { return };
        let fill = runs[(i + r - 1) % r].step;
        for k in runs[i].first..=runs[i].last {
            steps[k % n] = fill;
        }
    }
}

/// Splits the boundary into alternating monotone and level arcs.
///
/// Each step between consecutive samples is up, down or flat (`|Δf| <= tol_mono`).
/// A single flat step inside a monotone run is absorbed; a single flat step
/// between opposite directions marks an isolated extremum. Monotone runs whose
/// rise is below the reconstruction error of the field (see [`noise_floor`])
/// are merged into their neighbours. Longer flat runs become level arcs;
/// between opposite monotone runs a degenerate level arc is inserted at the
/// refined extremum.
pub fn decompose_boundary(field: &ScalarField, m: usize, tol_level: f64, tol_mono: f64) -> Result<BoundaryDecomposition> {
    if m < 8 {
        return Err(Error::InvalidArgument(format!("need at least 8 boundary samples, got {m}")));
    }
    let shape = field.shape();
    let params = sample_params(shape, m);
    let n = params.len();
    let vals: Vec<f64> = params.iter().map(|&s| field.boundary_value(s)).collect();
    if let Some(k) = vals.iter().position(|v| !v.is_finite()) {
        return Err(Error::NotDecomposable(format!("boundary value at s = {} is not finite", params[k])));
    }
    let param = |k: i64| params[k.rem_euclid(n as i64) as usize] + k.div_euclid(n as i64) as f64;
    let bval = |s: f64| field.boundary_value(s);
    let range = field.max_value() - field.min_value();
    let on_level_tol = tol_mono.max(1e-12 * range.max(f64::MIN_POSITIVE));

    let mut steps: Vec<Step> = (0..n)
        .map(|k| {
            let d = vals[(k + 1) % n] - vals[k];
            if d > tol_mono {
                Step::Up
            } else if d < -tol_mono {
                Step::Down
            } else {
                Step::Flat
            }
        })
        .collect();
    if steps.iter().all(|&s| s == Step::Flat) {
        return Err(Error::NotDecomposable("boundary values are constant".into()));
    }
    // An isolated flat step joins the run before it: inside a monotone run it
    // is a tie, between opposite directions it holds an isolated extremum
    // that the junction search below brackets.
    let snapshot = steps.clone();
    for k in 0..n {
        let (p, q) = (snapshot[(k + n - 1) % n], snapshot[(k + 1) % n]);
        if snapshot[k] == Step::Flat && p != Step::Flat && q != Step::Flat {
            steps[k] = p;
        }
    }

    cancel_shallow_extrema(&mut steps, &vals, noise_floor(field));
    let runs = cyclic_runs(&steps);
    let r = runs.len();
    if r < 2 {
        return Err(Error::NotDecomposable("boundary has no monotone structure".into()));
    }

    // where each run's arc begins, plus a degenerate extremum arc in front of
    // runs that reverse direction
    let mut begin = vec![0.0f64; r];
    let mut extremum_before: Vec<Option<(f64, Extremum)>> = vec![None; r];
    for i in 0..r {
        let prev = runs[(i + r - 1) % r].step;
        let cur = runs[i].step;
        let j = runs[i].first as i64; // sample shared by both runs
        begin[i] = match (prev, cur) {
            (Step::Flat, _) => {
                let level = vals[runs[(i + r - 1) % r].first % n];
                bisect_level_end(bval, level, on_level_tol, param(j), param(j + 1))
            }
            (_, Step::Flat) => {
                let level = vals[runs[i].first % n];
                bisect_level_end(bval, level, on_level_tol, param(j), param(j - 1))
            }
            _ => {
                let maximize = prev == Step::Up;
                let s = golden_extremum(bval, param(j - 1), param(j + 1), maximize);
                extremum_before[i] = Some((s.rem_euclid(1.0), if maximize { Extremum::Max } else { Extremum::Min }));
                s
            }
        };
        begin[i] = wrap_unit(begin[i]);
        // level arcs on a polygonal boundary usually end at a corner
        if let Some(c) = shape.corner_params().into_iter().find(|c| {
            let d = (begin[i] - c).rem_euclid(1.0);
            d.min(1.0 - d) < 1e-9
        }) {
            begin[i] = c;
        }
        if let Some(e) = extremum_before[i].as_mut() {
            e.0 = begin[i];
        }
    }

    let mut arcs: Vec<Arc> = Vec::new();
    let mut failures = Vec::new();
    for i in 0..r {
        let run = &runs[i];
        let mut end = begin[(i + 1) % r];
        while end < begin[i] {
            end += 1.0;
        }
        if let Some((s, kind)) = extremum_before[i] {
            arcs.push(Arc {
                kind: ArcKind::Level,
                direction: Direction::Constant,
                s_begin: s,
                s_end: s,
                level: Some(bval(s)),
                degenerate: true,
                extremum: Some(kind),
            });
        }
        if run.step == Step::Flat {
            let samples: Vec<f64> = (run.first..=run.last + 1).map(|k| vals[k % n]).collect();
            let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi - lo > tol_level {
                failures.push(Failure::new(
                    "level_arc_flatness",
                    Some(shape.boundary_point(begin[i])),
                    format!("sampled spread {} exceeds tol_level {}", hi - lo, tol_level),
                ));
            }
            arcs.push(Arc {
                kind: ArcKind::Level,
                direction: Direction::Constant,
                s_begin: begin[i],
                s_end: end,
                level: Some(samples.iter().sum::<f64>() / samples.len() as f64),
                degenerate: false,
                extremum: None,
            });
        } else {
            arcs.push(Arc {
                kind: ArcKind::Monotone,
                direction: if run.step == Step::Up { Direction::Increasing } else { Direction::Decreasing },
                s_begin: begin[i],
                s_end: end,
                level: None,
                degenerate: false,
                extremum: None,
            });
        }
    }
    let total = arcs.len();

    // adjacent level arcs or adjacent monotone arcs cannot be told apart
    for k in 0..total {
        let (a, b) = (&arcs[k], &arcs[(k + 1) % total]);
        if a.kind == b.kind {
            return Err(Error::NotDecomposable(format!(
                "arcs starting at s = {} and s = {} are both {:?}",
                a.s_begin, b.s_begin, a.kind
            )));
        }
    }

    // classify level arcs as extrema from their neighbours
    for k in 0..total {
        if arcs[k].kind != ArcKind::Level {
            continue;
        }
        let before = arcs[(k + total - 1) % total].direction;
        let after = arcs[(k + 1) % total].direction;
        arcs[k].extremum = match (before, after) {
            (Direction::Increasing, Direction::Decreasing) => Some(Extremum::Max),
            (Direction::Decreasing, Direction::Increasing) => Some(Extremum::Min),
            _ => None,
        };
    }

    // label: arcs[0] is the increasing arc with the smallest start parameter
    let first = (0..total)
        .filter(|&k| arcs[k].direction == Direction::Increasing)
        .min_by(|&a, &b| arcs[a].s_begin.total_cmp(&arcs[b].s_begin))
        .ok_or_else(|| Error::NotDecomposable("no increasing boundary arc".into()))?;
    arcs.rotate_left(first);

    let n_f = arcs.iter().filter(|a| a.kind == ArcKind::Monotone).count();
    let points = arcs.iter().map(|a| a.s_begin).collect();
    Ok(BoundaryDecomposition { shape, points, arcs, n_f, failures })
}

/// Decomposition with the default tolerances and `m = max(2048, 16 nx)`.
pub fn decompose_default(field: &ScalarField) -> Result<BoundaryDecomposition> {
    decompose_boundary(field, default_boundary_samples(field), field.default_tol_level(), 0.0)
}

pub fn default_boundary_samples(field: &ScalarField) -> usize {
    (16 * field.nx().max(field.ny())).max(2048)
}

struct FailureLog {
    failures: Vec<Failure>,
    counts: Vec<(String, usize)>,
}

impl FailureLog {
    fn new() -> Self {
        Self { failures: Vec::new(), counts: Vec::new() }
    }
    fn push(&mut self, f: Failure) {
        let idx = match self.counts.iter().position(|(c, _)| *c == f.condition) {
            Some(i) => i,
            None => {
                self.counts.push((f.condition.clone(), 0));
                self.counts.len() - 1
            }
        };
        self.counts[idx].1 += 1;
        if self.counts[idx].1 <= MAX_FAILURES_PER_CONDITION {
            self.failures.push(f);
        }
    }
    fn count(&self, condition: &str) -> usize {
        self.counts.iter().find(|(c, _)| c == condition).map_or(0, |(_, n)| *n)
    }
}

/// Tolerances used by [`classify_with`].
#[derive(Clone, Copy, Debug)]
pub struct ClassifyParams {
    pub g_min: f64,
    pub tol_level: f64,
}

impl ClassifyParams {
    pub fn defaults(field: &ScalarField) -> Self {
        Self { g_min: field.default_g_min(), tol_level: field.default_tol_level() }
    }
}

/// Classifies the field with default tolerances.
pub fn classify(field: &ScalarField, decomposition: &BoundaryDecomposition) -> RegularityVerdict {
    classify_with(field, decomposition, ClassifyParams::defaults(field))
}

/// Checks (a) the regular-point proxy at every interior node, (b) that each
/// level arc is flat, and (c) that each level arc is a whole component of its
/// level set. (a)+(b)+(c) with two monotone arcs is weak regularity; (a)+(b)
/// alone is almost weak regularity.
pub fn classify_with(field: &ScalarField, dec: &BoundaryDecomposition, params: ClassifyParams) -> RegularityVerdict {
    let mut log = FailureLog::new();
    for f in &dec.failures {
        log.push(f.clone());
    }
    let h = field.h();

    // (a) interior nodes
    let (nx, ny) = (field.nx(), field.ny());
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let interior = field.in_mask(i, j)
                && field.in_mask(i - 1, j)
                && field.in_mask(i + 1, j)
                && field.in_mask(i, j - 1)
                && field.in_mask(i, j + 1);
            if !interior {
                continue;
            }
            let g = field.node_gradient(i, j).norm();
            if !(g >= params.g_min) {
                log.push(Failure::new(
                    "regular_point",
                    Some(field.node_position(i, j)),
                    format!("gradient norm {g:e} below g_min {:e}", params.g_min),
                ));
            }
        }
    }

    // (b) level arcs lie in level sets
    let shape = field.shape();
    for (_, arc) in dec.level_arcs() {
        if arc.degenerate {
            continue;
        }
        let pts = arc.points(shape, 0.25 * h);
        let vals: Vec<f64> = pts.iter().map(|&p| field.eval_unchecked(p)).collect();
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo > params.tol_level {
            log.push(Failure::new(
                "level_arc_in_level_set",
                Some(pts[0]),
                format!("spread {} along the arc exceeds tol_level {}", hi - lo, params.tol_level),
            ));
        }
    }
    let cond_b = log.count("level_arc_in_level_set") == 0 && log.count("level_arc_flatness") == 0;

    // (c) level arcs are whole components
    let component_failures: Vec<Failure> = dec
        .level_arcs()
        .collect::<Vec<_>>()
        .par_iter()
        .filter_map(|(_, arc)| full_component_failure(field, arc))
        .collect();
    for f in component_failures {
        log.push(f);
    }
    let cond_a = log.count("regular_point") == 0;
    let cond_c = log.count("full_component") == 0;

    let status = if cond_a && cond_b && cond_c && dec.n_f == 2 {
        Status::WeaklyRegular
    } else if cond_a && cond_b && !cond_c {
        Status::AlmostWeaklyRegular
    } else {
        if cond_a && cond_b && cond_c {
            log.push(Failure::new(
                "arc_count",
                None,
                format!("{} monotone arcs; a weakly regular field has exactly 2", dec.n_f),
            ));
        }
        Status::NotRegular
    };
    let extremum_points = dec
        .level_arcs()
        .filter(|(_, a)| a.degenerate)
        .filter_map(|(_, a)| {
            a.extremum.map(|kind| ExtremumPoint {
                kind,
                at: shape.boundary_point(a.s_begin),
                level: a.level.unwrap_or(f64::NAN),
            })
        })
        .collect();
    RegularityVerdict {
        status,
        n_f: dec.n_f,
        arcs: dec.arcs.clone(),
        failures: log.failures,
        failure_counts: log.counts,
        extremum_points,
    }
}

/// Grows the level-`c` component through cells starting next to the arc and
/// reports a failure when it reaches more than `2h` away from the arc.
fn full_component_failure(field: &ScalarField, arc: &Arc) -> Option<Failure> {
    let c = arc.level?;
    let h = field.h();
    let shape = field.shape();
    let arc_pts = arc.points(shape, 0.5 * h);
    let tau = 1e-9 * (field.max_value() - field.min_value()).max(f64::MIN_POSITIVE);
    let (nx, ny) = (field.nx(), field.ny());
    let origin = field.origin();

    // level-set sites of a cell: clipped contour endpoints and on-level mask nodes
    let sites = |i: usize, j: usize| -> Vec<Vector2> {
        let mut out: Vec<Vector2> = contour::cell_segments(field, i, j, c)
            .into_iter()
            .flat_map(|(a, b)| [a, b])
            .collect();
        for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            let (a, b) = (i + di, j + dj);
            if field.in_mask(a, b) && (field.node_value(a, b) - c).abs() <= tau {
                out.push(field.node_position(a, b));
            }
        }
        out
    };
    let cell_of = |p: Vector2| -> (usize, usize) {
        let i = (((p.x - origin.x) / h).floor().max(0.0) as usize).min(nx - 2);
        let j = (((p.y - origin.y) / h).floor().max(0.0) as usize).min(ny - 2);
        (i, j)
    };

    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    let mut queue = VecDeque::new();
    for p in &arc_pts {
        let (ci, cj) = cell_of(*p);
        for dj in -1i64..=1 {
            for di in -1i64..=1 {
                let (i, j) = (ci as i64 + di, cj as i64 + dj);
                if i < 0 || j < 0 || i as usize >= nx - 1 || j as usize >= ny - 1 {
                    continue;
                }
                let key = (i as usize, j as usize);
                if seen.insert(key) {
                    queue.push_back(key);
                }
            }
        }
    }
    let mut worst = (0.0f64, None);
    while let Some((i, j)) = queue.pop_front() {
        let s = sites(i, j);
        if s.is_empty() {
            continue;
        }
        for p in &s {
            let d = point_chain_distance(*p, &arc_pts);
            if d > worst.0 {
                worst = (d, Some(*p));
            }
        }
        for dj in -1i64..=1 {
            for di in -1i64..=1 {
                let (a, b) = (i as i64 + di, j as i64 + dj);
                if a < 0 || b < 0 || a as usize >= nx - 1 || b as usize >= ny - 1 {
                    continue;
                }
                let key = (a as usize, b as usize);
                if seen.insert(key) {
                    queue.push_back(key);
                }
            }
        }
        if worst.0 > 2.0 * h {
            break;
        }
    }
    (worst.0 > 2.0 * h).then(|| {
        Failure::new(
            "full_component",
            worst.1,
            format!("level {c} component extends {} beyond its boundary arc", worst.0),
        )
    })
}

/// A gradient-flow line with strictly monotone field values.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UTrajectory {
    pub vertices: Vec<Vector2>,
    pub values: Vec<f64>,
}

impl UTrajectory {
    pub fn polyline(&self) -> Result<Polyline> {
        Polyline::new(self.vertices.clone())
    }
}

/// Normalized-gradient Euler steps from `start`, ascending for `direction > 0`
/// and descending otherwise, until the boundary, a degenerate zone or
/// `max_len`. A step that fails to move `f` monotonically is halved up to
/// eight times.
pub fn trace_u_trajectory(field: &ScalarField, start: Vector2, direction: i32, step: f64, max_len: f64) -> Result<UTrajectory> {
    if !(step > 0.0) || !(max_len > 0.0) {
        return Err(Error::InvalidArgument("step and max_len must be positive".into()));
    }
    let shape = field.shape();
    let sign = if direction >= 0 { 1.0 } else { -1.0 };
    let g_min = field.default_g_min();
    let f0 = field.eval(start)?;
    let g0 = field.gradient(start)?;
    if !(g0.norm() >= g_min) || g0.norm() == 0.0 {
        return Err(Error::DegenerateGradient(start));
    }
    let mut verts = vec![start];
    let mut vals = vec![f0];
    let mut len = 0.0;
    let mut p = start;
    let mut fp = f0;
    'outer: while len < max_len {
        let g = field.gradient_unchecked(p);
        let gn = g.norm();
        if !(gn >= g_min) || gn == 0.0 {
            break;
        }
        let dir = g * (sign / gn);
        let mut hstep = step.min(max_len - len);
        for _ in 0..=8 {
            let q = p + dir * hstep;
            // stop at the boundary
            let (q, hit) = match shape.clip_segment(p, q) {
                Some((_, t1)) if t1 < 1.0 => (p.lerp(q, t1), true),
                Some(_) => (q, false),
                None => break 'outer,
            };
            let fq = field.eval_unchecked(q);
            if fq.is_finite() && (fq - fp) * sign > 0.0 {
                len += p.dist(q);
                verts.push(q);
                vals.push(fq);
                p = q;
                fp = fq;
                if hit {
                    break 'outer;
                }
                continue 'outer;
            }
            if hit && p.dist(q) <= 1e-12 {
                break 'outer;
            }
            hstep *= 0.5;
        }
        if verts.len() == 1 {
            return Err(Error::StepTooLarge(p));
        }
        break;
    }
    Ok(UTrajectory { vertices: verts, values: vals })
}

/// Largest `delta` from the ladder `eps, eps/2, .., eps/2^10` such that on every
/// sampled level curve, any two points within `delta` of `v` are joined by an
/// arc staying within `eps` of `v`. Returns 0 when no candidate works.
pub fn check_elc(field: &ScalarField, v: Vector2, eps: f64, level_count: usize) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument("eps must be positive".into()));
    }
    let lo = field.min_value();
    let hi = field.max_value();
    let curves: Vec<Vec<Vector2>> = (1..=level_count.max(1))
        .map(|k| lo + (hi - lo) * k as f64 / (level_count.max(1) + 1) as f64)
        .flat_map(|c| contour::contour_chains(field, c))
        .map(|ch| ch.points)
        .collect();
    let smallest = eps / 1024.0;
    let refined: Vec<Vec<Vector2>> = curves.iter().map(|c| refine_points(c, 0.5 * smallest)).collect();
    for k in 0..=10 {
        let delta = eps / f64::from(1u32 << k);
        let ok = refined.iter().all(|pts| {
            let mut last_in: Option<usize> = None;
            for (idx, p) in pts.iter().enumerate() {
                if p.dist(v) < delta {
                    if let Some(prev) = last_in {
                        if pts[prev..idx].iter().any(|q| q.dist(v) >= eps) {
                            return false;
                        }
                    }
                    last_in = Some(idx);
                }
            }
            true
        });
        if ok {
            return Ok(delta);
        }
    }
    Ok(0.0)
}
