//! Marching squares on the bilinear reconstruction, clipped to the domain.

use std::collections::HashMap;

use crate::field::ScalarField;
use crate::geometry::Vector2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum EdgeKey {
    /// Between nodes `(i, j)` and `(i + 1, j)`.
    H(u32, u32),
    /// Between nodes `(i, j)` and `(i, j + 1)`.
    V(u32, u32),
}

#[derive(Clone, Copy, Debug)]
struct Segment {
    a: Vector2,
    b: Vector2,
    ka: Option<EdgeKey>,
    kb: Option<EdgeKey>,
}

/// A maximal chain of contour segments. Open chains end on the domain boundary
/// (or wherever the reconstruction stops); closed chains are loops.
#[derive(Clone, Debug, PartialEq)]
pub struct RawChain {
    pub points: Vec<Vector2>,
    pub closed: bool,
}

impl RawChain {
    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| w[0].dist(w[1])).sum()
    }
}

fn crossing(field: &ScalarField, key: EdgeKey, c: f64) -> Vector2 {
    let (i0, j0, i1, j1) = match key {
        EdgeKey::H(i, j) => (i as usize, j as usize, i as usize + 1, j as usize),
        EdgeKey::V(i, j) => (i as usize, j as usize, i as usize, j as usize + 1),
    };
    let (a, b) = (field.node_value(i0, j0), field.node_value(i1, j1));
    let t = ((c - a) / (b - a)).clamp(0.0, 1.0);
    field.node_position(i0, j0).lerp(field.node_position(i1, j1), t)
}

/// Raw marching-squares segments of cell `(i, j)` at level `c`, before clipping.
/// A corner counts as above when its value is `>= c`; saddle cells are split
/// according to the value at the cell centre.
fn raw_cell_segments(field: &ScalarField, i: usize, j: usize, c: f64) -> ([(EdgeKey, EdgeKey); 2], usize) {
    let v00 = field.node_value(i, j);
    let v10 = field.node_value(i + 1, j);
    let v11 = field.node_value(i + 1, j + 1);
    let v01 = field.node_value(i, j + 1);
    let dummy = (EdgeKey::H(0, 0), EdgeKey::H(0, 0));
    if !(v00.is_finite() && v10.is_finite() && v11.is_finite() && v01.is_finite()) {
        return ([dummy; 2], 0);
    }
    let (iu, ju) = (i as u32, j as u32);
    let e = [EdgeKey::H(iu, ju), EdgeKey::V(iu + 1, ju), EdgeKey::H(iu, ju + 1), EdgeKey::V(iu, ju)];
    let up = [v00 >= c, v10 >= c, v11 >= c, v01 >= c];
    // edge k joins corners k and k + 1 (counter-clockwise)
    let cut: Vec<usize> = (0..4).filter(|&k| up[k] != up[(k + 1) % 4]).collect();
    match cut.len() {
        2 => ([(e[cut[0]], e[cut[1]]), dummy], 1),
        4 => {
            let centre = 0.25 * (v00 + v10 + v11 + v01) >= c;
            if centre == up[0] {
                ([(e[0], e[1]), (e[2], e[3])], 2)
            } else {
                ([(e[3], e[0]), (e[1], e[2])], 2)
            }
        }
        _ => ([dummy; 2], 0),
    }
}

/// Cells worth visiting: those whose centre is within a cell diagonal of the shape.
fn cell_near_domain(field: &ScalarField, i: usize, j: usize) -> bool {
    let h = field.h();
    let centre = field.node_position(i, j) + Vector2::new(0.5 * h, 0.5 * h);
    field.shape().signed_distance(centre) <= h
}

fn clipped(field: &ScalarField, i: usize, j: usize, c: f64, out: &mut Vec<Segment>) {
    let (segs, n) = raw_cell_segments(field, i, j, c);
    let shape = field.shape();
    let min_len = 1e-12 * field.h();
    for &(ka, kb) in &segs[..n] {
        let a = crossing(field, ka, c);
        let b = crossing(field, kb, c);
        let Some((t0, t1)) = shape.clip_segment(a, b) else { continue };
        let (pa, pb) = (a.lerp(b, t0), a.lerp(b, t1));
        if pa.dist(pb) <= min_len && !(t0 == 0.0 && t1 == 1.0) {
            continue;
        }
        out.push(Segment {
            a: if t0 > 0.0 { pa } else { a },
            b: if t1 < 1.0 { pb } else { b },
            ka: (t0 == 0.0).then_some(ka),
            kb: (t1 == 1.0).then_some(kb),
        });
    }
}

/// Contour segments of one cell, clipped to the domain.
pub fn cell_segments(field: &ScalarField, i: usize, j: usize, c: f64) -> Vec<(Vector2, Vector2)> {
    let mut out = Vec::new();
    if i + 1 < field.nx() && j + 1 < field.ny() && cell_near_domain(field, i, j) {
        clipped(field, i, j, c, &mut out);
    }
    out.into_iter().map(|s| (s.a, s.b)).collect()
}

/// All contour chains of the reconstruction at level `c` inside the domain,
/// in a deterministic order.
pub fn contour_chains(field: &ScalarField, c: f64) -> Vec<RawChain> {
    let mut segs = Vec::new();
    for j in 0..field.ny() - 1 {
        for i in 0..field.nx() - 1 {
            if cell_near_domain(field, i, j) {
                clipped(field, i, j, c, &mut segs);
            }
        }
    }
    let mut by_key: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (n, s) in segs.iter().enumerate() {
        for k in [s.ka, s.kb].into_iter().flatten() {
            by_key.entry(k).or_default().push(n);
        }
    }
    let degree = |k: Option<EdgeKey>| k.map_or(1, |k| by_key[&k].len());
    let mut used = vec![false; segs.len()];
    let mut chains = Vec::new();

    // Walks from segment `first`, entering through `ka` (or `kb` when reversed).
    let walk = |first: usize, reverse_first: bool, used: &mut Vec<bool>| -> RawChain {
        let mut points = Vec::new();
        let mut cur = first;
        let mut rev = reverse_first;
        let start_key = if rev { segs[first].kb } else { segs[first].ka };
        let mut closed = false;
        loop {
            used[cur] = true;
            let s = segs[cur];
            let (p, q, exit) = if rev { (s.b, s.a, s.ka) } else { (s.a, s.b, s.kb) };
            if points.is_empty() {
                points.push(p);
            }
            points.push(q);
            let Some(k) = exit else { break };
            if Some(k) == start_key && start_key.is_some() && points.len() > 2 {
                closed = true;
                break;
            }
            let Some(&next) = by_key[&k].iter().find(|&&n| n != cur && !used[n]) else {
                if by_key[&k].iter().any(|&n| n != cur && n == first) {
                    closed = true;
                }
                break;
            };
            rev = segs[next].kb == Some(k) && segs[next].ka != Some(k);
            cur = next;
        }
        RawChain { points, closed }
    };

    for n in 0..segs.len() {
        if used[n] {
            continue;
        }
        if degree(segs[n].ka) == 1 {
            chains.push(walk(n, false, &mut used));
        } else if degree(segs[n].kb) == 1 {
            chains.push(walk(n, true, &mut used));
        }
    }
    for n in 0..segs.len() {
        if !used[n] {
            chains.push(walk(n, false, &mut used));
        }
    }

    let merge_tol = 1e-9 * field.h();
    chains
        .into_iter()
        .filter_map(|mut ch| {
            ch.points.dedup_by(|b, a| a.dist(*b) <= merge_tol);
            if ch.closed && ch.points.len() > 1 && ch.points[0].dist(*ch.points.last().unwrap()) > merge_tol {
                let first = ch.points[0];
                ch.points.push(first);
            }
            (ch.points.len() >= 2 && ch.length() > merge_tol).then_some(ch)
        })
        .collect()
}
