//! Domain shapes: the unit square, the closed upper half-disk and the closed
//! unit disk, each with a counter-clockwise boundary parameterization
//! `b : [0, 1) -> boundary` proportional to arclength.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::Vector2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainShape {
    /// `[0, 1] x [0, 1]`, base point `(1, 0)`.
    Square,
    /// `{|z| <= 1, Im z >= 0}`, base point `(1, 0)`.
    HalfDisk,
    /// `{|z| <= 1}`, base point `(0, -1)`.
    Disk,
}

impl fmt::Display for DomainShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainShape::Square => "square",
            DomainShape::HalfDisk => "half_disk",
            DomainShape::Disk => "disk",
        })
    }
}

impl std::str::FromStr for DomainShape {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "square" => Ok(Self::Square),
            "half_disk" => Ok(Self::HalfDisk),
            "disk" => Ok(Self::Disk),
            other => Err(format!("unknown shape {other:?}")),
        }
    }
}

const HALF_DISK_PERIMETER: f64 = PI + 2.0;

impl DomainShape {
    pub fn bbox(self) -> (Vector2, Vector2) {
        match self {
            Self::Square => (Vector2::new(0.0, 0.0), Vector2::new(1.0, 1.0)),
            Self::HalfDisk => (Vector2::new(-1.0, 0.0), Vector2::new(1.0, 1.0)),
            Self::Disk => (Vector2::new(-1.0, -1.0), Vector2::new(1.0, 1.0)),
        }
    }

    pub fn perimeter(self) -> f64 {
        match self {
            Self::Square => 4.0,
            Self::HalfDisk => HALF_DISK_PERIMETER,
            Self::Disk => 2.0 * PI,
        }
    }

    /// Parameters of the corners of the boundary (points where it is not smooth).
    pub fn corner_params(self) -> Vec<f64> {
        match self {
            Self::Square => vec![0.0, 0.25, 0.5, 0.75],
            Self::HalfDisk => vec![0.0, PI / HALF_DISK_PERIMETER],
            Self::Disk => Vec::new(),
        }
    }

    pub fn boundary_point(self, s: f64) -> Vector2 {
        let s = s.rem_euclid(1.0);
        match self {
            Self::Square => {
                let u = 4.0 * s;
                let (side, t) = (u.floor().min(3.0), u - u.floor().min(3.0));
                match side as u8 {
                    0 => Vector2::new(1.0, t),
                    1 => Vector2::new(1.0 - t, 1.0),
                    2 => Vector2::new(0.0, 1.0 - t),
                    _ => Vector2::new(t, 0.0),
                }
            }
            Self::HalfDisk => {
                let l = s * HALF_DISK_PERIMETER;
                if l <= PI {
                    Vector2::new(l.cos(), l.sin())
                } else {
                    Vector2::new(-1.0 + (l - PI), 0.0)
                }
            }
            Self::Disk => {
                let a = -FRAC_PI_2 + 2.0 * PI * s;
                Vector2::new(a.cos(), a.sin())
            }
        }
    }

    /// Parameter of the boundary point nearest to `p`.
    pub fn boundary_param(self, p: Vector2) -> f64 {
        let wrap = |s: f64| {
            let s = s.rem_euclid(1.0);
            if s >= 1.0 {
                0.0
            } else {
                s
            }
        };
        match self {
            Self::Square => {
                let x = p.x.clamp(0.0, 1.0);
                let y = p.y.clamp(0.0, 1.0);
                let cands = [
                    ((p.x - 1.0).abs(), y / 4.0),
                    ((p.y - 1.0).abs(), 0.25 + (1.0 - x) / 4.0),
                    (p.x.abs(), 0.5 + (1.0 - y) / 4.0),
                    (p.y.abs(), 0.75 + x / 4.0),
                ];
                let mut best = cands[0];
                for c in &cands[1..] {
                    if c.0 < best.0 {
                        best = *c;
                    }
                }
                wrap(best.1)
            }
            Self::HalfDisk => {
                let ang = p.y.atan2(p.x);
                let ang = if ang < -FRAC_PI_2 { PI } else { ang.max(0.0) };
                let on_arc = Vector2::new(ang.cos(), ang.sin());
                let xd = p.x.clamp(-1.0, 1.0);
                let on_dia = Vector2::new(xd, 0.0);
                if p.dist(on_arc) <= p.dist(on_dia) {
                    wrap(ang / HALF_DISK_PERIMETER)
                } else {
                    wrap((PI + xd + 1.0) / HALF_DISK_PERIMETER)
                }
            }
            Self::Disk => {
                let ang = p.y.atan2(p.x);
                wrap((ang + FRAC_PI_2) / (2.0 * PI))
            }
        }
    }

    /// Unit tangent of the boundary at parameter `s` (direction of increasing `s`).
    pub fn boundary_tangent(self, s: f64) -> Vector2 {
        let ds = 1e-7;
        let a = self.boundary_point(s - ds);
        let b = self.boundary_point(s + ds);
        let d = b - a;
        d * (1.0 / d.norm())
    }

    /// Signed distance to the boundary: negative inside, positive outside.
    pub fn signed_distance(self, p: Vector2) -> f64 {
        match self {
            Self::Square => {
                let dx = (p.x - 0.5).abs() - 0.5;
                let dy = (p.y - 0.5).abs() - 0.5;
                let outside = Vector2::new(dx.max(0.0), dy.max(0.0)).norm();
                outside + dx.max(dy).min(0.0)
            }
            Self::Disk => p.norm() - 1.0,
            Self::HalfDisk => {
                let r = p.norm() - 1.0;
                let below = -p.y;
                if p.y >= 0.0 {
                    r.max(below)
                } else if p.x.abs() <= 1.0 {
                    // below the diameter
                    below.max(r)
                } else {
                    Vector2::new(p.x.abs() - 1.0, p.y).norm()
                }
            }
        }
    }

    pub fn contains(self, p: Vector2, tol: f64) -> bool {
        self.signed_distance(p) <= tol
    }

    pub fn boundary_distance(self, p: Vector2) -> f64 {
        self.signed_distance(p).abs()
    }

    /// Parameter interval `[t0, t1]` of the part of the segment `a + t (b - a)`,
    /// `t in [0, 1]`, that lies in the (convex) shape.
    pub fn clip_segment(self, a: Vector2, b: Vector2) -> Option<(f64, f64)> {
        let d = b - a;
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        let mut halfplane = |n: Vector2, c: f64| -> bool {
            // keep n . p <= c
            let na = n.dot(a);
            let nd = n.dot(d);
            if nd.abs() < 1e-300 {
                return na <= c;
            }
            let t = (c - na) / nd;
            if nd > 0.0 {
                hi = hi.min(t);
            } else {
                lo = lo.max(t);
            }
            true
        };
        let disk = |lo: &mut f64, hi: &mut f64| -> bool {
            let qa = d.norm_sq();
            if qa == 0.0 {
                return a.norm_sq() <= 1.0;
            }
            let qb = 2.0 * a.dot(d);
            let qc = a.norm_sq() - 1.0;
            let disc = qb * qb - 4.0 * qa * qc;
            if disc < 0.0 {
                return false;
            }
            let sq = disc.sqrt();
            let (t0, t1) = if qb >= 0.0 {
                let q = -0.5 * (qb + sq);
                (q / qa, qc / q)
            } else {
                let q = -0.5 * (qb - sq);
                (qc / q, q / qa)
            };
            let (t0, t1) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
            *lo = lo.max(t0);
            *hi = hi.min(t1);
            true
        };
        let ok = match self {
            Self::Square => {
                halfplane(Vector2::new(1.0, 0.0), 1.0)
                    && halfplane(Vector2::new(-1.0, 0.0), 0.0)
                    && halfplane(Vector2::new(0.0, 1.0), 1.0)
                    && halfplane(Vector2::new(0.0, -1.0), 0.0)
            }
            Self::HalfDisk => {
                let keep = halfplane(Vector2::new(0.0, -1.0), 0.0);
                keep && disk(&mut lo, &mut hi)
            }
            Self::Disk => disk(&mut lo, &mut hi),
        };
        if ok && lo <= hi {
            Some((lo, hi))
        } else {
            None
        }
    }

    /// Height coordinate of the model at chart row `t in [0, 1]`.
    pub fn model_height(self, t: f64) -> f64 {
        match self {
            Self::Disk => 2.0 * t - 1.0,
            _ => t,
        }
    }

    fn half_width(self, y: f64) -> (f64, f64) {
        match self {
            Self::Square => (0.0, 1.0),
            _ => {
                let w = (1.0 - y * y).max(0.0).sqrt();
                (-w, w)
            }
        }
    }

    /// Horizontal fiber `[alpha(y), beta(y)]` of the shape at height `y`.
    pub fn fiber(self, y: f64) -> (f64, f64) {
        self.half_width(y)
    }

    /// Maps a point to chart coordinates `(tau, t) in [0, 1]^2`, where `t`
    /// parameterizes height and `tau` the position along the horizontal fiber.
    pub fn to_chart(self, p: Vector2) -> (f64, f64) {
        let t = match self {
            Self::Disk => (p.y + 1.0) / 2.0,
            _ => p.y,
        };
        let (a, b) = self.half_width(p.y);
        let tau = if b - a > 1e-300 { (p.x - a) / (b - a) } else { 0.5 };
        (tau, t)
    }

    pub fn from_chart(self, tau: f64, t: f64) -> Vector2 {
        let y = self.model_height(t);
        let (a, b) = self.half_width(y);
        Vector2::new(a + tau * (b - a), y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_parameterization_starts_at_corner_ccw() {
        let s = DomainShape::Square;
        assert_eq!(s.boundary_point(0.0), Vector2::new(1.0, 0.0));
        assert_eq!(s.boundary_point(0.25), Vector2::new(1.0, 1.0));
        assert_eq!(s.boundary_point(0.5), Vector2::new(0.0, 1.0));
        assert_eq!(s.boundary_point(0.75), Vector2::new(0.0, 0.0));
        assert_eq!(s.boundary_point(0.125), Vector2::new(1.0, 0.5));
    }

    #[test]
    fn boundary_param_inverts_boundary_point() {
        for shape in [DomainShape::Square, DomainShape::HalfDisk, DomainShape::Disk] {
            for i in 0..97 {
                let s = i as f64 / 97.0;
                let p = shape.boundary_point(s);
                let back = shape.boundary_param(p);
                let err = (back - s).abs().min(1.0 - (back - s).abs());
                assert!(err < 1e-12, "{shape} s={s} back={back}");
                assert!(shape.boundary_distance(p) < 1e-12);
            }
        }
    }

    #[test]
    fn boundary_is_counter_clockwise() {
        for shape in [DomainShape::Square, DomainShape::HalfDisk, DomainShape::Disk] {
            let poly: Vec<_> = (0..400).map(|i| shape.boundary_point(i as f64 / 400.0)).collect();
            assert!(crate::geometry::signed_area(&poly) > 0.0, "{shape}");
        }
    }

    #[test]
    fn clip_to_disk() {
        let (t0, t1) = DomainShape::Disk
            .clip_segment(Vector2::new(-2.0, 0.0), Vector2::new(2.0, 0.0))
            .unwrap();
        assert!((t0 - 0.25).abs() < 1e-15 && (t1 - 0.75).abs() < 1e-15);
        assert!(DomainShape::Disk
            .clip_segment(Vector2::new(-2.0, 1.5), Vector2::new(2.0, 1.5))
            .is_none());
        let (t0, t1) = DomainShape::HalfDisk
            .clip_segment(Vector2::new(0.0, -1.0), Vector2::new(0.0, 2.0))
            .unwrap();
        assert!((t0 - 1.0 / 3.0).abs() < 1e-15 && (t1 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn chart_round_trip() {
        for shape in [DomainShape::Square, DomainShape::HalfDisk, DomainShape::Disk] {
            for &(tau, t) in &[(0.0, 0.0), (0.3, 0.4), (1.0, 0.9), (0.5, 0.5)] {
                let p = shape.from_chart(tau, t);
                let (a, b) = shape.to_chart(p);
                assert!((b - t).abs() < 1e-14);
                if shape.fiber(p.y).1 - shape.fiber(p.y).0 > 1e-9 {
                    assert!((a - tau).abs() < 1e-12);
                }
            }
        }
    }
}
