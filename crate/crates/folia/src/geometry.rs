use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A point or displacement in the plane. Serialized as `[x, y]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vector2 {
    pub x: f64,
    pub y: f64,
}

impl Vector2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3-D cross product.
    pub fn cross(self, o: Self) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn dist(self, o: Self) -> f64 {
        (self - o).norm()
    }

    pub fn lerp(self, o: Self, t: f64) -> Self {
        Self::new(self.x + t * (o.x - self.x), self.y + t * (o.y - self.y))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Vector2 {
    fn from(a: [f64; 2]) -> Self {
        Self::new(a[0], a[1])
    }
}

impl From<Vector2> for [f64; 2] {
    fn from(v: Vector2) -> Self {
        [v.x, v.y]
    }
}

impl Add for Vector2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vector2 {
    fn add_assign(&mut self, o: Self) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vector2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vector2 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

impl Neg for Vector2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// Distance from `p` to the segment `[a, b]` together with the segment
/// parameter of the closest point.
pub fn point_segment_distance(p: Vector2, a: Vector2, b: Vector2) -> (f64, f64) {
    let d = b - a;
    let len2 = d.norm_sq();
    let t = if len2 > 0.0 {
        ((p - a).dot(d) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p.dist(a.lerp(b, t)), t)
}

/// Distance from `p` to a vertex chain (a single vertex counts as a point).
pub fn point_chain_distance(p: Vector2, chain: &[Vector2]) -> f64 {
    match chain {
        [] => f64::INFINITY,
        [only] => p.dist(*only),
        _ => chain
            .windows(2)
            .map(|w| point_segment_distance(p, w[0], w[1]).0)
            .fold(f64::INFINITY, f64::min),
    }
}

/// Largest pairwise distance in a point set.
pub fn diameter(points: &[Vector2]) -> f64 {
    let mut best = 0.0f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.max(a.dist(*b));
        }
    }
    best
}

/// Symmetric Hausdorff distance between two vertex chains, measured from the
/// vertices of each chain to the other chain's segments.
pub fn hausdorff(a: &[Vector2], b: &[Vector2]) -> f64 {
    let one = |x: &[Vector2], y: &[Vector2]| {
        x.iter()
            .map(|p| point_chain_distance(*p, y))
            .fold(0.0f64, f64::max)
    };
    one(a, b).max(one(b, a))
}

/// Signed area of a polygon (positive when counter-clockwise).
pub fn signed_area(poly: &[Vector2]) -> f64 {
    let n = poly.len();
    let mut s = 0.0;
    for i in 0..n {
        s += poly[i].cross(poly[(i + 1) % n]);
    }
    0.5 * s
}

/// Proper or touching intersection test for closed segments `[a, b]` and `[c, d]`.
pub fn segments_intersect(a: Vector2, b: Vector2, c: Vector2, d: Vector2) -> bool {
    fn orient(p: Vector2, q: Vector2, r: Vector2) -> f64 {
        (q - p).cross(r - p)
    }
    fn on_segment(p: Vector2, q: Vector2, r: Vector2) -> bool {
        r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    }
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// Distance between two closed segments.
pub fn segment_segment_distance(a: Vector2, b: Vector2, c: Vector2, d: Vector2) -> f64 {
    if segments_intersect(a, b, c, d) {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .0
        .min(point_segment_distance(b, c, d).0)
        .min(point_segment_distance(c, a, b).0)
        .min(point_segment_distance(d, a, b).0)
}
