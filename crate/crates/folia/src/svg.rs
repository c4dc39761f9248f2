//! Deterministic SVG drawings of level families and mapped lattices.

use std::fmt::Write;

use crate::domain::DomainShape;
use crate::geometry::Vector2;
use crate::levelsets::LevelFamily;
use crate::rectify::DiscreteHomeomorphism;

const SIZE: f64 = 1024.0;
const MARGIN: f64 = 32.0;

struct Canvas {
    lo: Vector2,
    scale: f64,
    body: String,
}

impl Canvas {
    fn new(shape: DomainShape) -> Self {
        let (lo, hi) = shape.bbox();
        let scale = (SIZE - 2.0 * MARGIN) / (hi.x - lo.x).max(hi.y - lo.y);
        let mut c = Self { lo, scale, body: String::new() };
        let outline: Vec<Vector2> = (0..=512).map(|i| shape.boundary_point(i as f64 / 512.0)).collect();
        c.polyline(&outline, "#000000", 2.0);
        c
    }

    fn map(&self, p: Vector2) -> (f64, f64) {
        (MARGIN + (p.x - self.lo.x) * self.scale, SIZE - MARGIN - (p.y - self.lo.y) * self.scale)
    }

    fn polyline(&mut self, pts: &[Vector2], colour: &str, width: f64) {
        let mut d = String::new();
        for (n, p) in pts.iter().enumerate() {
            let (x, y) = self.map(*p);
            let _ = write!(d, "{}{x:.3},{y:.3}", if n == 0 { "" } else { " " });
        }
        let _ = writeln!(
            self.body,
            r#"<polyline points="{d}" fill="none" stroke="{colour}" stroke-width="{width:.2}"/>"#
        );
    }

    fn dot(&mut self, p: Vector2, colour: &str) {
        let (x, y) = self.map(p);
        let _ = writeln!(self.body, r#"<circle cx="{x:.3}" cy="{y:.3}" r="4.00" fill="{colour}"/>"#);
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 1024 1024\" width=\"1024\" height=\"1024\">\n\
             <rect width=\"1024\" height=\"1024\" fill=\"#ffffff\"/>\n{}</svg>\n",
            self.body
        )
    }
}

/// Blue for low levels through red for high ones.
fn level_colour(w: f64) -> String {
    let w = if w.is_finite() { w.clamp(0.0, 1.0) } else { 0.5 };
    let r = (255.0 * w).round() as u8;
    let b = (255.0 * (1.0 - w)).round() as u8;
    format!("#{r:02x}30{b:02x}")
}

/// One polyline per level curve (a dot for a point component), coloured by level.
pub fn render_levels(family: &LevelFamily) -> String {
    let mut c = Canvas::new(family.shape);
    let (lo, hi) = family.levels.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &l| (a.min(l), b.max(l)));
    for curve in &family.curves {
        let w = if hi > lo { (curve.c - lo) / (hi - lo) } else { 0.5 };
        let colour = level_colour(w);
        if curve.is_point() {
            c.dot(curve.start(), &colour);
        } else {
            c.polyline(&curve.points, &colour, 1.5);
        }
    }
    c.finish()
}

/// The image of the model lattice: mapped rows in blue, mapped columns in red.
pub fn render_homeomorphism(h: &DiscreteHomeomorphism) -> String {
    let mut c = Canvas::new(h.source_shape);
    for row in &h.grid {
        c.polyline(row, "#1f4fbf", 1.0);
    }
    for i in 0..h.k {
        let col: Vec<Vector2> = h.grid.iter().map(|r| r[i]).collect();
        c.polyline(&col, "#bf2f1f", 1.0);
    }
    c.finish()
}
