#![allow(dead_code)]

use folia::{DomainShape, ScalarField};

pub const N: usize = 129;

pub fn square(f: impl Fn(f64, f64) -> f64) -> ScalarField {
    ScalarField::from_fn(DomainShape::Square, N, N, f).unwrap()
}

pub fn half_disk(f: impl Fn(f64, f64) -> f64) -> ScalarField {
    ScalarField::from_fn(DomainShape::HalfDisk, N, (N + 1) / 2, f).unwrap()
}

pub fn disk(f: impl Fn(f64, f64) -> f64) -> ScalarField {
    ScalarField::from_fn(DomainShape::Disk, N, N, f).unwrap()
}

pub fn warped(x: f64, y: f64) -> f64 {
    y + 0.15 * (std::f64::consts::PI * x).sin() * y * (1.0 - y)
}

/// Every regular fixture, by name.
pub fn regular_fixtures() -> Vec<(&'static str, ScalarField)> {
    vec![
        ("square y", square(|_, y| y)),
        ("square y^2", square(|_, y| y * y)),
        ("square xy", square(|x, y| x * y)),
        ("square warped", square(warped)),
        ("half-disk y", half_disk(|_, y| y)),
        ("half-disk y^1.5", half_disk(|_, y| y.max(0.0).powf(1.5))),
        ("disk y", disk(|_, y| y)),
        ("disk y^3", disk(|_, y| y * y * y)),
        ("disk perturbed", disk(|x, y| y + 0.1 * x * (1.0 - y * y))),
    ]
}
