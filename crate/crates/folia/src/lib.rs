//! Level-set analysis of regular functions on disk-like domains.
//!
//! The crate samples a scalar field on a square, half-disk or disk, checks
//! that its boundary splits into alternating monotone and level arcs, extracts
//! its level curves, parameterizes them by mu-length, and assembles the
//! rectifying homeomorphism that turns the field into an affine height
//! function. Two fields with matching boundary behaviour are then conjugated
//! by composing their rectifications.

pub mod conjugacy;
pub mod contour;
pub mod curves;
pub mod domain;
pub mod error;
pub mod field;
pub mod geometry;
pub mod levelsets;
pub mod rectify;
pub mod regularity;
pub mod report;
pub mod svg;

pub use domain::DomainShape;
pub use error::{Error, Result};
pub use field::{load_field, save_field, BoundarySample, FieldManifest, ScalarField};
pub use geometry::Vector2;
