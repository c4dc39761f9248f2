use crate::geometry::Vector2;

/// Errors produced by the analysis pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed manifest: {0}")]
    Manifest(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("non-finite sample at node ({i}, {j})")]
    NonFiniteSample { i: usize, j: usize },

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("mask is not connected")]
    DisconnectedMask,

    #[error("mask is not simply connected")]
    MaskWithHoles,

    #[error("mask node ({i}, {j}) lies outside the declared shape")]
    MaskOutsideShape { i: usize, j: usize },

    #[error("point ({}, {}) lies outside the domain", .0.x, .0.y)]
    OutsideDomain(Vector2),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("boundary not decomposable: {0}")]
    NotDecomposable(String),

    #[error("start point ({}, {}) lies in a gradient-degenerate zone", .0.x, .0.y)]
    DegenerateGradient(Vector2),

    #[error("step too large to keep f monotone near ({}, {})", .0.x, .0.y)]
    StepTooLarge(Vector2),

    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),

    #[error("closed level loop at level {level}")]
    ClosedLoop { level: f64 },

    #[error("level {level}: chain endpoint ({}, {}) is not on a monotone boundary arc", .at.x, .at.y)]
    EndpointNotOnMonotoneArc { level: f64, at: Vector2 },

    #[error("level {level}: expected exactly one component, found {found}")]
    ComponentCount { level: f64, found: usize },

    #[error("field is not weakly regular: {0}")]
    NotRegular(String),

    #[error("multiple extrema: {0}")]
    MultipleExtrema(String),

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("cap diameter does not shrink below {eps_cap} (reached {reached})")]
    CapNotShrinking { eps_cap: f64, reached: f64 },

    #[error("fiber chart requires alpha < beta; violated at {at}")]
    EmptyFiber { at: f64 },

    #[error("point ({}, {}) cannot be located in the mapped lattice", .0.x, .0.y)]
    NotLocatable(Vector2),

    #[error("boundary map: {0}")]
    BoundaryMap(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), source }
    }
}
