use thiserror::Error;

/// Errors raised by the field-theory kernels, lattice calculus and suites.
#[derive(Debug, Error)]
pub enum Error {
    /// The spinor lies outside the positive-density class.
    #[error("spinor density {density} is not positive")]
    NonPositiveDensity { density: f64 },
    /// The spinor density vanishes where a ratio by it is required.
    #[error("spinor density vanishes (|rho| = {density:e})")]
    VanishingDensity { density: f64 },
    /// `bijection_to_positive` expects a strictly negative density.
    #[error("expected negative density, got {density}")]
    WrongDensitySign { density: f64 },
    #[error("axis {axis} out of range for a {dims}-dimensional lattice")]
    AxisOutOfRange { axis: usize, dims: usize },
    #[error("axis {axis} has {n} points, the stencil needs at least {required}")]
    GridTooSmall { axis: usize, n: usize, required: usize },
    #[error("rank mismatch: {left} vs {right}")]
    RankMismatch { left: String, right: String },
    #[error("unsupported rank: {0}")]
    UnsupportedRank(String),
    #[error("wedge product of ranks {p} and {q} exceeds form dimension {dims}")]
    RankOverflow { p: usize, q: usize, dims: usize },
    #[error("coframe violates the orthonormality constraint (deviation {deviation:e})")]
    InvalidCoframe { deviation: f64 },
    #[error("degenerate denominator L+ - L- = {denominator:e}")]
    DegenerateDenominator { denominator: f64 },
    #[error("probe at {index:?} is within {margin} points of a non-periodic boundary")]
    ProbeOutsideInterior { index: Vec<usize>, margin: usize },
    #[error("probe field A0 = {a0} must lie in (0, m) with m = {m}")]
    InvalidProbeField { a0: f64, m: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("u vanishes at sample {index}")]
    VanishingU { index: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    /// Two printed forms of the same quantity disagree; this is a bug, never
    /// an input problem.
    #[error("{what}: spelled-out and compact forms differ by {discrepancy:e}")]
    FormMismatch { what: &'static str, discrepancy: f64 },
    #[error("malformed field snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
