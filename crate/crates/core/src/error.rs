use thiserror::Error;

/// Errors raised by the solver stack.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("scatterer does not vanish on the support boundary: |q| = {value:.3e} exceeds {tolerance:.1e}")]
    SupportViolation { value: f64, tolerance: f64 },
    #[error("amplitude {0} must exceed -1 so that the index stays real and positive")]
    InvalidAmplitude(f64),
    #[error("argument outside the function domain: {0}")]
    DomainError(String),
    #[error("invalid {what}: {value}")]
    InvalidCount { what: &'static str, value: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),
    #[error("inverted factor is nearly singular (condition {cond:.3e})")]
    NearResonance { cond: f64 },
    #[error("leaf null space has dimension {found}, expected {expected}")]
    DegenerateLeaf { expected: usize, found: usize },
    #[error("leaf basis has no null vectors at the requested tolerance")]
    EmptyBasis,
    #[error("interface samplings do not match: {0}")]
    InterfaceMismatch(String),
    #[error("continuity system has a trivial null space")]
    EmptyMerge,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("target ({x}, {y}) lies outside the leaf box")]
    TargetOutsideLeaf { x: f64, y: f64 },
    #[error("source lies on or inside the scatterer boundary")]
    SourceOnBoundary,
    #[error("incident data not representable: relative residual {residual:.3e}")]
    IllPosed { residual: f64 },
    #[error("target ({x}, {y}) lies inside the closed scatterer support")]
    TargetInsideDomain { x: f64, y: f64 },
    #[error("dense system is singular")]
    SingularSystem,
    #[error("no convergence: {0}")]
    NonConvergent(String),
    #[error("singular value decomposition failed to converge")]
    SvdFailed,
}

pub type Result<T> = std::result::Result<T, Error>;
