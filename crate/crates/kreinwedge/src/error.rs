use thiserror::Error;

/// Errors raised by the library. Variant names mirror the failure modes
/// documented on each operation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid refinement did not stabilize: {0}")]
    ResolutionLimit(String),
    #[error("unsatisfiable request: {0}")]
    Unsatisfiable(String),
    #[error("quadrature unstable: {0}")]
    QuadratureUnstable(String),
    #[error("series tail not certified: bound {bound:.3e} exceeds {tolerance:.3e}")]
    TailNotCertified { bound: f64, tolerance: f64 },
    #[error("degree {degree} exceeds cap {cap}")]
    DegreeCapExceeded { degree: usize, cap: usize },
    #[error("complex boost requires mollified slots: {0}")]
    NotAnalytic(String),
    #[error("supports are not spacelike separated (margin {margin:.3e})")]
    NotSpacelike { margin: f64 },
    #[error("fit underdetermined: {0}")]
    FitUnderdetermined(String),
    #[error("ill-conditioned eigenproblem: {0}")]
    IllConditioned(String),
    #[error("density has no mass gap")]
    NoMassGap,
    #[error("domain defect {defect:.3e} exceeds {tolerance:.3e}")]
    DomainDefectExceeded { defect: f64, tolerance: f64 },
    #[error("requested power {requested} exceeds series cap {cap}")]
    SeriesCap { requested: usize, cap: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
