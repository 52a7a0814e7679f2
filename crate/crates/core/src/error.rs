use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("Bergman operator is numerically singular (reciprocal condition {rcond:.3e})")]
    SingularBergmanOperator { rcond: f64 },

    #[error("point lies outside the open domain (spectral norm {norm})")]
    PointOutsideDomain { norm: f64 },

    #[error("Gamma function pole at argument {arg}")]
    PoleError { arg: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("weight {lambda} does not carry a Hilbert module structure ({class})")]
    NotAModuleWeight { lambda: f64, class: String },

    #[error("kernel power evaluated on the branch cut (Re = {re})")]
    BranchCutError { re: f64 },

    #[error("unsupported domain for this operation: {0}")]
    UnsupportedDomain(String),

    #[error("submodule span is empty")]
    EmptySpan,

    #[error("denominator vanishes on the closed domain (min |q| = {min_modulus:.3e})")]
    DenominatorVanishes { min_modulus: f64 },

    #[error("matrix is numerically singular (condition {condition:.3e})")]
    NumericallySingular { condition: f64 },

    #[error("operators do not commute (defect {defect:.3e})")]
    NotCommuting { defect: f64 },

    #[error("affine transform is not permissive (joint eigenvalue spectral norm {norm})")]
    NotPermissive { norm: f64 },

    #[error("joint eigenvalue randomizations disagree by {gap:.3e}")]
    ConsensusFailure { gap: f64 },

    #[error("joint spectrum touches the boundary (spectral norm {norm})")]
    SpectrumTouchesBoundary { norm: f64 },

    #[error("series did not converge after {degrees} degree blocks")]
    SeriesDivergence { degrees: usize },

    #[error("quadrature under-resolved: estimated error {estimate:.3e} > tolerance {tolerance:.3e}")]
    QuadratureUnderResolved { estimate: f64, tolerance: f64 },

    #[error("denominator nearly vanishes on the joint spectrum (min |q| = {min_modulus:.3e})")]
    SingularDenominator { min_modulus: f64 },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("cache format error: {0}")]
    Cache(String),
}

pub type Result<T> = std::result::Result<T, Error>;
