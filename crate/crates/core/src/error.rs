use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate interval: a = {a} must be strictly less than b = {b}")]
    DegenerateInterval { a: f64, b: f64 },

    #[error("number of intervals must be even and at least 2, got {0}")]
    InvalidIntervals(usize),

    #[error("operands live on different grids")]
    GridMismatch,

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("operator degree must be at least 1")]
    ZeroDegree,

    #[error("coefficient P_{k} is not finite at node {node} (x = {x})")]
    NonFiniteCoefficient { k: usize, node: usize, x: f64 },

    #[error("non-finite value at node {node} (x = {x})")]
    NonFiniteSample { node: usize, x: f64 },

    #[error("non-finite kernel sample at node pair ({i}, {j})")]
    NonFiniteKernel { i: usize, j: usize },

    #[error("exponential overflow at node pair ({i}, {j})")]
    Overflow { i: usize, j: usize },

    #[error("singular pivot at node {node}: |pivot| = {pivot:e}")]
    SingularPivot { node: usize, pivot: f64 },

    #[error("resolvent series did not converge: {terms_used} terms, last term sup-norm {last_term_norm:e}")]
    NotConverged { terms_used: usize, last_term_norm: f64 },

    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),

    #[error("derivative of order {order} requested, only orders up to {available} are available")]
    DerivativeUnavailable { order: usize, available: usize },

    #[error("derivative order {order} exceeds operator degree {degree}")]
    OrderOutOfRange { order: usize, degree: usize },

    #[error("leading coefficient vanishes")]
    LeadingCoefficientZero,

    #[error("root iteration did not converge after {sweeps} sweeps (max residual {max_residual:e})")]
    RootsNotConverged { sweeps: usize, max_residual: f64 },

    #[error("imaginary residue {ratio:e} exceeds tolerance for real coefficients")]
    ImaginaryResidue { ratio: f64 },

    #[error("grid too coarse: need at least {required} intervals, got {got}")]
    GridTooCoarse { required: usize, got: usize },

    #[error("initial conditions anchored at {anchor}, expected {expected}")]
    AnchorMismatch { anchor: f64, expected: f64 },

    #[error("resonant interval: Wronskian {w:e} is indistinguishable from zero (scale {scale:e})")]
    Resonant { w: f64, scale: f64 },

    #[error("empty factor list")]
    EmptyFactorList,

    #[error("non-finite input: {0}")]
    NonFiniteInput(String),
}

impl Error {
    /// Stable machine-readable identifier.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DegenerateInterval { .. } => "degenerate_interval",
            Error::InvalidIntervals(_) => "invalid_intervals",
            Error::GridMismatch => "grid_mismatch",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::ZeroDegree => "zero_degree",
            Error::NonFiniteCoefficient { .. } => "non_finite_coefficient",
            Error::NonFiniteSample { .. } => "non_finite_sample",
            Error::NonFiniteKernel { .. } => "non_finite_kernel",
            Error::Overflow { .. } => "overflow",
            Error::SingularPivot { .. } => "singular_pivot",
            Error::NotConverged { .. } => "not_converged",
            Error::InvalidTolerance(_) => "invalid_tolerance",
            Error::DerivativeUnavailable { .. } => "derivative_unavailable",
            Error::OrderOutOfRange { .. } => "order_out_of_range",
            Error::LeadingCoefficientZero => "leading_coefficient_zero",
            Error::RootsNotConverged { .. } => "roots_not_converged",
            Error::ImaginaryResidue { .. } => "imaginary_residue",
            Error::GridTooCoarse { .. } => "grid_too_coarse",
            Error::AnchorMismatch { .. } => "anchor_mismatch",
            Error::Resonant { .. } => "resonant",
            Error::EmptyFactorList => "empty_factor_list",
            Error::NonFiniteInput(_) => "non_finite_input",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
