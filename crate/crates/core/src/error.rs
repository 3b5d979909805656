use alloc::string::String;

/// Errors raised by parameter validation and by the simulator.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("infeasible residual: a = {residual} exceeds the available shift {available}")]
    InfeasibleResidual { residual: f64, available: f64 },

    #[error(
        "component {index} has eigenvalue {eigenvalue} outside the curvature envelope [-{m}, {upper}]"
    )]
    CurvatureEnvelope {
        index: usize,
        eigenvalue: f64,
        m: f64,
        upper: f64,
    },

    #[error("point lies outside the domain of the regularizer")]
    OutsideDomain,

    #[error("datasets are not neighbors: {0}")]
    NotNeighbors(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// Checks that `value` is finite and strictly positive.
pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(
            name,
            alloc::format!("must be a positive finite real, got {value}"),
        ))
    }
}

/// Checks that `value` is finite and nonnegative.
pub(crate) fn require_nonnegative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(invalid(
            name,
            alloc::format!("must be a nonnegative finite real, got {value}"),
        ))
    }
}
