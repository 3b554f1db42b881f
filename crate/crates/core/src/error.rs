use thiserror::Error;

use crate::optimizer::OcpSolution;
use crate::state::NewtonReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("interpolant violates the zero boundary condition: f(0) = {left}, f(1) = {right}")]
    InfeasibleInterpolant { left: f64, right: f64 },

    #[error("singular tridiagonal system: pivot {pivot:e} at row {row}")]
    SingularMatrix { row: usize, pivot: f64 },

    #[error("Newton iteration did not converge after {} iterations (last residual {:e})",
        .0.iterations, .0.residual_history.last().copied().unwrap_or(f64::NAN))]
    NewtonNonconvergence(Box<NewtonReport>),

    #[error("stability bound violated: |y_h|_H1 = {seminorm:e} > |f|/nu = {bound:e}")]
    StabilityViolation { seminorm: f64, bound: f64 },

    #[error("optimizer did not converge after {} iterations", .0.iterations)]
    OcpNonconvergence(Box<OcpSolution>),

    #[error("problem validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("declared exact solution violates the optimality system: {}", format_residuals(.0))]
    ExactTripleInconsistent(Vec<(String, f64)>),

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_residuals(residuals: &[(String, f64)]) -> String {
    residuals
        .iter()
        .map(|(name, r)| format!("{name} = {r:e}"))
        .collect::<Vec<_>>()
        .join(", ")
}

impl Error {
    /// True for failures of an iterative solver, as opposed to bad input.
    pub fn is_nonconvergence(&self) -> bool {
        matches!(
            self,
            Error::NewtonNonconvergence(_) | Error::OcpNonconvergence(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
