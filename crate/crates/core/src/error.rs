use thiserror::Error;

use crate::specquad::QuadError;
use crate::symexpr::{EvalError, ParseError};
use crate::trajectory::TrajectoryError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("theta = {theta} is at or beyond the observer time t = {t}")]
    SingularPoint { theta: f64, t: f64 },
    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("singular linear system: {0}")]
    SingularJacobian(String),
    #[error("Lagrangian is not regular at theta = {theta}: top-order coefficient is singular")]
    LegendreCondition { theta: f64 },
    #[error("ODE integration failed: {0}")]
    Integration(String),
    #[error("control elimination failed at theta = {theta}: {reason}")]
    ControlElimination { theta: f64, reason: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
