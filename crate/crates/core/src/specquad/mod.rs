//! Gamma function, binomials, Gamma-ratio products and quadrature rules for
//! the weight `(t−θ)^(α−1)`.

mod gamma;
mod jacobi;

pub use gamma::{binomial, gamma, gamma_ratio};
pub use jacobi::{integrate, jacobi_rule, legendre_rule, truncated_rule, QuadratureRule};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("gamma function has a pole at {0}")]
    GammaPole(f64),
    #[error("alpha must lie in (0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("invalid interval ({0}, {1})")]
    InvalidInterval(f64, f64),
    #[error("a quadrature rule needs at least one node")]
    EmptyRule,
    #[error("tridiagonal eigenvalue iteration did not converge")]
    EigenNoConvergence,
}
