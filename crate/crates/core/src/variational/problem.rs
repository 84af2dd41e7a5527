use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::symexpr::{parse, Dims, Expr, VarRef};

use super::conditions::Conditions;

/// Higher-order problem: stationarize
/// `(1/Γ(α)) ∫_a^t L(θ, q, q', …, q^(m)) (t−θ)^(α−1) dθ`
/// with `q^(i)(a)` prescribed for `i < m`.
#[derive(Debug, Clone)]
pub struct FalvaProblem {
    pub alpha: f64,
    pub a: f64,
    /// Observer time, also the upper integration limit.
    pub t: f64,
    pub m: usize,
    pub state_dim: usize,
    pub lagrangian: Expr,
    /// `initial[i][c] = q_c^(i)(a)`, `i = 0..m`.
    pub initial: Vec<Vec<f64>>,
    conditions: OnceLock<Arc<Conditions>>,
}

impl FalvaProblem {
    pub fn new(
        alpha: f64,
        a: f64,
        t: f64,
        m: usize,
        state_dim: usize,
        lagrangian: Expr,
        initial: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidProblem(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        if !(a < t) {
            return Err(Error::InvalidProblem(format!("need a < t, got a = {a}, t = {t}")));
        }
        if m == 0 {
            return Err(Error::InvalidProblem("derivative order m must be at least 1".into()));
        }
        if state_dim == 0 {
            return Err(Error::InvalidProblem("state_dim must be at least 1".into()));
        }
        for v in lagrangian.vars() {
            match v {
                VarRef::Theta => {}
                VarRef::State(i, d) if i < state_dim && d <= m => {}
                other => {
                    return Err(Error::InvalidProblem(format!("lagrangian may not reference `{other}`")));
                }
            }
        }
        if initial.len() != m || initial.iter().any(|row| row.len() != state_dim) {
            return Err(Error::InvalidProblem(format!(
                "initial data must be {m} rows of {state_dim} values"
            )));
        }
        Ok(FalvaProblem { alpha, a, t, m, state_dim, lagrangian, initial, conditions: OnceLock::new() })
    }

    /// Parses the Lagrangian from formula text.
    pub fn parse(
        alpha: f64,
        a: f64,
        t: f64,
        m: usize,
        state_dim: usize,
        lagrangian: &str,
        initial: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let expr = parse(lagrangian, &Dims::new(state_dim, 0, m))?;
        Self::new(alpha, a, t, m, state_dim, expr, initial)
    }

    /// Same problem at a different α.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(alpha, self.a, self.t, self.m, self.state_dim, self.lagrangian.clone(), self.initial.clone())
    }

    /// Jet order used for residual evaluation (`2m`).
    pub fn jet_order(&self) -> usize {
        2 * self.m
    }

    /// Latest θ at which residuals are evaluated for margin `epsilon_rel`.
    pub fn interior_limit(&self, epsilon_rel: f64) -> f64 {
        self.t - epsilon_rel * (self.t - self.a)
    }

    /// Symbolic optimality conditions, built once and shared.
    pub fn conditions(&self) -> Arc<Conditions> {
        self.conditions.get_or_init(|| Arc::new(Conditions::build(self))).clone()
    }
}
