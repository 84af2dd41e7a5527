//! Two independent routes to stationary trajectories.
//!
//! [`solve_direct`] stationarizes the quadrature-discretized action over
//! Chebyshev coefficients. [`solve_indirect`] collocates the Euler-Lagrange
//! equation. Neither uses the other, so [`cross_validate`] is a genuine
//! oracle.
//!
//! Both work on `[a, θ_f]`. The paper fixes only `q^(i)(a)` for `i < m`, so
//! the remaining `m` conditions per component come from [`BoundaryMode`].

mod crossval;
mod direct;
mod indirect;

pub use crossval::{compare_trajectories, cross_validate, Comparison, CrossValidation};
pub use direct::{action_gradient, solve_direct};
pub use indirect::solve_indirect;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::{basis_values, chebyshev_nodes, Trajectory};
use crate::variational::{action, verify_identities, FalvaProblem, ResidualReport, DEFAULT_EPSILON_REL};

/// How the `2m` boundary conditions per component are closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BoundaryMode {
    /// `q^(i)(a)` for `i = m..2m−1`, one row of `state_dim` values per order.
    /// Orders below `m` come from the problem's initial data.
    InitialJet { higher: Vec<Vec<f64>> },
    /// `q^(i)(θ_f)` for `i = 0..m−1`, one row per order.
    FixedEnds { final_values: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    /// Chebyshev degree N.
    pub degree: usize,
    /// Quadrature points for the action; 0 picks a count that integrates
    /// quadratic Lagrangians exactly when α = 1/k.
    pub quad_points: usize,
    pub newton_tol: f64,
    pub max_iters: usize,
    pub boundary: BoundaryMode,
    /// Right end of the solve interval; `None` means `t` for α = 1 and
    /// `t − ε_rel(t−a)` otherwise.
    pub theta_f: Option<f64>,
    pub epsilon_rel: f64,
}

impl SolveConfig {
    pub fn new(boundary: BoundaryMode) -> Self {
        SolveConfig {
            degree: 32,
            quad_points: 0,
            newton_tol: 1e-10,
            max_iters: 50,
            boundary,
            theta_f: None,
            epsilon_rel: DEFAULT_EPSILON_REL,
        }
    }

    pub fn with_degree(mut self, degree: usize) -> Self {
        self.degree = degree;
        self
    }

    pub fn with_theta_f(mut self, theta_f: f64) -> Self {
        self.theta_f = Some(theta_f);
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.newton_tol = tol;
        self
    }

    /// Right end of the solve interval for `pb`.
    pub fn end(&self, pb: &FalvaProblem) -> f64 {
        match self.theta_f {
            Some(theta_f) => theta_f,
            None if pb.alpha == 1.0 => pb.t,
            None => pb.interior_limit(self.epsilon_rel),
        }
    }

    /// Quadrature size used for the action.
    pub fn resolved_quad_points(&self, pb: &FalvaProblem) -> usize {
        if self.quad_points > 0 {
            return self.quad_points;
        }
        let k = (1.0 / pb.alpha).ceil().min(8.0) as usize;
        k * (self.degree + pb.m + 2) + 16
    }

    pub fn validate(&self, pb: &FalvaProblem) -> Result<()> {
        if !(self.newton_tol > 0.0) {
            return Err(Error::InvalidConfig(format!("newton_tol must be positive, got {}", self.newton_tol)));
        }
        if self.degree < 2 * pb.m + 2 {
            return Err(Error::InvalidConfig(format!(
                "degree {} is below 2m + 2 = {}",
                self.degree,
                2 * pb.m + 2
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !(self.epsilon_rel >= 0.0 && self.epsilon_rel < 1.0) {
            return Err(Error::InvalidConfig(format!("epsilon_rel must lie in [0, 1), got {}", self.epsilon_rel)));
        }
        let end = self.end(pb);
        if !(end > pb.a && end <= pb.t) {
            return Err(Error::InvalidConfig(format!("theta_f = {end} must lie in (a, t] = ({}, {}]", pb.a, pb.t)));
        }
        let n = pb.state_dim;
        let shape_ok = |rows: &[Vec<f64>]| rows.len() == pb.m && rows.iter().all(|r| r.len() == n);
        match &self.boundary {
            BoundaryMode::InitialJet { higher } if !shape_ok(higher) => Err(Error::InvalidConfig(format!(
                "initial_jet needs {} rows of {n} values (orders m..2m−1)",
                pb.m
            ))),
            BoundaryMode::FixedEnds { final_values } if !shape_ok(final_values) => Err(Error::InvalidConfig(
                format!("fixed_ends needs {} rows of {n} values (orders 0..m−1)", pb.m),
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Direct,
    Indirect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub method: Method,
    pub trajectory: Trajectory,
    /// Residuals at the solver's interior nodes.
    pub residual_report: ResidualReport,
    /// Newton converged and the interior EL residual is within `10·newton_tol`.
    pub converged: bool,
    pub iterations: usize,
    /// Final Newton residual (collocation rows or projected action gradient).
    pub newton_residual: f64,
    pub action_value: f64,
    /// Chebyshev tail size, a proxy for the truncation error.
    pub discretization_estimate: f64,
}

/// One linear boundary condition `Σ_j row[j] · c_{comp, j} = value`.
struct BoundaryRow {
    comp: usize,
    row: Vec<f64>,
    value: f64,
}

fn boundary_rows(pb: &FalvaProblem, cfg: &SolveConfig, interval: (f64, f64)) -> Vec<BoundaryRow> {
    let (a, b) = interval;
    let nb = cfg.degree;
    let at_a = basis_values(interval, nb, a, 2 * pb.m - 1);
    let mut rows = Vec::with_capacity(2 * pb.m * pb.state_dim);
    for comp in 0..pb.state_dim {
        for i in 0..pb.m {
            rows.push(BoundaryRow { comp, row: at_a[i].clone(), value: pb.initial[i][comp] });
        }
        match &cfg.boundary {
            BoundaryMode::InitialJet { higher } => {
                for (k, row) in higher.iter().enumerate() {
                    rows.push(BoundaryRow { comp, row: at_a[pb.m + k].clone(), value: row[comp] });
                }
            }
            BoundaryMode::FixedEnds { final_values } => {
                let at_b = basis_values(interval, nb, b, pb.m - 1);
                for (i, row) in final_values.iter().enumerate() {
                    rows.push(BoundaryRow { comp, row: at_b[i].clone(), value: row[comp] });
                }
            }
        }
    }
    rows
}

/// Degree `2m−1` polynomial meeting every boundary row, padded to degree N.
fn initial_guess(pb: &FalvaProblem, cfg: &SolveConfig, rows: &[BoundaryRow]) -> Result<Vec<Vec<f64>>> {
    let k = 2 * pb.m;
    let mut coeffs = vec![vec![0.0; cfg.degree + 1]; pb.state_dim];
    for (comp, c) in coeffs.iter_mut().enumerate() {
        let own: Vec<&BoundaryRow> = rows.iter().filter(|r| r.comp == comp).collect();
        let mat = DMatrix::from_fn(k, k, |i, j| own[i].row[j]);
        let rhs = DVector::from_iterator(k, own.iter().map(|r| r.value));
        let sol = mat
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::SingularJacobian("boundary interpolation system".into()))?;
        c[..k].copy_from_slice(sol.as_slice());
    }
    Ok(coeffs)
}

/// Collocation / report nodes: `N + 1 − 2m` Chebyshev points inside the
/// solve interval, clipped to the interior margin.
fn solver_nodes(pb: &FalvaProblem, cfg: &SolveConfig, interval: (f64, f64)) -> Vec<f64> {
    let hi = interval.1.min(pb.t - cfg.epsilon_rel * (pb.t - pb.a));
    let hi = if hi <= interval.0 { interval.1 } else { hi };
    chebyshev_nodes(interval.0, hi, cfg.degree + 1 - 2 * pb.m)
}

fn flatten(coeffs: &[Vec<f64>]) -> DVector<f64> {
    DVector::from_iterator(coeffs.iter().map(Vec::len).sum(), coeffs.iter().flatten().copied())
}

fn unflatten(v: &DVector<f64>, state_dim: usize) -> Vec<Vec<f64>> {
    let len = v.len() / state_dim;
    (0..state_dim).map(|c| v.as_slice()[c * len..(c + 1) * len].to_vec()).collect()
}

/// Jet `q[c][d] = Σ_j coeffs[c][j] · basis[d][j]`.
fn jet_from_basis(theta: f64, coeffs: &[Vec<f64>], basis: &[Vec<f64>]) -> crate::symexpr::Jet {
    let q = coeffs
        .iter()
        .map(|c| basis.iter().map(|row| row.iter().zip(c).map(|(b, x)| b * x).sum()).collect())
        .collect();
    crate::symexpr::Jet::new(theta, q)
}

fn finish(
    pb: &FalvaProblem,
    cfg: &SolveConfig,
    method: Method,
    trajectory: Trajectory,
    iterations: usize,
    newton_residual: f64,
) -> Result<SolveResult> {
    let nodes = solver_nodes(pb, cfg, trajectory.interval());
    let residual_report = verify_identities(pb, &trajectory, &nodes)?;
    let action_value = action(pb, &trajectory, cfg.resolved_quad_points(pb))?;
    let converged = residual_report.norms.sup <= 10.0 * cfg.newton_tol;
    Ok(SolveResult {
        method,
        discretization_estimate: trajectory.tail_estimate(),
        trajectory,
        residual_report,
        converged,
        iterations,
        newton_residual,
        action_value,
    })
}

fn sup_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}
