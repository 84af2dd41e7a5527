use nalgebra::{DMatrix, DVector};

use super::{boundary_rows, finish, flatten, initial_guess, jet_from_basis, solver_nodes, sup_norm, unflatten};
use super::{Method, SolveConfig, SolveResult};
use crate::error::{Error, Result};
use crate::symexpr::{eval, partial, Expr, VarRef};
use crate::trajectory::{basis_values, Trajectory};
use crate::variational::FalvaProblem;

/// Collocation system: EL rows at interior nodes followed by boundary rows.
struct Collocation {
    n: usize,
    order: usize,
    len: usize,
    nodes: Vec<f64>,
    /// `basis[k][d][j]` at collocation node `k`, `d ≤ 2m`.
    basis: Vec<Vec<Vec<f64>>>,
    el: Vec<Expr>,
    /// `el_partials[c][c'][d] = ∂EL_c/∂q_c'^(d)`.
    el_partials: Vec<Vec<Vec<Expr>>>,
    boundary: DMatrix<f64>,
    boundary_values: DVector<f64>,
}

impl Collocation {
    fn rows(&self) -> usize {
        self.n * self.nodes.len() + self.boundary.nrows()
    }

    fn residual(&self, c: &DVector<f64>) -> Result<DVector<f64>> {
        let coeffs = unflatten(c, self.n);
        let mut r = DVector::zeros(self.rows());
        for (k, &theta) in self.nodes.iter().enumerate() {
            let jet = jet_from_basis(theta, &coeffs, &self.basis[k]);
            for (comp, e) in self.el.iter().enumerate() {
                r[k * self.n + comp] = eval(e, &jet)?;
            }
        }
        let off = self.n * self.nodes.len();
        let b = &self.boundary * c - &self.boundary_values;
        r.rows_mut(off, b.len()).copy_from(&b);
        Ok(r)
    }

    fn jacobian(&self, c: &DVector<f64>) -> Result<DMatrix<f64>> {
        let coeffs = unflatten(c, self.n);
        let (n, len) = (self.n, self.len);
        let mut jac = DMatrix::zeros(self.rows(), n * len);
        let mut top = DMatrix::zeros(n, n);
        for (k, &theta) in self.nodes.iter().enumerate() {
            let jet = jet_from_basis(theta, &coeffs, &self.basis[k]);
            for comp in 0..n {
                let row = k * n + comp;
                for other in 0..n {
                    for d in 0..=self.order {
                        let e = &self.el_partials[comp][other][d];
                        if e.is_zero() {
                            continue;
                        }
                        let v = eval(e, &jet)?;
                        if d == self.order {
                            top[(comp, other)] = v;
                        }
                        for (j, b) in self.basis[k][d].iter().enumerate() {
                            jac[(row, other * len + j)] += v * b;
                        }
                    }
                }
            }
            legendre_check(&top, theta)?;
            top.fill(0.0);
        }
        let off = n * self.nodes.len();
        jac.view_mut((off, 0), (self.boundary.nrows(), n * len)).copy_from(&self.boundary);
        Ok(jac)
    }
}

/// The EL equation must be solvable for `q^(2m)`: the coefficient matrix of
/// the top derivative has to be well conditioned.
fn legendre_check(top: &DMatrix<f64>, theta: f64) -> Result<()> {
    let scale = top.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return Err(Error::LegendreCondition { theta });
    }
    let sv = top.singular_values();
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if smin <= 1e-12 * scale {
        return Err(Error::LegendreCondition { theta });
    }
    Ok(())
}

/// Chebyshev collocation of the order-2m Euler-Lagrange system, Newton with
/// backtracking on the residual norm.
pub fn solve_indirect(pb: &FalvaProblem, cfg: &SolveConfig) -> Result<SolveResult> {
    cfg.validate(pb)?;
    let interval = (pb.a, cfg.end(pb));
    let (n, len, order) = (pb.state_dim, cfg.degree + 1, pb.jet_order());
    let rows = boundary_rows(pb, cfg, interval);
    let mut boundary = DMatrix::zeros(rows.len(), n * len);
    for (i, r) in rows.iter().enumerate() {
        for (j, v) in r.row.iter().enumerate() {
            boundary[(i, r.comp * len + j)] = *v;
        }
    }
    let boundary_values = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.value));

    let conditions = pb.conditions();
    let el = conditions.el_expressions.clone();
    let el_partials = el
        .iter()
        .map(|e| (0..n).map(|c| (0..=order).map(|d| partial(e, VarRef::State(c, d))).collect()).collect())
        .collect();
    let nodes = solver_nodes(pb, cfg, interval);
    let basis = nodes.iter().map(|&x| basis_values(interval, cfg.degree, x, order)).collect();
    let system = Collocation { n, order, len, nodes, basis, el, el_partials, boundary, boundary_values };

    let mut c = flatten(&initial_guess(pb, cfg, &rows)?);
    let mut r = system.residual(&c)?;
    let mut residual = sup_norm(&r);
    let mut stalled = 0;
    for iter in 1..=cfg.max_iters {
        let jac = system.jacobian(&c)?;
        let step = jac
            .lu()
            .solve(&(-&r))
            .filter(|s| s.iter().all(|v| v.is_finite()))
            .ok_or_else(|| Error::SingularJacobian("collocation Jacobian".into()))?;
        let base = r.norm();
        let mut s = 1.0;
        let (trial, trial_r) = loop {
            let trial = &c + &step * s;
            let trial_r = system.residual(&trial)?;
            if trial_r.norm() <= (1.0 - 1e-4 * s) * base || s < 1e-3 {
                break (trial, trial_r);
            }
            s *= 0.5;
        };
        let trial_residual = sup_norm(&trial_r);
        if trial_residual >= residual {
            stalled += 1;
        } else {
            stalled = 0;
        }
        c = trial;
        r = trial_r;
        residual = trial_residual;
        if residual <= cfg.newton_tol {
            let tr = Trajectory::new(interval, unflatten(&c, n))?;
            return finish(pb, cfg, Method::Indirect, tr, iter, residual);
        }
        if stalled >= 3 {
            return Err(Error::NonConvergence { iterations: iter, residual });
        }
    }
    Err(Error::NonConvergence { iterations: cfg.max_iters, residual })
}
