use nalgebra::{DMatrix, DVector};

use super::{boundary_rows, finish, flatten, initial_guess, jet_from_basis, sup_norm, unflatten, BoundaryMode};
use super::{Method, SolveConfig, SolveResult};
use crate::error::{Error, Result};
use crate::specquad::{gamma, truncated_rule};
use crate::symexpr::{eval, partial, Expr, VarRef};
use crate::trajectory::{basis_values, Trajectory};
use crate::variational::FalvaProblem;

/// Discretized action with its symbolic first and second partials.
struct DiscreteAction {
    n: usize,
    m: usize,
    len: usize,
    nodes: Vec<f64>,
    /// Quadrature weights divided by Γ(α).
    weights: Vec<f64>,
    /// `basis[k][d][j]`.
    basis: Vec<Vec<Vec<f64>>>,
    /// `grad[c][d] = ∂L/∂q_c^(d)`.
    grad: Vec<Vec<Expr>>,
    /// `hess[(c,d)][(c',e)]`, flattened slot index `c·(m+1)+d`.
    hess: Vec<Vec<Expr>>,
}

impl DiscreteAction {
    fn new(pb: &FalvaProblem, cfg: &SolveConfig, interval: (f64, f64)) -> Result<Self> {
        let (n, m) = (pb.state_dim, pb.m);
        let rule = truncated_rule(pb.alpha, interval.0, interval.1, pb.t, cfg.resolved_quad_points(pb))?;
        let g = gamma(pb.alpha)?;
        let basis = rule.nodes.iter().map(|&x| basis_values(interval, cfg.degree, x, m)).collect();
        let slots: Vec<(usize, usize)> = (0..n).flat_map(|c| (0..=m).map(move |d| (c, d))).collect();
        let grad: Vec<Vec<Expr>> =
            (0..n).map(|c| (0..=m).map(|d| partial(&pb.lagrangian, VarRef::State(c, d))).collect()).collect();
        let hess = slots
            .iter()
            .map(|&(c, d)| slots.iter().map(|&(c2, d2)| partial(&grad[c][d], VarRef::State(c2, d2))).collect())
            .collect();
        Ok(DiscreteAction {
            n,
            m,
            len: cfg.degree + 1,
            weights: rule.weights.iter().map(|w| w / g).collect(),
            nodes: rule.nodes,
            basis,
            grad,
            hess,
        })
    }

    fn gradient(&self, coeffs: &[Vec<f64>]) -> Result<DVector<f64>> {
        let (n, m, len) = (self.n, self.m, self.len);
        let mut grad = DVector::zeros(n * len);
        for (k, (&theta, &w)) in self.nodes.iter().zip(&self.weights).enumerate() {
            let jet = jet_from_basis(theta, coeffs, &self.basis[k]);
            for c in 0..n {
                for d in 0..=m {
                    let gv = w * eval(&self.grad[c][d], &jet)?;
                    if gv != 0.0 {
                        for (j, b) in self.basis[k][d].iter().enumerate() {
                            grad[c * len + j] += gv * b;
                        }
                    }
                }
            }
        }
        Ok(grad)
    }

    /// `H = Σ_(s,r) B_sᵀ diag(W · ∂²L/∂s∂r) B_r`, one block per slot pair.
    fn hessian(&self, coeffs: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        let (n, m, len) = (self.n, self.m, self.len);
        let slots = n * (m + 1);
        let q = self.nodes.len();
        let mut h_vals = vec![vec![0.0; q]; slots * slots];
        for (k, (&theta, &w)) in self.nodes.iter().zip(&self.weights).enumerate() {
            let jet = jet_from_basis(theta, coeffs, &self.basis[k]);
            for (s, row) in self.hess.iter().enumerate() {
                for (r, e) in row.iter().enumerate() {
                    if !e.is_zero() {
                        h_vals[s * slots + r][k] = w * eval(e, &jet)?;
                    }
                }
            }
        }
        let b_mats: Vec<DMatrix<f64>> =
            (0..=m).map(|d| DMatrix::from_fn(q, len, |k, j| self.basis[k][d][j])).collect();
        let mut hess = DMatrix::zeros(n * len, n * len);
        for s in 0..slots {
            for r in 0..slots {
                let vals = &h_vals[s * slots + r];
                if vals.iter().all(|v| *v == 0.0) {
                    continue;
                }
                let (cs, ds) = (s / (m + 1), s % (m + 1));
                let (cr, dr) = (r / (m + 1), r % (m + 1));
                let mut scaled = b_mats[dr].clone();
                for (k, v) in vals.iter().enumerate() {
                    scaled.row_mut(k).scale_mut(*v);
                }
                let block = b_mats[ds].transpose() * scaled;
                let mut target = hess.view_mut((cs * len, cr * len), (len, len));
                target += block;
            }
        }
        Ok(hess)
    }
}

/// Directional derivative of the action at `tr` along `direction`,
/// `(1/Γ(α)) Σ_k W_k Σ_d ∂L/∂q^(d) · v^(d)`, evaluated in function space.
pub fn action_gradient(pb: &FalvaProblem, tr: &Trajectory, direction: &Trajectory, n: usize) -> Result<f64> {
    let (a, b) = tr.interval();
    let rule = truncated_rule(pb.alpha, a, b, pb.t, n)?;
    let partials: Vec<Vec<Expr>> = (0..pb.state_dim)
        .map(|c| (0..=pb.m).map(|d| partial(&pb.lagrangian, VarRef::State(c, d))).collect())
        .collect();
    let mut acc = 0.0;
    for (&theta, &w) in rule.nodes.iter().zip(&rule.weights) {
        let jet = tr.jet_at(theta, pb.m)?;
        let dir = direction.jet_at(theta, pb.m)?;
        for (c, row) in partials.iter().enumerate() {
            for (d, e) in row.iter().enumerate() {
                acc += w * eval(e, &jet)? * dir.q[c][d];
            }
        }
    }
    Ok(acc / gamma(pb.alpha)?)
}

/// Ritz method: Newton on the KKT system of the discrete action restricted
/// to coefficient vectors meeting the fixed-end data.
pub fn solve_direct(pb: &FalvaProblem, cfg: &SolveConfig) -> Result<SolveResult> {
    cfg.validate(pb)?;
    if !matches!(cfg.boundary, BoundaryMode::FixedEnds { .. }) {
        return Err(Error::InvalidConfig("the direct solver needs fixed_ends boundary data".into()));
    }
    let interval = (pb.a, cfg.end(pb));
    let (n, len) = (pb.state_dim, cfg.degree + 1);
    let dim = n * len;
    let rows = boundary_rows(pb, cfg, interval);
    let nc = rows.len();
    let mut constraint = DMatrix::zeros(nc, dim);
    for (i, r) in rows.iter().enumerate() {
        for (j, v) in r.row.iter().enumerate() {
            constraint[(i, r.comp * len + j)] = *v;
        }
    }

    let discrete = DiscreteAction::new(pb, cfg, interval)?;
    let mut c = flatten(&initial_guess(pb, cfg, &rows)?);
    let mut residual = f64::INFINITY;

    for iter in 1..=cfg.max_iters {
        let coeffs = unflatten(&c, n);
        let grad = discrete.gradient(&coeffs)?;
        let hess = discrete.hessian(&coeffs)?;
        let mut kkt = DMatrix::zeros(dim + nc, dim + nc);
        kkt.view_mut((0, 0), (dim, dim)).copy_from(&hess);
        kkt.view_mut((0, dim), (dim, nc)).copy_from(&constraint.transpose());
        kkt.view_mut((dim, 0), (nc, dim)).copy_from(&constraint);
        let mut rhs = DVector::zeros(dim + nc);
        rhs.rows_mut(0, dim).copy_from(&(-&grad));
        let sol = kkt
            .lu()
            .solve(&rhs)
            .filter(|s| s.iter().all(|v| v.is_finite()))
            .ok_or_else(|| Error::SingularJacobian("KKT matrix of the discrete action".into()))?;
        let step = sol.rows(0, dim).into_owned();
        let multipliers = sol.rows(dim, nc).into_owned();
        // Projected gradient at the current iterate: G + Bᵀλ = −HΔ.
        let projected = &grad + constraint.transpose() * &multipliers;
        residual = sup_norm(&projected);
        let step_small = sup_norm(&step) <= cfg.newton_tol * (1.0 + sup_norm(&c));
        if residual <= cfg.newton_tol || step_small {
            c += step;
            let tr = Trajectory::new(interval, unflatten(&c, n))?;
            return finish(pb, cfg, Method::Direct, tr, iter, residual);
        }

        let merit = |v: &DVector<f64>| -> Result<f64> {
            let g = discrete.gradient(&unflatten(v, n))?;
            Ok((g + constraint.transpose() * &multipliers).norm())
        };
        let base = projected.norm();
        let mut s = 1.0;
        loop {
            let trial = &c + &step * s;
            if merit(&trial)? <= (1.0 - 1e-4 * s) * base || s < 1e-3 {
                c = trial;
                break;
            }
            s *= 0.5;
        }
    }
    Err(Error::NonConvergence { iterations: cfg.max_iters, residual })
}
