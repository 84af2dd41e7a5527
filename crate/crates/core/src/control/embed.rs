use crate::error::Result;
use crate::symexpr::{eval, partial, total_derivative, total_derivative_n, Expr, VarRef};
use crate::trajectory::Trajectory;
use crate::variational::FalvaProblem;

use super::{ControlJet, ControlProblem};

/// Rewrites an order-m variational problem as a control problem with
/// stacked state `x_{d·n+c} = q_c^(d)` for `d < m`, control `u_c = q_c^(m)`
/// and velocity `x_{d·n+c}' = x_{(d+1)·n+c}`, `x_{(m−1)·n+c}' = u_c`.
pub fn embed_variational(pb: &FalvaProblem) -> Result<ControlProblem> {
    let (n, m) = (pb.state_dim, pb.m);
    let lagrangian = pb.lagrangian.substitute(&|v| match v {
        VarRef::State(c, d) if d < m => Some(Expr::var(VarRef::State(d * n + c, 0))),
        VarRef::State(c, _) => Some(Expr::var(VarRef::Control(c))),
        _ => None,
    });
    let velocity = (0..m)
        .flat_map(|d| {
            (0..n).map(move |c| {
                if d + 1 < m {
                    Expr::var(VarRef::State((d + 1) * n + c, 0))
                } else {
                    Expr::var(VarRef::Control(c))
                }
            })
        })
        .collect();
    let q_a = pb.initial.iter().flatten().copied().collect();
    ControlProblem::new(pb.alpha, pb.a, pb.t, n, lagrangian, velocity, q_a)
}

/// Costate a variational trajectory induces on the embedded problem:
/// `p_{d,c} = −Σ_{i=0}^{m−d−1} (−1)^i d^i/dθ^i [(t−θ)^(α−1) ∂L/∂q_c^(i+d+1)]`,
/// built symbolically along with its total derivative.
#[derive(Debug, Clone)]
pub struct EmbeddedCostate {
    /// Indexed like the stacked state.
    pub p: Vec<Expr>,
    pub p_dot: Vec<Expr>,
    /// `(t−θ)^(α−1)`.
    pub weight: Expr,
}

impl EmbeddedCostate {
    pub fn build(pb: &FalvaProblem) -> Self {
        let (n, m) = (pb.state_dim, pb.m);
        let weight = Expr::pow(Expr::sub(Expr::constant(pb.t), Expr::theta()), Expr::constant(pb.alpha - 1.0));
        let weighted = |k: usize, c: usize| Expr::mul(weight.clone(), partial(&pb.lagrangian, VarRef::State(c, k)));
        let p: Vec<Expr> = (0..m)
            .flat_map(|d| (0..n).map(move |c| (d, c)))
            .map(|(d, c)| {
                let terms = (0..m - d).map(|i| {
                    let term = total_derivative_n(&weighted(i + d + 1, c), i);
                    if i % 2 == 0 { term } else { Expr::neg(term) }
                });
                Expr::neg(Expr::sum(terms))
            })
            .collect();
        let p_dot = p.iter().map(total_derivative).collect();
        EmbeddedCostate { p, p_dot, weight }
    }
}

/// `(x, x', u, u', p, p')` of the embedded problem induced by the
/// variational trajectory `tr` at θ.
pub fn induced_control_jet(pb: &FalvaProblem, costate: &EmbeddedCostate, tr: &Trajectory, theta: f64) -> Result<ControlJet> {
    let (n, m) = (pb.state_dim, pb.m);
    if theta >= pb.t {
        return Err(crate::Error::SingularPoint { theta, t: pb.t });
    }
    let jet = tr.jet_at(theta, pb.jet_order())?;
    let stack = |shift: usize| -> Vec<f64> {
        (0..m).flat_map(|d| (0..n).map(move |c| (d, c))).map(|(d, c)| jet.q[c][d + shift]).collect()
    };
    let values = |exprs: &[Expr]| -> Result<Vec<f64>> { exprs.iter().map(|e| Ok(eval(e, &jet)?)).collect() };
    Ok(ControlJet {
        theta,
        q: stack(0),
        q_dot: stack(1),
        u: (0..n).map(|c| jet.q[c][m]).collect(),
        u_dot: (0..n).map(|c| jet.q[c][m + 1]).collect(),
        p: values(&costate.p)?,
        p_dot: values(&costate.p_dot)?,
    })
}
