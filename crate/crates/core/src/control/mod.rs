//! Two-time optimal control: stationarize
//! `(1/Γ(α)) ∫_a^t L(θ, q, u) (t−θ)^(α−1) dθ` subject to `q' = φ(θ, q, u)`,
//! `q(a) = q_a`, with the Hamiltonian
//!
//! ```text
//! H(θ, q, u, p) = L(θ, q, u) (t−θ)^(α−1) + p · φ(θ, q, u)
//! ```
//!
//! A Pontryagin extremal satisfies `q' = ∂H/∂p`, `p' = −∂H/∂q`, `∂H/∂u = 0`,
//! and along it `dH/dθ = ∂H/∂θ`. For α < 1 the weight makes `H` depend on θ
//! explicitly, so `H` is not conserved even for autonomous `L` and `φ`.

mod embed;
mod ode;
mod shooting;

pub use embed::{embed_variational, induced_control_jet, EmbeddedCostate};
pub use ode::{integrate, OdeError, OdeStats};
pub use shooting::{solve_shooting, ShootingConfig, ShootingResult};

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specquad::{gamma, truncated_rule};
use crate::symexpr::{eval, parse, partial, Dims, Expr, Jet, VarRef};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone)]
pub struct ControlProblem {
    pub alpha: f64,
    pub a: f64,
    pub t: f64,
    pub state_dim: usize,
    pub control_dim: usize,
    /// `L(θ, q, u)`.
    pub lagrangian: Expr,
    /// `φ(θ, q, u)`, one entry per state component.
    pub velocity: Vec<Expr>,
    pub q_a: Vec<f64>,
    hamiltonian: OnceLock<Arc<Hamiltonian>>,
}

impl ControlProblem {
    pub fn new(
        alpha: f64,
        a: f64,
        t: f64,
        control_dim: usize,
        lagrangian: Expr,
        velocity: Vec<Expr>,
        q_a: Vec<f64>,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidProblem(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        if !(a < t) {
            return Err(Error::InvalidProblem(format!("need a < t, got a = {a}, t = {t}")));
        }
        let state_dim = velocity.len();
        if state_dim == 0 || control_dim == 0 {
            return Err(Error::InvalidProblem("state and control dimensions must be at least 1".into()));
        }
        if q_a.len() != state_dim {
            return Err(Error::InvalidProblem(format!("q_a has {} entries, expected {state_dim}", q_a.len())));
        }
        for e in std::iter::once(&lagrangian).chain(&velocity) {
            for v in e.vars() {
                match v {
                    VarRef::Theta => {}
                    VarRef::State(i, 0) if i < state_dim => {}
                    VarRef::Control(j) if j < control_dim => {}
                    other => {
                        return Err(Error::InvalidProblem(format!(
                            "control problem expressions may not reference `{other}`"
                        )))
                    }
                }
            }
        }
        Ok(ControlProblem {
            alpha,
            a,
            t,
            state_dim,
            control_dim,
            lagrangian,
            velocity,
            q_a,
            hamiltonian: OnceLock::new(),
        })
    }

    pub fn parse(
        alpha: f64,
        a: f64,
        t: f64,
        control_dim: usize,
        lagrangian: &str,
        velocity: &[&str],
        q_a: Vec<f64>,
    ) -> Result<Self> {
        let dims = Dims::new(velocity.len(), control_dim, 0);
        let l = parse(lagrangian, &dims)?;
        let phi = velocity.iter().map(|s| parse(s, &dims)).collect::<Result<Vec<_>, _>>()?;
        Self::new(alpha, a, t, control_dim, l, phi, q_a)
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(alpha, self.a, self.t, self.control_dim, self.lagrangian.clone(), self.velocity.clone(), self.q_a.clone())
    }

    /// Latest θ used for residuals and shooting for margin `epsilon_rel`.
    pub fn interior_limit(&self, epsilon_rel: f64) -> f64 {
        self.t - epsilon_rel * (self.t - self.a)
    }

    /// Hamiltonian and its partials, built once and shared.
    pub fn hamiltonian_parts(&self) -> Arc<Hamiltonian> {
        self.hamiltonian.get_or_init(|| Arc::new(Hamiltonian::build(self))).clone()
    }
}

/// `L (t−θ)^(α−1) + p·φ`.
pub fn hamiltonian(cp: &ControlProblem) -> Expr {
    let weight = Expr::pow(Expr::sub(Expr::constant(cp.t), Expr::theta()), Expr::constant(cp.alpha - 1.0));
    let running = Expr::mul(cp.lagrangian.clone(), weight);
    Expr::add(
        running,
        Expr::sum(cp.velocity.iter().enumerate().map(|(i, phi)| Expr::mul(Expr::var(VarRef::Costate(i)), phi.clone()))),
    )
}

/// `H` with its partials in the four argument groups θ, q, u, p.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    pub expr: Expr,
    pub d_theta: Expr,
    pub d_q: Vec<Expr>,
    pub d_u: Vec<Expr>,
    pub d_p: Vec<Expr>,
    /// `∂²H/∂u_i∂u_j`.
    pub d_uu: Vec<Vec<Expr>>,
}

impl Hamiltonian {
    fn build(cp: &ControlProblem) -> Self {
        let expr = hamiltonian(cp);
        let d_u: Vec<Expr> = (0..cp.control_dim).map(|j| partial(&expr, VarRef::Control(j))).collect();
        let d_uu = d_u.iter().map(|e| (0..cp.control_dim).map(|j| partial(e, VarRef::Control(j))).collect()).collect();
        Hamiltonian {
            d_theta: partial(&expr, VarRef::Theta),
            d_q: (0..cp.state_dim).map(|i| partial(&expr, VarRef::State(i, 0))).collect(),
            d_p: (0..cp.state_dim).map(|i| partial(&expr, VarRef::Costate(i))).collect(),
            d_u,
            d_uu,
            expr,
        }
    }
}

/// Pointwise data of a candidate `(q, u, p)` at θ, with first derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlJet {
    pub theta: f64,
    pub q: Vec<f64>,
    pub q_dot: Vec<f64>,
    pub u: Vec<f64>,
    pub u_dot: Vec<f64>,
    pub p: Vec<f64>,
    pub p_dot: Vec<f64>,
}

impl ControlJet {
    fn slots(&self) -> Jet {
        Jet::new(self.theta, self.q.iter().map(|&v| vec![v]).collect())
            .with_control(self.u.clone())
            .with_costate(self.p.clone())
    }
}

/// Pointwise gaps of the Hamiltonian system and the stationarity condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PontryaginGaps {
    /// `p' + ∂H/∂q`.
    pub adjoint_gap: Vec<f64>,
    /// `∂H/∂u`.
    pub stationarity_gap: Vec<f64>,
    /// `q' − ∂H/∂p`.
    pub dynamics_gap: Vec<f64>,
}

impl PontryaginGaps {
    pub fn max(&self) -> f64 {
        self.adjoint_gap
            .iter()
            .chain(&self.stationarity_gap)
            .chain(&self.dynamics_gap)
            .fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

/// `(q, u, p)` with a shared interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extremal {
    pub q: Trajectory,
    pub u: Trajectory,
    pub p: Trajectory,
}

impl Extremal {
    pub fn interval(&self) -> (f64, f64) {
        self.q.interval()
    }

    /// Values and first derivatives of all three curves at θ.
    pub fn jet_at(&self, theta: f64) -> Result<ControlJet> {
        let (q, u, p) = (self.q.jet_at(theta, 1)?, self.u.jet_at(theta, 1)?, self.p.jet_at(theta, 1)?);
        let col = |j: &Jet, d: usize| j.q.iter().map(|c| c[d]).collect::<Vec<_>>();
        Ok(ControlJet {
            theta,
            q: col(&q, 0),
            q_dot: col(&q, 1),
            u: col(&u, 0),
            u_dot: col(&u, 1),
            p: col(&p, 0),
            p_dot: col(&p, 1),
        })
    }
}

fn check_jet(cp: &ControlProblem, jet: &ControlJet) -> Result<()> {
    if jet.theta >= cp.t || !jet.theta.is_finite() {
        return Err(Error::SingularPoint { theta: jet.theta, t: cp.t });
    }
    let (n, r) = (cp.state_dim, cp.control_dim);
    let ok = jet.q.len() == n
        && jet.q_dot.len() == n
        && jet.p.len() == n
        && jet.p_dot.len() == n
        && jet.u.len() == r
        && jet.u_dot.len() == r;
    if !ok {
        return Err(Error::InvalidProblem(format!("control jet must have {n} state and {r} control entries")));
    }
    Ok(())
}

fn eval_all(exprs: &[Expr], jet: &Jet) -> Result<Vec<f64>> {
    exprs.iter().map(|e| eval(e, jet).map_err(Error::from)).collect()
}

/// Gaps at a pointwise jet.
pub fn pontryagin_gaps_at(cp: &ControlProblem, jet: &ControlJet) -> Result<PontryaginGaps> {
    check_jet(cp, jet)?;
    let h = cp.hamiltonian_parts();
    let slots = jet.slots();
    let d_q = eval_all(&h.d_q, &slots)?;
    let d_p = eval_all(&h.d_p, &slots)?;
    Ok(PontryaginGaps {
        adjoint_gap: jet.p_dot.iter().zip(&d_q).map(|(a, b)| a + b).collect(),
        stationarity_gap: eval_all(&h.d_u, &slots)?,
        dynamics_gap: jet.q_dot.iter().zip(&d_p).map(|(a, b)| a - b).collect(),
    })
}

/// Gaps along an extremal candidate at θ.
pub fn pontryagin_residuals(cp: &ControlProblem, ex: &Extremal, theta: f64) -> Result<PontryaginGaps> {
    pontryagin_gaps_at(cp, &ex.jet_at(theta)?)
}

/// `H`, `∂H/∂θ` and the chain-rule total derivative `dH/dθ` at a jet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRate {
    pub h: f64,
    pub d_theta: f64,
    pub total: f64,
}

impl EnergyRate {
    pub fn gap(&self) -> f64 {
        (self.total - self.d_theta).abs()
    }
}

pub fn energy_rate_at(cp: &ControlProblem, jet: &ControlJet) -> Result<EnergyRate> {
    check_jet(cp, jet)?;
    let h = cp.hamiltonian_parts();
    let slots = jet.slots();
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
    let d_theta = eval(&h.d_theta, &slots)?;
    let total = d_theta
        + dot(&eval_all(&h.d_q, &slots)?, &jet.q_dot)
        + dot(&eval_all(&h.d_u, &slots)?, &jet.u_dot)
        + dot(&eval_all(&h.d_p, &slots)?, &jet.p_dot);
    Ok(EnergyRate { h: eval(&h.expr, &slots)?, d_theta, total })
}

/// `|dH/dθ − ∂H/∂θ|` along the extremal candidate at θ.
pub fn energy_rate_gap(cp: &ControlProblem, ex: &Extremal, theta: f64) -> Result<f64> {
    Ok(energy_rate_at(cp, &ex.jet_at(theta)?)?.gap())
}

/// `C` with `|dH/dθ − ∂H/∂θ| ≤ C · max gap`: `|∂H/∂q|₁ + |u'|₁ + |∂H/∂p|₁`.
pub fn energy_gap_bound(cp: &ControlProblem, jet: &ControlJet) -> Result<f64> {
    check_jet(cp, jet)?;
    let h = cp.hamiltonian_parts();
    let slots = jet.slots();
    let l1 = |v: Vec<f64>| v.iter().map(|x| x.abs()).sum::<f64>();
    Ok(l1(eval_all(&h.d_q, &slots)?) + l1(jet.u_dot.clone()) + l1(eval_all(&h.d_p, &slots)?))
}

/// `(1/Γ(α)) ∫ L(θ, q, u) (t−θ)^(α−1) dθ` over the extremal's interval with
/// an `n`-point rule.
pub fn control_action(cp: &ControlProblem, ex: &Extremal, n: usize) -> Result<f64> {
    let (a, b) = ex.interval();
    let rule = truncated_rule(cp.alpha, a, b, cp.t, n)?;
    let integral = rule.try_integrate(|theta| -> Result<f64> {
        let jet = ex.jet_at(theta)?;
        Ok(eval(&cp.lagrangian, &jet.slots())?)
    })?;
    Ok(integral / gamma(cp.alpha)?)
}

/// Column names of [`extremal_table`].
pub fn extremal_header(cp: &ControlProblem) -> Vec<String> {
    let (n, r) = (cp.state_dim, cp.control_dim);
    let mut cols = vec!["theta".to_string()];
    for suffix in ["", "d1"] {
        cols.extend((0..n).map(|i| format!("q{i}{suffix}")));
        cols.extend((0..r).map(|j| format!("u{j}{suffix}")));
        cols.extend((0..n).map(|i| format!("p{i}{suffix}")));
    }
    cols.extend(["H".to_string(), "dH_dtheta".to_string()]);
    cols
}

/// Rows `(θ, q, u, p, q', u', p', H, ∂H/∂θ)` on `grid`.
pub fn extremal_table(cp: &ControlProblem, ex: &Extremal, grid: &[f64]) -> Result<Vec<Vec<f64>>> {
    grid.iter()
        .map(|&theta| {
            let jet = ex.jet_at(theta)?;
            let rate = energy_rate_at(cp, &jet)?;
            let mut row = vec![theta];
            for part in [&jet.q, &jet.u, &jet.p, &jet.q_dot, &jet.u_dot, &jet.p_dot] {
                row.extend(part.iter());
            }
            row.extend([rate.h, rate.d_theta]);
            Ok(row)
        })
        .collect()
}
