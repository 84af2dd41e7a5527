//! Fractional action-like variational problems: the action functional, the
//! ψ stack, the friction force, the higher-order Euler-Lagrange and
//! DuBois-Reymond residuals, and the identities tying them together.
//!
//! For `L(θ, q, q', …, q^(m))` and `g_k = ∂L/∂q^(k)`:
//!
//! ```text
//! ψ^j  = Σ_{i=0}^{m−j} (−1)^i d^i/dθ^i g_{i+j}
//! F    = Σ_{k=1}^{m} Σ_{s=1}^{k} (−1)^(k−1) C(k,s) ∏_{r=1}^{s}(r−α) (t−θ)^(−s) d^(k−s)/dθ^(k−s) g_k
//! EL   = ψ^0 − F
//! DR   = d/dθ {L − Σ_{j≥1} ψ^j · q^(j)} − ∂L/∂θ − F · q'
//! ```
//!
//! `DR = EL · q'` holds for every trajectory, stationary or not.

mod conditions;
mod problem;
mod report;

pub use conditions::{
    friction_coefficient, friction_force_first_order, friction_force_second_order, Conditions, PointConditions,
};
pub use problem::FalvaProblem;
pub use report::{Norms, ResidualReport};

use crate::error::{Error, Result};
use crate::specquad::{gamma, truncated_rule};
use crate::symexpr::{eval, Jet};
use crate::trajectory::{chebyshev_nodes, Trajectory};

/// Default relative margin kept between residual nodes and θ = t.
pub const DEFAULT_EPSILON_REL: f64 = 1e-3;

fn check_trajectory(pb: &FalvaProblem, tr: &Trajectory) -> Result<()> {
    if tr.state_dim() != pb.state_dim {
        return Err(Error::InvalidProblem(format!(
            "trajectory has {} components, problem has {}",
            tr.state_dim(),
            pb.state_dim
        )));
    }
    let (a, b) = tr.interval();
    let tol = 1e-12 * (pb.t - pb.a);
    if (a - pb.a).abs() > tol || b > pb.t + tol {
        return Err(Error::InvalidProblem(format!(
            "trajectory interval [{a}, {b}] must start at a = {} and end no later than t = {}",
            pb.a, pb.t
        )));
    }
    Ok(())
}

fn jet(pb: &FalvaProblem, tr: &Trajectory, theta: f64) -> Result<Jet> {
    if theta >= pb.t {
        return Err(Error::SingularPoint { theta, t: pb.t });
    }
    Ok(tr.jet_at(theta, pb.jet_order())?)
}

/// `(1/Γ(α)) ∫_a^b L(θ, q, …, q^(m)) (t−θ)^(α−1) dθ` with an `n`-point rule,
/// where `[a, b]` is the trajectory interval. Gauss–Jacobi when `b = t`.
pub fn action(pb: &FalvaProblem, tr: &Trajectory, n: usize) -> Result<f64> {
    check_trajectory(pb, tr)?;
    let (_, b) = tr.interval();
    let rule = truncated_rule(pb.alpha, pb.a, b.min(pb.t), pb.t, n)?;
    let integral = rule.try_integrate(|theta| -> Result<f64> {
        let jet = tr.jet_at(theta, pb.m)?;
        Ok(eval(&pb.lagrangian, &jet)?)
    })?;
    Ok(integral / gamma(pb.alpha)?)
}

/// Full set of conditions at one θ.
pub fn conditions_at(pb: &FalvaProblem, tr: &Trajectory, theta: f64) -> Result<PointConditions> {
    check_trajectory(pb, tr)?;
    pb.conditions().evaluate(&jet(pb, tr, theta)?)
}

/// `ψ^j(θ)`, one entry per state component.
pub fn psi(pb: &FalvaProblem, tr: &Trajectory, j: usize, theta: f64) -> Result<Vec<f64>> {
    if j > pb.m {
        return Err(Error::InvalidProblem(format!("psi index {j} exceeds m = {}", pb.m)));
    }
    Ok(conditions_at(pb, tr, theta)?.psi.swap_remove(j))
}

/// Friction force `F(θ)` (general expansion).
pub fn friction_force(pb: &FalvaProblem, tr: &Trajectory, theta: f64) -> Result<Vec<f64>> {
    check_trajectory(pb, tr)?;
    let conditions = pb.conditions();
    let jet = jet(pb, tr, theta)?;
    let tv = conditions.tower_values(&jet)?;
    Ok(conditions.friction_from_towers(theta, &tv))
}

/// Euler-Lagrange residual `ψ^0 − F`.
pub fn el_residual(pb: &FalvaProblem, tr: &Trajectory, theta: f64) -> Result<Vec<f64>> {
    Ok(conditions_at(pb, tr, theta)?.el)
}

/// DuBois-Reymond residual `d/dθ{L − Σ ψ^j q^(j)} − ∂L/∂θ − F·q'`.
pub fn dr_residual(pb: &FalvaProblem, tr: &Trajectory, theta: f64) -> Result<f64> {
    Ok(conditions_at(pb, tr, theta)?.dr)
}

/// `count` Chebyshev points strictly inside `[a, min(b, t − ε(t−a))]`.
pub fn interior_nodes(pb: &FalvaProblem, tr: &Trajectory, count: usize, epsilon_rel: f64) -> Vec<f64> {
    let (a, b) = tr.interval();
    let hi = b.min(pb.interior_limit(epsilon_rel));
    chebyshev_nodes(a, hi, count)
}

/// Residuals and identity gaps over `grid`.
pub fn verify_identities(pb: &FalvaProblem, tr: &Trajectory, grid: &[f64]) -> Result<ResidualReport> {
    check_trajectory(pb, tr)?;
    let conditions = pb.conditions();
    let points = grid
        .iter()
        .map(|&theta| conditions.evaluate(&jet(pb, tr, theta)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(ResidualReport::from_points(&points))
}
