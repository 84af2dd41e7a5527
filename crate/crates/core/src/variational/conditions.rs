use crate::error::{Error, Result};
use crate::specquad::{binomial, gamma_ratio};
use crate::symexpr::{eval, partial, total_derivative, Expr, Jet, VarRef};

use super::problem::FalvaProblem;

/// Coefficient of `(t−θ)^(−s) · d^(k−s)/dθ^(k−s) ∂L/∂q^(k)` in the friction
/// force: `(−1)^(k−1) · C(k, s) · ∏_{r=1}^{s} (r−α)`.
///
/// These come from expanding `Σ_k (−1)^k d^k/dθ^k [(t−θ)^(α−1) ∂L/∂q^(k)]`
/// with the Leibniz rule; the `s = 0` terms form the classical operator.
pub fn friction_coefficient(k: usize, s: usize, alpha: f64) -> f64 {
    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
    sign * binomial(k as i64, s as i64) as f64 * gamma_ratio(s, alpha)
}

/// Symbolic optimality conditions of one problem.
///
/// `towers[k][c][r]` is `d^r/dθ^r ∂L/∂q_c^(k)` for `r = 0..=k`, which is
/// every total derivative the ψ stack, the friction force and the
/// DuBois-Reymond bracket need.
#[derive(Debug, Clone)]
pub struct Conditions {
    pub alpha: f64,
    pub t: f64,
    pub m: usize,
    pub state_dim: usize,
    pub lagrangian: Expr,
    pub dl_dtheta: Expr,
    pub towers: Vec<Vec<Vec<Expr>>>,
    /// `psi[j][c]`, `j = 0..=m`.
    pub psi: Vec<Vec<Expr>>,
    /// `dpsi[j][c]`: symbolic total derivative of `psi[j][c]` for `j ≥ 1`.
    /// `dpsi[0]` would need order `2m+1` and is left zero.
    pub dpsi: Vec<Vec<Expr>>,
    /// `d/dθ {L − Σ_j ψ^j · q^(j)}`, built from the bracket symbolically.
    pub bracket_derivative: Expr,
    /// `F_c` with the θ-dependent coefficients inlined.
    pub friction_expressions: Vec<Expr>,
    /// `ψ^0_c − F_c`.
    pub el_expressions: Vec<Expr>,
}

/// Everything the conditions produce at one θ.
#[derive(Debug, Clone, PartialEq)]
pub struct PointConditions {
    pub theta: f64,
    pub psi: Vec<Vec<f64>>,
    pub friction: Vec<f64>,
    pub el: Vec<f64>,
    /// `∂L/∂q − dψ¹/dθ − F`, the second formulation of the EL residual.
    pub el_alt: Vec<f64>,
    pub dr: f64,
    pub psi_recursion_gap: f64,
    pub bracket_gap: f64,
    /// `|DR − EL·q'|` divided by `max(1, Σ|F_c q_c'|)`.
    pub coupling_gap: f64,
}

impl PointConditions {
    pub fn identity_gap(&self) -> f64 {
        self.psi_recursion_gap.max(self.bracket_gap).max(self.coupling_gap)
    }
}

impl Conditions {
    pub fn build(pb: &FalvaProblem) -> Self {
        let (m, n) = (pb.m, pb.state_dim);
        let l = &pb.lagrangian;
        let towers: Vec<Vec<Vec<Expr>>> = (0..=m)
            .map(|k| {
                (0..n)
                    .map(|c| {
                        let mut col = vec![partial(l, VarRef::State(c, k))];
                        for r in 1..=k {
                            let next = total_derivative(&col[r - 1]);
                            col.push(next);
                        }
                        col
                    })
                    .collect()
            })
            .collect();

        let psi: Vec<Vec<Expr>> = (0..=m)
            .map(|j| {
                (0..n)
                    .map(|c| {
                        Expr::sum((0..=m - j).map(|i| {
                            let term = towers[i + j][c][i].clone();
                            if i % 2 == 0 { term } else { Expr::neg(term) }
                        }))
                    })
                    .collect()
            })
            .collect();
        let dpsi = psi
            .iter()
            .enumerate()
            .map(|(j, row)| row.iter().map(|e| if j == 0 { Expr::zero() } else { total_derivative(e) }).collect())
            .collect();

        let mut bracket = l.clone();
        for (j, row) in psi.iter().enumerate().skip(1) {
            for (c, pj) in row.iter().enumerate() {
                bracket = Expr::sub(bracket, Expr::mul(pj.clone(), Expr::var(VarRef::State(c, j))));
            }
        }
        let bracket_derivative = total_derivative(&bracket);

        let gap = Expr::sub(Expr::constant(pb.t), Expr::theta());
        let friction_expressions: Vec<Expr> = (0..n)
            .map(|c| {
                let mut terms = Vec::new();
                for k in 1..=m {
                    for s in 1..=k {
                        let coef = friction_coefficient(k, s, pb.alpha);
                        let weight = Expr::mul(Expr::constant(coef), Expr::powi(gap.clone(), -(s as i32)));
                        terms.push(Expr::mul(weight, towers[k][c][k - s].clone()));
                    }
                }
                Expr::sum(terms)
            })
            .collect();
        let el_expressions =
            (0..n).map(|c| Expr::sub(psi[0][c].clone(), friction_expressions[c].clone())).collect();

        Conditions {
            alpha: pb.alpha,
            t: pb.t,
            m,
            state_dim: n,
            lagrangian: l.clone(),
            dl_dtheta: partial(l, VarRef::Theta),
            towers,
            psi,
            dpsi,
            bracket_derivative,
            friction_expressions,
            el_expressions,
        }
    }

    fn check_theta(&self, theta: f64) -> Result<()> {
        if theta >= self.t || !theta.is_finite() {
            return Err(Error::SingularPoint { theta, t: self.t });
        }
        Ok(())
    }

    /// Numeric tower values `[k][c][r]` on `jet`.
    pub fn tower_values(&self, jet: &Jet) -> Result<Vec<Vec<Vec<f64>>>> {
        self.towers
            .iter()
            .map(|per_k| {
                per_k
                    .iter()
                    .map(|col| col.iter().map(|e| eval(e, jet).map_err(Error::from)).collect())
                    .collect()
            })
            .collect()
    }

    /// Friction force from tower values (general expansion for any m).
    pub fn friction_from_towers(&self, theta: f64, tv: &[Vec<Vec<f64>>]) -> Vec<f64> {
        let gap = self.t - theta;
        (0..self.state_dim)
            .map(|c| {
                let mut acc = 0.0;
                for k in 1..=self.m {
                    for s in 1..=k {
                        let coef = friction_coefficient(k, s, self.alpha);
                        if coef != 0.0 {
                            acc += coef * gap.powi(-(s as i32)) * tv[k][c][k - s];
                        }
                    }
                }
                acc
            })
            .collect()
    }

    /// Evaluates ψ stack, friction force, both EL formulations, the DR
    /// residual and the three structural identity gaps at `jet`.
    pub fn evaluate(&self, jet: &Jet) -> Result<PointConditions> {
        let theta = jet.theta;
        self.check_theta(theta)?;
        let (m, n) = (self.m, self.state_dim);
        let tv = self.tower_values(jet)?;
        let friction = self.friction_from_towers(theta, &tv);

        let psi: Vec<Vec<f64>> = (0..=m)
            .map(|j| {
                (0..n)
                    .map(|c| {
                        (0..=m - j).map(|i| if i % 2 == 0 { tv[i + j][c][i] } else { -tv[i + j][c][i] }).sum()
                    })
                    .collect()
            })
            .collect();
        let el: Vec<f64> = (0..n).map(|c| psi[0][c] - friction[c]).collect();

        let dpsi: Vec<Vec<f64>> = self
            .dpsi
            .iter()
            .map(|row| row.iter().map(|e| eval(e, jet).map_err(Error::from)).collect::<Result<_>>())
            .collect::<Result<_>>()?;
        let el_alt: Vec<f64> = (0..n).map(|c| tv[0][c][0] - dpsi[1][c] - friction[c]).collect();

        let mut psi_recursion_gap: f64 = 0.0;
        for j in 1..=m {
            for c in 0..n {
                let g = dpsi[j][c] - tv[j - 1][c][0] + psi[j - 1][c];
                psi_recursion_gap = psi_recursion_gap.max(g.abs());
            }
        }

        let velocity: Vec<f64> = (0..n).map(|c| jet.lookup(VarRef::State(c, 1))).collect::<Result<_, _>>()?;
        let dot = |v: &[f64]| -> f64 { v.iter().zip(&velocity).map(|(x, y)| x * y).sum() };
        let bracket_rate = eval(&self.bracket_derivative, jet)?;
        let dl_dtheta = eval(&self.dl_dtheta, jet)?;
        let dr = bracket_rate - dl_dtheta - dot(&friction);
        let bracket_gap = (bracket_rate - dl_dtheta - dot(&psi[0])).abs();
        // DR and EL·q' both carry F·q', which grows like (t−θ)^(−2m+1); the
        // gap is measured relative to that scale.
        let friction_scale: f64 = friction.iter().zip(&velocity).map(|(f, v)| (f * v).abs()).sum();
        let coupling_gap = (dr - dot(&el)).abs() / friction_scale.max(1.0);

        Ok(PointConditions {
            theta,
            psi,
            friction,
            el,
            el_alt,
            dr,
            psi_recursion_gap,
            bracket_gap,
            coupling_gap,
        })
    }
}

/// Hand-expanded friction force for `m = 1`: `(1−α)/(t−θ) · ∂L/∂q'`.
pub fn friction_force_first_order(pb: &FalvaProblem, jet: &Jet) -> Result<Vec<f64>> {
    let theta = jet.theta;
    if theta >= pb.t {
        return Err(Error::SingularPoint { theta, t: pb.t });
    }
    let factor = (1.0 - pb.alpha) / (pb.t - theta);
    (0..pb.state_dim)
        .map(|c| Ok(factor * eval(&partial(&pb.lagrangian, VarRef::State(c, 1)), jet)?))
        .collect()
}

/// Hand-expanded friction force for `m = 2`:
/// `(1−α)/(t−θ) (∂L/∂q' − 2 d/dθ ∂L/∂q'') − (1−α)(2−α)/(t−θ)² ∂L/∂q''`.
pub fn friction_force_second_order(pb: &FalvaProblem, jet: &Jet) -> Result<Vec<f64>> {
    let theta = jet.theta;
    if theta >= pb.t {
        return Err(Error::SingularPoint { theta, t: pb.t });
    }
    let alpha = pb.alpha;
    let gap = pb.t - theta;
    (0..pb.state_dim)
        .map(|c| {
            let l3 = eval(&partial(&pb.lagrangian, VarRef::State(c, 1)), jet)?;
            let l4_expr = partial(&pb.lagrangian, VarRef::State(c, 2));
            let l4 = eval(&l4_expr, jet)?;
            let dl4 = eval(&total_derivative(&l4_expr), jet)?;
            Ok((1.0 - alpha) / gap * (l3 - 2.0 * dl4) - (1.0 - alpha) * (2.0 - alpha) / (gap * gap) * l4)
        })
        .collect()
}
