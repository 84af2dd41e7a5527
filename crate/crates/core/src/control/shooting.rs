use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ode::{integrate, OdeError};
use super::{energy_rate_gap, pontryagin_residuals, ControlProblem, Extremal, Hamiltonian};
use crate::error::{Error, Result};
use crate::symexpr::{eval, Jet};
use crate::trajectory::{chebyshev_nodes, Trajectory};
use crate::variational::DEFAULT_EPSILON_REL;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootingConfig {
    /// Chebyshev degree of the fitted `q`, `u`, `p`.
    pub degree: usize,
    /// Local error tolerance of the Runge–Kutta integrator.
    pub ode_tol: f64,
    /// Tolerance on `|q(θ_f) − q_f|`.
    pub newton_tol: f64,
    pub max_iters: usize,
    /// Terminal time; `None` means `t` for α = 1 and `t − ε_rel(t−a)` otherwise.
    pub theta_f: Option<f64>,
    pub epsilon_rel: f64,
    /// Starting guess for `p(a)`; zero when absent.
    pub initial_costate: Option<Vec<f64>>,
    /// Starting guess for the control elimination at θ = a; zero when absent.
    pub initial_control: Option<Vec<f64>>,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        ShootingConfig {
            degree: 320,
            ode_tol: 1e-12,
            newton_tol: 1e-10,
            max_iters: 50,
            theta_f: None,
            epsilon_rel: DEFAULT_EPSILON_REL,
            initial_costate: None,
            initial_control: None,
        }
    }
}

impl ShootingConfig {
    pub fn end(&self, cp: &ControlProblem) -> f64 {
        match self.theta_f {
            Some(theta_f) => theta_f,
            None if cp.alpha == 1.0 => cp.t,
            None => cp.interior_limit(self.epsilon_rel),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootingResult {
    pub extremal: Extremal,
    pub theta_f: f64,
    /// Converged `p(a)`.
    pub costate_initial: Vec<f64>,
    /// `max |q(θ_f) − q_f|` from the integrator.
    pub terminal_gap: f64,
    pub iterations: usize,
    /// Largest Pontryagin gap of the fitted extremal over interior nodes.
    pub max_pontryagin_gap: f64,
    /// Largest `|dH/dθ − ∂H/∂θ|` of the fitted extremal over interior nodes.
    pub max_energy_gap: f64,
}

/// Solves `∂H/∂u = 0` for `u` by Newton from `guess`.
fn eliminate(h: &Hamiltonian, theta: f64, q: &[f64], p: &[f64], guess: &[f64]) -> Result<Vec<f64>> {
    let r = guess.len();
    let mut u = guess.to_vec();
    let fail = |reason: String| Error::ControlElimination { theta, reason };
    for _ in 0..60 {
        let jet = Jet::new(theta, q.iter().map(|&v| vec![v]).collect()).with_control(u.clone()).with_costate(p.to_vec());
        let g = DVector::from_iterator(r, h.d_u.iter().map(|e| eval(e, &jet)).collect::<Result<Vec<_>, _>>()?);
        let mut hess = DMatrix::zeros(r, r);
        for i in 0..r {
            for j in 0..r {
                hess[(i, j)] = eval(&h.d_uu[i][j], &jet)?;
            }
        }
        let step = hess
            .lu()
            .solve(&(-&g))
            .filter(|s| s.iter().all(|v| v.is_finite()))
            .ok_or_else(|| fail("∂²H/∂u² is singular".into()))?;
        let size = step.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        u.iter_mut().zip(step.iter()).for_each(|(x, s)| *x += s);
        let scale = 1.0 + u.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        if size <= 1e-14 * scale {
            return Ok(u);
        }
    }
    Err(fail("Newton on ∂H/∂u = 0 did not converge".into()))
}

struct Shooter<'a> {
    cp: &'a ControlProblem,
    h: &'a Hamiltonian,
    tol: f64,
    control_start: Vec<f64>,
}

impl Shooter<'_> {
    /// State `(q, p)` and control at each output θ for initial costate `p_a`.
    fn run(&self, p_a: &[f64], outputs: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let n = self.cp.state_dim;
        let mut y0 = self.cp.q_a.clone();
        y0.extend_from_slice(p_a);
        let mut guess = self.control_start.clone();
        let h = self.h;
        let rhs = |theta: f64, y: &[f64]| -> Result<Vec<f64>> {
            let (q, p) = y.split_at(n);
            let u = eliminate(h, theta, q, p, &guess)?;
            let jet = Jet::new(theta, q.iter().map(|&v| vec![v]).collect()).with_control(u.clone()).with_costate(p.to_vec());
            let mut dy = Vec::with_capacity(2 * n);
            for e in &h.d_p {
                dy.push(eval(e, &jet)?);
            }
            for e in &h.d_q {
                dy.push(-eval(e, &jet)?);
            }
            guess = u;
            Ok(dy)
        };
        let (states, _) = integrate(rhs, self.cp.a, &y0, outputs, self.tol).map_err(|e| match e {
            OdeError::Rhs(err) => err,
            other => Error::Integration(other.to_string()),
        })?;
        let mut guess = self.control_start.clone();
        let mut controls = Vec::with_capacity(states.len());
        for (theta, y) in outputs.iter().zip(&states) {
            let (q, p) = y.split_at(n);
            guess = eliminate(self.h, *theta, q, p, &guess)?;
            controls.push(guess.clone());
        }
        Ok((states, controls))
    }

    fn terminal_miss(&self, p_a: &[f64], theta_f: f64, target: &[f64]) -> Result<DVector<f64>> {
        let (states, _) = self.run(p_a, &[theta_f])?;
        Ok(DVector::from_iterator(target.len(), states[0].iter().zip(target).map(|(q, qf)| q - qf)))
    }
}

/// Shooting on `p(a)`: integrates the Hamiltonian system with `u` eliminated
/// through `∂H/∂u = 0` and matches `q(θ_f) = target` by Newton with a
/// finite-difference Jacobian.
pub fn solve_shooting(cp: &ControlProblem, target: &[f64], cfg: &ShootingConfig) -> Result<ShootingResult> {
    let n = cp.state_dim;
    if target.len() != n {
        return Err(Error::InvalidConfig(format!("target has {} entries, expected {n}", target.len())));
    }
    let theta_f = cfg.end(cp);
    if !(theta_f > cp.a && theta_f <= cp.t) {
        return Err(Error::InvalidConfig(format!("theta_f = {theta_f} must lie in (a, t]")));
    }
    if theta_f == cp.t && cp.alpha < 1.0 {
        return Err(Error::SingularPoint { theta: theta_f, t: cp.t });
    }
    if cfg.degree < 2 || !(cfg.newton_tol > 0.0) || !(cfg.ode_tol > 0.0) {
        return Err(Error::InvalidConfig("shooting needs degree ≥ 2 and positive tolerances".into()));
    }
    let control_start = cfg.initial_control.clone().unwrap_or_else(|| vec![0.0; cp.control_dim]);
    if control_start.len() != cp.control_dim {
        return Err(Error::InvalidConfig("initial_control has the wrong length".into()));
    }
    let mut p_a = cfg.initial_costate.clone().unwrap_or_else(|| vec![0.0; n]);
    if p_a.len() != n {
        return Err(Error::InvalidConfig("initial_costate has the wrong length".into()));
    }

    let h = cp.hamiltonian_parts();
    let shooter = Shooter { cp, h: &h, tol: cfg.ode_tol, control_start };
    let mut miss = shooter.terminal_miss(&p_a, theta_f, target)?;
    let mut gap = miss.amax();
    let mut iterations = 0;
    while gap > cfg.newton_tol {
        if iterations >= cfg.max_iters {
            return Err(Error::NonConvergence { iterations, residual: gap });
        }
        iterations += 1;
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..n {
            let step = 1e-6 * (1.0 + p_a[j].abs());
            let mut shifted = p_a.clone();
            shifted[j] += step;
            let col = (shooter.terminal_miss(&shifted, theta_f, target)? - &miss) / step;
            jac.set_column(j, &col);
        }
        let delta = jac
            .lu()
            .solve(&(-&miss))
            .filter(|s| s.iter().all(|v| v.is_finite()))
            .ok_or_else(|| Error::SingularJacobian("shooting sensitivity matrix".into()))?;
        let mut s = 1.0;
        loop {
            let trial: Vec<f64> = p_a.iter().zip(delta.iter()).map(|(p, d)| p + s * d).collect();
            let trial_miss = shooter.terminal_miss(&trial, theta_f, target);
            match trial_miss {
                Ok(m) if m.amax() < gap || s < 1e-3 => {
                    p_a = trial;
                    miss = m;
                    break;
                }
                Err(e) if s < 1e-3 => return Err(e),
                _ => s *= 0.5,
            }
        }
        gap = miss.amax();
    }

    let nodes = chebyshev_nodes(cp.a, theta_f, cfg.degree + 1);
    let (states, controls) = shooter.run(&p_a, &nodes)?;
    let column = |rows: &[Vec<f64>], range: std::ops::Range<usize>| -> Vec<Vec<f64>> {
        rows.iter().map(|y| y[range.clone()].to_vec()).collect()
    };
    let interval = (cp.a, theta_f);
    let extremal = Extremal {
        q: Trajectory::from_chebyshev_values(interval, &column(&states, 0..n))?,
        u: Trajectory::from_chebyshev_values(interval, &controls)?,
        p: Trajectory::from_chebyshev_values(interval, &column(&states, n..2 * n))?,
    };

    let mut max_pontryagin_gap: f64 = 0.0;
    let mut max_energy_gap: f64 = 0.0;
    for theta in chebyshev_nodes(cp.a, theta_f, 64) {
        max_pontryagin_gap = max_pontryagin_gap.max(pontryagin_residuals(cp, &extremal, theta)?.max());
        max_energy_gap = max_energy_gap.max(energy_rate_gap(cp, &extremal, theta)?);
    }
    Ok(ShootingResult {
        extremal,
        theta_f,
        costate_initial: p_a,
        terminal_gap: gap,
        iterations,
        max_pontryagin_gap,
        max_energy_gap,
    })
}
