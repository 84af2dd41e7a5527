//! TOML problem files.
//!
//! ```toml
//! kind = "variational"        # or "control"
//! alpha = 0.5
//! a = 0.0
//! t = 1.0
//! m = 1                       # variational only
//! state_dim = 1
//! control_dim = 1             # control only
//! lagrangian = "0.5*q0d1^2"
//! velocity = ["u0"]           # control only
//! initial = [[0.0]]           # m rows (variational) or one row q_a (control)
//!
//! [boundary]
//! mode = "initial_jet"        # or "fixed_ends"
//! theta_f = 0.999             # optional
//! initial_higher = [[1.0]]    # initial_jet: orders m..2m-1
//! final = [[1.0]]             # fixed_ends: orders 0..m-1 (control: one row)
//!
//! [solver]
//! method = "indirect"         # "direct", "indirect" or "shooting"
//! degree = 32
//! quad_points = 0
//! newton_tol = 1e-10
//! max_iters = 50
//! epsilon_rel = 1e-3
//! ode_tol = 1e-12             # shooting only
//! ```

use serde::{Deserialize, Serialize};

use crate::control::{ControlProblem, ShootingConfig};
use crate::error::{Error, Result};
use crate::solvers::{BoundaryMode, SolveConfig};
use crate::variational::{FalvaProblem, DEFAULT_EPSILON_REL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Variational,
    Control,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    InitialJet,
    FixedEnds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    Direct,
    Indirect,
    Shooting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySection {
    pub mode: Mode,
    pub theta_f: Option<f64>,
    pub initial_higher: Option<Vec<Vec<f64>>>,
    #[serde(rename = "final")]
    pub final_values: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub method: Option<MethodName>,
    pub degree: Option<usize>,
    pub quad_points: Option<usize>,
    pub newton_tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub epsilon_rel: Option<f64>,
    pub ode_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub kind: Kind,
    pub alpha: f64,
    #[serde(default)]
    pub a: f64,
    pub t: f64,
    pub m: Option<usize>,
    pub state_dim: usize,
    pub control_dim: Option<usize>,
    pub lagrangian: String,
    pub velocity: Option<Vec<String>>,
    pub initial: Vec<Vec<f64>>,
    pub boundary: Option<BoundarySection>,
    #[serde(default)]
    pub solver: SolverSection,
}

/// Every setting after defaults are applied; echoed into JSON outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub kind: Kind,
    pub alpha: f64,
    pub a: f64,
    pub t: f64,
    pub m: usize,
    pub state_dim: usize,
    pub control_dim: usize,
    pub lagrangian: String,
    pub velocity: Vec<String>,
    pub initial: Vec<Vec<f64>>,
    pub boundary: Option<ResolvedBoundary>,
    pub solver: ResolvedSolver,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedBoundary {
    pub mode: Mode,
    pub theta_f: f64,
    pub initial_higher: Option<Vec<Vec<f64>>>,
    #[serde(rename = "final")]
    pub final_values: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedSolver {
    pub method: MethodName,
    pub degree: usize,
    pub quad_points: usize,
    pub newton_tol: f64,
    pub max_iters: usize,
    pub epsilon_rel: f64,
    pub ode_tol: f64,
}

/// A validated problem ready for the commands.
#[derive(Debug, Clone)]
pub enum Loaded {
    Variational {
        problem: FalvaProblem,
        /// Present when the file has a `[boundary]` section.
        config: Option<SolveConfig>,
        method: MethodName,
        /// Degree used when fitting trajectories read from CSV.
        degree: usize,
        epsilon_rel: f64,
        newton_tol: f64,
    },
    Control {
        problem: ControlProblem,
        target: Option<Vec<f64>>,
        config: ShootingConfig,
    },
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidProblem(msg.into())
}

impl ProblemFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| invalid(format!("problem file: {}", e.message())))
    }

    /// Validates the file, builds the problem and applies every default.
    pub fn resolve(&self) -> Result<(Loaded, ResolvedConfig)> {
        let s = &self.solver;
        let epsilon_rel = s.epsilon_rel.unwrap_or(DEFAULT_EPSILON_REL);
        let newton_tol = s.newton_tol.unwrap_or(1e-10);
        let max_iters = s.max_iters.unwrap_or(50);
        let ode_tol = s.ode_tol.unwrap_or(1e-12);
        let default_end = |alpha: f64, a: f64, t: f64| if alpha == 1.0 { t } else { t - epsilon_rel * (t - a) };
        match self.kind {
            Kind::Variational => {
                let m = self.m.ok_or_else(|| invalid("variational problems need `m`"))?;
                if self.velocity.is_some() || self.control_dim.is_some_and(|r| r > 0) {
                    return Err(invalid("`velocity` and `control_dim` belong to control problems"));
                }
                let method = s.method.unwrap_or(MethodName::Indirect);
                if method == MethodName::Shooting {
                    return Err(invalid("shooting applies to control problems"));
                }
                let problem =
                    FalvaProblem::parse(self.alpha, self.a, self.t, m, self.state_dim, &self.lagrangian, self.initial.clone())?;
                let degree = s.degree.unwrap_or(32);
                let boundary = self.boundary.as_ref().map(|b| -> Result<_> {
                    let mode = match b.mode {
                        Mode::InitialJet => BoundaryMode::InitialJet {
                            higher: b.initial_higher.clone().ok_or_else(|| invalid("initial_jet needs `initial_higher`"))?,
                        },
                        Mode::FixedEnds => BoundaryMode::FixedEnds {
                            final_values: b.final_values.clone().ok_or_else(|| invalid("fixed_ends needs `final`"))?,
                        },
                    };
                    Ok((b, mode))
                });
                let boundary = boundary.transpose()?;
                let config = boundary.as_ref().map(|(b, mode)| SolveConfig {
                    degree,
                    quad_points: s.quad_points.unwrap_or(0),
                    newton_tol,
                    max_iters,
                    boundary: mode.clone(),
                    theta_f: b.theta_f,
                    epsilon_rel,
                });
                if let Some(cfg) = &config {
                    cfg.validate(&problem)?;
                }
                let resolved = ResolvedConfig {
                    kind: self.kind,
                    alpha: self.alpha,
                    a: self.a,
                    t: self.t,
                    m,
                    state_dim: self.state_dim,
                    control_dim: 0,
                    lagrangian: self.lagrangian.clone(),
                    velocity: vec![],
                    initial: self.initial.clone(),
                    boundary: boundary.as_ref().map(|(b, _)| ResolvedBoundary {
                        mode: b.mode,
                        theta_f: b.theta_f.unwrap_or_else(|| default_end(self.alpha, self.a, self.t)),
                        initial_higher: b.initial_higher.clone(),
                        final_values: b.final_values.clone(),
                    }),
                    solver: ResolvedSolver {
                        method,
                        degree,
                        quad_points: config.as_ref().map_or(0, |c| c.resolved_quad_points(&problem)),
                        newton_tol,
                        max_iters,
                        epsilon_rel,
                        ode_tol,
                    },
                };
                let loaded = Loaded::Variational { problem, config, method, degree, epsilon_rel, newton_tol };
                Ok((loaded, resolved))
            }
            Kind::Control => {
                if self.m.is_some() {
                    return Err(invalid("`m` belongs to variational problems"));
                }
                let control_dim = self.control_dim.ok_or_else(|| invalid("control problems need `control_dim`"))?;
                let velocity = self.velocity.clone().ok_or_else(|| invalid("control problems need `velocity`"))?;
                if velocity.len() != self.state_dim {
                    return Err(invalid(format!("velocity has {} entries, state_dim is {}", velocity.len(), self.state_dim)));
                }
                let method = s.method.unwrap_or(MethodName::Shooting);
                if method != MethodName::Shooting {
                    return Err(invalid("control problems are solved by shooting"));
                }
                if self.initial.len() != 1 {
                    return Err(invalid("control problems need exactly one `initial` row (q_a)"));
                }
                let refs: Vec<&str> = velocity.iter().map(String::as_str).collect();
                let problem =
                    ControlProblem::parse(self.alpha, self.a, self.t, control_dim, &self.lagrangian, &refs, self.initial[0].clone())?;
                let target = match &self.boundary {
                    None => None,
                    Some(b) if b.mode != Mode::FixedEnds => {
                        return Err(invalid("control problems close the shooting with fixed_ends"))
                    }
                    Some(b) => match b.final_values.as_deref() {
                        Some([row]) if row.len() == self.state_dim => Some(row.clone()),
                        _ => return Err(invalid("control `final` must be one row of state_dim values")),
                    },
                };
                let config = ShootingConfig {
                    degree: s.degree.unwrap_or(320),
                    ode_tol,
                    newton_tol,
                    max_iters,
                    theta_f: self.boundary.as_ref().and_then(|b| b.theta_f),
                    epsilon_rel,
                    initial_costate: None,
                    initial_control: None,
                };
                let resolved = ResolvedConfig {
                    kind: self.kind,
                    alpha: self.alpha,
                    a: self.a,
                    t: self.t,
                    m: 0,
                    state_dim: self.state_dim,
                    control_dim,
                    lagrangian: self.lagrangian.clone(),
                    velocity,
                    initial: self.initial.clone(),
                    boundary: self.boundary.as_ref().map(|b| ResolvedBoundary {
                        mode: b.mode,
                        theta_f: config.end(&problem),
                        initial_higher: None,
                        final_values: b.final_values.clone(),
                    }),
                    solver: ResolvedSolver {
                        method,
                        degree: config.degree,
                        quad_points: 0,
                        newton_tol,
                        max_iters,
                        epsilon_rel,
                        ode_tol,
                    },
                };
                Ok((Loaded::Control { problem, target, config }, resolved))
            }
        }
    }

    /// Same file at a different α.
    pub fn with_alpha(&self, alpha: f64) -> Self {
        ProblemFile { alpha, ..self.clone() }
    }
}
