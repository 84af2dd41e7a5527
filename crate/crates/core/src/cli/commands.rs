use std::fmt::Write as _;

use serde::Serialize;

use super::csv_io::{samples, table_jets, trajectory_table, Table};
use super::problem_file::{Loaded, MethodName, ProblemFile, ResolvedConfig};
use crate::control::{
    control_action, embed_variational, energy_rate_at, extremal_header, extremal_table, induced_control_jet,
    pontryagin_gaps_at, solve_shooting, ControlJet, ControlProblem, EmbeddedCostate, Extremal,
};
use crate::error::{Error, Result};
use crate::solvers::{solve_direct, solve_indirect, SolveResult};
use crate::specquad::{binomial, gamma_ratio};
use crate::symexpr::{Expr, Node};
use crate::trajectory::{chebyshev_nodes, Trajectory};
use crate::variational::{FalvaProblem, Norms, ResidualReport};

/// Largest Pontryagin gap accepted from a shooting solve or a control check.
pub const CONTROL_GAP_TOL: f64 = 1e-6;
/// Interior nodes used when residuals come from a fitted trajectory.
const FIT_NODES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExitStatus {
    Success = 0,
    ResidualFailure = 1,
    InputError = 2,
    NonConvergence = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }

    pub fn of_error(e: &Error) -> Self {
        match e {
            Error::NonConvergence { .. }
            | Error::SingularJacobian(_)
            | Error::LegendreCondition { .. }
            | Error::ControlElimination { .. }
            | Error::Integration(_) => ExitStatus::NonConvergence,
            _ => ExitStatus::InputError,
        }
    }
}

/// What a command prints and which files it would write.
#[derive(Debug, Clone)]
pub struct Output {
    pub status: ExitStatus,
    pub stdout: String,
    pub files: Vec<(String, String)>,
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types serialize")
}

/// `(−1)^(k−1) C(k,s) ∏(r−α) / (t−θ)^s` with α and t kept symbolic.
fn symbolic_coefficient(k: usize, s: usize) -> (bool, String) {
    let negative = k % 2 == 0;
    let mut text = String::new();
    let bin = binomial(k as i64, s as i64);
    if bin != 1 {
        write!(text, "{bin}*").unwrap();
    }
    let prod: Vec<String> = (1..=s).map(|r| format!("({r}-alpha)")).collect();
    text.push_str(&prod.join("*"));
    text.push_str("/(t-theta)");
    if s > 1 {
        write!(text, "^{s}").unwrap();
    }
    (negative, text)
}

fn factor_text(e: &Expr) -> String {
    match e.node() {
        Node::Add(..) | Node::Sub(..) | Node::Neg(_) => format!("({e})"),
        _ => e.to_string(),
    }
}

/// Fully expanded EL equations `ψ⁰ = F`, with α and t symbolic and then
/// instantiated.
pub fn derive_text(pb: &FalvaProblem) -> String {
    let cond = pb.conditions();
    let mut out = String::new();
    writeln!(out, "Euler-Lagrange equations, m = {}, psi0 = F:", pb.m).unwrap();
    let mut symbolic_rhs = Vec::new();
    for c in 0..pb.state_dim {
        let mut rhs = String::new();
        if pb.alpha != 1.0 {
            for k in 1..=pb.m {
                for s in 1..=k {
                    let factor = &cond.towers[k][c][k - s];
                    if factor.is_zero() || gamma_ratio(s, pb.alpha) == 0.0 {
                        continue;
                    }
                    let (negative, coef) = symbolic_coefficient(k, s);
                    let term = if factor.is_one() { coef } else { format!("{coef}*{}", factor_text(factor)) };
                    match (rhs.is_empty(), negative) {
                        (true, true) => write!(rhs, "-{term}"),
                        (true, false) => write!(rhs, "{term}"),
                        (false, true) => write!(rhs, " - {term}"),
                        (false, false) => write!(rhs, " + {term}"),
                    }
                    .unwrap();
                }
            }
        }
        if rhs.is_empty() {
            rhs.push('0');
        }
        writeln!(out, "{} = {rhs}", cond.psi[0][c]).unwrap();
        symbolic_rhs.push(rhs);
    }
    writeln!(out, "\nfriction force:").unwrap();
    for (c, rhs) in symbolic_rhs.iter().enumerate() {
        writeln!(out, "F{c} = {rhs}").unwrap();
    }
    writeln!(out, "\nat alpha = {}, t = {}:", pb.alpha, pb.t).unwrap();
    for c in 0..pb.state_dim {
        writeln!(out, "{} = {}", cond.psi[0][c], cond.friction_expressions[c]).unwrap();
    }
    out
}

pub fn cmd_derive(file: &ProblemFile) -> Result<Output> {
    let (loaded, _) = file.resolve()?;
    let Loaded::Variational { problem, .. } = loaded else {
        return Err(Error::InvalidProblem("derive needs a variational problem".into()));
    };
    Ok(Output { status: ExitStatus::Success, stdout: derive_text(&problem), files: vec![] })
}

/// JSON report of `check`, `solve` and `identities` for variational files.
#[derive(Debug, Clone, Serialize)]
pub struct VariationalReport {
    pub command: &'static str,
    pub config: ResolvedConfig,
    pub nodes: Vec<f64>,
    pub el_residual: Vec<Vec<f64>>,
    pub dr_residual: Vec<f64>,
    pub identity_gap: Vec<f64>,
    pub psi_recursion_gap: Vec<f64>,
    pub bracket_gap: Vec<f64>,
    pub coupling_gap: Vec<f64>,
    pub norms: Norms,
    pub tolerance: f64,
    pub passed: bool,
    pub converged: Option<bool>,
    pub iterations: Option<usize>,
}

impl VariationalReport {
    fn new(command: &'static str, config: ResolvedConfig, r: ResidualReport, tolerance: f64, passed: bool) -> Self {
        VariationalReport {
            command,
            config,
            nodes: r.nodes,
            el_residual: r.el_residual,
            dr_residual: r.dr_residual,
            identity_gap: r.identity_gap,
            psi_recursion_gap: r.psi_recursion_gap,
            bracket_gap: r.bracket_gap,
            coupling_gap: r.coupling_gap,
            norms: r.norms,
            tolerance,
            passed,
            converged: None,
            iterations: None,
        }
    }
}

/// JSON report for control files.
#[derive(Debug, Clone, Serialize)]
pub struct ControlReport {
    pub command: &'static str,
    pub config: ResolvedConfig,
    pub nodes: Vec<f64>,
    pub adjoint_gap: Vec<Vec<f64>>,
    pub stationarity_gap: Vec<Vec<f64>>,
    pub dynamics_gap: Vec<Vec<f64>>,
    pub energy_gap: Vec<f64>,
    pub hamiltonian: Vec<f64>,
    pub d_hamiltonian_dtheta: Vec<f64>,
    pub max_pontryagin_gap: f64,
    pub max_energy_gap: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub converged: Option<bool>,
    pub iterations: Option<usize>,
}

fn control_report(
    command: &'static str,
    config: ResolvedConfig,
    cp: &ControlProblem,
    jets: &[ControlJet],
    tolerance: f64,
) -> Result<ControlReport> {
    let mut rep = ControlReport {
        command,
        config,
        nodes: vec![],
        adjoint_gap: vec![],
        stationarity_gap: vec![],
        dynamics_gap: vec![],
        energy_gap: vec![],
        hamiltonian: vec![],
        d_hamiltonian_dtheta: vec![],
        max_pontryagin_gap: 0.0,
        max_energy_gap: 0.0,
        tolerance,
        passed: false,
        converged: None,
        iterations: None,
    };
    for jet in jets {
        let gaps = pontryagin_gaps_at(cp, jet)?;
        let rate = energy_rate_at(cp, jet)?;
        rep.max_pontryagin_gap = rep.max_pontryagin_gap.max(gaps.max());
        rep.max_energy_gap = rep.max_energy_gap.max(rate.gap());
        rep.nodes.push(jet.theta);
        rep.adjoint_gap.push(gaps.adjoint_gap);
        rep.stationarity_gap.push(gaps.stationarity_gap);
        rep.dynamics_gap.push(gaps.dynamics_gap);
        rep.energy_gap.push(rate.gap());
        rep.hamiltonian.push(rate.h);
        rep.d_hamiltonian_dtheta.push(rate.d_theta);
    }
    rep.passed = rep.max_pontryagin_gap <= tolerance && rep.max_energy_gap <= tolerance;
    Ok(rep)
}

/// Residuals of a variational CSV: jets straight from the table when all
/// derivative columns are present, a fitted trajectory otherwise.
fn variational_residuals(pb: &FalvaProblem, degree: usize, epsilon_rel: f64, table: &Table) -> Result<ResidualReport> {
    let limit = pb.interior_limit(epsilon_rel);
    let cond = pb.conditions();
    if let Some(jets) = table_jets(table, pb.state_dim, pb.jet_order()) {
        let points = jets
            .iter()
            .filter(|j| j.theta >= pb.a && j.theta < limit)
            .map(|j| cond.evaluate(j))
            .collect::<Result<Vec<_>>>()?;
        if points.is_empty() {
            return Err(Error::InvalidProblem("trajectory csv has no rows inside the interior range".into()));
        }
        return Ok(ResidualReport::from_points(&points));
    }
    let names: Vec<String> = (0..pb.state_dim).map(|c| format!("q{c}")).collect();
    let data: Vec<(f64, Vec<f64>)> = samples(table, &names)?.into_iter().filter(|s| s.0 >= pb.a && s.0 <= pb.t).collect();
    let tr = Trajectory::fit(&data, degree.min(data.len().saturating_sub(1)))?;
    let (a, b) = tr.interval();
    let nodes = chebyshev_nodes(a, b.min(limit), FIT_NODES);
    let points = nodes
        .iter()
        .map(|&theta| cond.evaluate(&tr.jet_at(theta, pb.jet_order())?))
        .collect::<Result<Vec<_>>>()?;
    Ok(ResidualReport::from_points(&points))
}

fn control_jets(cp: &ControlProblem, degree: usize, epsilon_rel: f64, table: &Table) -> Result<Vec<ControlJet>> {
    let (n, r) = (cp.state_dim, cp.control_dim);
    let limit = cp.interior_limit(epsilon_rel);
    let names = |prefix: char, count: usize, suffix: &str| -> Vec<String> {
        (0..count).map(|i| format!("{prefix}{i}{suffix}")).collect()
    };
    let values = [names('q', n, ""), names('u', r, ""), names('p', n, "")];
    let rates = [names('q', n, "d1"), names('u', r, "d1"), names('p', n, "d1")];
    let has_rates = rates.iter().flatten().all(|c| table.column(c).is_some());
    if has_rates {
        let cols: Vec<Vec<(f64, Vec<f64>)>> =
            values.iter().chain(&rates).map(|names| samples(table, names)).collect::<Result<_>>()?;
        let jets: Vec<ControlJet> = (0..table.rows.len())
            .map(|k| ControlJet {
                theta: cols[0][k].0,
                q: cols[0][k].1.clone(),
                u: cols[1][k].1.clone(),
                p: cols[2][k].1.clone(),
                q_dot: cols[3][k].1.clone(),
                u_dot: cols[4][k].1.clone(),
                p_dot: cols[5][k].1.clone(),
            })
            .filter(|j| j.theta >= cp.a && j.theta < limit)
            .collect();
        if jets.is_empty() {
            return Err(Error::InvalidProblem("trajectory csv has no rows inside the interior range".into()));
        }
        return Ok(jets);
    }
    let fit = |names: &[String]| -> Result<Trajectory> {
        let data = samples(table, names)?;
        Ok(Trajectory::fit(&data, degree.min(data.len().saturating_sub(1)))?)
    };
    let ex = Extremal { q: fit(&values[0])?, u: fit(&values[1])?, p: fit(&values[2])? };
    let (a, b) = ex.interval();
    chebyshev_nodes(a, b.min(limit), FIT_NODES).into_iter().map(|th| ex.jet_at(th)).collect()
}

pub fn cmd_check(file: &ProblemFile, csv: &str, tol: f64) -> Result<Output> {
    let (loaded, config) = file.resolve()?;
    let table = Table::from_csv(csv)?;
    match loaded {
        Loaded::Variational { problem, degree, epsilon_rel, .. } => {
            let report = variational_residuals(&problem, degree, epsilon_rel, &table)?;
            let passed = report.norms.sup <= tol && report.norms.dr_sup <= tol;
            let rep = VariationalReport::new("check", config, report, tol, passed);
            let status = if passed { ExitStatus::Success } else { ExitStatus::ResidualFailure };
            Ok(Output { status, stdout: json(&rep), files: vec![("report.json".into(), json(&rep))] })
        }
        Loaded::Control { problem, config: cfg, .. } => {
            let jets = control_jets(&problem, cfg.degree, cfg.epsilon_rel, &table)?;
            let rep = control_report("check", config, &problem, &jets, tol)?;
            let status = if rep.passed { ExitStatus::Success } else { ExitStatus::ResidualFailure };
            Ok(Output { status, stdout: json(&rep), files: vec![("report.json".into(), json(&rep))] })
        }
    }
}

#[derive(Serialize)]
struct VariationalSolveJson<'a> {
    config: &'a ResolvedConfig,
    #[serde(flatten)]
    result: &'a SolveResult,
}

fn solve_variational(pb: &FalvaProblem, cfg: &crate::solvers::SolveConfig, method: MethodName) -> Result<SolveResult> {
    match method {
        MethodName::Direct => solve_direct(pb, cfg),
        _ => solve_indirect(pb, cfg),
    }
}

pub fn cmd_solve(file: &ProblemFile, grid: usize, tol: Option<f64>) -> Result<Output> {
    let mut file = file.clone();
    if let Some(tol) = tol {
        file.solver.newton_tol = Some(tol);
    }
    let (loaded, config) = file.resolve()?;
    let missing = || Error::InvalidProblem("solve needs a [boundary] section".into());
    match loaded {
        Loaded::Variational { problem, config: cfg, method, .. } => {
            let cfg = cfg.ok_or_else(missing)?;
            let res = solve_variational(&problem, &cfg, method)?;
            let tr = &res.trajectory;
            let table = trajectory_table(tr, problem.jet_order(), &tr.uniform_grid(grid.max(2)))?;
            let mut rep =
                VariationalReport::new("solve", config.clone(), res.residual_report.clone(), 10.0 * cfg.newton_tol, res.converged);
            rep.converged = Some(res.converged);
            rep.iterations = Some(res.iterations);
            let status = if res.converged { ExitStatus::Success } else { ExitStatus::NonConvergence };
            let result = json(&VariationalSolveJson { config: &config, result: &res });
            Ok(Output {
                status,
                stdout: json(&rep),
                files: vec![
                    ("result.json".into(), result),
                    ("trajectory.csv".into(), table.to_csv()?),
                    ("report.json".into(), json(&rep)),
                ],
            })
        }
        Loaded::Control { problem, target, config: cfg } => {
            let target = target.ok_or_else(missing)?;
            let res = solve_shooting(&problem, &target, &cfg)?;
            let ex = &res.extremal;
            let rows = extremal_table(&problem, ex, &ex.q.uniform_grid(grid.max(2)))?;
            let table = Table { header: extremal_header(&problem), rows };
            let (a, b) = ex.interval();
            let jets = chebyshev_nodes(a, b.min(problem.interior_limit(cfg.epsilon_rel)), FIT_NODES)
                .into_iter()
                .map(|th| ex.jet_at(th))
                .collect::<Result<Vec<_>>>()?;
            let mut rep = control_report("solve", config.clone(), &problem, &jets, CONTROL_GAP_TOL)?;
            rep.converged = Some(true);
            rep.iterations = Some(res.iterations);
            let status = if rep.passed { ExitStatus::Success } else { ExitStatus::ResidualFailure };
            let result = serde_json::json!({ "config": config, "result": res });
            Ok(Output {
                status,
                stdout: json(&rep),
                files: vec![
                    ("result.json".into(), json(&result)),
                    ("extremal.csv".into(), table.to_csv()?),
                    ("report.json".into(), json(&rep)),
                ],
            })
        }
    }
}

/// One row of `sweep`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub action: f64,
    pub endpoint: Vec<f64>,
    pub sup_d_hamiltonian_dtheta: f64,
    pub converged: bool,
    pub error: Option<String>,
}

fn sweep_one(file: &ProblemFile, alpha: f64) -> Result<SweepRow> {
    let (loaded, _) = file.with_alpha(alpha).resolve()?;
    let missing = || Error::InvalidProblem("sweep needs a [boundary] section".into());
    match loaded {
        Loaded::Variational { problem, config: cfg, method, .. } => {
            let cfg = cfg.ok_or_else(missing)?;
            let res = solve_variational(&problem, &cfg, method)?;
            let cp = embed_variational(&problem)?;
            let costate = EmbeddedCostate::build(&problem);
            let mut sup: f64 = 0.0;
            for &theta in &res.residual_report.nodes {
                let jet = induced_control_jet(&problem, &costate, &res.trajectory, theta)?;
                sup = sup.max(energy_rate_at(&cp, &jet)?.d_theta.abs());
            }
            let (_, b) = res.trajectory.interval();
            Ok(SweepRow {
                alpha,
                action: res.action_value,
                endpoint: res.trajectory.eval(b),
                sup_d_hamiltonian_dtheta: sup,
                converged: res.converged,
                error: None,
            })
        }
        Loaded::Control { problem, target, config: cfg } => {
            let target = target.ok_or_else(missing)?;
            let res = solve_shooting(&problem, &target, &cfg)?;
            let ex = &res.extremal;
            let (a, b) = ex.interval();
            let mut sup: f64 = 0.0;
            for theta in chebyshev_nodes(a, b, FIT_NODES) {
                sup = sup.max(energy_rate_at(&problem, &ex.jet_at(theta)?)?.d_theta.abs());
            }
            Ok(SweepRow {
                alpha,
                action: control_action(&problem, ex, 2 * cfg.degree + 16)?,
                endpoint: ex.q.eval(b),
                sup_d_hamiltonian_dtheta: sup,
                converged: res.max_pontryagin_gap <= CONTROL_GAP_TOL,
                error: None,
            })
        }
    }
}

/// Solves the file once per α, concurrently; failures become rows.
pub fn sweep_rows(file: &ProblemFile, alphas: &[f64]) -> Result<Vec<SweepRow>> {
    if alphas.is_empty() {
        return Err(Error::InvalidConfig("alpha list is empty".into()));
    }
    if let Some(bad) = alphas.iter().find(|&&a| !(a > 0.0 && a <= 1.0)) {
        return Err(Error::InvalidConfig(format!("alpha = {bad} is outside (0, 1]")));
    }
    file.resolve()?;
    let rows = std::thread::scope(|scope| {
        let handles: Vec<_> = alphas.iter().map(|&alpha| scope.spawn(move || (alpha, sweep_one(file, alpha)))).collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect::<Vec<_>>()
    });
    Ok(rows
        .into_iter()
        .map(|(alpha, r)| {
            r.unwrap_or_else(|e| SweepRow {
                alpha,
                action: f64::NAN,
                endpoint: vec![],
                sup_d_hamiltonian_dtheta: f64::NAN,
                converged: false,
                error: Some(e.to_string()),
            })
        })
        .collect())
}

pub fn cmd_sweep(file: &ProblemFile, alphas: &[f64]) -> Result<Output> {
    let rows = sweep_rows(file, alphas)?;
    let dim = file.state_dim;
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::InvalidProblem(format!("csv: {e}"));
    let mut header = vec!["alpha".to_string(), "action".to_string()];
    header.extend((0..dim).map(|c| format!("endpoint_q{c}")));
    header.extend(["sup_dH_dtheta".to_string(), "converged".to_string(), "error".to_string()]);
    w.write_record(&header).map_err(io)?;
    for row in &rows {
        let mut rec = vec![row.alpha.to_string(), format!("{:.15e}", row.action)];
        rec.extend((0..dim).map(|c| row.endpoint.get(c).map_or("NaN".to_string(), |v| format!("{v:.15e}"))));
        rec.extend([
            format!("{:.15e}", row.sup_d_hamiltonian_dtheta),
            row.converged.to_string(),
            row.error.clone().unwrap_or_default(),
        ]);
        w.write_record(&rec).map_err(io)?;
    }
    let text = String::from_utf8(w.into_inner().map_err(|e| Error::InvalidProblem(e.to_string()))?)
        .map_err(|e| Error::InvalidProblem(e.to_string()))?;
    let status = if rows.iter().all(|r| r.error.is_none()) { ExitStatus::Success } else { ExitStatus::NonConvergence };
    Ok(Output { status, stdout: text.clone(), files: vec![("sweep.csv".into(), text)] })
}

/// Smooth non-stationary curve used when `identities` gets no CSV.
fn probe_trajectory(pb: &FalvaProblem, degree: usize, end: f64) -> Result<Trajectory> {
    let span = pb.t - pb.a;
    Ok(Trajectory::interpolate((pb.a, end), degree, pb.state_dim, |theta| {
        let s = (theta - pb.a) / span;
        (0..pb.state_dim).map(|c| (1.3 * (c + 1) as f64 * s + 0.2 * c as f64).sin() + 0.3 * s * s).collect()
    })?)
}

pub fn cmd_identities(file: &ProblemFile, csv: Option<&str>, tol: f64) -> Result<Output> {
    let (loaded, config) = file.resolve()?;
    let Loaded::Variational { problem, degree, epsilon_rel, .. } = loaded else {
        return Err(Error::InvalidProblem("identities needs a variational problem".into()));
    };
    let report = match csv {
        Some(text) => variational_residuals(&problem, degree, epsilon_rel, &Table::from_csv(text)?)?,
        None => {
            let end = problem.interior_limit(epsilon_rel);
            let tr = probe_trajectory(&problem, degree, end)?;
            let nodes = chebyshev_nodes(problem.a, end, FIT_NODES);
            crate::variational::verify_identities(&problem, &tr, &nodes)?
        }
    };
    let passed = report.norms.identity_sup <= tol;
    let rep = VariationalReport::new("identities", config, report, tol, passed);
    let status = if passed { ExitStatus::Success } else { ExitStatus::ResidualFailure };
    Ok(Output { status, stdout: json(&rep), files: vec![("report.json".into(), json(&rep))] })
}
