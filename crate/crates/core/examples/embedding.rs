//! A second-order variational problem rewritten as a control problem with
//! stacked state (q, q') and control q''.

use falva::control::{embed_variational, hamiltonian, induced_control_jet, pontryagin_gaps_at, EmbeddedCostate};
use falva::solvers::{solve_indirect, BoundaryMode, SolveConfig};
use falva::variational::FalvaProblem;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pb = FalvaProblem::parse(0.5, 0.0, 1.0, 2, 1, "0.5*q0d2^2 + 0.5*q0^2", vec![vec![0.0], vec![1.0]])?;
    let cp = embed_variational(&pb)?;
    println!("L = {}, velocity = [{}, {}]", cp.lagrangian, cp.velocity[0], cp.velocity[1]);
    println!("H = {}", hamiltonian(&cp));

    let cfg = SolveConfig::new(BoundaryMode::FixedEnds { final_values: vec![vec![0.5], vec![0.0]] }).with_degree(64);
    let res = solve_indirect(&pb, &cfg)?;
    let costate = EmbeddedCostate::build(&pb);
    let worst = res
        .residual_report
        .nodes
        .iter()
        .map(|&th| Ok(pontryagin_gaps_at(&cp, &induced_control_jet(&pb, &costate, &res.trajectory, th)?)?.max()))
        .collect::<falva::Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    println!("Pontryagin gaps of the induced (x, u, p) along the variational solution: {worst:.2e}");
    Ok(())
}
