//! Fractional free particle L = ½q'² with α = ½: the exact solution has
//! q'(θ) = (1−θ)^(1/2). Both solvers are compared with it.

use falva::solvers::{solve_direct, solve_indirect, BoundaryMode, SolveConfig};
use falva::variational::FalvaProblem;

fn exact(theta: f64) -> f64 {
    2.0 / 3.0 * (1.0 - (1.0 - theta).powf(1.5))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pb = FalvaProblem::parse(0.5, 0.0, 1.0, 1, 1, "0.5*q0d1^2", vec![vec![0.0]])?;
    let grid: Vec<f64> = (0..=999).map(|k| k as f64 * 1e-3).collect();

    let cfg = SolveConfig::new(BoundaryMode::InitialJet { higher: vec![vec![1.0]] }).with_degree(300);
    let ind = solve_indirect(&pb, &cfg)?;
    let qd = ind.trajectory.derivative(1);
    let err = grid.iter().map(|&th| (qd.eval(th)[0] - (1.0 - th).sqrt()).abs()).fold(0.0, f64::max);
    println!("indirect: converged {}, sup |q' - exact| = {err:.2e}, action {:.12}", ind.converged, ind.action_value);

    let theta_f = 0.999;
    let cfg = SolveConfig::new(BoundaryMode::FixedEnds { final_values: vec![vec![exact(theta_f)]] })
        .with_degree(120)
        .with_theta_f(theta_f);
    let dir = solve_direct(&pb, &cfg)?;
    let err = grid.iter().map(|&th| (dir.trajectory.eval(th)[0] - exact(th)).abs()).fold(0.0, f64::max);
    println!("direct:   {} Newton steps, sup |q - exact| = {err:.2e}", dir.iterations);
    Ok(())
}
