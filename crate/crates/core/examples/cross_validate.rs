//! Direct Ritz and indirect collocation on L = ½q'² + ½q², fixed ends.

use falva::solvers::{cross_validate, BoundaryMode, SolveConfig};
use falva::variational::FalvaProblem;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for alpha in [0.5, 0.75, 1.0] {
        let pb = FalvaProblem::parse(alpha, 0.0, 1.0, 1, 1, "0.5*q0d1^2 + 0.5*q0^2", vec![vec![0.0]])?;
        let cfg = SolveConfig::new(BoundaryMode::FixedEnds { final_values: vec![vec![1.0]] }).with_degree(120);
        let cv = cross_validate(&pb, &cfg)?;
        println!(
            "alpha = {alpha}: trajectory gap {:.2e}, action gap {:.2e}, agree = {}",
            cv.trajectory_gap, cv.action_gap, cv.agree
        );
    }
    Ok(())
}
