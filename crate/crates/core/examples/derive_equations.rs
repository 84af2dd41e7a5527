//! Expanded Euler-Lagrange equations with the friction force for m = 1, 2, 3.

use falva::cli::derive_text;
use falva::variational::FalvaProblem;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (m, lagrangian) in [(1, "0.5*q0d1^2"), (2, "0.5*q0d2^2 + 0.5*q0^2"), (3, "0.5*q0d3^2")] {
        let pb = FalvaProblem::parse(0.5, 0.0, 1.0, m, 1, lagrangian, vec![vec![0.0]; m])?;
        println!("L = {lagrangian}\n{}", derive_text(&pb));
    }
    Ok(())
}
