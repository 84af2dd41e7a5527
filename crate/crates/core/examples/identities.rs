//! The ψ recursion, the bracket identity and DR = EL·q' hold on any curve,
//! stationary or not.

use falva::trajectory::Trajectory;
use falva::variational::{interior_nodes, verify_identities, FalvaProblem};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pb = FalvaProblem::parse(
        0.3,
        0.0,
        1.0,
        2,
        2,
        "0.5*q0d2^2 + q1d2*q0d1 + theta*q0*q1 + q1d1^3",
        vec![vec![0.0; 2]; 2],
    )?;
    let tr = Trajectory::interpolate((0.0, 1.0), 12, 2, |th| vec![(2.0 * th).sin(), th.exp() - 1.0])?;
    let report = verify_identities(&pb, &tr, &interior_nodes(&pb, &tr, 32, 1e-3))?;
    println!("EL residual sup      = {:.3e}  (not stationary)", report.norms.sup);
    println!("DR residual sup      = {:.3e}", report.norms.dr_sup);
    println!("identity gap sup     = {:.3e}", report.norms.identity_sup);
    Ok(())
}
