//! Sweeps α for the free-particle problem file and compares endpoints with
//! the closed form.

use falva::cli::{sweep_rows, ProblemFile};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/problems/free_particle.toml");
    let file = ProblemFile::from_toml(&std::fs::read_to_string(path)?)?;
    for row in sweep_rows(&file, &[0.25, 0.5, 0.75, 1.0])? {
        let theta_f: f64 = if row.alpha == 1.0 { 1.0 } else { 0.999 };
        let exact = (1.0 - (1.0 - theta_f).powf(2.0 - row.alpha)) / (2.0 - row.alpha);
        println!(
            "alpha {:4}: q(θ_f) = {:.10} (closed form {exact:.10}), sup |∂H/∂θ| = {:.3e}",
            row.alpha, row.endpoint[0], row.sup_d_hamiltonian_dtheta
        );
    }
    Ok(())
}
