//! LQ control L = ½u², q' = u: the extremal is u = −p(1−θ)^(1−α) with p
//! constant. Shooting recovers p from the terminal state, and H is not
//! conserved for α < 1.

use falva::control::{energy_rate_gap, hamiltonian, solve_shooting, ControlProblem, ShootingConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (alpha, p) = (0.5, 0.7);
    let cp = ControlProblem::parse(alpha, 0.0, 1.0, 1, "0.5*u0^2", &["u0"], vec![0.0])?;
    println!("H = {}", hamiltonian(&cp));

    let cfg = ShootingConfig::default();
    let theta_f = cfg.end(&cp);
    let target = -p * (1.0 - (1.0 - theta_f).powf(2.0 - alpha)) / (2.0 - alpha);
    let res = solve_shooting(&cp, &[target], &cfg)?;
    println!("recovered p = {:.12} (exact {p})", res.costate_initial[0]);
    println!("max Pontryagin gap {:.2e}, max energy gap {:.2e}", res.max_pontryagin_gap, res.max_energy_gap);
    for theta in [0.0, 0.5, 0.9] {
        let jet = res.extremal.jet_at(theta)?;
        let rate = falva::control::energy_rate_at(&cp, &jet)?;
        println!(
            "θ = {theta}: H = {:.6}, dH/dθ = ∂H/∂θ = {:.6} (gap {:.1e})",
            rate.h,
            rate.d_theta,
            energy_rate_gap(&cp, &res.extremal, theta)?
        );
    }
    Ok(())
}
