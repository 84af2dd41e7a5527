//! Gauss–Jacobi rules for the weight (t−θ)^(α−1): weight sums and a
//! monomial moment against the closed form.

use falva::specquad::{gamma, jacobi_rule};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (a, t) = (0.0, 1.0);
    for alpha in [0.25, 0.5, 1.0] {
        let rule = jacobi_rule(alpha, a, t, 8)?;
        // ∫_0^1 θ² (1−θ)^(α−1) dθ = 2 Γ(α) / Γ(α+3)
        let exact = 2.0 * gamma(alpha)? / gamma(alpha + 3.0)?;
        let got = rule.integrate(|x| x * x);
        println!(
            "alpha = {alpha:4}: sum w = {:.15} (expect {:.15}), ∫θ² w = {got:.15} (error {:.1e})",
            rule.weight_sum(),
            (t - a).powf(alpha) / alpha,
            (got - exact).abs()
        );
    }
    Ok(())
}
