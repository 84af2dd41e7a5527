use std::f64::consts::PI;

use super::QuadError;

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Euler Gamma function.
///
/// Lanczos approximation for `x >= 0.5`, reflection formula below that.
/// Returns an error at the poles `x = 0, -1, -2, ...`.
pub fn gamma(x: f64) -> Result<f64, QuadError> {
    if x <= 0.0 && x.fract() == 0.0 {
        return Err(QuadError::GammaPole(x));
    }
    if x < 0.5 {
        let s = (PI * x).sin();
        return Ok(PI / (s * gamma(1.0 - x)?));
    }
    // integer arguments: exact factorial while representable
    if x.fract() == 0.0 && x <= 171.0 {
        return Ok((1..x as u64).fold(1.0, |acc, k| acc * k as f64));
    }
    let z = x - 1.0;
    let mut sum = LANCZOS_COEFFS[0];
    for (k, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        sum += c / (z + k as f64);
    }
    let tt = z + LANCZOS_G + 0.5;
    // split the power to keep tt^(z+0.5) finite for large z
    let half = tt.powf(0.5 * (z + 0.5));
    Ok((2.0 * PI).sqrt() * half * (half * (-tt).exp()) * sum)
}

/// `Γ(i−α+1)/Γ(1−α)`, evaluated as the finite product `∏_{s=1}^{i} (s−α)`.
///
/// The product form stays exact at `α = 1`, where it vanishes.
pub fn gamma_ratio(i: usize, alpha: f64) -> f64 {
    (1..=i).map(|s| s as f64 - alpha).product()
}

/// Binomial coefficient `n choose k`; zero outside `0 <= k <= n`.
pub fn binomial(n: i64, k: i64) -> u64 {
    if n < 0 || k < 0 || k > n {
        return 0;
    }
    let k = k.min(n - k) as u64;
    let n = n as u64;
    let mut acc: u64 = 1;
    for j in 0..k {
        acc = acc * (n - j) / (j + 1);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn known_values() {
        assert_eq!(gamma(1.0).unwrap(), 1.0);
        assert!(rel(gamma(0.5).unwrap(), PI.sqrt()) < 1e-14);
        assert!(rel(gamma(0.1).unwrap(), 9.513_507_698_668_732) < 1e-13);
        assert!(rel(gamma(2.5).unwrap(), 1.329_340_388_179_137) < 1e-14);
        assert!(rel(gamma(30.0).unwrap(), 8.841_761_993_739_702e30) < 1e-13);
        assert!(rel(gamma(29.5).unwrap(), 1.634_812_519_827_426_6e30) < 1e-13);
        assert!(rel(gamma(-0.5).unwrap(), -2.0 * PI.sqrt()) < 1e-14);
    }

    #[test]
    fn recurrence() {
        for m in [0.3, 1.7, 5.2] {
            let lhs = gamma(m + 1.0).unwrap();
            let rhs = m * gamma(m).unwrap();
            assert!(rel(lhs, rhs) < 1e-13, "m={m}");
        }
    }

    #[test]
    fn poles() {
        assert!(matches!(gamma(0.0), Err(QuadError::GammaPole(_))));
        assert!(matches!(gamma(-3.0), Err(QuadError::GammaPole(_))));
    }

    #[test]
    fn gamma_ratio_values() {
        assert_eq!(gamma_ratio(2, 0.5), 0.75);
        assert_eq!(gamma_ratio(3, 0.25), 3.609375);
        for i in 1..6 {
            assert_eq!(gamma_ratio(i, 1.0), 0.0);
        }
        assert_eq!(gamma_ratio(0, 0.3), 1.0);
    }

    #[test]
    fn gamma_ratio_matches_quotient() {
        for k in 1..=9 {
            let alpha = 0.1 * k as f64;
            for i in 1..6 {
                let lhs = gamma_ratio(i, alpha) * gamma(1.0 - alpha).unwrap();
                let rhs = gamma(i as f64 - alpha + 1.0).unwrap();
                assert!(rel(lhs, rhs) < 1e-11, "i={i} alpha={alpha}");
            }
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(2, 0), 1);
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(3, -1), 0);
        for n in 1..=12 {
            for k in 0..=n {
                assert_eq!(binomial(n, k), binomial(n - 1, k - 1) + binomial(n - 1, k));
            }
        }
    }
}
