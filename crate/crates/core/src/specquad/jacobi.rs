use serde::{Deserialize, Serialize};

use super::gamma::gamma;
use super::QuadError;

const QL_TOL: f64 = 1e-14;
const QL_MAX_SWEEPS: usize = 60;

/// Quadrature rule for `∫ f(θ) (t−θ)^(α−1) dθ` over `interval`.
///
/// When `interval.1 == observer` the rule is Gauss–Jacobi and integrates
/// polynomials of degree `2n−1` exactly. When the interval stops short of
/// the observer time the rule comes from [`truncated_rule`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub alpha: f64,
    pub interval: (f64, f64),
    pub observer: f64,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ w_i f(θ_i)`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Like [`integrate`](Self::integrate), propagating the first error of `f`.
    pub fn try_integrate<E, F: FnMut(f64) -> Result<f64, E>>(&self, mut f: F) -> Result<f64, E> {
        let mut acc = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(x)?;
        }
        Ok(acc)
    }
}

/// `∫ f(θ) (t−θ)^(α−1) dθ ≈ Σ w_i f(θ_i)` with the free function spelling.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, rule: &QuadratureRule) -> f64 {
    rule.integrate(f)
}

fn check_args(alpha: f64, a: f64, t: f64, n: usize) -> Result<(), QuadError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(QuadError::InvalidAlpha(alpha));
    }
    if !(a < t) || !a.is_finite() || !t.is_finite() {
        return Err(QuadError::InvalidInterval(a, t));
    }
    if n == 0 {
        return Err(QuadError::EmptyRule);
    }
    Ok(())
}

/// Nodes and weights on `[-1, 1]` for the weight `(1−x)^ja (1+x)^jb`
/// (Golub–Welsch: eigen-decomposition of the Jacobi matrix by implicit QL).
fn golub_welsch(n: usize, ja: f64, jb: f64) -> Result<(Vec<f64>, Vec<f64>), QuadError> {
    let ab = ja + jb;
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n];
    for (k, d) in diag.iter_mut().enumerate() {
        let kf = k as f64;
        *d = if k == 0 {
            (jb - ja) / (ab + 2.0)
        } else {
            (jb * jb - ja * ja) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
    }
    for (k, e) in off.iter_mut().enumerate().take(n - 1) {
        let kf = (k + 1) as f64;
        let s = 2.0 * kf + ab;
        *e = (4.0 * kf * (kf + ja) * (kf + jb) * (kf + ab) / (s * s * (s + 1.0) * (s - 1.0))).sqrt();
    }
    let mut first = vec![0.0; n];
    first[0] = 1.0;
    implicit_ql(&mut diag, &mut off, &mut first)?;

    let mu0 = 2f64.powf(ab + 1.0) * gamma(ja + 1.0)? * gamma(jb + 1.0)? / gamma(ab + 2.0)?;
    let mut pairs: Vec<(f64, f64)> = diag.into_iter().zip(first).map(|(x, z)| (x, mu0 * z * z)).collect();
    pairs.sort_by(|l, r| l.0.total_cmp(&r.0));
    Ok(pairs.into_iter().unzip())
}

/// Implicit QL iteration on a symmetric tridiagonal matrix. `off[i]` couples
/// rows `i` and `i+1`. On return `diag` holds the eigenvalues and `first`
/// the first components of the normalised eigenvectors.
fn implicit_ql(diag: &mut [f64], off: &mut [f64], first: &mut [f64]) -> Result<(), QuadError> {
    let n = diag.len();
    if n == 0 {
        return Ok(());
    }
    off[n - 1] = 0.0;
    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= QL_TOL * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > QL_MAX_SWEEPS {
                return Err(QuadError::EigenNoConvergence);
            }
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
                let z = first[i + 1];
                first[i + 1] = s * first[i] + c * z;
                first[i] = c * first[i] - s * z;
            }
            if underflow {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
    Ok(())
}

/// `n`-point Gauss–Jacobi rule for the weight `(t−θ)^(α−1)` on `(a, t)`.
pub fn jacobi_rule(alpha: f64, a: f64, t: f64, n: usize) -> Result<QuadratureRule, QuadError> {
    check_args(alpha, a, t, n)?;
    let (xs, ws) = golub_welsch(n, alpha - 1.0, 0.0)?;
    let half = 0.5 * (t - a);
    let scale = half.powf(alpha);
    let nodes = xs.iter().map(|x| a + half * (x + 1.0)).collect();
    let weights = ws.iter().map(|w| w * scale).collect();
    Ok(QuadratureRule { nodes, weights, alpha, interval: (a, t), observer: t })
}

/// `n`-point Gauss–Legendre rule on `(a, b)` (unit weight).
pub fn legendre_rule(a: f64, b: f64, n: usize) -> Result<QuadratureRule, QuadError> {
    let mut rule = jacobi_rule(1.0, a, b, n)?;
    rule.observer = b;
    Ok(rule)
}

/// Rule for the weight `(t−θ)^(α−1)` on `(a, b)` with `b <= t`.
///
/// For `b == t` this is [`jacobi_rule`]. Otherwise the substitution
/// `s = (t−θ)^α` turns the weighted integral into `(1/α)∫ f(t − s^(1/α)) ds`
/// over a range bounded away from `s = 0`, which Gauss–Legendre handles with
/// spectral accuracy. It is exact for α = 1/k and polynomial `f` of degree
/// `(2n−1)/k`.
pub fn truncated_rule(alpha: f64, a: f64, b: f64, t: f64, n: usize) -> Result<QuadratureRule, QuadError> {
    check_args(alpha, a, t, n)?;
    if !(a < b) || b > t {
        return Err(QuadError::InvalidInterval(a, b));
    }
    if b == t {
        return jacobi_rule(alpha, a, t, n);
    }
    let s_lo = (t - b).powf(alpha);
    let s_hi = (t - a).powf(alpha);
    let base = legendre_rule(s_lo, s_hi, n)?;
    let mut pairs: Vec<(f64, f64)> = base
        .nodes
        .iter()
        .zip(&base.weights)
        .map(|(&s, &w)| (t - s.powf(1.0 / alpha), w / alpha))
        .collect();
    pairs.sort_by(|l, r| l.0.total_cmp(&r.0));
    let (nodes, weights) = pairs.into_iter().unzip();
    Ok(QuadratureRule { nodes, weights, alpha, interval: (a, b), observer: t })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_rules_match_closed_forms() {
        // two-point Gauss–Legendre: ±1/√3, weights 1
        let r = legendre_rule(-1.0, 1.0, 2).unwrap();
        assert!((r.nodes[0] + 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-14);
        let r = jacobi_rule(0.5, 0.0, 1.0, 1).unwrap();
        // one point: mean of θ under (1−θ)^(-1/2): 2/3
        assert!((r.nodes[0] - 2.0 / 3.0).abs() < 1e-14);
        assert!((r.weights[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn analytic_integrals() {
        let r = jacobi_rule(0.5, 0.0, 1.0, 6).unwrap();
        assert!((r.integrate(|_| 1.0) - 2.0).abs() < 1e-13);
        assert!((r.integrate(|x| 1.0 - x) - 2.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn invalid_arguments() {
        assert!(matches!(jacobi_rule(0.0, 0.0, 1.0, 4), Err(QuadError::InvalidAlpha(_))));
        assert!(matches!(jacobi_rule(1.5, 0.0, 1.0, 4), Err(QuadError::InvalidAlpha(_))));
        assert!(matches!(jacobi_rule(0.5, 1.0, 1.0, 4), Err(QuadError::InvalidInterval(..))));
        assert!(matches!(jacobi_rule(0.5, 0.0, 1.0, 0), Err(QuadError::EmptyRule)));
        assert!(matches!(truncated_rule(0.5, 0.0, 1.5, 1.0, 4), Err(QuadError::InvalidInterval(..))));
    }

    #[test]
    fn truncated_rule_is_exact_for_reciprocal_integer_alpha() {
        // α = 1/2: polynomial of degree d in θ is degree 2d in s
        let (a, b, t) = (0.0, 0.9, 1.0);
        let r = truncated_rule(0.5, a, b, t, 10).unwrap();
        // ∫_0^0.9 θ^3 (1−θ)^(-1/2) dθ via antiderivative in s = (1−θ)^(1/2)
        // θ = 1 − s², θ³ (1−θ)^(-1/2) dθ = −2 (1 − s²)³ ds
        let anti = |s: f64| -2.0 * (s - s.powi(3) + 3.0 * s.powi(5) / 5.0 - s.powi(7) / 7.0);
        let exact = anti((1.0 - b).sqrt()) - anti(1.0);
        let got = r.integrate(|x| x.powi(3));
        assert!((got - exact).abs() < 1e-13, "{got} vs {exact}");
        assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(r.nodes.iter().all(|&x| x > a && x < b));
    }
}
