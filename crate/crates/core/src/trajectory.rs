//! Chebyshev-polynomial curves on `[a, b]` with exact differentiation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::symexpr::Jet;

/// Relative slack when deciding whether θ lies in the interval.
const INTERVAL_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrajectoryError {
    #[error("theta = {theta} lies outside [{a}, {b}]")]
    OutsideInterval { theta: f64, a: f64, b: f64 },
    #[error("need at least {needed} distinct samples for degree {degree}, got {got}")]
    NotEnoughSamples { needed: usize, got: usize, degree: usize },
    #[error("least-squares fit is rank deficient")]
    RankDeficient,
    #[error("sample has {got} components, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid interval [{0}, {1}]")]
    InvalidInterval(f64, f64),
}

/// Vector-valued Chebyshev expansion `q_i(θ) = Σ_k c_{i,k} T_k(x(θ))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    interval: (f64, f64),
    coeffs: Vec<Vec<f64>>,
}

/// Chebyshev points of the first kind mapped to `[a, b]`, increasing.
pub fn chebyshev_nodes(a: f64, b: f64, count: usize) -> Vec<f64> {
    let n = count as f64;
    (0..count)
        .rev()
        .map(|k| {
            let x = (PI * (k as f64 + 0.5) / n).cos();
            0.5 * (a + b) + 0.5 * (b - a) * x
        })
        .collect()
}

fn to_unit(interval: (f64, f64), theta: f64) -> f64 {
    let (a, b) = interval;
    (2.0 * theta - a - b) / (b - a)
}

fn clenshaw(c: &[f64], x: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ck in c.iter().skip(1).rev() {
        let b0 = ck + 2.0 * x * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    c[0] + x * b1 - b2
}

fn differentiate_coeffs(c: &[f64], scale: f64) -> Vec<f64> {
    let n = c.len();
    if n <= 1 {
        return vec![0.0];
    }
    let mut d = vec![0.0; n + 1];
    for k in (1..n).rev() {
        d[k - 1] = d[k + 1] + 2.0 * k as f64 * c[k];
    }
    d[0] *= 0.5;
    d.truncate(n - 1);
    d.iter_mut().for_each(|v| *v *= scale);
    d
}

/// Values of `d^r/dθ^r T_j(x(θ))` for `r = 0..=max_order`, `j = 0..=degree`,
/// indexed `[r][j]`.
pub fn basis_values(interval: (f64, f64), degree: usize, theta: f64, max_order: usize) -> Vec<Vec<f64>> {
    let x = to_unit(interval, theta);
    let n = degree + 1;
    let mut vals = vec![vec![0.0; n]; max_order + 1];
    vals[0][0] = 1.0;
    if n > 1 {
        vals[0][1] = x;
        if max_order >= 1 {
            vals[1][1] = 1.0;
        }
    }
    for j in 1..n.saturating_sub(1) {
        for r in 0..=max_order {
            let lower = if r > 0 { 2.0 * r as f64 * vals[r - 1][j] } else { 0.0 };
            vals[r][j + 1] = 2.0 * x * vals[r][j] + lower - vals[r][j - 1];
        }
    }
    let scale = 2.0 / (interval.1 - interval.0);
    let mut factor = 1.0;
    for row in vals.iter_mut() {
        row.iter_mut().for_each(|v| *v *= factor);
        factor *= scale;
    }
    vals
}

impl Trajectory {
    /// Builds a trajectory from per-component coefficient vectors. All
    /// components are padded to a common degree.
    pub fn new(interval: (f64, f64), mut coeffs: Vec<Vec<f64>>) -> Result<Self, TrajectoryError> {
        if !(interval.0 < interval.1) || !interval.0.is_finite() || !interval.1.is_finite() {
            return Err(TrajectoryError::InvalidInterval(interval.0, interval.1));
        }
        let len = coeffs.iter().map(Vec::len).max().unwrap_or(1).max(1);
        for c in coeffs.iter_mut() {
            c.resize(len, 0.0);
        }
        Ok(Trajectory { interval, coeffs })
    }

    /// Interpolates `f` at `degree + 1` Chebyshev points.
    pub fn interpolate<F>(interval: (f64, f64), degree: usize, state_dim: usize, f: F) -> Result<Self, TrajectoryError>
    where
        F: Fn(f64) -> Vec<f64>,
    {
        let nodes = chebyshev_nodes(interval.0, interval.1, degree + 1);
        let values: Vec<Vec<f64>> = nodes.iter().map(|&th| f(th)).collect();
        if let Some(v) = values.iter().find(|v| v.len() != state_dim) {
            return Err(TrajectoryError::DimensionMismatch { expected: state_dim, got: v.len() });
        }
        Self::from_chebyshev_values(interval, &values)
    }

    /// Interpolant through `values[k]` at the `k`-th point of
    /// [`chebyshev_nodes`]`(a, b, values.len())`.
    pub fn from_chebyshev_values(interval: (f64, f64), values: &[Vec<f64>]) -> Result<Self, TrajectoryError> {
        let n = values.len();
        if n == 0 {
            return Err(TrajectoryError::NotEnoughSamples { needed: 1, got: 0, degree: 0 });
        }
        let state_dim = values[0].len();
        if let Some(v) = values.iter().find(|v| v.len() != state_dim) {
            return Err(TrajectoryError::DimensionMismatch { expected: state_dim, got: v.len() });
        }
        let nodes = chebyshev_nodes(interval.0, interval.1, n);
        let mut coeffs = vec![vec![0.0; n]; state_dim];
        for (k, &th) in nodes.iter().enumerate() {
            let x = to_unit(interval, th);
            let ang = x.clamp(-1.0, 1.0).acos();
            for j in 0..n {
                let tj = (j as f64 * ang).cos();
                for (i, c) in coeffs.iter_mut().enumerate() {
                    c[j] += values[k][i] * tj;
                }
            }
        }
        for c in coeffs.iter_mut() {
            for (j, v) in c.iter_mut().enumerate() {
                *v *= if j == 0 { 1.0 } else { 2.0 } / n as f64;
            }
        }
        Self::new(interval, coeffs)
    }

    /// Least-squares fit of degree `degree` to `(θ, value)` samples; the
    /// interval is the sample range.
    pub fn fit(samples: &[(f64, Vec<f64>)], degree: usize) -> Result<Self, TrajectoryError> {
        let needed = degree + 1;
        let mut thetas: Vec<f64> = samples.iter().map(|s| s.0).collect();
        thetas.sort_by(f64::total_cmp);
        thetas.dedup();
        if thetas.len() < needed {
            return Err(TrajectoryError::NotEnoughSamples { needed, got: thetas.len(), degree });
        }
        let interval = (thetas[0], thetas[thetas.len() - 1]);
        let dim = samples[0].1.len();
        let rows = samples.len();
        let mut vander = DMatrix::zeros(rows, needed);
        for (r, (th, v)) in samples.iter().enumerate() {
            if v.len() != dim {
                return Err(TrajectoryError::DimensionMismatch { expected: dim, got: v.len() });
            }
            let x = to_unit(interval, *th).clamp(-1.0, 1.0);
            let (mut t0, mut t1) = (1.0, x);
            for j in 0..needed {
                vander[(r, j)] = t0;
                let t2 = 2.0 * x * t1 - t0;
                t0 = t1;
                t1 = t2;
            }
        }
        let svd = vander.svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smin > 1e-13 * smax) {
            return Err(TrajectoryError::RankDeficient);
        }
        let mut coeffs = Vec::with_capacity(dim);
        for i in 0..dim {
            let rhs = DVector::from_iterator(rows, samples.iter().map(|s| s.1[i]));
            let sol = svd.solve(&rhs, 0.0).map_err(|_| TrajectoryError::RankDeficient)?;
            coeffs.push(sol.iter().copied().collect());
        }
        Self::new(interval, coeffs)
    }

    /// The constant trajectory `value` on `interval`.
    pub fn constant(interval: (f64, f64), value: &[f64]) -> Result<Self, TrajectoryError> {
        Self::new(interval, value.iter().map(|&v| vec![v]).collect())
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn state_dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.first().map_or(0, |c| c.len() - 1)
    }

    pub fn coeffs(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    pub fn contains(&self, theta: f64) -> bool {
        let (a, b) = self.interval;
        let slack = INTERVAL_SLACK * (b - a);
        theta >= a - slack && theta <= b + slack
    }

    fn check(&self, theta: f64) -> Result<(), TrajectoryError> {
        if self.contains(theta) {
            Ok(())
        } else {
            Err(TrajectoryError::OutsideInterval { theta, a: self.interval.0, b: self.interval.1 })
        }
    }

    /// Value at θ. Polynomial extrapolation is not guarded here; use
    /// [`jet_at`](Self::jet_at) for checked access.
    pub fn eval(&self, theta: f64) -> Vec<f64> {
        let x = to_unit(self.interval, theta);
        self.coeffs.iter().map(|c| clenshaw(c, x)).collect()
    }

    /// Exact `order`-th derivative; differentiating past the degree gives
    /// the zero trajectory.
    pub fn derivative(&self, order: usize) -> Trajectory {
        let scale = 2.0 / (self.interval.1 - self.interval.0);
        let mut coeffs = self.coeffs.clone();
        for _ in 0..order {
            coeffs = coeffs.iter().map(|c| differentiate_coeffs(c, scale)).collect();
        }
        Trajectory { interval: self.interval, coeffs }
    }

    /// `(θ, q, q', ..., q^(K))` at θ.
    pub fn jet_at(&self, theta: f64, order: usize) -> Result<Jet, TrajectoryError> {
        self.check(theta)?;
        let x = to_unit(self.interval, theta);
        let scale = 2.0 / (self.interval.1 - self.interval.0);
        let q = self
            .coeffs
            .iter()
            .map(|c| {
                let mut col = Vec::with_capacity(order + 1);
                let mut cur = c.clone();
                for _ in 0..=order {
                    col.push(clenshaw(&cur, x));
                    cur = differentiate_coeffs(&cur, scale);
                }
                col
            })
            .collect();
        Ok(Jet::new(theta, q))
    }

    /// `s * self + other`, both on the same interval.
    pub fn axpy(&self, s: f64, other: &Trajectory) -> Result<Trajectory, TrajectoryError> {
        if self.interval != other.interval {
            return Err(TrajectoryError::InvalidInterval(other.interval.0, other.interval.1));
        }
        if self.state_dim() != other.state_dim() {
            return Err(TrajectoryError::DimensionMismatch { expected: self.state_dim(), got: other.state_dim() });
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(x, y)| {
                let n = x.len().max(y.len());
                (0..n)
                    .map(|k| s * x.get(k).copied().unwrap_or(0.0) + y.get(k).copied().unwrap_or(0.0))
                    .collect()
            })
            .collect();
        Trajectory::new(self.interval, coeffs)
    }

    /// Re-expresses the curve at a higher (or equal) degree; exact.
    pub fn elevate(&self, degree: usize) -> Trajectory {
        let mut coeffs = self.coeffs.clone();
        for c in coeffs.iter_mut() {
            if c.len() < degree + 1 {
                c.resize(degree + 1, 0.0);
            }
        }
        Trajectory { interval: self.interval, coeffs }
    }

    /// Tail size `Σ |c_k|` over the top quarter of the coefficients, a proxy
    /// for the truncation error of the expansion.
    pub fn tail_estimate(&self) -> f64 {
        let n = self.degree() + 1;
        let start = n - (n / 4).max(1);
        self.coeffs.iter().map(|c| c[start..].iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// `count` equally spaced points over `[a, b]`.
    pub fn uniform_grid(&self, count: usize) -> Vec<f64> {
        let (a, b) = self.interval;
        match count {
            0 => vec![],
            1 => vec![a],
            _ => (0..count).map(|k| a + (b - a) * k as f64 / (count - 1) as f64).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Trajectory {
        Trajectory::interpolate((0.0, 1.0), 2, 1, |th| vec![th * th]).unwrap()
    }

    #[test]
    fn polynomial_reproduction() {
        let tr = square();
        for th in [0.0, 0.3, 0.77, 1.0] {
            assert!((tr.eval(th)[0] - th * th).abs() < 1e-13);
        }
        let d = tr.derivative(1);
        assert_eq!(d.degree(), 1);
        assert!((d.eval(0.4)[0] - 0.8).abs() < 1e-13);
        assert_eq!(tr.derivative(0), tr);
        assert!(tr.derivative(3).eval(0.5)[0].abs() < 1e-15);
    }

    #[test]
    fn jet_of_square() {
        let jet = square().jet_at(0.5, 3).unwrap();
        let col = &jet.q[0];
        assert!((col[0] - 0.25).abs() < 1e-13);
        assert!((col[1] - 1.0).abs() < 1e-13);
        assert!((col[2] - 2.0).abs() < 1e-13);
        assert!(col[3].abs() < 1e-13);
        assert!(matches!(square().jet_at(1.5, 1), Err(TrajectoryError::OutsideInterval { .. })));
    }

    #[test]
    fn third_derivative_of_fifth_power() {
        let tr = Trajectory::interpolate((0.0, 1.0), 5, 1, |th| vec![th.powi(5)]).unwrap();
        let v = tr.derivative(3).eval(0.5)[0];
        assert!((v - 15.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn constant_fit_has_zero_derivative() {
        let samples: Vec<_> = (0..10).map(|k| (k as f64 * 0.1, vec![2.5, -1.0])).collect();
        let tr = Trajectory::fit(&samples, 3).unwrap();
        let d = tr.derivative(1);
        for th in [0.0, 0.45, 0.9] {
            assert!(d.eval(th).iter().all(|v| v.abs() < 1e-12));
            assert!((tr.eval(th)[0] - 2.5).abs() < 1e-13);
        }
    }

    #[test]
    fn least_squares_fit_of_sine() {
        let samples: Vec<_> = chebyshev_nodes(0.0, 1.0, 40).into_iter().map(|t| (t, vec![t.sin()])).collect();
        let tr = Trajectory::fit(&samples, 12).unwrap();
        let worst = (0..=1000)
            .map(|k| {
                let th = samples[0].0 + (samples[39].0 - samples[0].0) * k as f64 / 1000.0;
                (tr.eval(th)[0] - th.sin()).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst <= 1e-9, "{worst}");
    }

    #[test]
    fn fit_errors() {
        let few: Vec<_> = (0..3).map(|k| (k as f64, vec![0.0])).collect();
        assert!(matches!(Trajectory::fit(&few, 3), Err(TrajectoryError::NotEnoughSamples { .. })));
        let dup: Vec<_> = (0..6).map(|k| ((k % 2) as f64, vec![0.0])).collect();
        assert!(matches!(Trajectory::fit(&dup, 3), Err(TrajectoryError::NotEnoughSamples { .. })));
    }

    #[test]
    fn basis_values_match_trajectory_derivatives() {
        let interval = (0.2, 1.7);
        let coeffs = vec![vec![0.3, -1.2, 0.7, 0.05, -0.4, 0.9]];
        let tr = Trajectory::new(interval, coeffs.clone()).unwrap();
        let th = 1.1;
        let basis = basis_values(interval, 5, th, 4);
        let jet = tr.jet_at(th, 4).unwrap();
        for r in 0..=4 {
            let v: f64 = basis[r].iter().zip(&coeffs[0]).map(|(b, c)| b * c).sum();
            assert!((v - jet.q[0][r]).abs() < 1e-10 * (1.0 + v.abs()), "r={r}");
        }
    }
}
