use serde::{Deserialize, Serialize};

use super::{solve_direct, solve_indirect, SolveConfig, SolveResult};
use crate::error::Result;
use crate::trajectory::Trajectory;
use crate::variational::FalvaProblem;

const COMPARISON_POINTS: usize = 401;

/// Sup-norm distance between two trajectories on their common interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub trajectory_gap: f64,
    pub threshold: f64,
    pub agree: bool,
}

pub fn compare_trajectories(lhs: &Trajectory, rhs: &Trajectory, threshold: f64) -> Comparison {
    let (a0, b0) = lhs.interval();
    let (a1, b1) = rhs.interval();
    let (a, b) = (a0.max(a1), b0.min(b1));
    let gap = (0..COMPARISON_POINTS)
        .map(|k| a + (b - a) * k as f64 / (COMPARISON_POINTS - 1) as f64)
        .map(|theta| {
            let x = lhs.eval(theta);
            let y = rhs.eval(theta);
            x.iter().zip(&y).fold(0.0_f64, |acc, (u, v)| acc.max((u - v).abs()))
        })
        .fold(0.0, f64::max);
    Comparison { trajectory_gap: gap, threshold, agree: gap <= threshold }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub direct: SolveResult,
    pub indirect: SolveResult,
    pub trajectory_gap: f64,
    pub action_gap: f64,
    /// `10 · max(newton_tol, discretization estimate)`.
    pub threshold: f64,
    pub agree: bool,
}

/// Solves `pb` both ways and compares the results.
pub fn cross_validate(pb: &FalvaProblem, cfg: &SolveConfig) -> Result<CrossValidation> {
    let direct = solve_direct(pb, cfg)?;
    let indirect = solve_indirect(pb, cfg)?;
    let estimate = direct.discretization_estimate.max(indirect.discretization_estimate);
    let threshold = 10.0 * cfg.newton_tol.max(estimate);
    let cmp = compare_trajectories(&direct.trajectory, &indirect.trajectory, threshold);
    let action_gap = (direct.action_value - indirect.action_value).abs();
    Ok(CrossValidation {
        agree: cmp.agree,
        trajectory_gap: cmp.trajectory_gap,
        action_gap,
        threshold,
        direct,
        indirect,
    })
}
