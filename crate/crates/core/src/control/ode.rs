//! Adaptive Dormand–Prince 5(4) integration with exact output points.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError<E> {
    #[error("step size underflow at theta = {theta}")]
    StepUnderflow { theta: f64 },
    #[error("exceeded {0} steps")]
    TooManySteps(usize),
    #[error(transparent)]
    Rhs(E),
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights (equal to the last row of `A`).
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const MAX_STEPS: usize = 1_000_000;

/// Integrates `y' = f(θ, y)` from `(theta0, y0)` and returns the state at
/// each point of the increasing list `outputs`. Steps are clipped so every
/// output point is hit exactly. `tol` bounds the mixed absolute/relative
/// local error per step.
pub fn integrate<E, F>(
    mut f: F,
    theta0: f64,
    y0: &[f64],
    outputs: &[f64],
    tol: f64,
) -> Result<(Vec<Vec<f64>>, OdeStats), OdeError<E>>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>, E>,
{
    let dim = y0.len();
    let mut stats = OdeStats::default();
    let mut theta = theta0;
    let mut y = y0.to_vec();
    let mut out = Vec::with_capacity(outputs.len());
    let span = outputs.last().map_or(0.0, |&e| e - theta0);
    let mut h = (span * 1e-3).max(1e-12);
    let mut k = vec![vec![0.0; dim]; 7];
    k[0] = f(theta, &y).map_err(OdeError::Rhs)?;
    let mut stage = vec![0.0; dim];

    for &target in outputs {
        while target - theta > 1e-14 * span.abs().max(1.0) {
            if stats.accepted + stats.rejected > MAX_STEPS {
                return Err(OdeError::TooManySteps(MAX_STEPS));
            }
            let hit = h >= target - theta;
            let step = if hit { target - theta } else { h };
            for s in 1..7 {
                for i in 0..dim {
                    stage[i] = y[i] + step * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>();
                }
                k[s] = f(theta + C[s] * step, &stage).map_err(OdeError::Rhs)?;
            }
            let mut err: f64 = 0.0;
            let mut next = vec![0.0; dim];
            for i in 0..dim {
                let hi: f64 = (0..7).map(|j| B5[j] * k[j][i]).sum();
                let lo: f64 = (0..7).map(|j| B4[j] * k[j][i]).sum();
                next[i] = y[i] + step * hi;
                let scale = tol * (1.0 + y[i].abs().max(next[i].abs()));
                err = err.max((step * (hi - lo)).abs() / scale);
            }
            if err <= 1.0 {
                stats.accepted += 1;
                theta = if hit { target } else { theta + step };
                y = next;
                // FSAL: the last stage is f at the new point.
                k[0] = k[6].clone();
            } else {
                stats.rejected += 1;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if !(hit && err <= 1.0) {
                h = step * factor;
            } else {
                h = h.max(step * factor);
            }
            if h < 1e-15 * span.abs().max(1.0) {
                return Err(OdeError::StepUnderflow { theta });
            }
        }
        out.push(y.clone());
    }
    Ok((out, stats))
}
