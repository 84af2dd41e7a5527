use serde::{Deserialize, Serialize};

use super::conditions::PointConditions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    /// Max-norm of the EL residual over all nodes and components.
    pub sup: f64,
    /// Trapezoid-weighted RMS of the EL residual over the node range.
    pub l2w: f64,
    pub dr_sup: f64,
    pub identity_sup: f64,
}

/// Per-node residuals of the optimality conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub nodes: Vec<f64>,
    pub el_residual: Vec<Vec<f64>>,
    pub dr_residual: Vec<f64>,
    /// Largest of the three structural gaps below, per node.
    pub identity_gap: Vec<f64>,
    pub psi_recursion_gap: Vec<f64>,
    pub bracket_gap: Vec<f64>,
    pub coupling_gap: Vec<f64>,
    pub norms: Norms,
}

fn trapezoid_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    if n < 2 {
        return vec![1.0; n];
    }
    (0..n)
        .map(|k| {
            let left = if k > 0 { nodes[k] - nodes[k - 1] } else { 0.0 };
            let right = if k + 1 < n { nodes[k + 1] - nodes[k] } else { 0.0 };
            0.5 * (left + right).abs()
        })
        .collect()
}

impl ResidualReport {
    pub fn from_points(points: &[PointConditions]) -> Self {
        let nodes: Vec<f64> = points.iter().map(|p| p.theta).collect();
        let el_residual: Vec<Vec<f64>> = points.iter().map(|p| p.el.clone()).collect();
        let dr_residual: Vec<f64> = points.iter().map(|p| p.dr).collect();
        let identity_gap: Vec<f64> = points.iter().map(PointConditions::identity_gap).collect();

        let sup = el_residual.iter().flatten().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        let weights = trapezoid_weights(&nodes);
        let total: f64 = weights.iter().sum();
        let l2w = if total > 0.0 {
            let acc: f64 = weights
                .iter()
                .zip(&el_residual)
                .map(|(w, r)| w * r.iter().map(|v| v * v).sum::<f64>())
                .sum();
            (acc / total).sqrt()
        } else {
            0.0
        };
        let dr_sup = dr_residual.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        let identity_sup = identity_gap.iter().copied().fold(0.0, f64::max);

        ResidualReport {
            psi_recursion_gap: points.iter().map(|p| p.psi_recursion_gap).collect(),
            bracket_gap: points.iter().map(|p| p.bracket_gap).collect(),
            coupling_gap: points.iter().map(|p| p.coupling_gap).collect(),
            nodes,
            el_residual,
            dr_residual,
            identity_gap,
            norms: Norms { sup, l2w, dr_sup, identity_sup },
        }
    }
}
