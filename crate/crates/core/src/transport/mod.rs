//! Branched optimal transport on the candidate graph:
//! `min Σ β_e w_e^α` subject to `A w = b`, `w ≥ 0`.

pub mod analysis;
pub mod baselines;
pub mod costs;
pub mod dsu;
pub mod instances;
pub mod mcf;
pub mod oracle;
pub mod solver;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::geometry::CandidateGraph;

pub use analysis::{extract_support, flux_comparison, relay_statistics, FluxComparison, NodeClass, RelayStats};
pub use baselines::{linear_flow, shortest_path_surrogate};
pub use costs::{build_arc_costs, ArcCosts, CostKind};
pub use oracle::forest_oracle;
pub use solver::{solve_bot, solve_bot_detailed, BotParams, BotReport, StartKind, StartReport};

/// Default relative threshold for the support of a flow.
pub const DEFAULT_SUPPORT_THRESHOLD: f64 = 1e-4;

/// `Σ β_e w_e^α` over arcs with positive flow.
pub fn objective(beta: &[f64], w: &[f64], alpha: f64) -> f64 {
    beta.iter()
        .zip(w)
        .filter(|(_, &x)| x > 0.0)
        .map(|(&c, &x)| c * if alpha == 1.0 { x } else { libm::pow(x, alpha) })
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSolution {
    pub w: Vec<f64>,
    pub objective: f64,
    pub alpha: f64,
    /// Arcs with `w ≥ threshold · max w`.
    pub support: Vec<usize>,
    /// `‖A w − b‖∞`.
    pub feasibility_residual: f64,
}

impl FlowSolution {
    pub fn new(graph: &CandidateGraph, b: &[f64], beta: &[f64], alpha: f64, mut w: Vec<f64>, threshold: f64) -> Self {
        for x in &mut w {
            if !(*x > 0.0) {
                *x = 0.0;
            }
        }
        Self {
            objective: objective(beta, &w, alpha),
            support: extract_support(&w, threshold),
            feasibility_residual: graph.balance_residual(&w, b),
            alpha,
            w,
        }
    }

    pub fn max_flux(&self) -> f64 {
        self.w.iter().copied().fold(0.0, f64::max)
    }
}
