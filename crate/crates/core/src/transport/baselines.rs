//! Non-branched reference flows.

use alloc::vec;
use alloc::vec::Vec;

use super::mcf::{min_cost_flow, shortest_path};
use super::solver::validate;
use super::FlowSolution;
use crate::error::Result;
use crate::geometry::CandidateGraph;

/// Greedy matching of the largest remaining source with the largest remaining
/// sink, each pair routed along a cheapest path. The objective is reported at
/// `alpha`.
pub fn shortest_path_surrogate(
    graph: &CandidateGraph,
    b: &[f64],
    beta: &[f64],
    alpha: f64,
    support_threshold: f64,
) -> Result<FlowSolution> {
    validate(graph, b, beta, alpha)?;
    let mut supply: Vec<f64> = b.iter().map(|x| x.max(0.0)).collect();
    let mut demand: Vec<f64> = b.iter().map(|x| (-x).max(0.0)).collect();
    let mass: f64 = supply.iter().sum();
    let mut w = vec![0.0; graph.n_arcs()];
    let largest = |v: &[f64]| -> usize {
        let mut best = 0;
        for i in 1..v.len() {
            if v[i] > v[best] {
                best = i;
            }
        }
        best
    };
    loop {
        let (s, t) = (largest(&supply), largest(&demand));
        let amount = supply[s].min(demand[t]);
        if amount <= 0.0 || amount <= 1e-12 * mass {
            break;
        }
        for e in shortest_path(graph, beta, s, t)? {
            w[e] += amount;
        }
        supply[s] -= amount;
        demand[t] -= amount;
    }
    Ok(FlowSolution::new(graph, b, beta, alpha, w, support_threshold))
}

/// Exact optimum of the linear problem (`α = 1`).
pub fn linear_flow(graph: &CandidateGraph, b: &[f64], beta: &[f64], support_threshold: f64) -> Result<FlowSolution> {
    validate(graph, b, beta, 1.0)?;
    let w = min_cost_flow(graph, b, beta)?;
    Ok(FlowSolution::new(graph, b, beta, 1.0, w, support_threshold))
}
