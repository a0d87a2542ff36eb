//! Supports, node relay statistics and edgewise flux comparison.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::FlowSolution;
use crate::error::{shape, Result};
use crate::geometry::CandidateGraph;

/// Arcs with `w_e ≥ rel_threshold · max w`; empty for an all-zero flow.
pub fn extract_support(w: &[f64], rel_threshold: f64) -> Vec<usize> {
    let max = w.iter().copied().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Vec::new();
    }
    (0..w.len()).filter(|&e| w[e] >= rel_threshold * max).collect()
}

/// Support arcs carrying less than `weak_fraction` of the maximal flux.
pub fn weak_arc_count(w: &[f64], rel_threshold: f64, weak_fraction: f64) -> usize {
    let max = w.iter().copied().fold(0.0, f64::max);
    extract_support(w, rel_threshold)
        .into_iter()
        .filter(|&e| w[e] < weak_fraction * max)
        .count()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeClass {
    Relay,
    SourceDominated,
    SinkDominated,
}

impl NodeClass {
    pub fn tag(self) -> &'static str {
        match self {
            NodeClass::Relay => "relay",
            NodeClass::SourceDominated => "source-dominated",
            NodeClass::SinkDominated => "sink-dominated",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelayStats {
    pub inflow: Vec<f64>,
    pub outflow: Vec<f64>,
    pub relay_score: Vec<f64>,
    pub class: Vec<NodeClass>,
}

impl RelayStats {
    /// Node indices by descending relay score, ties to the lower index.
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.relay_score.len()).collect();
        order.sort_by(|&i, &j| self.relay_score[j].total_cmp(&self.relay_score[i]).then(i.cmp(&j)));
        order
    }
}

/// Node inflow, outflow and `min(inflow, outflow)`. A node is a relay when its
/// score exceeds both `max(b_v, 0)` and `max(−b_v, 0)`; otherwise it is
/// labelled by the sign of `b_v`, with `b_v = 0` counted as sink-dominated.
pub fn relay_statistics(graph: &CandidateGraph, solution: &FlowSolution, b: &[f64]) -> Result<RelayStats> {
    let n = graph.n_nodes;
    if solution.w.len() != graph.n_arcs() {
        return Err(shape(format!("{} arc fluxes", graph.n_arcs()), format!("{}", solution.w.len())));
    }
    if b.len() != n {
        return Err(shape(format!("{n} node balances"), format!("{}", b.len())));
    }
    let mut inflow = alloc::vec![0.0; n];
    let mut outflow = alloc::vec![0.0; n];
    for (arc, &x) in graph.arcs.iter().zip(&solution.w) {
        outflow[arc.tail] += x;
        inflow[arc.head] += x;
    }
    let relay_score: Vec<f64> = inflow.iter().zip(&outflow).map(|(i, o)| i.min(*o)).collect();
    let class = (0..n)
        .map(|v| {
            let r = relay_score[v];
            if r > b[v].max(0.0) && r > (-b[v]).max(0.0) {
                NodeClass::Relay
            } else if b[v] > 0.0 {
                NodeClass::SourceDominated
            } else {
                NodeClass::SinkDominated
            }
        })
        .collect();
    Ok(RelayStats { inflow, outflow, relay_score, class })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxRow {
    pub w_iso: f64,
    pub w_aniso: f64,
    pub difference: f64,
    pub shared: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxComparison {
    pub rows: Vec<FluxRow>,
    /// `|S_iso ∩ S_aniso| / |S_iso ∪ S_aniso|`, 1 when both are empty.
    pub jaccard: f64,
    /// `½ Σ |w_iso − w_aniso|`.
    pub reallocated: f64,
}

pub fn flux_comparison(w_iso: &[f64], w_aniso: &[f64], rel_threshold: f64) -> Result<FluxComparison> {
    if w_iso.len() != w_aniso.len() {
        return Err(shape(format!("{} arcs", w_iso.len()), format!("{}", w_aniso.len())));
    }
    let mut in_iso = alloc::vec![false; w_iso.len()];
    let mut in_aniso = alloc::vec![false; w_iso.len()];
    for e in extract_support(w_iso, rel_threshold) {
        in_iso[e] = true;
    }
    for e in extract_support(w_aniso, rel_threshold) {
        in_aniso[e] = true;
    }
    let rows: Vec<FluxRow> = (0..w_iso.len())
        .map(|e| FluxRow {
            w_iso: w_iso[e],
            w_aniso: w_aniso[e],
            difference: w_aniso[e] - w_iso[e],
            shared: in_iso[e] && in_aniso[e],
        })
        .collect();
    let inter = rows.iter().filter(|r| r.shared).count();
    let union = (0..rows.len()).filter(|&e| in_iso[e] || in_aniso[e]).count();
    let jaccard = if union == 0 { 1.0 } else { inter as f64 / union as f64 };
    let reallocated = 0.5 * rows.iter().map(|r| libm::fabs(r.difference)).sum::<f64>();
    Ok(FluxComparison { rows, jaccard, reallocated })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_threshold_arithmetic() {
        assert_eq!(extract_support(&[1.0, 1e-6], 1e-4), alloc::vec![0]);
        assert_eq!(extract_support(&[0.3, 0.3, 0.3], 1e-4), alloc::vec![0, 1, 2]);
        assert!(extract_support(&[0.0, 0.0], 1e-4).is_empty());
    }

    #[test]
    fn pass_through_chain() {
        let g = CandidateGraph::from_arcs(3, alloc::vec![(0, 1), (1, 2)], None).unwrap();
        let b = [1.0, 0.0, -1.0];
        let sol = FlowSolution::new(&g, &b, &[1.0, 1.0], 0.5, alloc::vec![1.0, 1.0], 1e-4);
        let r = relay_statistics(&g, &sol, &b).unwrap();
        assert_eq!(r.relay_score, alloc::vec![0.0, 1.0, 0.0]);
        assert_eq!(r.class, alloc::vec![NodeClass::SourceDominated, NodeClass::Relay, NodeClass::SinkDominated]);
        assert_eq!(r.inflow.iter().sum::<f64>(), r.outflow.iter().sum::<f64>());
        assert_eq!(r.ranking()[0], 1);
    }

    #[test]
    fn comparison_extremes() {
        let w = [0.2, 0.0, 0.8];
        let same = flux_comparison(&w, &w, 1e-4).unwrap();
        assert_eq!((same.jaccard, same.reallocated), (1.0, 0.0));
        let other = [0.0, 1.0, 0.0];
        let disjoint = flux_comparison(&w, &other, 1e-4).unwrap();
        assert_eq!(disjoint.jaccard, 0.0);
        assert!(libm::fabs(disjoint.reallocated - 1.0) < 1e-15);
        assert!(flux_comparison(&w, &other[..2], 1e-4).is_err());
        assert_eq!(flux_comparison(&[0.0], &[0.0], 1e-4).unwrap().jaccard, 1.0);
    }

    #[test]
    fn weak_arcs_counted_inside_support() {
        assert_eq!(weak_arc_count(&[1.0, 0.05, 0.5, 1e-9], 1e-4, 0.1), 1);
    }
}
