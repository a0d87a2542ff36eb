//! Seeded random small transport instances for oracle comparisons.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{bridge_components, knn_edges, CandidateGraph};
use crate::rng::{indexed_stream, stream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    Knn,
    Ring,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub topology: Topology,
    pub positions: Vec<[f64; 2]>,
    pub graph: CandidateGraph,
    pub b: Vec<f64>,
    pub beta: Vec<f64>,
}

/// Instance `index` of the family drawn from `seed`: 4 to `max_nodes` points in
/// the unit square, a kNN graph (k = 2 or 3) for even indices and a ring with
/// one chord for odd ones, arc costs `length × U(0.5, 1.5)` drawn per arc, and
/// a zero-mean Gaussian balance vector scaled to unit positive mass.
pub fn random_instance(seed: u64, index: usize, max_nodes: usize) -> Result<Instance> {
    let mut rng = indexed_stream(seed, "oracle-instance", index);
    let n = rng.random_range(4..=max_nodes.max(4));
    let positions: Vec<[f64; 2]> = (0..n).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
    let (topology, edges) = if index % 2 == 0 {
        let k = rng.random_range(2..=3);
        let mut edges = knn_edges(&positions, k)?;
        bridge_components(&positions, &mut edges);
        (Topology::Knn, edges)
    } else {
        let mut edges: Vec<(usize, usize)> = (0..n).map(|i| (i.min((i + 1) % n), i.max((i + 1) % n))).collect();
        let a = rng.random_range(0..n);
        let c = (a + 2 + rng.random_range(0..n - 3)) % n;
        edges.push((a.min(c), a.max(c)));
        edges.sort_unstable();
        edges.dedup();
        (Topology::Ring, edges)
    };
    let lengths: Vec<f64> = edges
        .iter()
        .map(|&(i, j)| libm::hypot(positions[i][0] - positions[j][0], positions[i][1] - positions[j][1]).max(1e-3))
        .collect();
    let graph = CandidateGraph::from_edges(n, &edges, Some(&lengths))?;
    let beta: Vec<f64> = graph.lengths.iter().map(|l| l * rng.random_range(0.5..1.5)).collect();
    let mut b: Vec<f64> = (0..n).map(|_| crate::rng::standard_normal(&mut rng)).collect();
    let mean = b.iter().sum::<f64>() / n as f64;
    for x in &mut b {
        *x -= mean;
    }
    let mass: f64 = b.iter().filter(|x| **x > 0.0).sum();
    for x in &mut b {
        *x /= mass;
    }
    let total: f64 = b.iter().sum();
    b[n - 1] -= total;
    Ok(Instance { topology, positions, graph, b, beta })
}

/// Balance vector over `n` nodes with `max(1, round(fraction n))` sources and
/// as many sinks on distinct nodes, drawn from substream `benchmark-{n}`.
/// Weights are `U(0.5, 1.5)`, normalised to unit mass on each side.
pub fn sparse_supply(seed: u64, n: usize, fraction: f64) -> Result<Vec<f64>> {
    if !(fraction > 0.0 && fraction <= 0.5) {
        return Err(invalid(format!("source fraction must lie in (0, 0.5], got {fraction}")));
    }
    let count = (libm::round(fraction * n as f64) as usize).max(1);
    if 2 * count > n {
        return Err(invalid(format!("{n} nodes cannot hold {count} sources and {count} sinks")));
    }
    let mut rng = stream(seed, &format!("benchmark-{n}"));
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut b = alloc::vec![0.0; n];
    for (side, nodes) in [(1.0, &order[..count]), (-1.0, &order[count..2 * count])] {
        let weights: Vec<f64> = nodes.iter().map(|_| rng.random_range(0.5..1.5)).collect();
        let total: f64 = weights.iter().sum();
        for (&v, w) in nodes.iter().zip(&weights) {
            b[v] = side * w / total;
        }
    }
    let total: f64 = b.iter().sum();
    b[order[0]] -= total;
    Ok(b)
}
