//! Uncapacitated linear min-cost flow and shortest paths on the candidate graph.

use alloc::collections::BinaryHeap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{invalid, Error, Result};
use crate::geometry::CandidateGraph;

#[derive(Clone, Copy, PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed for a min-heap
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source shortest paths with nonnegative arc costs.
///
/// With `reverse = false`, `dist[v]` is the cost from `root` to `v` and
/// `pred[v]` the last arc on that path. With `reverse = true`, `dist[v]` is the
/// cost from `v` to `root` and `pred[v]` the first arc leaving `v`.
pub fn dijkstra(graph: &CandidateGraph, cost: &[f64], root: usize, reverse: bool) -> (Vec<f64>, Vec<Option<usize>>) {
    let n = graph.n_nodes;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (e, arc) in graph.arcs.iter().enumerate() {
        adj[if reverse { arc.head } else { arc.tail }].push(e);
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[root] = 0.0;
    heap.push(Entry(0.0, root));
    while let Some(Entry(d, u)) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for &e in &adj[u] {
            let arc = graph.arcs[e];
            let v = if reverse { arc.tail } else { arc.head };
            let nd = d + cost[e];
            if nd < dist[v] {
                dist[v] = nd;
                pred[v] = Some(e);
                heap.push(Entry(nd, v));
            }
        }
    }
    (dist, pred)
}

/// Arcs of a cheapest path from `from` to `to`, in travel order.
pub fn shortest_path(graph: &CandidateGraph, cost: &[f64], from: usize, to: usize) -> Result<Vec<usize>> {
    let (dist, pred) = dijkstra(graph, cost, from, false);
    if !dist[to].is_finite() {
        return Err(Error::Disconnected { from, to });
    }
    let mut path = Vec::new();
    let mut v = to;
    while v != from {
        let e = pred[v].expect("finite distance implies a predecessor");
        path.push(e);
        v = graph.arcs[e].tail;
    }
    path.reverse();
    Ok(path)
}

struct Edge {
    to: usize,
    cap: f64,
    cost: f64,
    rev: usize,
}

/// Exact uncapacitated min-cost flow `min cᵀw, A w = b, w ≥ 0` by successive
/// shortest paths with node potentials. Costs must be nonnegative. Supplies
/// balancing to within rounding are accepted.
pub fn min_cost_flow(graph: &CandidateGraph, supply: &[f64], cost: &[f64]) -> Result<Vec<f64>> {
    let n = graph.n_nodes;
    let m = graph.n_arcs();
    if supply.len() != n || cost.len() != m {
        return Err(invalid("supply or cost length does not match graph"));
    }
    if let Some(c) = cost.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
        return Err(invalid(format!("arc costs must be finite and nonnegative, got {c}")));
    }
    let total: f64 = supply.iter().filter(|s| **s > 0.0).sum();
    let scale = supply.iter().map(|s| libm::fabs(*s)).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(vec![0.0; m]);
    }
    let cap_tol = 1e-13 * scale;

    let (src, snk) = (n, n + 1);
    let mut g: Vec<Vec<Edge>> = (0..n + 2).map(|_| Vec::new()).collect();
    let add = |g: &mut Vec<Vec<Edge>>, u: usize, v: usize, cap: f64, cost: f64| -> (usize, usize) {
        let (iu, iv) = (g[u].len(), g[v].len() + usize::from(u == v));
        g[u].push(Edge { to: v, cap, cost, rev: iv });
        g[v].push(Edge { to: u, cap: 0.0, cost: -cost, rev: iu });
        (v, iv)
    };
    let mut flow_slot = Vec::with_capacity(m);
    for (e, arc) in graph.arcs.iter().enumerate() {
        flow_slot.push(add(&mut g, arc.tail, arc.head, f64::INFINITY, cost[e]));
    }
    for (v, &s) in supply.iter().enumerate() {
        if s > 0.0 {
            add(&mut g, src, v, s, 0.0);
        } else if s < 0.0 {
            add(&mut g, v, snk, -s, 0.0);
        }
    }
    let demand: f64 = supply.iter().filter(|s| **s < 0.0).map(|s| -s).sum();
    let target = total.min(demand);

    let nn = n + 2;
    let mut pot = vec![0.0; nn];
    let mut sent = 0.0;
    let mut dist = vec![0.0; nn];
    let mut prev: Vec<(usize, usize)> = vec![(usize::MAX, 0); nn];
    while target - sent > 1e-12 * scale {
        dist.fill(f64::INFINITY);
        prev.fill((usize::MAX, 0));
        let mut done = vec![false; nn];
        let mut heap = BinaryHeap::new();
        dist[src] = 0.0;
        heap.push(Entry(0.0, src));
        while let Some(Entry(d, u)) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            for (i, edge) in g[u].iter().enumerate() {
                if edge.cap <= cap_tol {
                    continue;
                }
                let reduced = (edge.cost + pot[u] - pot[edge.to]).max(0.0);
                let nd = d + reduced;
                if nd < dist[edge.to] {
                    dist[edge.to] = nd;
                    prev[edge.to] = (u, i);
                    heap.push(Entry(nd, edge.to));
                }
            }
        }
        if !dist[snk].is_finite() {
            return Err(Error::Infeasible(format!(
                "{:e} units of supply cannot reach any sink",
                target - sent
            )));
        }
        let cap_dist = dist[snk];
        for v in 0..nn {
            pot[v] += dist[v].min(cap_dist);
        }
        let mut amount = target - sent;
        let mut v = snk;
        while v != src {
            let (u, i) = prev[v];
            amount = amount.min(g[u][i].cap);
            v = u;
        }
        let mut v = snk;
        while v != src {
            let (u, i) = prev[v];
            g[u][i].cap -= amount;
            let (to, rev) = (g[u][i].to, g[u][i].rev);
            g[to][rev].cap += amount;
            v = u;
        }
        sent += amount;
    }
    Ok(flow_slot.iter().map(|&(v, i)| g[v][i].cap.max(0.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> CandidateGraph {
        // 0 -> 1 -> 2 plus an expensive shortcut 0 -> 2
        CandidateGraph::from_arcs(3, vec![(0, 1), (1, 2), (0, 2)], None).unwrap()
    }

    #[test]
    fn picks_cheaper_route() {
        let w = min_cost_flow(&line(), &[1.0, 0.0, -1.0], &[1.0, 1.0, 3.0]).unwrap();
        assert_eq!(w, vec![1.0, 1.0, 0.0]);
        let w = min_cost_flow(&line(), &[1.0, 0.0, -1.0], &[1.0, 1.0, 1.5]).unwrap();
        assert_eq!(w, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn unreachable_sink_is_infeasible() {
        let g = line();
        assert!(matches!(min_cost_flow(&g, &[-1.0, 0.0, 1.0], &[1.0; 3]), Err(Error::Infeasible(_))));
    }

    #[test]
    fn zero_supply_gives_zero_flow() {
        assert_eq!(min_cost_flow(&line(), &[0.0; 3], &[1.0; 3]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn flow_balances() {
        let g = CandidateGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)], None).unwrap();
        let b = [0.6, -0.1, 0.25, -0.75];
        let cost: Vec<f64> = (0..g.n_arcs()).map(|e| 1.0 + 0.1 * e as f64).collect();
        let w = min_cost_flow(&g, &b, &cost).unwrap();
        assert!(g.balance_residual(&w, &b) < 1e-14);
    }

    #[test]
    fn dijkstra_forward_and_reverse() {
        let g = line();
        let cost = [1.0, 1.0, 3.0];
        let (d, _) = dijkstra(&g, &cost, 0, false);
        assert_eq!(d, vec![0.0, 1.0, 2.0]);
        let (d, pred) = dijkstra(&g, &cost, 2, true);
        assert_eq!(d, vec![2.0, 1.0, 0.0]);
        assert_eq!(pred[0], Some(0));
        assert_eq!(shortest_path(&g, &cost, 0, 2).unwrap(), vec![0, 1]);
        assert!(matches!(shortest_path(&g, &cost, 2, 0), Err(Error::Disconnected { .. })));
    }
}
