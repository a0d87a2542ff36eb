//! Exhaustive search over spanning forests, for small instances.
//!
//! A concave objective attains its minimum over the flow polytope at a vertex,
//! and vertices of the uncapacitated polytope have forest supports. On a forest
//! the balances fix the flow on every edge, so enumerating all forests of the
//! underlying undirected graph finds the global optimum.

use alloc::vec;
use alloc::vec::Vec;

use super::solver::validate;
use super::{FlowSolution, DEFAULT_SUPPORT_THRESHOLD};
use crate::error::{Error, Result};
use crate::geometry::CandidateGraph;

pub const DEFAULT_ORACLE_MAX_NODES: usize = 8;

struct Edge {
    u: usize,
    v: usize,
    /// Cheapest arc u→v and v→u, if present.
    forward: Option<usize>,
    backward: Option<usize>,
}

pub fn forest_oracle(
    graph: &CandidateGraph,
    b: &[f64],
    beta: &[f64],
    alpha: f64,
    max_nodes: usize,
) -> Result<FlowSolution> {
    validate(graph, b, beta, alpha)?;
    let n = graph.n_nodes;
    if n > max_nodes {
        return Err(Error::TooLarge { n_nodes: n, limit: max_nodes });
    }
    let cheapest = |from: usize, to: usize| -> Option<usize> {
        (0..graph.n_arcs())
            .filter(|&e| graph.arcs[e].tail == from && graph.arcs[e].head == to)
            .min_by(|&x, &y| beta[x].total_cmp(&beta[y]).then(x.cmp(&y)))
    };
    let edges: Vec<Edge> = graph
        .undirected_edges()
        .into_iter()
        .map(|(u, v)| Edge { u, v, forward: cheapest(u, v), backward: cheapest(v, u) })
        .collect();

    let scale = b.iter().map(|x| libm::fabs(*x)).fold(0.0, f64::max);
    let mut search = Search {
        n,
        b,
        beta,
        alpha,
        edges: &edges,
        tol: 1e-9 * scale.max(1e-300),
        chosen: Vec::new(),
        best: None,
    };
    let parent: Vec<usize> = (0..n).collect();
    search.recurse(0, parent);
    let Some((_, arc_flows)) = search.best else {
        return Err(Error::Infeasible("no forest carries the balances".into()));
    };
    let mut w = vec![0.0; graph.n_arcs()];
    for (a, f) in arc_flows {
        w[a] += f;
    }
    Ok(FlowSolution::new(graph, b, beta, alpha, w, DEFAULT_SUPPORT_THRESHOLD))
}

struct Search<'a> {
    n: usize,
    b: &'a [f64],
    beta: &'a [f64],
    alpha: f64,
    edges: &'a [Edge],
    tol: f64,
    chosen: Vec<usize>,
    best: Option<(f64, Vec<(usize, f64)>)>,
}

fn root(parent: &[usize], mut v: usize) -> usize {
    while parent[v] != v {
        v = parent[v];
    }
    v
}

impl Search<'_> {
    fn recurse(&mut self, next: usize, parent: Vec<usize>) {
        if next == self.edges.len() {
            self.evaluate();
            return;
        }
        self.recurse(next + 1, parent.clone());
        let edge = &self.edges[next];
        let (ru, rv) = (root(&parent, edge.u), root(&parent, edge.v));
        if ru != rv {
            let mut joined = parent;
            joined[ru] = rv;
            self.chosen.push(next);
            self.recurse(next + 1, joined);
            self.chosen.pop();
        }
    }

    fn evaluate(&mut self) {
        let n = self.n;
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for &k in &self.chosen {
            let e = &self.edges[k];
            adj[e.u].push((e.v, k));
            adj[e.v].push((e.u, k));
        }
        let mut seen = vec![false; n];
        let mut cost = 0.0;
        let mut flows = Vec::with_capacity(self.chosen.len());
        for start in 0..n {
            if seen[start] {
                continue;
            }
            // depth-first order, then accumulate subtree balances leaves first
            let mut order = Vec::new();
            let mut up_edge: Vec<Option<(usize, usize)>> = vec![None; n];
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(u) = stack.pop() {
                order.push(u);
                for &(v, k) in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        up_edge[v] = Some((u, k));
                        stack.push(v);
                    }
                }
            }
            let mut subtree: Vec<f64> = self.b.to_vec();
            for &v in order.iter().rev() {
                let Some((p, k)) = up_edge[v] else { continue };
                let f = subtree[v];
                subtree[p] += f;
                if libm::fabs(f) <= self.tol {
                    continue;
                }
                let e = &self.edges[k];
                // positive f leaves v towards its parent p
                let from = if f > 0.0 { v } else { p };
                let arc = if from == e.u { e.forward } else { e.backward };
                let Some(arc) = arc else { return };
                let amount = libm::fabs(f);
                cost += self.beta[arc] * libm::pow(amount, self.alpha);
                flows.push((arc, amount));
            }
            if libm::fabs(subtree[start]) > self.tol {
                return;
            }
        }
        if self.best.as_ref().map_or(true, |(c, _)| cost < *c) {
            self.best = Some((cost, flows));
        }
    }
}
