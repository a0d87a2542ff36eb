//! Multi-start local search for the concave branched transport problem.
//!
//! Every start is made feasible, improved by successive linearization (each
//! step an exact min-cost flow under the current marginal costs), reduced to a
//! forest by concave cycle cancellation, and finished by spanning-tree pivots
//! that are accepted only when the exact concave objective drops.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dsu::Dsu;
use super::mcf::{dijkstra, min_cost_flow};
use super::{objective, FlowSolution, DEFAULT_SUPPORT_THRESHOLD};
use crate::error::{invalid, shape, Error, Result};
use crate::geometry::CandidateGraph;
use crate::rng::indexed_stream;

const SLP_MAX_ITERS: usize = 60;
const SLP_DELTA: f64 = 1e-6;
const PERTURBATION: f64 = 0.05;
const MAX_PIVOTS: usize = 20_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BotParams {
    pub alpha: f64,
    pub restarts: usize,
    pub tol: f64,
    pub seed: u64,
    /// Extra starts that route everything through one hub node.
    pub hub_starts: usize,
    pub support_threshold: f64,
}

impl Default for BotParams {
    fn default() -> Self {
        Self {
            alpha: 0.65,
            restarts: 12,
            tol: 1e-6,
            seed: 0,
            hub_starts: 8,
            support_threshold: DEFAULT_SUPPORT_THRESHOLD,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartKind {
    Restart(usize),
    Hub(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartReport {
    pub kind: StartKind,
    pub initial_objective: f64,
    pub final_objective: f64,
    pub feasibility_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BotReport {
    pub solution: FlowSolution,
    pub starts: Vec<StartReport>,
    pub best_start: Option<usize>,
}

pub fn solve_bot(graph: &CandidateGraph, b: &[f64], beta: &[f64], params: &BotParams) -> Result<FlowSolution> {
    solve_bot_detailed(graph, b, beta, params).map(|r| r.solution)
}

pub(crate) fn validate(graph: &CandidateGraph, b: &[f64], beta: &[f64], alpha: f64) -> Result<()> {
    if b.len() != graph.n_nodes {
        return Err(shape(format!("{} node balances", graph.n_nodes), format!("{}", b.len())));
    }
    if beta.len() != graph.n_arcs() {
        return Err(shape(format!("{} arc costs", graph.n_arcs()), format!("{}", beta.len())));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if let Some(c) = beta.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
        return Err(invalid(format!("arc costs must be positive and finite, got {c}")));
    }
    if b.iter().any(|x| !x.is_finite()) {
        return Err(invalid("node balances must be finite"));
    }
    let total: f64 = b.iter().sum();
    let mass: f64 = b.iter().map(|x| libm::fabs(*x)).sum();
    if libm::fabs(total) > 1e-10 * mass.max(1.0) {
        return Err(invalid(format!("node balances must sum to zero, got {total:e}")));
    }
    Ok(())
}

pub fn solve_bot_detailed(graph: &CandidateGraph, b: &[f64], beta: &[f64], params: &BotParams) -> Result<BotReport> {
    validate(graph, b, beta, params.alpha)?;
    let alpha = params.alpha;
    let mass: f64 = b.iter().filter(|x| **x > 0.0).sum();
    if mass == 0.0 {
        let solution = FlowSolution::new(graph, b, beta, alpha, vec![0.0; graph.n_arcs()], params.support_threshold);
        return Ok(BotReport { solution, starts: Vec::new(), best_start: None });
    }
    // Fails early on infeasible instances.
    min_cost_flow(graph, b, beta)?;

    let mut starts: Vec<(StartKind, Vec<f64>)> = Vec::new();
    if params.restarts > 0 {
        let ls = least_squares_flow(graph, b)?;
        let amplitude = PERTURBATION * b.iter().map(|x| libm::fabs(*x)).sum::<f64>() / graph.n_nodes as f64;
        for r in 0..params.restarts {
            let mut rng = indexed_stream(params.seed, "bot-restart", r);
            let mut w0: Vec<f64> = ls
                .iter()
                .map(|x| x.max(0.0) + amplitude * rng.random::<f64>())
                .collect();
            repair(graph, b, beta, &mut w0)?;
            starts.push((StartKind::Restart(r), w0));
        }
    }
    for (hub, w0) in hub_flows(graph, b, beta, params.hub_starts) {
        starts.push((StartKind::Hub(hub), w0));
    }

    let zero_tol = 1e-14 * mass;
    let mut reports = Vec::with_capacity(starts.len());
    let mut best: Option<(usize, f64, Vec<f64>)> = None;
    let mut best_residual = f64::INFINITY;
    for (i, (kind, w0)) in starts.into_iter().enumerate() {
        let initial = objective(beta, &w0, alpha);
        let w = local_search(graph, b, beta, alpha, w0, mass, zero_tol)?;
        let value = objective(beta, &w, alpha);
        let residual = graph.balance_residual(&w, b);
        best_residual = best_residual.min(residual);
        reports.push(StartReport { kind, initial_objective: initial, final_objective: value, feasibility_residual: residual });
        if residual <= params.tol && best.as_ref().map_or(true, |(_, v, _)| value < *v) {
            best = Some((i, value, w));
        }
    }
    let Some((best_start, _, w)) = best else {
        return Err(Error::NoConvergence { best_residual });
    };
    Ok(BotReport {
        solution: FlowSolution::new(graph, b, beta, alpha, w, params.support_threshold),
        starts: reports,
        best_start: Some(best_start),
    })
}

/// Improves a feasible flow `w0` with the local search used by [`solve_bot`].
pub fn refine_flow(graph: &CandidateGraph, b: &[f64], beta: &[f64], alpha: f64, w0: Vec<f64>) -> Result<Vec<f64>> {
    validate(graph, b, beta, alpha)?;
    let mass: f64 = b.iter().filter(|x| **x > 0.0).sum();
    if mass == 0.0 {
        return Ok(vec![0.0; graph.n_arcs()]);
    }
    local_search(graph, b, beta, alpha, w0, mass, 1e-14 * mass)
}

/// Minimum-norm solution of `A w = b`, i.e. `Aᵀ (A Aᵀ)⁺ b`.
pub fn least_squares_flow(graph: &CandidateGraph, b: &[f64]) -> Result<Vec<f64>> {
    let n = graph.n_nodes;
    let mut lap = DMatrix::<f64>::zeros(n, n);
    for arc in &graph.arcs {
        lap[(arc.tail, arc.tail)] += 1.0;
        lap[(arc.head, arc.head)] += 1.0;
        lap[(arc.tail, arc.head)] -= 1.0;
        lap[(arc.head, arc.tail)] -= 1.0;
    }
    let pinv = lap
        .pseudo_inverse(1e-9)
        .map_err(|e| Error::Singular(format!("graph Laplacian pseudo-inverse: {e}")))?;
    let y = pinv * DVector::from_column_slice(b);
    Ok(graph.arcs.iter().map(|a| y[a.tail] - y[a.head]).collect())
}

/// Makes `w` satisfy `A w = b`. The imbalance `b − A w` is routed along
/// cheapest paths; when one-way arcs make that impossible, `w` is replaced by
/// the min-cost flow under costs `β / (w + δ)`, which favours the arcs the
/// start already uses.
fn repair(graph: &CandidateGraph, b: &[f64], beta: &[f64], w: &mut [f64]) -> Result<()> {
    let out = graph.net_outflow(w);
    let residual: Vec<f64> = b.iter().zip(&out).map(|(x, y)| x - y).collect();
    match min_cost_flow(graph, &residual, beta) {
        Ok(fix) => {
            for (x, d) in w.iter_mut().zip(fix) {
                *x += d;
            }
        }
        Err(Error::Infeasible(_)) => {
            let mass: f64 = b.iter().filter(|x| **x > 0.0).sum();
            let cost: Vec<f64> = beta.iter().zip(w.iter()).map(|(c, x)| c / (x + 1e-3 * mass)).collect();
            let y = min_cost_flow(graph, b, &cost)?;
            w.copy_from_slice(&y);
        }
        Err(e) => return Err(e),
    }
    Ok(())
}

/// Starts that send every source to a hub and from it to every sink along
/// cheapest paths, for the `count` hubs with the lowest routed cost.
fn hub_flows(graph: &CandidateGraph, b: &[f64], beta: &[f64], count: usize) -> Vec<(usize, Vec<f64>)> {
    if count == 0 {
        return Vec::new();
    }
    let routed_cost = |h: usize| -> f64 {
        let (d_from, _) = dijkstra(graph, beta, h, false);
        let (d_to, _) = dijkstra(graph, beta, h, true);
        b.iter()
            .enumerate()
            .filter(|(_, x)| **x != 0.0)
            .map(|(v, &x)| if x > 0.0 { x * d_to[v] } else { -x * d_from[v] })
            .sum()
    };
    let mut ranked: Vec<(f64, usize)> = (0..graph.n_nodes)
        .map(|h| (routed_cost(h), h))
        .filter(|(c, _)| c.is_finite())
        .collect();
    ranked.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    ranked
        .into_iter()
        .take(count)
        .map(|(_, h)| {
            let (_, pred_from) = dijkstra(graph, beta, h, false);
            let (_, pred_to) = dijkstra(graph, beta, h, true);
            let mut w = vec![0.0; graph.n_arcs()];
            for (v, &x) in b.iter().enumerate() {
                let mut u = v;
                if x > 0.0 {
                    while u != h {
                        let e = pred_to[u].expect("hub reachable");
                        w[e] += x;
                        u = graph.arcs[e].head;
                    }
                } else if x < 0.0 {
                    while u != h {
                        let e = pred_from[u].expect("hub reachable");
                        w[e] -= x;
                        u = graph.arcs[e].tail;
                    }
                }
            }
            (h, w)
        })
        .collect()
}

fn local_search(
    graph: &CandidateGraph,
    b: &[f64],
    beta: &[f64],
    alpha: f64,
    mut w: Vec<f64>,
    mass: f64,
    zero_tol: f64,
) -> Result<Vec<f64>> {
    let mut value = objective(beta, &w, alpha);
    let delta = SLP_DELTA * mass;
    let mut grad = vec![0.0; w.len()];
    for _ in 0..SLP_MAX_ITERS {
        for ((g, &c), &x) in grad.iter_mut().zip(beta).zip(&w) {
            *g = alpha * c * libm::pow(x.max(0.0) + delta, alpha - 1.0);
        }
        let y = min_cost_flow(graph, b, &grad)?;
        let vy = objective(beta, &y, alpha);
        if vy < value - 1e-13 * value {
            w = y;
            value = vy;
        } else {
            break;
        }
    }
    for x in &mut w {
        if *x <= zero_tol {
            *x = 0.0;
        }
    }
    cancel_cycles(graph, beta, alpha, &mut w, zero_tol);
    pivot_search(graph, beta, alpha, &mut w, zero_tol);
    Ok(w)
}

#[inline]
fn power(x: f64, alpha: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if alpha == 1.0 {
        x
    } else {
        libm::pow(x, alpha)
    }
}

/// Cost change of pushing `theta` around a cycle.
fn cycle_delta(beta: &[f64], alpha: f64, w: &[f64], plus: &[usize], minus: &[usize], theta: f64) -> f64 {
    let up: f64 = plus
        .iter()
        .map(|&a| beta[a] * (power(w[a] + theta, alpha) - power(w[a], alpha)))
        .sum();
    let down: f64 = minus
        .iter()
        .map(|&a| beta[a] * (power(w[a] - theta, alpha) - power(w[a], alpha)))
        .sum();
    up + down
}

fn push_cycle(w: &mut [f64], plus: &[usize], minus: &[usize], theta: f64, zero_tol: f64) {
    for &a in plus {
        w[a] += theta;
        if w[a] <= zero_tol {
            w[a] = 0.0;
        }
    }
    for &a in minus {
        w[a] -= theta;
        if w[a] <= zero_tol {
            w[a] = 0.0;
        }
    }
}

/// Path between `from` and `to` in a forest given as adjacency lists of
/// `(neighbor, arc)`; returns `(arc, node the step leaves)` pairs.
fn forest_path(adj: &[Vec<(usize, usize)>], from: usize, to: usize) -> Vec<(usize, usize)> {
    let n = adj.len();
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([from]);
    seen[from] = true;
    while let Some(u) = queue.pop_front() {
        if u == to {
            break;
        }
        for &(v, a) in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                prev[v] = Some((u, a));
                queue.push_back(v);
            }
        }
    }
    let mut steps = Vec::new();
    let mut v = to;
    while v != from {
        let (u, a) = prev[v].expect("endpoints share a tree");
        steps.push((a, u));
        v = u;
    }
    steps.reverse();
    steps
}

/// Removes cycles from the support. Each cycle is pushed to whichever end of
/// its feasible range is cheaper, which for a concave cost never increases the
/// objective and zeroes at least one arc.
fn cancel_cycles(graph: &CandidateGraph, beta: &[f64], alpha: f64, w: &mut [f64], zero_tol: f64) {
    let n = graph.n_nodes;
    loop {
        let mut dsu = Dsu::new(n);
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        let mut closing = None;
        for (e, arc) in graph.arcs.iter().enumerate() {
            if w[e] <= 0.0 {
                continue;
            }
            if dsu.union(arc.tail, arc.head) {
                adj[arc.tail].push((arc.head, e));
                adj[arc.head].push((arc.tail, e));
            } else {
                closing = Some(e);
                break;
            }
        }
        let Some(e) = closing else { return };
        let arc = graph.arcs[e];
        let mut plus = vec![e];
        let mut minus = Vec::new();
        for (a, from) in forest_path(&adj, arc.head, arc.tail) {
            if graph.arcs[a].tail == from {
                plus.push(a);
            } else {
                minus.push(a);
            }
        }
        let lo = plus.iter().map(|&a| w[a]).fold(f64::INFINITY, f64::min);
        let hi = minus.iter().map(|&a| w[a]).fold(f64::INFINITY, f64::min);
        // theta = -lo drains the plus arcs, theta = hi drains the minus arcs
        let theta = if hi.is_finite()
            && cycle_delta(beta, alpha, w, &plus, &minus, hi) < cycle_delta(beta, alpha, w, &plus, &minus, -lo)
        {
            hi
        } else {
            -lo
        };
        push_cycle(w, &plus, &minus, theta, zero_tol);
        let drained: Vec<usize> = if theta < 0.0 { plus } else { minus };
        for a in drained {
            if w[a] <= theta.abs() * 1e-12 + zero_tol {
                w[a] = 0.0;
            }
        }
    }
}

struct Tree {
    parent: Vec<usize>,
    parent_arc: Vec<usize>,
    depth: Vec<usize>,
    in_tree: Vec<bool>,
}

fn spanning_forest(graph: &CandidateGraph, w: &[f64]) -> Tree {
    let n = graph.n_nodes;
    let m = graph.n_arcs();
    let mut dsu = Dsu::new(n);
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut in_tree = vec![false; m];
    let order = (0..m).filter(|&e| w[e] > 0.0).chain((0..m).filter(|&e| w[e] <= 0.0));
    for e in order {
        let arc = graph.arcs[e];
        if dsu.union(arc.tail, arc.head) {
            in_tree[e] = true;
            adj[arc.tail].push((arc.head, e));
            adj[arc.head].push((arc.tail, e));
        }
    }
    let mut parent = vec![usize::MAX; n];
    let mut parent_arc = vec![usize::MAX; n];
    let mut depth = vec![0; n];
    let mut seen = vec![false; n];
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &(v, a) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    parent[v] = u;
                    parent_arc[v] = a;
                    depth[v] = depth[u] + 1;
                    queue.push_back(v);
                }
            }
        }
    }
    Tree { parent, parent_arc, depth, in_tree }
}

/// Steps `(arc, node left)` of the tree path from `from` to `to`, or `None`
/// when they lie in different trees.
fn tree_path(tree: &Tree, from: usize, to: usize) -> Option<Vec<(usize, usize)>> {
    let (mut u, mut v) = (from, to);
    let mut up = Vec::new();
    let mut down = Vec::new();
    while u != v {
        if tree.depth[u] >= tree.depth[v] {
            if tree.parent[u] == usize::MAX {
                return None;
            }
            up.push((tree.parent_arc[u], u));
            u = tree.parent[u];
        } else {
            if tree.parent[v] == usize::MAX {
                return None;
            }
            down.push((tree.parent_arc[v], tree.parent[v]));
            v = tree.parent[v];
        }
    }
    down.reverse();
    up.extend(down);
    Some(up)
}

/// First-improvement pivoting over non-tree arcs with exact concave costs.
fn pivot_search(graph: &CandidateGraph, beta: &[f64], alpha: f64, w: &mut [f64], zero_tol: f64) {
    let reverse: Vec<Option<usize>> = (0..graph.n_arcs()).map(|e| graph.reverse_arc(e)).collect();
    for _ in 0..MAX_PIVOTS {
        cancel_cycles(graph, beta, alpha, w, zero_tol);
        let tree = spanning_forest(graph, w);
        let value = objective(beta, w, alpha);
        let mut moved = false;
        for (e, arc) in graph.arcs.iter().enumerate() {
            if tree.in_tree[e] {
                continue;
            }
            let Some(path) = tree_path(&tree, arc.head, arc.tail) else { continue };
            let mut plus = vec![e];
            let mut minus = Vec::new();
            let mut blocked = false;
            for (a, from) in path {
                if graph.arcs[a].tail == from {
                    plus.push(a);
                } else if w[a] > 0.0 {
                    minus.push(a);
                } else if let Some(r) = reverse[a] {
                    plus.push(r);
                } else {
                    blocked = true;
                    break;
                }
            }
            if blocked || minus.is_empty() {
                continue;
            }
            let theta = minus.iter().map(|&a| w[a]).fold(f64::INFINITY, f64::min);
            if cycle_delta(beta, alpha, w, &plus, &minus, theta) < -1e-12 * value {
                push_cycle(w, &plus, &minus, theta, zero_tol);
                for &a in &minus {
                    if w[a] <= theta * 1e-12 + zero_tol {
                        w[a] = 0.0;
                    }
                }
                moved = true;
                break;
            }
        }
        if !moved {
            return;
        }
    }
}
