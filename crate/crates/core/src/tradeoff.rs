//! α-grid runs, the hybrid functional `F_λ = E_α + λ J_dyn`, rank reversals
//! and the Pareto frontier.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dynamics::{analyze_flow, DynamicsParams};
use crate::error::{invalid, Result};
use crate::geometry::CandidateGraph;
use crate::rng::derive_seed;
use crate::transport::{solve_bot, BotParams, FlowSolution};

pub const DEFAULT_ALPHA_RANGE: (f64, f64) = (0.20, 0.92);
pub const DEFAULT_ALPHA_COUNT: usize = 22;
pub const DEFAULT_LAMBDA_MAX: f64 = 6.0;
pub const DEFAULT_LAMBDA_COUNT: usize = 300;

/// `count` evenly spaced values from `lo` to `hi`, both endpoints exact.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => alloc::vec![lo],
        _ => {
            let step = (hi - lo) / (count - 1) as f64;
            (0..count)
                .map(|i| if i == count - 1 { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}

pub fn default_alpha_grid() -> Vec<f64> {
    linspace(DEFAULT_ALPHA_RANGE.0, DEFAULT_ALPHA_RANGE.1, DEFAULT_ALPHA_COUNT)
}

pub fn default_lambda_grid() -> Vec<f64> {
    linspace(0.0, DEFAULT_LAMBDA_MAX, DEFAULT_LAMBDA_COUNT)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRecord {
    pub alpha: f64,
    pub e_alpha: f64,
    pub j_dyn: f64,
    pub j_dyn_se: f64,
    /// `J_dyn` re-estimated with twice the paths, when requested.
    pub j_dyn_doubled: Option<f64>,
    pub support_size: usize,
    pub solution_ref: String,
    pub degenerate: bool,
    pub failure: Option<String>,
    /// `‖mean X(T) − m_T‖` without and with control.
    pub uncontrolled_distance: f64,
    pub controlled_distance: f64,
    pub a_dyn_max_eigenvalue: f64,
}

impl TradeoffRecord {
    fn degenerate(alpha: f64, solution_ref: String, failure: String) -> Self {
        Self {
            alpha,
            e_alpha: f64::NAN,
            j_dyn: f64::NAN,
            j_dyn_se: f64::NAN,
            j_dyn_doubled: None,
            support_size: 0,
            solution_ref,
            degenerate: true,
            failure: Some(failure),
            uncontrolled_distance: f64::NAN,
            controlled_distance: f64::NAN,
            a_dyn_max_eigenvalue: f64::NAN,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlphaGridRun {
    pub records: Vec<TradeoffRecord>,
    pub solutions: Vec<Option<FlowSolution>>,
}

/// Solves the transport problem and estimates the dynamic cost at every α.
/// Restarts use `bot.seed` for every α; the dynamics of grid entry `i` use the
/// seed derived from label `dynamics-alpha-i`. Failures mark the record
/// degenerate and the run continues.
#[allow(clippy::too_many_arguments)]
pub fn alpha_grid_run(
    graph: &CandidateGraph,
    b: &[f64],
    beta: &[f64],
    mu_stim: &[f64],
    mu_react: &[f64],
    alphas: &[f64],
    bot: &BotParams,
    dynamics: &DynamicsParams,
    seed: u64,
    recheck: bool,
) -> AlphaGridRun {
    let mut records = Vec::with_capacity(alphas.len());
    let mut solutions = Vec::with_capacity(alphas.len());
    for (i, &alpha) in alphas.iter().enumerate() {
        let solution_ref = format!("alpha-{i:02}");
        let params = BotParams { alpha, ..bot.clone() };
        let outcome = solve_bot(graph, b, beta, &params).and_then(|sol| {
            let dyn_seed = derive_seed(seed, &format!("dynamics-alpha-{i}"));
            let out = analyze_flow(graph, &sol.w, mu_stim, mu_react, dynamics, dyn_seed)?;
            let doubled = if recheck {
                let more = DynamicsParams { n_paths: 2 * dynamics.n_paths, ..dynamics.clone() };
                Some(analyze_flow(graph, &sol.w, mu_stim, mu_react, &more, dyn_seed)?.cost.mean)
            } else {
                None
            };
            Ok((sol, out, doubled))
        });
        match outcome {
            Ok((sol, out, doubled)) => {
                let eigen = out.ops.a_eigenvalues();
                records.push(TradeoffRecord {
                    alpha,
                    e_alpha: sol.objective,
                    j_dyn: out.cost.mean,
                    j_dyn_se: out.cost.std_error,
                    j_dyn_doubled: doubled,
                    support_size: sol.support.len(),
                    solution_ref,
                    degenerate: false,
                    failure: None,
                    uncontrolled_distance: out.uncontrolled_distance,
                    controlled_distance: out.controlled_distance,
                    a_dyn_max_eigenvalue: eigen.last().copied().unwrap_or(f64::NAN),
                });
                solutions.push(Some(sol));
            }
            Err(e) => {
                records.push(TradeoffRecord::degenerate(alpha, solution_ref, format!("{e}")));
                solutions.push(None);
            }
        }
    }
    AlphaGridRun { records, solutions }
}

pub fn hybrid_functional(e: f64, j: f64, lambda: f64) -> f64 {
    e + lambda * j
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReversalEvent {
    pub i: usize,
    pub j: usize,
    /// Consecutive grid points between which `F_i − F_j` changes sign.
    pub interval: (f64, f64),
    /// `(E_j − E_i) / (J_i − J_j)` when it lies on the grid range.
    pub crossing: Option<f64>,
    pub noise_sensitive: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaSweep {
    pub lambda_grid: Vec<f64>,
    /// `f_matrix[r][k] = F_λk` of record `r`; NaN rows for degenerate records.
    pub f_matrix: Vec<Vec<f64>>,
    /// Minimising record per grid point, ties to the lower α.
    pub argmin: Vec<Option<usize>>,
    pub reversals: Vec<ReversalEvent>,
}

/// Exact crossing of two affine `F_λ` lines, if they are not parallel.
pub fn crossing_lambda(e_i: f64, j_i: f64, e_j: f64, j_j: f64) -> Option<f64> {
    (j_i != j_j).then(|| (e_j - e_i) / (j_i - j_j))
}

/// Sign changes of `F_i − F_j` along `grid` for every pair of points, each
/// given as `(E, J)`. Grid points where the difference is exactly zero are
/// skipped when looking for the change.
pub fn detect_rank_reversals(points: &[(f64, f64)], grid: &[f64]) -> Vec<ReversalEvent> {
    let (lo, hi) = match (grid.first(), grid.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => return Vec::new(),
    };
    let mut events = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let (ei, ji) = points[i];
            let (ej, jj) = points[j];
            let mut last: Option<(f64, f64)> = None;
            for &lambda in grid {
                let diff = hybrid_functional(ei, ji, lambda) - hybrid_functional(ej, jj, lambda);
                if diff == 0.0 || diff.is_nan() {
                    continue;
                }
                if let Some((prev_lambda, prev)) = last {
                    if (prev < 0.0) != (diff < 0.0) {
                        let crossing = crossing_lambda(ei, ji, ej, jj).filter(|l| *l >= lo && *l <= hi);
                        events.push(ReversalEvent { i, j, interval: (prev_lambda, lambda), crossing, noise_sensitive: false });
                    }
                }
                last = Some((lambda, diff));
            }
        }
    }
    events
}

/// Evaluates `F_λ` for every record over `grid` and finds reversals among the
/// non-degenerate records. With doubled-path estimates present, an event is
/// noise-sensitive when its crossing moves by more than one grid step.
pub fn lambda_sweep(records: &[TradeoffRecord], grid: &[f64]) -> Result<LambdaSweep> {
    if grid.len() < 2 {
        return Err(invalid("the λ grid needs at least two points"));
    }
    let f_matrix: Vec<Vec<f64>> = records
        .iter()
        .map(|r| grid.iter().map(|&l| if r.degenerate { f64::NAN } else { hybrid_functional(r.e_alpha, r.j_dyn, l) }).collect())
        .collect();
    let argmin = (0..grid.len())
        .map(|k| {
            let mut best: Option<usize> = None;
            for (r, rec) in records.iter().enumerate() {
                if rec.degenerate {
                    continue;
                }
                let f = f_matrix[r][k];
                best = match best {
                    None => Some(r),
                    Some(b) => {
                        let fb = f_matrix[b][k];
                        if f < fb || (f == fb && rec.alpha < records[b].alpha) {
                            Some(r)
                        } else {
                            Some(b)
                        }
                    }
                };
            }
            best
        })
        .collect();

    let live: Vec<usize> = (0..records.len()).filter(|&r| !records[r].degenerate).collect();
    let points: Vec<(f64, f64)> = live.iter().map(|&r| (records[r].e_alpha, records[r].j_dyn)).collect();
    let step = grid[1] - grid[0];
    let reversals = detect_rank_reversals(&points, grid)
        .into_iter()
        .map(|mut ev| {
            let (ri, rj) = (&records[live[ev.i]], &records[live[ev.j]]);
            if let (Some(di), Some(dj)) = (ri.j_dyn_doubled, rj.j_dyn_doubled) {
                let again = crossing_lambda(ri.e_alpha, di, rj.e_alpha, dj);
                ev.noise_sensitive = match (ev.crossing, again) {
                    (Some(a), Some(b)) => libm::fabs(a - b) > step,
                    _ => true,
                };
            }
            ev.i = live[ev.i];
            ev.j = live[ev.j];
            ev
        })
        .collect();
    Ok(LambdaSweep { lambda_grid: grid.to_vec(), f_matrix, argmin, reversals })
}

/// Indices of non-dominated `(E, J)` points sorted by `E` (then `J`, then
/// index). A point is dominated when another is no worse in both coordinates
/// and strictly better in one.
pub fn pareto_frontier(points: &[(f64, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a].0.total_cmp(&points[b].0).then(points[a].1.total_cmp(&points[b].1)).then(a.cmp(&b))
    });
    let mut front = Vec::new();
    let mut best_before = f64::INFINITY;
    let mut k = 0;
    while k < order.len() {
        let e = points[order[k]].0;
        let mut end = k;
        while end < order.len() && points[order[end]].0 == e {
            end += 1;
        }
        // sorted by J inside the group, so the group minimum comes first
        let group_min = points[order[k]].1;
        for &idx in &order[k..end] {
            let j = points[idx].1;
            if !(best_before <= j) && !(group_min < j) {
                front.push(idx);
            }
        }
        best_before = best_before.min(group_min);
        k = end;
    }
    front
}

/// Pareto frontier over the non-degenerate records, as record indices.
pub fn record_frontier(records: &[TradeoffRecord]) -> Vec<usize> {
    let live: Vec<usize> = (0..records.len()).filter(|&r| !records[r].degenerate).collect();
    let points: Vec<(f64, f64)> = live.iter().map(|&r| (records[r].e_alpha, records[r].j_dyn)).collect();
    pareto_frontier(&points).into_iter().map(|k| live[k]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let a = default_alpha_grid();
        assert_eq!(a.len(), 22);
        assert_eq!((a[0], a[21]), (0.20, 0.92));
        let delta = (0.92 - 0.20) / 21.0;
        assert!(a.windows(2).all(|w| libm::fabs(w[1] - w[0] - delta) < 1e-12));
        let l = default_lambda_grid();
        assert_eq!((l.len(), l[0], l[299]), (300, 0.0, 6.0));
        assert_eq!(linspace(0.3, 0.9, 1), alloc::vec![0.3]);
    }

    #[test]
    fn hybrid_arithmetic() {
        assert_eq!(hybrid_functional(2.0, 3.0, 0.0), 2.0);
        assert_eq!(hybrid_functional(2.0, 3.0, 2.0), 8.0);
        assert_eq!(hybrid_functional(2.0, 0.0, 5.0), 2.0);
    }

    #[test]
    fn crossing_of_two_lines() {
        let ev = detect_rank_reversals(&[(1.0, 2.0), (2.0, 1.0)], &default_lambda_grid());
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].crossing, Some(1.0));
        assert!(ev[0].interval.0 <= 1.0 && ev[0].interval.1 >= 1.0);
    }

    #[test]
    fn identical_and_parallel_lines_never_cross() {
        let g = default_lambda_grid();
        assert!(detect_rank_reversals(&[(1.0, 2.0), (1.0, 2.0)], &g).is_empty());
        assert!(detect_rank_reversals(&[(1.0, 2.0), (3.0, 2.0)], &g).is_empty());
        assert_eq!(crossing_lambda(1.0, 2.0, 3.0, 2.0), None);
    }

    #[test]
    fn frontier_examples() {
        assert_eq!(pareto_frontier(&[(1.0, 1.0)]), alloc::vec![0]);
        let pts = [(1.0, 3.0), (2.0, 2.0), (3.0, 1.0), (2.5, 2.5)];
        assert_eq!(pareto_frontier(&pts), alloc::vec![0, 1, 2]);
        // duplicates dominate neither each other
        assert_eq!(pareto_frontier(&[(1.0, 1.0), (1.0, 1.0), (1.0, 2.0)]), alloc::vec![0, 1]);
        assert!(pareto_frontier(&[]).is_empty());
    }
}
