//! Solver scaling over growing region layouts.

use std::path::Path;
use std::time::Instant;

use ramify_core::config::PipelineConfig;
use ramify_core::geometry::{assign_tensor_field, build_connected_knn_graph, build_roi_layout, CandidateGraph, System};
use ramify_core::transport::instances::sparse_supply;
use ramify_core::transport::{build_arc_costs, solve_bot, CostKind};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::{ensure_dir, num, write_json, Table};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub n_nodes: usize,
    pub n_outer: usize,
    pub n_inner: usize,
    pub n_arcs: usize,
    pub runtime_s: f64,
    pub objective: Option<f64>,
    pub support_size: Option<usize>,
    pub failure: Option<String>,
}

/// Least-squares line through `(log x, log y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub seed: u64,
    pub k: usize,
    pub alpha: f64,
    pub cost_kind: CostKind,
    pub rows: Vec<BenchmarkRow>,
    pub arc_fit: Option<LogLogFit>,
    /// Machine dependent.
    pub runtime_fit: Option<LogLogFit>,
}

/// `None` with fewer than two points or a degenerate abscissa. R² is 1 for
/// a constant ordinate.
pub fn log_log_fit(points: &[(f64, f64)]) -> Option<LogLogFit> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = logs.len();
    if n < 2 {
        return None;
    }
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LogLogFit { slope, intercept: my - slope * mx, r_squared, points: n })
}

/// Region counts of the scaled layout: `round(2N/3)` outer, the rest inner.
pub fn shell_split(n: usize) -> (usize, usize) {
    let outer = (2 * n + 1) / 3;
    (outer, n - outer)
}

/// Graph, balance vector and anisotropic costs of benchmark size `n`.
pub fn benchmark_instance(cfg: &PipelineConfig, n: usize) -> Result<(CandidateGraph, Vec<f64>, Vec<f64>)> {
    let g = &cfg.geometry;
    let (outer, inner) = shell_split(n);
    let rois = build_roi_layout(outer, inner, g.outer_radii, g.inner_radii)?;
    let rois = assign_tensor_field(rois, &System::RELAY, g.fa_high, g.fa_low)?;
    let graph = build_connected_knn_graph(&rois, cfg.benchmark.k)?;
    let b = sparse_supply(cfg.seed, n, cfg.benchmark.source_fraction)?;
    let costs = build_arc_costs(&graph, &rois, CostKind::Anisotropic, cfg.costs.eps, cfg.costs.c_iso)?;
    Ok((graph, b, costs.beta))
}

pub fn run_benchmark(cfg: &PipelineConfig) -> Result<BenchmarkReport> {
    let sizes = &cfg.benchmark.sizes;
    if sizes.iter().any(|&n| n < 6) || sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("benchmark sizes must be at least 6 and strictly increasing".into()));
    }
    let params = cfg.bot_params(cfg.benchmark.alpha);
    let mut rows = Vec::new();
    for &n in sizes {
        let (outer, inner) = shell_split(n);
        let (graph, b, beta) = benchmark_instance(cfg, n)?;
        let start = Instant::now();
        let solved = solve_bot(&graph, &b, &beta, &params);
        let runtime_s = start.elapsed().as_secs_f64();
        let (objective, support_size, failure) = match solved {
            Ok(s) => (Some(s.objective), Some(s.support.len()), None),
            Err(e) => (None, None, Some(e.to_string())),
        };
        rows.push(BenchmarkRow { n_nodes: n, n_outer: outer, n_inner: inner, n_arcs: graph.n_arcs(), runtime_s, objective, support_size, failure });
    }
    let ok: Vec<&BenchmarkRow> = rows.iter().filter(|r| r.failure.is_none()).collect();
    let arc_fit = log_log_fit(&ok.iter().map(|r| (r.n_nodes as f64, r.n_arcs as f64)).collect::<Vec<_>>());
    let runtime_fit = log_log_fit(&ok.iter().map(|r| (r.n_nodes as f64, r.runtime_s)).collect::<Vec<_>>());
    Ok(BenchmarkReport {
        seed: cfg.seed,
        k: cfg.benchmark.k,
        alpha: cfg.benchmark.alpha,
        cost_kind: CostKind::Anisotropic,
        rows,
        arc_fit,
        runtime_fit,
    })
}

/// Writes `benchmark.csv` and `benchmark_summary.json` into `dir`.
pub fn write_benchmark(report: &BenchmarkReport, dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    let mut t = Table::new(["n_nodes", "n_outer", "n_inner", "n_arcs", "runtime_s", "objective", "support_size", "failure"]);
    for r in &report.rows {
        t.push(vec![
            r.n_nodes.to_string(),
            r.n_outer.to_string(),
            r.n_inner.to_string(),
            r.n_arcs.to_string(),
            num(r.runtime_s),
            r.objective.map_or(String::new(), num),
            r.support_size.map_or(String::new(), |s| s.to_string()),
            r.failure.clone().unwrap_or_default(),
        ]);
    }
    t.write(&dir.join("benchmark.csv"))?;
    write_json(&dir.join("benchmark_summary.json"), report)
}
