//! Solver against exact references on small seeded instances: the forest
//! enumeration for α < 1 and the linear min-cost flow at α = 1.

use std::path::Path;

use ramify_core::transport::instances::{random_instance, Topology};
use ramify_core::transport::{forest_oracle, linear_flow, solve_bot, BotParams};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::formats::{ensure_dir, num, write_json, FlowDoc, Table};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleParams {
    pub instances: usize,
    pub max_nodes: usize,
    pub alphas: Vec<f64>,
    /// Relative tolerance against the forest oracle.
    pub tolerance: f64,
    /// Relative tolerance against the min-cost flow at α = 1.
    pub linear_tolerance: f64,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self { instances: 50, max_nodes: 7, alphas: vec![0.5, 0.65, 0.8, 1.0], tolerance: 0.02, linear_tolerance: 0.005 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub instance: usize,
    pub topology: Topology,
    pub n_nodes: usize,
    pub n_arcs: usize,
    pub alpha: f64,
    pub reference: String,
    pub bot_objective: f64,
    pub reference_objective: f64,
    /// `(bot − reference) / reference`.
    pub relative_gap: f64,
    pub within_tolerance: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaSummary {
    pub alpha: f64,
    pub reference: String,
    pub tolerance: f64,
    pub within: usize,
    pub total: usize,
    pub max_relative_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleSolutions {
    pub instance: usize,
    pub alpha: f64,
    pub bot: FlowDoc,
    pub reference: FlowDoc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub seed: u64,
    pub params: OracleParams,
    pub summary: Vec<AlphaSummary>,
    pub rows: Vec<OracleRow>,
    pub solutions: Vec<OracleSolutions>,
}

impl OracleReport {
    pub fn summary_for(&self, alpha: f64) -> Option<&AlphaSummary> {
        self.summary.iter().find(|s| s.alpha == alpha)
    }
}

/// Instance `i` comes from `random_instance(seed, i, max_nodes)`; the solver
/// runs with `bot` at each α.
pub fn run_oracle(params: &OracleParams, bot: &BotParams, seed: u64) -> Result<OracleReport> {
    let mut rows = Vec::new();
    let mut solutions = Vec::new();
    for i in 0..params.instances {
        let inst = random_instance(seed, i, params.max_nodes)?;
        let labels: Vec<String> = (0..inst.graph.n_nodes).map(|v| format!("n{v}")).collect();
        for &alpha in &params.alphas {
            let linear = alpha == 1.0;
            let p = BotParams { alpha, seed, ..bot.clone() };
            let sol = solve_bot(&inst.graph, &inst.b, &inst.beta, &p)?;
            let (reference, name, tol) = if linear {
                (linear_flow(&inst.graph, &inst.b, &inst.beta, p.support_threshold)?, "min-cost-flow", params.linear_tolerance)
            } else {
                (forest_oracle(&inst.graph, &inst.b, &inst.beta, alpha, params.max_nodes)?, "forest-oracle", params.tolerance)
            };
            let gap = (sol.objective - reference.objective) / reference.objective.max(f64::MIN_POSITIVE);
            rows.push(OracleRow {
                instance: i,
                topology: inst.topology,
                n_nodes: inst.graph.n_nodes,
                n_arcs: inst.graph.n_arcs(),
                alpha,
                reference: name.to_string(),
                bot_objective: sol.objective,
                reference_objective: reference.objective,
                relative_gap: gap,
                within_tolerance: gap <= tol,
            });
            solutions.push(OracleSolutions {
                instance: i,
                alpha,
                bot: FlowDoc::new("bot", None, &inst.graph, &labels, &inst.beta, &sol),
                reference: FlowDoc::new(name, None, &inst.graph, &labels, &inst.beta, &reference),
            });
        }
    }
    let summary = params
        .alphas
        .iter()
        .map(|&alpha| {
            let of_alpha: Vec<&OracleRow> = rows.iter().filter(|r| r.alpha == alpha).collect();
            AlphaSummary {
                alpha,
                reference: of_alpha.first().map_or_else(String::new, |r| r.reference.clone()),
                tolerance: if alpha == 1.0 { params.linear_tolerance } else { params.tolerance },
                within: of_alpha.iter().filter(|r| r.within_tolerance).count(),
                total: of_alpha.len(),
                max_relative_gap: of_alpha.iter().map(|r| r.relative_gap).fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect();
    Ok(OracleReport { seed, params: params.clone(), summary, rows, solutions })
}

/// Writes `oracle_results.csv`, `oracle_summary.json` and
/// `oracle_solutions.json` into `dir`.
pub fn write_oracle(report: &OracleReport, dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    let mut t = Table::new([
        "instance",
        "topology",
        "n_nodes",
        "n_arcs",
        "alpha",
        "reference",
        "bot_objective",
        "reference_objective",
        "relative_gap",
        "within_tolerance",
    ]);
    for r in &report.rows {
        t.push(vec![
            r.instance.to_string(),
            format!("{:?}", r.topology).to_lowercase(),
            r.n_nodes.to_string(),
            r.n_arcs.to_string(),
            num(r.alpha),
            r.reference.clone(),
            num(r.bot_objective),
            num(r.reference_objective),
            num(r.relative_gap),
            r.within_tolerance.to_string(),
        ]);
    }
    t.write(&dir.join("oracle_results.csv"))?;
    write_json(&dir.join("oracle_summary.json"), &(report.seed, &report.params, &report.summary))?;
    write_json(&dir.join("oracle_solutions.json"), &report.solutions)
}
