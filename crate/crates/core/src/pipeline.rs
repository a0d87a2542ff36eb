//! The five pipeline stages as pure functions of the configuration and the
//! outputs of earlier stages.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::config::{CostSelection, PipelineConfig};
use crate::dynamics::{analyze_flow, DynamicsOutcome};
use crate::eeg::{
    build_lead_field, ground_truth_sources, mean_source_correlation, min_norm_inverse, simulate_erp_trials,
    window_scores, LeadField, SourceEstimate,
};
use crate::error::{invalid, Result};
use crate::fmri::{build_block_design, default_beta_true, fmri_scores, glm_fit, simulate_bold, DesignMatrix, GlmResult};
use crate::fusion::{fuse_profiles, normalize_unit_max, sensitivity_sweep, to_measures, MeasurePair, SensitivitySweep};
use crate::geometry::{assign_tensor_field, build_knn_graph, build_roi_layout, CandidateGraph, RoiSet, System};
use crate::rng::{derive_seed, stream};
use crate::tradeoff::{alpha_grid_run, lambda_sweep, linspace, record_frontier, AlphaGridRun, LambdaSweep};
use crate::transport::{
    build_arc_costs, flux_comparison, linear_flow, relay_statistics, shortest_path_surrogate, solve_bot, ArcCosts,
    CostKind, FlowSolution, FluxComparison, RelayStats,
};

pub fn build_rois(cfg: &PipelineConfig) -> Result<RoiSet> {
    let g = &cfg.geometry;
    let rois = build_roi_layout(g.n_outer, g.n_inner, g.outer_radii, g.inner_radii)?;
    assign_tensor_field(rois, &System::RELAY, g.fa_high, g.fa_low)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FmriOutput {
    pub design: DesignMatrix,
    pub beta_true: DMatrix<f64>,
    pub bold: DMatrix<f64>,
    pub glm: GlmResult,
    pub stim_scores: Vec<f64>,
    pub react_scores: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EegOutput {
    pub lead_field: LeadField,
    pub sensor_data: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
    pub sources: SourceEstimate,
    pub truth: DMatrix<f64>,
    pub truth_correlation: f64,
    pub stim_scores: Vec<f64>,
    pub react_scores: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationOutput {
    pub fmri: FmriOutput,
    pub eeg: EegOutput,
}

/// fMRI noise uses substream `fmri-noise`; EEG trial `i` uses `eeg-trial-i`.
pub fn run_simulation(cfg: &PipelineConfig, rois: &RoiSet) -> Result<SimulationOutput> {
    let design = build_block_design(cfg.fmri.total_s, cfg.fmri.tr_s)?;
    let beta_true = default_beta_true(rois);
    let mut rng = stream(cfg.seed, "fmri-noise");
    let bold = simulate_bold(&design, &beta_true, cfg.fmri.noise_std, &mut rng)?;
    let glm = glm_fit(&bold, &design.matrix())?;
    let (stim_scores, react_scores) = fmri_scores(&glm);
    let fmri = FmriOutput { design, beta_true, bold, glm, stim_scores, react_scores };

    let e = &cfg.eeg;
    let lead_field = build_lead_field(rois, e.n_sensors, e.sensor_radius)?;
    let sensor_data = simulate_erp_trials(rois, &lead_field, &e.erp, cfg.seed)?;
    let inverse = min_norm_inverse(&lead_field.matrix, e.lambda_reg)?;
    let sources = SourceEstimate::from_sensors(&sensor_data, &inverse, e.erp.fs);
    let truth = ground_truth_sources(rois, &e.erp);
    let truth_correlation = mean_source_correlation(&truth, &sources.samples);
    let (stim_scores, react_scores) = window_scores(&sources, e.stim_window, e.react_window)?;
    let eeg = EegOutput { lead_field, sensor_data, inverse, sources, truth, truth_correlation, stim_scores, react_scores };
    Ok(SimulationOutput { fmri, eeg })
}

/// Per-region stimulus and reaction scores of both modalities.
#[derive(Clone, Debug, PartialEq)]
pub struct ModalityScores {
    pub fmri_stim: Vec<f64>,
    pub fmri_react: Vec<f64>,
    pub eeg_stim: Vec<f64>,
    pub eeg_react: Vec<f64>,
}

impl From<&SimulationOutput> for ModalityScores {
    fn from(sim: &SimulationOutput) -> Self {
        Self {
            fmri_stim: sim.fmri.stim_scores.clone(),
            fmri_react: sim.fmri.react_scores.clone(),
            eeg_stim: sim.eeg.stim_scores.clone(),
            eeg_react: sim.eeg.react_scores.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FusionOutput {
    pub fused_stim: Vec<f64>,
    pub fused_react: Vec<f64>,
    pub measures: MeasurePair,
    pub sweep: SensitivitySweep,
}

pub fn run_fusion(cfg: &PipelineConfig, scores: &ModalityScores) -> Result<FusionOutput> {
    let f = &cfg.fusion;
    let fused_stim = fuse_profiles(
        &normalize_unit_max(&scores.fmri_stim)?,
        &normalize_unit_max(&scores.eeg_stim)?,
        f.w_f,
        f.eps0,
    )?;
    let fused_react = fuse_profiles(
        &normalize_unit_max(&scores.fmri_react)?,
        &normalize_unit_max(&scores.eeg_react)?,
        f.w_f,
        f.eps0,
    )?;
    let measures = to_measures(&fused_stim, &fused_react)?;
    let sweep = sensitivity_sweep(&scores.fmri_stim, &scores.eeg_stim, &f.grid, f.eps0)?;
    Ok(FusionOutput { fused_stim, fused_react, measures, sweep })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CostsOutput {
    pub graph: CandidateGraph,
    pub costs: Vec<ArcCosts>,
}

impl CostsOutput {
    pub fn get(&self, kind: CostKind) -> Option<&ArcCosts> {
        self.costs.iter().find(|c| c.kind == kind)
    }

    /// The cost model that drives the dynamics: anisotropic when available.
    pub fn primary(&self) -> Option<&ArcCosts> {
        self.get(CostKind::Anisotropic).or_else(|| self.get(CostKind::Isotropic))
    }
}

pub fn selected_kinds(selection: CostSelection) -> Vec<CostKind> {
    match selection {
        CostSelection::Isotropic => alloc::vec![CostKind::Isotropic],
        CostSelection::Anisotropic => alloc::vec![CostKind::Anisotropic],
        CostSelection::Both => alloc::vec![CostKind::Isotropic, CostKind::Anisotropic],
    }
}

pub fn run_costs(cfg: &PipelineConfig, rois: &RoiSet) -> Result<CostsOutput> {
    let graph = build_knn_graph(rois, cfg.geometry.k)?;
    let costs = selected_kinds(cfg.cost_kind)
        .into_iter()
        .map(|kind| build_arc_costs(&graph, rois, kind, cfg.costs.eps, cfg.costs.c_iso))
        .collect::<Result<Vec<_>>>()?;
    Ok(CostsOutput { graph, costs })
}

#[derive(Clone, Debug, PartialEq)]
pub struct KindTransport {
    pub kind: CostKind,
    pub solution: FlowSolution,
    pub relay: RelayStats,
    pub linear: Option<FlowSolution>,
    pub shortest_path: Option<FlowSolution>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransportOutput {
    pub runs: Vec<KindTransport>,
    /// Isotropic against anisotropic, when both ran.
    pub comparison: Option<FluxComparison>,
}

impl TransportOutput {
    pub fn get(&self, kind: CostKind) -> Option<&KindTransport> {
        self.runs.iter().find(|r| r.kind == kind)
    }

    pub fn primary(&self) -> Option<&KindTransport> {
        self.get(CostKind::Anisotropic).or_else(|| self.get(CostKind::Isotropic))
    }
}

pub fn run_transport(cfg: &PipelineConfig, costs: &CostsOutput, b: &[f64]) -> Result<TransportOutput> {
    let params = cfg.bot_params(cfg.transport.alpha);
    let threshold = params.support_threshold;
    let mut runs = Vec::new();
    for c in &costs.costs {
        let solution = solve_bot(&costs.graph, b, &c.beta, &params)?;
        let relay = relay_statistics(&costs.graph, &solution, b)?;
        let linear = cfg
            .baselines
            .linear
            .then(|| linear_flow(&costs.graph, b, &c.beta, threshold))
            .transpose()?;
        let shortest_path = cfg
            .baselines
            .shortest_path
            .then(|| shortest_path_surrogate(&costs.graph, b, &c.beta, params.alpha, threshold))
            .transpose()?;
        runs.push(KindTransport { kind: c.kind, solution, relay, linear, shortest_path });
    }
    let comparison = match (
        runs.iter().find(|r| r.kind == CostKind::Isotropic),
        runs.iter().find(|r| r.kind == CostKind::Anisotropic),
    ) {
        (Some(iso), Some(aniso)) => Some(flux_comparison(&iso.solution.w, &aniso.solution.w, threshold)?),
        _ => None,
    };
    Ok(TransportOutput { runs, comparison })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DynamicsStageOutput {
    pub outcome: DynamicsOutcome,
    pub grid: AlphaGridRun,
    pub sweep: LambdaSweep,
    pub frontier: Vec<usize>,
}

/// Dynamics of the primary solution (seed derived from label `dynamics`),
/// then the α-grid, λ-sweep and Pareto frontier on the primary cost model.
pub fn run_dynamics(
    cfg: &PipelineConfig,
    graph: &CandidateGraph,
    beta: &[f64],
    solution: &FlowSolution,
    measures: &MeasurePair,
) -> Result<DynamicsStageOutput> {
    let outcome = analyze_flow(
        graph,
        &solution.w,
        &measures.mu_stim,
        &measures.mu_react,
        &cfg.dynamics,
        derive_seed(cfg.seed, "dynamics"),
    )?;
    let t = &cfg.tradeoff;
    if t.alpha_count == 0 {
        return Err(invalid("the α grid needs at least one value"));
    }
    let alphas = linspace(t.alpha_min, t.alpha_max, t.alpha_count);
    let grid = alpha_grid_run(
        graph,
        &measures.b,
        beta,
        &measures.mu_stim,
        &measures.mu_react,
        &alphas,
        &cfg.bot_params(cfg.transport.alpha),
        &cfg.dynamics,
        cfg.seed,
        t.recheck,
    );
    let sweep = lambda_sweep(&grid.records, &linspace(0.0, t.lambda_max, t.lambda_count))?;
    let frontier = record_frontier(&grid.records);
    Ok(DynamicsStageOutput { outcome, grid, sweep, frontier })
}
