#![allow(dead_code)]

use ramify_core::config::PipelineConfig;
use ramify_core::fusion::MeasurePair;
use ramify_core::geometry::CandidateGraph;
use ramify_core::pipeline::{build_rois, run_costs, run_fusion, run_simulation, run_transport, ModalityScores};
use ramify_core::transport::FlowSolution;

/// Graph, primary cost vector, primary flow and measures of the default run.
pub struct DefaultRun {
    pub cfg: PipelineConfig,
    pub graph: CandidateGraph,
    pub beta: Vec<f64>,
    pub flow: FlowSolution,
    pub measures: MeasurePair,
}

pub fn default_run() -> DefaultRun {
    let cfg = PipelineConfig::default();
    let rois = build_rois(&cfg).unwrap();
    let sim = run_simulation(&cfg, &rois).unwrap();
    let fusion = run_fusion(&cfg, &ModalityScores::from(&sim)).unwrap();
    let costs = run_costs(&cfg, &rois).unwrap();
    let transport = run_transport(&cfg, &costs, &fusion.measures.b).unwrap();
    DefaultRun {
        beta: costs.primary().unwrap().beta.clone(),
        flow: transport.primary().unwrap().solution.clone(),
        graph: costs.graph,
        measures: fusion.measures,
        cfg,
    }
}
