//! Runs the five stages against an output directory and records a manifest.
//!
//! Each stage writes its own subdirectory. A stage that is not selected but
//! whose outputs a later stage needs is read back from the directory, so
//! `stages = ["fusion"]` rewrites only `fusion/` given a previous full run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ramify_core::config::{EnsembleExport, PipelineConfig, Stage, SCHEMA_VERSION};
use ramify_core::dynamics::PathEnsemble;
use ramify_core::fmri::{connectivity, hrf_kernel, DesignMatrix, HRF_DT};
use ramify_core::fusion::{rank_agreement, top_quartile, MeasurePair};
use ramify_core::geometry::{CandidateGraph, RoiSet};
use ramify_core::pipeline::{
    build_rois, run_costs, run_dynamics, run_fusion, run_simulation, run_transport, CostsOutput, DynamicsStageOutput,
    FusionOutput, ModalityScores, SimulationOutput, TransportOutput,
};
use ramify_core::rng::derive_seed;
use ramify_core::transport::analysis::weak_arc_count;
use ramify_core::transport::{ArcCosts, CostKind, FlowSolution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::{
    ensure_dir, matrix_table, num, read_json, series_table, sha256_file, write_json, FlowDoc, GraphDoc, Table,
};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Support arcs below this fraction of the maximal flux count as weakly loaded.
pub const WEAK_FRACTION: f64 = 0.1;

/// Seconds between ensemble checkpoints in the summary export.
pub const CHECKPOINT_INTERVAL: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageStatus {
    Completed,
    Failed,
    NotRun,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub status: StageStatus,
    pub error: Option<String>,
    /// Paths relative to the run directory.
    pub files: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamLabel {
    pub label: String,
    pub used_by: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub master: u64,
    pub derivation: String,
    pub streams: Vec<StreamLabel>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub config: PipelineConfig,
    pub completed_stages: Vec<Stage>,
    pub failed_stage: Option<Stage>,
    pub cost_kinds: Vec<CostKind>,
    pub seeds: SeedRecord,
    pub stages: Vec<StageRecord>,
    /// SHA-256 of every result file, keyed by relative path.
    pub files: BTreeMap<String, String>,
    pub metrics: BTreeMap<String, f64>,
    /// Wall-clock seconds per stage; the only field that varies between
    /// identical runs.
    pub timings: BTreeMap<String, f64>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let m: Manifest = read_json(path)?;
        if m.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaMismatch { a: m.schema_version, b: SCHEMA_VERSION });
        }
        Ok(m)
    }

    pub fn stage(&self, stage: Stage) -> Option<&StageRecord> {
        self.stages.iter().find(|r| r.stage == stage)
    }

    /// Recomputes every listed hash from the files under `dir`; returns the
    /// paths that are missing or differ.
    pub fn verify(&self, dir: &Path) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        for (rel, hash) in &self.files {
            let path = dir.join(rel);
            if !path.exists() || sha256_file(&path)? != *hash {
                bad.push(rel.clone());
            }
        }
        Ok(bad)
    }
}

fn seed_record(cfg: &PipelineConfig) -> SeedRecord {
    let s = |label: &str, used_by: &str| StreamLabel { label: label.into(), used_by: used_by.into() };
    SeedRecord {
        master: cfg.seed,
        derivation: "ChaCha8 keyed by the master seed, stream id = FNV-1a 64 of the label; \
                     derived seeds are the first u64 of the labelled stream"
            .into(),
        streams: vec![
            s("fmri-noise", "simulation: BOLD noise"),
            s("eeg-trial-<i>", "simulation: sensor noise of trial i"),
            s("bot-restart-<r>", "transport: perturbation of restart r"),
            s("dynamics", "dynamics: derived seed of the primary-flow ensembles"),
            s("dynamics-alpha-<i>", "dynamics: derived seed of the ensembles at α-grid entry i"),
            s("path-<p>", "dynamics: Euler-Maruyama noise of path p under a derived seed"),
        ],
    }
}

fn tag<T: Serialize>(value: &T) -> String {
    match serde_json::to_value(value) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(v) => v.to_string(),
        Err(_) => String::new(),
    }
}

/// Values read back from a run directory, or produced in this invocation.
#[derive(Default)]
struct Cache {
    scores: Option<ModalityScores>,
    measures: Option<MeasurePair>,
    graph: Option<CandidateGraph>,
    costs: Option<Vec<ArcCosts>>,
    primary_flow: Option<FlowSolution>,
}

struct Run<'a> {
    cfg: &'a PipelineConfig,
    dir: PathBuf,
    rois: RoiSet,
    labels: Vec<String>,
    metrics: BTreeMap<String, f64>,
    cache: Cache,
}

/// Runs the selected stages into `cfg.out_dir`.
///
/// On a stage failure the manifest still gets written, naming the failed
/// stage, and the error is returned.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<Manifest> {
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(Error::SchemaMismatch { a: cfg.schema_version, b: SCHEMA_VERSION });
    }
    let dir = PathBuf::from(&cfg.out_dir);
    ensure_dir(&dir)?;
    let previous = Manifest::read(&dir.join(MANIFEST_FILE)).ok();
    let rois = build_rois(cfg)?;
    let labels = rois.labels();
    let mut run = Run { cfg, dir: dir.clone(), rois, labels, metrics: BTreeMap::new(), cache: Cache::default() };

    let mut records = Vec::new();
    let mut timings = BTreeMap::new();
    let mut failure: Option<(Stage, Error)> = None;
    let total = Instant::now();
    for stage in Stage::ALL {
        let selected = cfg.runs_stage(stage);
        if !selected || failure.is_some() {
            let carried = previous.as_ref().and_then(|m| m.stage(stage)).filter(|_| !selected);
            records.push(match carried {
                Some(r) => r.clone(),
                None => StageRecord { stage, status: StageStatus::NotRun, error: None, files: Vec::new() },
            });
            continue;
        }
        let start = Instant::now();
        let outcome = match stage {
            Stage::Simulation => run.simulation(),
            Stage::Fusion => run.fusion(),
            Stage::Costs => run.costs(),
            Stage::Transport => run.transport(),
            Stage::Dynamics => run.dynamics(),
        };
        timings.insert(stage.name().to_string(), start.elapsed().as_secs_f64());
        match outcome {
            Ok(files) => records.push(StageRecord { stage, status: StageStatus::Completed, error: None, files }),
            Err(e) => {
                records.push(StageRecord {
                    stage,
                    status: StageStatus::Failed,
                    error: Some(e.to_string()),
                    files: Vec::new(),
                });
                failure = Some((stage, e));
            }
        }
    }
    timings.insert("total".to_string(), total.elapsed().as_secs_f64());

    // metrics of stages that did not run this time come from the previous manifest
    let mut metrics = run.metrics;
    if let Some(prev) = &previous {
        for (key, value) in &prev.metrics {
            let stage = key.split('.').next().and_then(Stage::from_name);
            if stage.is_some_and(|s| !cfg.runs_stage(s)) {
                metrics.entry(key.clone()).or_insert(*value);
            }
        }
    }
    let mut files = BTreeMap::new();
    for r in &records {
        for rel in &r.files {
            let path = dir.join(rel);
            if path.exists() {
                files.insert(rel.clone(), sha256_file(&path)?);
            }
        }
    }
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        completed_stages: records.iter().filter(|r| r.status == StageStatus::Completed).map(|r| r.stage).collect(),
        failed_stage: failure.as_ref().map(|(s, _)| *s),
        cost_kinds: ramify_core::pipeline::selected_kinds(cfg.cost_kind),
        seeds: seed_record(cfg),
        stages: records,
        files,
        metrics,
        timings,
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    match failure {
        Some((stage, e)) => Err(Error::Stage { stage: stage.name(), source: Box::new(e) }),
        None => Ok(manifest),
    }
}

/// Collects the relative paths a stage writes.
struct Writer {
    root: PathBuf,
    sub: &'static str,
    files: Vec<String>,
}

impl Writer {
    fn new(root: &Path, sub: &'static str) -> Result<Self> {
        ensure_dir(&root.join(sub))?;
        Ok(Self { root: root.to_path_buf(), sub, files: Vec::new() })
    }

    fn path(&mut self, name: &str) -> Result<PathBuf> {
        let rel = format!("{}/{name}", self.sub);
        let path = self.root.join(&rel);
        if let Some(parent) = path.parent() {
            ensure_dir(parent)?;
        }
        self.files.push(rel);
        Ok(path)
    }

    fn csv(&mut self, name: &str, table: &Table) -> Result<()> {
        let path = self.path(name)?;
        table.write(&path)
    }

    fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.path(name)?;
        write_json(&path, value)
    }
}

#[derive(Serialize)]
struct FmriSummary<'a> {
    labels: &'a [String],
    tr: f64,
    n_volumes: usize,
    dof: usize,
    stim_scores: &'a [f64],
    react_scores: &'a [f64],
    residual_variance: &'a [f64],
}

#[derive(Serialize)]
struct EegSummary {
    n_sensors: usize,
    n_trials: usize,
    fs: f64,
    lambda_reg: f64,
    stim_window: (f64, f64),
    react_window: (f64, f64),
    truth_correlation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionMeasure {
    pub label: String,
    pub fused_stim: f64,
    pub fused_react: f64,
    pub mu_stim: f64,
    pub mu_react: f64,
    pub b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasuresDoc {
    pub w_f: f64,
    pub regions: Vec<RegionMeasure>,
}

impl MeasuresDoc {
    pub fn measures(&self) -> MeasurePair {
        MeasurePair {
            mu_stim: self.regions.iter().map(|r| r.mu_stim).collect(),
            mu_react: self.regions.iter().map(|r| r.mu_react).collect(),
            b: self.regions.iter().map(|r| r.b).collect(),
        }
    }
}

#[derive(Serialize)]
struct FusionSummary {
    grid: Vec<f64>,
    stable_set: Vec<String>,
    /// Regions in the top quartile at every grid weight in [0.25, 0.75].
    stable_set_mid: Vec<String>,
    top_quartile_per_weight: Vec<Vec<String>>,
    roi_range: BTreeMap<String, f64>,
    stim_rank_agreement: f64,
    react_rank_agreement: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostsDoc {
    pub eps: f64,
    pub c_iso: f64,
    pub kinds: Vec<ArcCosts>,
}

#[derive(Serialize)]
struct KindSummary {
    cost_kind: CostKind,
    objective: f64,
    support_size: usize,
    feasibility_residual: f64,
    weak_arcs: usize,
    top_relays: Vec<String>,
    linear_objective: Option<f64>,
    shortest_path_objective: Option<f64>,
    shortest_path_weak_arcs: Option<usize>,
}

#[derive(Serialize)]
struct TransportSummary {
    alpha: f64,
    weak_fraction: f64,
    runs: Vec<KindSummary>,
}

#[derive(Serialize, Deserialize)]
pub struct FluxComparisonDoc {
    pub jaccard: f64,
    pub reallocated: f64,
    pub support_threshold: f64,
}

#[derive(Serialize)]
struct DynamicsSummary<'a> {
    cost_kind: CostKind,
    seed_label: &'static str,
    seed: u64,
    kappa: f64,
    beta_dyn: f64,
    a_dyn_eigenvalues: Vec<f64>,
    a_dyn_max_eigenvalue: f64,
    laplacian_eigenvalues: Vec<f64>,
    diffusion: &'a [f64],
    j_dyn: f64,
    j_dyn_se: f64,
    x0: &'a [f64],
    target: &'a [f64],
    uncontrolled_terminal_mean: Vec<f64>,
    controlled_terminal_mean: Vec<f64>,
    uncontrolled_distance: f64,
    controlled_distance: f64,
}

#[derive(Serialize)]
struct Checkpoint {
    step: usize,
    time: f64,
    mean: Vec<f64>,
    covariance: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct EnsembleSummary {
    condition: &'static str,
    n_paths: usize,
    n_steps: usize,
    dt: f64,
    checkpoints: Vec<Checkpoint>,
}

#[derive(Serialize)]
struct FrontierPoint {
    record: usize,
    alpha: f64,
    e_alpha: f64,
    j_dyn: f64,
}

#[derive(Serialize)]
struct ReversalDoc {
    i: usize,
    j: usize,
    alpha_i: f64,
    alpha_j: f64,
    interval: (f64, f64),
    crossing: Option<f64>,
    noise_sensitive: bool,
}

#[derive(Serialize)]
struct FrontierDoc {
    frontier: Vec<FrontierPoint>,
    reversals: Vec<ReversalDoc>,
    degenerate_records: Vec<usize>,
    lambda_grid: (f64, f64, usize),
    seed_derivation: &'static str,
}

fn ensemble_summary(ens: &PathEnsemble, condition: &'static str) -> EnsembleSummary {
    let every = ((CHECKPOINT_INTERVAL / ens.dt).round() as usize).max(1);
    let mut steps: Vec<usize> = (0..=ens.n_steps).step_by(every).collect();
    if steps.last() != Some(&ens.n_steps) {
        steps.push(ens.n_steps);
    }
    let n = ens.n_nodes;
    let checkpoints = steps
        .into_iter()
        .map(|k| {
            let mean = ens.mean_at(k);
            let mut cov = vec![vec![0.0; n]; n];
            for p in 0..ens.n_paths {
                let x = ens.state(p, k);
                for i in 0..n {
                    for j in 0..n {
                        cov[i][j] += (x[i] - mean[i]) * (x[j] - mean[j]);
                    }
                }
            }
            let denom = ens.n_paths.saturating_sub(1).max(1) as f64;
            for row in &mut cov {
                for c in row.iter_mut() {
                    *c /= denom;
                }
            }
            Checkpoint { step: k, time: k as f64 * ens.dt, mean, covariance: cov }
        })
        .collect();
    EnsembleSummary { condition, n_paths: ens.n_paths, n_steps: ens.n_steps, dt: ens.dt, checkpoints }
}

fn ensemble_long(ens: &PathEnsemble) -> Table {
    let mut t = Table::new(["path", "step", "node", "value"]);
    for p in 0..ens.n_paths {
        for k in 0..=ens.n_steps {
            for (i, v) in ens.state(p, k).iter().enumerate() {
                t.push(vec![p.to_string(), k.to_string(), i.to_string(), num(*v)]);
            }
        }
    }
    t
}

impl Run<'_> {
    fn stage_dir(&self, stage: Stage) -> PathBuf {
        self.dir.join(stage.name())
    }

    fn metric(&mut self, key: String, value: f64) {
        if value.is_finite() {
            self.metrics.insert(key, value);
        }
    }

    fn scores(&mut self) -> Result<ModalityScores> {
        if let Some(s) = &self.cache.scores {
            return Ok(s.clone());
        }
        let path = self.stage_dir(Stage::Simulation).join("scores.csv");
        let t = Table::read(&path)?;
        let scores = ModalityScores {
            fmri_stim: t.floats("fmri_stim", &path)?,
            fmri_react: t.floats("fmri_react", &path)?,
            eeg_stim: t.floats("eeg_stim", &path)?,
            eeg_react: t.floats("eeg_react", &path)?,
        };
        if scores.fmri_stim.len() != self.rois.len() {
            return Err(Error::Malformed { path, message: "region count differs from the configuration".into() });
        }
        Ok(scores)
    }

    fn measures(&mut self) -> Result<MeasurePair> {
        if let Some(m) = &self.cache.measures {
            return Ok(m.clone());
        }
        let doc: MeasuresDoc = read_json(&self.stage_dir(Stage::Fusion).join("measures.json"))?;
        Ok(doc.measures())
    }

    fn graph_and_costs(&mut self) -> Result<(CandidateGraph, Vec<ArcCosts>)> {
        if let (Some(g), Some(c)) = (&self.cache.graph, &self.cache.costs) {
            return Ok((g.clone(), c.clone()));
        }
        let dir = self.stage_dir(Stage::Costs);
        let graph = read_json::<GraphDoc>(&dir.join("graph.json"))?.graph()?;
        let costs: CostsDoc = read_json(&dir.join("costs.json"))?;
        Ok((graph, costs.kinds))
    }

    fn primary_flow(&mut self, kind: CostKind) -> Result<FlowSolution> {
        if let Some(f) = &self.cache.primary_flow {
            return Ok(f.clone());
        }
        let path = self.stage_dir(Stage::Transport).join(format!("flow_{}.json", kind.tag()));
        Ok(read_json::<FlowDoc>(&path)?.solution())
    }

    fn simulation(&mut self) -> Result<Vec<String>> {
        let sim: SimulationOutput = run_simulation(self.cfg, &self.rois)?;
        let labels = &self.labels;
        let mut w = Writer::new(&self.dir, "simulation")?;

        let mut t = Table::new(["index", "label", "system", "shell", "x", "y", "d_xx", "d_xy", "d_yy", "fa"]);
        for r in &self.rois.rois {
            t.push(vec![
                r.index.to_string(),
                r.label.clone(),
                tag(&r.system),
                tag(&r.shell),
                num(r.position[0]),
                num(r.position[1]),
                num(r.tensor.xx),
                num(r.tensor.xy),
                num(r.tensor.yy),
                num(r.tensor.fractional_anisotropy()),
            ]);
        }
        w.csv("rois.csv", &t)?;

        let f = &sim.fmri;
        let d = &f.design;
        let mut t = Table::new(["volume", "time", "stim", "react", "intercept", "stim_boxcar", "react_boxcar"]);
        for (k, time) in d.volume_times().iter().enumerate() {
            t.push(vec![
                k.to_string(),
                num(*time),
                num(d.x_stim[k]),
                num(d.x_react[k]),
                num(d.intercept[k]),
                num(d.stim_boxcar[k]),
                num(d.react_boxcar[k]),
            ]);
        }
        w.csv("fmri_design.csv", &t)?;
        let mut t = Table::new(["time", "hrf"]);
        for (k, h) in hrf_kernel().iter().enumerate() {
            t.push(vec![num(k as f64 * HRF_DT), num(*h)]);
        }
        w.csv("fmri_hrf.csv", &t)?;
        w.csv("fmri_bold.csv", &series_table("volume", &d.volume_times(), labels, &f.bold))?;
        let regressors: Vec<String> = DesignMatrix::COLUMN_NAMES.iter().map(|s| s.to_string()).collect();
        w.csv("fmri_beta_true.csv", &matrix_table("regressor", &regressors, labels, &f.beta_true))?;
        w.csv("fmri_betas.csv", &matrix_table("regressor", &regressors, labels, &f.glm.betas))?;
        w.csv("fmri_tstats.csv", &matrix_table("regressor", &regressors, labels, &f.glm.tstats))?;
        w.csv("fmri_connectivity.csv", &matrix_table("label", labels, labels, &connectivity(&f.bold)))?;
        w.json(
            "fmri_summary.json",
            &FmriSummary {
                labels,
                tr: d.tr,
                n_volumes: d.n_volumes,
                dof: f.glm.dof,
                stim_scores: &f.stim_scores,
                react_scores: &f.react_scores,
                residual_variance: &f.glm.residual_variance,
            },
        )?;

        let e = &sim.eeg;
        let sensors: Vec<String> = (0..e.lead_field.sensor_positions.len()).map(|s| format!("s{s:02}")).collect();
        let mut t = Table::new(["sensor", "x", "y"]);
        for (name, p) in sensors.iter().zip(&e.lead_field.sensor_positions) {
            t.push(vec![name.clone(), num(p[0]), num(p[1])]);
        }
        w.csv("eeg_sensor_positions.csv", &t)?;
        w.csv("eeg_lead_field.csv", &matrix_table("sensor", &sensors, labels, &e.lead_field.matrix))?;
        let times = self.cfg.eeg.erp.times();
        w.csv("eeg_sensor_data.csv", &series_table("sample", &times, &sensors, &e.sensor_data))?;
        w.csv("eeg_sources.csv", &series_table("sample", &times, labels, &e.sources.samples))?;
        w.csv("eeg_truth.csv", &series_table("sample", &times, labels, &e.truth))?;
        let mut t = Table::new(["label", "stim_score", "react_score"]);
        for (i, l) in labels.iter().enumerate() {
            t.push(vec![l.clone(), num(e.stim_scores[i]), num(e.react_scores[i])]);
        }
        w.csv("eeg_scores.csv", &t)?;
        let map = |t: f64| -> BTreeMap<String, f64> {
            labels.iter().cloned().zip(e.sources.map_at(t)).collect()
        };
        let maps: BTreeMap<&str, BTreeMap<String, f64>> = [("100ms", map(0.1)), ("350ms", map(0.35))].into();
        w.json("eeg_source_maps.json", &maps)?;
        let ec = &self.cfg.eeg;
        w.json(
            "eeg_summary.json",
            &EegSummary {
                n_sensors: ec.n_sensors,
                n_trials: ec.erp.n_trials,
                fs: ec.erp.fs,
                lambda_reg: ec.lambda_reg,
                stim_window: ec.stim_window,
                react_window: ec.react_window,
                truth_correlation: e.truth_correlation,
            },
        )?;

        let scores = ModalityScores::from(&sim);
        let mut t = Table::new(["label", "fmri_stim", "fmri_react", "eeg_stim", "eeg_react"]);
        for (i, l) in labels.iter().enumerate() {
            t.push(vec![
                l.clone(),
                num(scores.fmri_stim[i]),
                num(scores.fmri_react[i]),
                num(scores.eeg_stim[i]),
                num(scores.eeg_react[i]),
            ]);
        }
        w.csv("scores.csv", &t)?;
        let files = w.files;
        self.metric("simulation.eeg_truth_correlation".into(), e.truth_correlation);
        self.metric("simulation.fmri_dof".into(), f.glm.dof as f64);
        self.cache.scores = Some(scores);
        Ok(files)
    }

    fn fusion(&mut self) -> Result<Vec<String>> {
        let scores = self.scores()?;
        let out: FusionOutput = run_fusion(self.cfg, &scores)?;
        let labels = &self.labels;
        let names = |idx: &[usize]| idx.iter().map(|&i| labels[i].clone()).collect::<Vec<_>>();
        let mut w = Writer::new(&self.dir, "fusion")?;
        let m = &out.measures;
        let regions = (0..labels.len())
            .map(|i| RegionMeasure {
                label: labels[i].clone(),
                fused_stim: out.fused_stim[i],
                fused_react: out.fused_react[i],
                mu_stim: m.mu_stim[i],
                mu_react: m.mu_react[i],
                b: m.b[i],
            })
            .collect();
        w.json("measures.json", &MeasuresDoc { w_f: self.cfg.fusion.w_f, regions })?;
        let mut t = Table::new(std::iter::once("w_f".to_string()).chain(labels.iter().cloned()));
        for (wf, row) in out.sweep.grid.iter().zip(&out.sweep.rows) {
            t.push(std::iter::once(num(*wf)).chain(row.iter().map(|v| num(*v))).collect());
        }
        w.csv("sensitivity.csv", &t)?;
        let mid_sets = out.sweep.top_quartile_sets_within(0.25, 0.75);
        let mut mid: Vec<usize> = (0..labels.len()).collect();
        for s in &mid_sets {
            mid.retain(|i| s.contains(i));
        }
        if mid_sets.is_empty() {
            mid.clear();
        }
        w.json(
            "summary.json",
            &FusionSummary {
                grid: out.sweep.grid.clone(),
                stable_set: names(&out.sweep.stable_set),
                stable_set_mid: names(&mid),
                top_quartile_per_weight: out.sweep.rows.iter().map(|r| names(&top_quartile(r))).collect(),
                roi_range: labels.iter().cloned().zip(out.sweep.roi_range.iter().copied()).collect(),
                stim_rank_agreement: rank_agreement(&scores.fmri_stim, &scores.eeg_stim)?,
                react_rank_agreement: rank_agreement(&scores.fmri_react, &scores.eeg_react)?,
            },
        )?;
        let files = w.files;
        self.metric("fusion.stable_set_size".into(), mid.len() as f64);
        self.cache.measures = Some(out.measures);
        Ok(files)
    }

    fn costs(&mut self) -> Result<Vec<String>> {
        let out: CostsOutput = run_costs(self.cfg, &self.rois)?;
        let mut w = Writer::new(&self.dir, "costs")?;
        w.json("graph.json", &GraphDoc::new(&self.rois, &out.graph))?;
        let mut t = Table::new(["arc", "tail", "head", "tail_label", "head_label", "length", "beta_iso", "beta_aniso"]);
        let beta_of = |kind: CostKind, e: usize| out.get(kind).map_or(String::new(), |c| num(c.beta[e]));
        for (e, a) in out.graph.arcs.iter().enumerate() {
            t.push(vec![
                e.to_string(),
                a.tail.to_string(),
                a.head.to_string(),
                self.labels[a.tail].clone(),
                self.labels[a.head].clone(),
                num(out.graph.lengths[e]),
                beta_of(CostKind::Isotropic, e),
                beta_of(CostKind::Anisotropic, e),
            ]);
        }
        w.csv("arcs.csv", &t)?;
        w.json("costs.json", &CostsDoc { eps: self.cfg.costs.eps, c_iso: self.cfg.costs.c_iso, kinds: out.costs.clone() })?;
        let files = w.files;
        self.metric("costs.n_arcs".into(), out.graph.n_arcs() as f64);
        self.cache.graph = Some(out.graph);
        self.cache.costs = Some(out.costs);
        Ok(files)
    }

    fn transport(&mut self) -> Result<Vec<String>> {
        let (graph, costs) = self.graph_and_costs()?;
        let measures = self.measures()?;
        let costs_out = CostsOutput { graph, costs };
        let out: TransportOutput = run_transport(self.cfg, &costs_out, &measures.b)?;
        let graph = &costs_out.graph;
        let labels = self.labels.clone();
        let threshold = self.cfg.transport.support_threshold;
        let mut w = Writer::new(&self.dir, "transport")?;
        let mut summaries = Vec::new();
        for run in &out.runs {
            let k = run.kind.tag();
            let beta = &costs_out.get(run.kind).expect("costs of every run").beta;
            w.json(&format!("flow_{k}.json"), &FlowDoc::new("bot", Some(run.kind), graph, &labels, beta, &run.solution))?;
            if let Some(lin) = &run.linear {
                w.json(&format!("baseline_linear_{k}.json"), &FlowDoc::new("linear", Some(run.kind), graph, &labels, beta, lin))?;
            }
            if let Some(sp) = &run.shortest_path {
                let doc = FlowDoc::new("shortest-path", Some(run.kind), graph, &labels, beta, sp);
                w.json(&format!("baseline_shortest_path_{k}.json"), &doc)?;
            }
            let ranking = run.relay.ranking();
            let mut rank = vec![0; labels.len()];
            for (r, &i) in ranking.iter().enumerate() {
                rank[i] = r + 1;
            }
            let mut t = Table::new(["label", "inflow", "outflow", "relay_score", "class", "rank"]);
            for (i, l) in labels.iter().enumerate() {
                t.push(vec![
                    l.clone(),
                    num(run.relay.inflow[i]),
                    num(run.relay.outflow[i]),
                    num(run.relay.relay_score[i]),
                    run.relay.class[i].tag().to_string(),
                    rank[i].to_string(),
                ]);
            }
            w.csv(&format!("relay_{k}.csv"), &t)?;
            let s = KindSummary {
                cost_kind: run.kind,
                objective: run.solution.objective,
                support_size: run.solution.support.len(),
                feasibility_residual: run.solution.feasibility_residual,
                weak_arcs: weak_arc_count(&run.solution.w, threshold, WEAK_FRACTION),
                top_relays: ranking.iter().take(4).map(|&i| labels[i].clone()).collect(),
                linear_objective: run.linear.as_ref().map(|l| l.objective),
                shortest_path_objective: run.shortest_path.as_ref().map(|s| s.objective),
                shortest_path_weak_arcs: run.shortest_path.as_ref().map(|s| weak_arc_count(&s.w, threshold, WEAK_FRACTION)),
            };
            let p = format!("transport.{k}");
            self.metric(format!("{p}.objective"), s.objective);
            self.metric(format!("{p}.support_size"), s.support_size as f64);
            self.metric(format!("{p}.feasibility_residual"), s.feasibility_residual);
            self.metric(format!("{p}.weak_arcs"), s.weak_arcs as f64);
            if let Some(v) = s.linear_objective {
                self.metric(format!("{p}.linear_objective"), v);
            }
            if let Some(v) = s.shortest_path_objective {
                self.metric(format!("{p}.shortest_path_objective"), v);
            }
            if let Some(v) = s.shortest_path_weak_arcs {
                self.metric(format!("{p}.shortest_path_weak_arcs"), v as f64);
            }
            summaries.push(s);
        }
        if let Some(c) = &out.comparison {
            let mut t = Table::new(["arc", "tail_label", "head_label", "w_iso", "w_aniso", "difference", "shared"]);
            for (e, row) in c.rows.iter().enumerate() {
                let a = graph.arcs[e];
                t.push(vec![
                    e.to_string(),
                    labels[a.tail].clone(),
                    labels[a.head].clone(),
                    num(row.w_iso),
                    num(row.w_aniso),
                    num(row.difference),
                    row.shared.to_string(),
                ]);
            }
            w.csv("flux_comparison.csv", &t)?;
            w.json(
                "flux_comparison.json",
                &FluxComparisonDoc { jaccard: c.jaccard, reallocated: c.reallocated, support_threshold: threshold },
            )?;
            self.metric("transport.comparison.jaccard".into(), c.jaccard);
            self.metric("transport.comparison.reallocated".into(), c.reallocated);
        }
        w.json("summary.json", &TransportSummary { alpha: self.cfg.transport.alpha, weak_fraction: WEAK_FRACTION, runs: summaries })?;
        let files = w.files;
        self.cache.primary_flow = out.primary().map(|r| r.solution.clone());
        Ok(files)
    }

    fn dynamics(&mut self) -> Result<Vec<String>> {
        let (graph, costs) = self.graph_and_costs()?;
        let measures = self.measures()?;
        let primary = CostsOutput { graph, costs };
        let cost = primary.primary().ok_or_else(|| Error::Config("no cost model selected".into()))?.clone();
        let flow = self.primary_flow(cost.kind)?;
        let graph = &primary.graph;
        let out: DynamicsStageOutput = run_dynamics(self.cfg, graph, &cost.beta, &flow, &measures)?;
        let labels = self.labels.clone();
        let mut w = Writer::new(&self.dir, "dynamics")?;
        let o = &out.outcome;
        let a_eig = o.ops.a_eigenvalues();
        let a_max = a_eig.last().copied().unwrap_or(f64::NAN);
        w.json(
            "summary.json",
            &DynamicsSummary {
                cost_kind: cost.kind,
                seed_label: "dynamics",
                seed: derive_seed(self.cfg.seed, "dynamics"),
                kappa: o.ops.kappa,
                beta_dyn: o.ops.beta_dyn,
                a_dyn_eigenvalues: a_eig.clone(),
                a_dyn_max_eigenvalue: a_max,
                laplacian_eigenvalues: o.ops.laplacian_eigenvalues(),
                diffusion: &o.ops.c_diag,
                j_dyn: o.cost.mean,
                j_dyn_se: o.cost.std_error,
                x0: &o.setup.x0,
                target: &o.setup.target,
                uncontrolled_terminal_mean: o.uncontrolled.terminal_mean(),
                controlled_terminal_mean: o.controlled.terminal_mean(),
                uncontrolled_distance: o.uncontrolled_distance,
                controlled_distance: o.controlled_distance,
            },
        )?;
        let mut t = Table::new(
            ["condition", "step", "time"].into_iter().map(String::from).chain(labels.iter().cloned()),
        );
        for (name, ens) in [("uncontrolled", &o.uncontrolled), ("controlled", &o.controlled)] {
            for k in 0..=ens.n_steps {
                let mut row = vec![name.to_string(), k.to_string(), num(k as f64 * ens.dt)];
                row.extend(ens.mean_at(k).iter().map(|v| num(*v)));
                t.push(row);
            }
        }
        w.csv("mean_trajectories.csv", &t)?;
        match self.cfg.ensemble_export {
            EnsembleExport::Summary => {
                let s = [ensemble_summary(&o.uncontrolled, "uncontrolled"), ensemble_summary(&o.controlled, "controlled")];
                w.json("ensemble_summary.json", &s)?;
            }
            EnsembleExport::Full => {
                w.csv("ensemble_uncontrolled.csv", &ensemble_long(&o.uncontrolled))?;
                w.csv("ensemble_controlled.csv", &ensemble_long(&o.controlled))?;
            }
        }
        let mut t = Table::new(["path", "cost"]);
        for (p, c) in o.cost.per_path.iter().enumerate() {
            t.push(vec![p.to_string(), num(*c)]);
        }
        w.csv("path_costs.csv", &t)?;

        let records = &out.grid.records;
        let mut t = Table::new([
            "alpha",
            "e_alpha",
            "j_dyn",
            "j_dyn_se",
            "j_dyn_doubled",
            "support_size",
            "solution_ref",
            "degenerate",
            "failure",
            "uncontrolled_distance",
            "controlled_distance",
            "a_dyn_max_eigenvalue",
        ]);
        for r in records {
            t.push(vec![
                num(r.alpha),
                num(r.e_alpha),
                num(r.j_dyn),
                num(r.j_dyn_se),
                r.j_dyn_doubled.map_or(String::new(), num),
                r.support_size.to_string(),
                r.solution_ref.clone(),
                r.degenerate.to_string(),
                r.failure.clone().unwrap_or_default(),
                num(r.uncontrolled_distance),
                num(r.controlled_distance),
                num(r.a_dyn_max_eigenvalue),
            ]);
        }
        w.csv("tradeoff_records.csv", &t)?;
        let sweep = &out.sweep;
        let mut t = Table::new(
            std::iter::once("lambda".to_string())
                .chain(records.iter().map(|r| r.solution_ref.clone()))
                .chain(std::iter::once("argmin".to_string())),
        );
        for (k, lambda) in sweep.lambda_grid.iter().enumerate() {
            let mut row = vec![num(*lambda)];
            row.extend(sweep.f_matrix.iter().map(|f| num(f[k])));
            row.push(sweep.argmin[k].map_or(String::new(), |r| records[r].solution_ref.clone()));
            t.push(row);
        }
        w.csv("lambda_sweep.csv", &t)?;
        let t_cfg = &self.cfg.tradeoff;
        w.json(
            "tradeoff_frontier.json",
            &FrontierDoc {
                frontier: out
                    .frontier
                    .iter()
                    .map(|&r| FrontierPoint {
                        record: r,
                        alpha: records[r].alpha,
                        e_alpha: records[r].e_alpha,
                        j_dyn: records[r].j_dyn,
                    })
                    .collect(),
                reversals: sweep
                    .reversals
                    .iter()
                    .map(|ev| ReversalDoc {
                        i: ev.i,
                        j: ev.j,
                        alpha_i: records[ev.i].alpha,
                        alpha_j: records[ev.j].alpha,
                        interval: ev.interval,
                        crossing: ev.crossing,
                        noise_sensitive: ev.noise_sensitive,
                    })
                    .collect(),
                degenerate_records: (0..records.len()).filter(|&r| records[r].degenerate).collect(),
                lambda_grid: (0.0, t_cfg.lambda_max, t_cfg.lambda_count),
                seed_derivation: "ensembles of α-grid entry i use the seed derived from label dynamics-alpha-<i>",
            },
        )?;
        for (r, sol) in records.iter().zip(&out.grid.solutions) {
            if let Some(sol) = sol {
                let doc = FlowDoc::new("bot", Some(cost.kind), graph, &labels, &cost.beta, sol);
                w.json(&format!("flows/{}.json", r.solution_ref), &doc)?;
            }
        }
        let files = w.files;
        self.metric("dynamics.j_dyn".into(), o.cost.mean);
        self.metric("dynamics.j_dyn_se".into(), o.cost.std_error);
        self.metric("dynamics.uncontrolled_distance".into(), o.uncontrolled_distance);
        self.metric("dynamics.controlled_distance".into(), o.controlled_distance);
        self.metric("dynamics.a_dyn_max_eigenvalue".into(), a_max);
        self.metric("dynamics.tradeoff.reversals".into(), sweep.reversals.len() as f64);
        self.metric("dynamics.tradeoff.frontier_size".into(), out.frontier.len() as f64);
        self.metric(
            "dynamics.tradeoff.degenerate".into(),
            records.iter().filter(|r| r.degenerate).count() as f64,
        );
        Ok(files)
    }
}

/// Reads a flow file of a run directory, e.g. `transport/flow_aniso.json`.
pub fn read_flow(dir: &Path, rel: &str) -> Result<FlowDoc> {
    read_json(&dir.join(rel))
}

/// Relative path of the flow that drives the dynamics of a run.
pub fn primary_flow_path(manifest: &Manifest) -> Option<String> {
    let kinds = &manifest.cost_kinds;
    let kind = if kinds.contains(&CostKind::Anisotropic) {
        CostKind::Anisotropic
    } else {
        *kinds.first()?
    };
    let rel = format!("transport/flow_{}.json", kind.tag());
    manifest.files.contains_key(&rel).then_some(rel)
}
