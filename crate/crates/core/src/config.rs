//! Pipeline configuration. Every field has a default, so a partial JSON
//! document deserializes to the defaults plus its overrides.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dynamics::DynamicsParams;
use crate::eeg::ErpParams;
use crate::fusion::{default_weight_grid, DEFAULT_EPS0, DEFAULT_FUSION_WEIGHT};
use crate::geometry::{DEFAULT_FA_HIGH, DEFAULT_FA_LOW, DEFAULT_INNER_RADII, DEFAULT_OUTER_RADII};
use crate::transport::costs::{DEFAULT_C_ISO, DEFAULT_TENSOR_EPS};
use crate::transport::BotParams;
use crate::tradeoff::{DEFAULT_ALPHA_COUNT, DEFAULT_ALPHA_RANGE, DEFAULT_LAMBDA_COUNT, DEFAULT_LAMBDA_MAX};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Simulation,
    Fusion,
    Costs,
    Transport,
    Dynamics,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::Simulation, Stage::Fusion, Stage::Costs, Stage::Transport, Stage::Dynamics];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Simulation => "simulation",
            Stage::Fusion => "fusion",
            Stage::Costs => "costs",
            Stage::Transport => "transport",
            Stage::Dynamics => "dynamics",
        }
    }

    pub fn from_name(name: &str) -> Option<Stage> {
        Stage::ALL.into_iter().find(|s| s.name() == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostSelection {
    Isotropic,
    Anisotropic,
    Both,
}

/// How path ensembles are written out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleExport {
    /// Means and covariances at checkpoints.
    Summary,
    /// Every state in long format.
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeometryConfig {
    pub n_outer: usize,
    pub n_inner: usize,
    pub outer_radii: [f64; 2],
    pub inner_radii: [f64; 2],
    pub k: usize,
    pub fa_high: f64,
    pub fa_low: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            n_outer: 12,
            n_inner: 6,
            outer_radii: DEFAULT_OUTER_RADII,
            inner_radii: DEFAULT_INNER_RADII,
            k: 5,
            fa_high: DEFAULT_FA_HIGH,
            fa_low: DEFAULT_FA_LOW,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FmriConfig {
    pub total_s: f64,
    pub tr_s: f64,
    pub noise_std: f64,
}

impl Default for FmriConfig {
    fn default() -> Self {
        Self { total_s: 300.0, tr_s: 2.0, noise_std: 0.15 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EegConfig {
    pub n_sensors: usize,
    pub sensor_radius: f64,
    pub lambda_reg: f64,
    pub erp: ErpParams,
    pub stim_window: (f64, f64),
    pub react_window: (f64, f64),
}

impl Default for EegConfig {
    fn default() -> Self {
        Self {
            n_sensors: 64,
            sensor_radius: 1.25,
            lambda_reg: 0.05,
            erp: ErpParams::default(),
            stim_window: (0.07, 0.20),
            react_window: (0.30, 0.55),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionConfig {
    pub w_f: f64,
    pub eps0: f64,
    pub grid: Vec<f64>,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self { w_f: DEFAULT_FUSION_WEIGHT, eps0: DEFAULT_EPS0, grid: default_weight_grid() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostConfig {
    pub eps: f64,
    pub c_iso: f64,
}

impl Default for CostConfig {
    fn default() -> Self {
        Self { eps: DEFAULT_TENSOR_EPS, c_iso: DEFAULT_C_ISO }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    pub linear: bool,
    pub shortest_path: bool,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self { linear: true, shortest_path: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TradeoffConfig {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_count: usize,
    pub lambda_max: f64,
    pub lambda_count: usize,
    /// Re-estimate `J_dyn` with doubled paths to flag noise-sensitive reversals.
    pub recheck: bool,
}

impl Default for TradeoffConfig {
    fn default() -> Self {
        Self {
            alpha_min: DEFAULT_ALPHA_RANGE.0,
            alpha_max: DEFAULT_ALPHA_RANGE.1,
            alpha_count: DEFAULT_ALPHA_COUNT,
            lambda_max: DEFAULT_LAMBDA_MAX,
            lambda_count: DEFAULT_LAMBDA_COUNT,
            recheck: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    pub sizes: Vec<usize>,
    pub k: usize,
    pub alpha: f64,
    /// Fraction of nodes made sources, and the same fraction sinks.
    pub source_fraction: f64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self { sizes: vec![18, 36, 60, 90, 120], k: 5, alpha: 0.65, source_fraction: 0.25 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub out_dir: String,
    pub stages: Vec<Stage>,
    pub cost_kind: CostSelection,
    pub baselines: BaselineConfig,
    pub geometry: GeometryConfig,
    pub fmri: FmriConfig,
    pub eeg: EegConfig,
    pub fusion: FusionConfig,
    pub costs: CostConfig,
    /// The seed inside is ignored; restarts draw from the master seed.
    pub transport: BotParams,
    pub dynamics: DynamicsParams,
    pub ensemble_export: EnsembleExport,
    pub tradeoff: TradeoffConfig,
    pub benchmark: BenchmarkConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 20240611,
            out_dir: String::from("out"),
            stages: Stage::ALL.to_vec(),
            cost_kind: CostSelection::Both,
            baselines: BaselineConfig::default(),
            geometry: GeometryConfig::default(),
            fmri: FmriConfig::default(),
            eeg: EegConfig::default(),
            fusion: FusionConfig::default(),
            costs: CostConfig::default(),
            transport: BotParams::default(),
            dynamics: DynamicsParams::default(),
            ensemble_export: EnsembleExport::Summary,
            tradeoff: TradeoffConfig::default(),
            benchmark: BenchmarkConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn runs_stage(&self, stage: Stage) -> bool {
        self.stages.contains(&stage)
    }

    pub fn bot_params(&self, alpha: f64) -> BotParams {
        BotParams { alpha, seed: self.seed, ..self.transport.clone() }
    }
}
