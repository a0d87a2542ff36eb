//! Loading the JSON configuration and applying command line overrides.

use std::path::Path;

use ramify_core::config::{PipelineConfig, Stage, SCHEMA_VERSION};

use crate::error::{Error, Result};
use crate::formats::read_json;

/// The configuration in `path`, or the defaults. Missing fields take their
/// default values.
pub fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    let cfg = match path {
        Some(p) => read_json::<PipelineConfig>(p)?,
        None => PipelineConfig::default(),
    };
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(Error::SchemaMismatch { a: cfg.schema_version, b: SCHEMA_VERSION });
    }
    Ok(cfg)
}

/// Comma-separated stage names, e.g. `simulation,fusion`; `all` selects all five.
pub fn parse_stages(list: &str) -> Result<Vec<Stage>> {
    if list.trim() == "all" {
        return Ok(Stage::ALL.to_vec());
    }
    let mut stages = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let stage = Stage::from_name(name).ok_or_else(|| {
            let known: Vec<&str> = Stage::ALL.iter().map(|s| s.name()).collect();
            Error::Config(format!("unknown stage `{name}` (expected one of {})", known.join(", ")))
        })?;
        if !stages.contains(&stage) {
            stages.push(stage);
        }
    }
    if stages.is_empty() {
        return Err(Error::Config("no stages selected".into()));
    }
    stages.sort();
    Ok(stages)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::write_json;

    #[test]
    fn default_config_round_trips_losslessly() {
        let cfg = PipelineConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: PipelineConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_documents_fill_in_defaults() {
        let cfg: PipelineConfig = serde_json::from_str(r#"{"seed": 7, "transport": {"alpha": 0.5}}"#).unwrap();
        let default = PipelineConfig::default();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.transport.alpha, 0.5);
        assert_eq!(cfg.transport.restarts, default.transport.restarts);
        assert_eq!(cfg.dynamics, default.dynamics);
    }

    #[test]
    fn defaults_match_the_published_parameters() {
        let c = PipelineConfig::default();
        assert_eq!(c.fmri.tr_s, 2.0);
        assert_eq!(c.fmri.noise_std, 0.15);
        assert_eq!(c.eeg.lambda_reg, 0.05);
        assert_eq!(c.fusion.w_f, 0.55);
        assert_eq!(c.geometry.k, 5);
        assert_eq!(c.costs.eps, 0.05);
        assert_eq!(c.transport.alpha, 0.65);
        assert_eq!(c.transport.restarts, 12);
        let d = &c.dynamics;
        assert_eq!((d.kappa, d.beta_dyn, d.sigma0, d.sigma1), (0.8, 0.4, 0.08, 0.04));
        assert_eq!((d.horizon, d.dt, d.n_paths, d.eps_bridge), (3.0, 0.005, 80, 0.05));
        let t = &c.tradeoff;
        assert_eq!((t.lambda_max, t.lambda_count), (6.0, 300));
        assert_eq!((t.alpha_min, t.alpha_max, t.alpha_count), (0.20, 0.92, 22));
        assert_eq!(c.stages, Stage::ALL.to_vec());
    }

    #[test]
    fn stage_lists() {
        assert_eq!(parse_stages("fusion, simulation").unwrap(), vec![Stage::Simulation, Stage::Fusion]);
        assert_eq!(parse_stages("all").unwrap(), Stage::ALL.to_vec());
        assert!(parse_stages("fusion,plotting").is_err());
        assert!(parse_stages("").is_err());
    }

    #[test]
    fn schema_version_is_checked() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        write_json(&path, &serde_json::json!({"schema_version": 99})).unwrap();
        assert!(matches!(load_config(Some(&path)), Err(Error::SchemaMismatch { .. })));
    }
}
