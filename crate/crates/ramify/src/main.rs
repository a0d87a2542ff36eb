use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ramify::benchmark::{run_benchmark, write_benchmark};
use ramify::config::{load_config, parse_stages};
use ramify::diff::diff_runs;
use ramify::formats::write_json;
use ramify::oracle::{run_oracle, write_oracle, OracleParams};
use ramify::{run_pipeline, Error, Result};
use ramify_core::config::PipelineConfig;

#[derive(Parser)]
#[command(name = "ramify", version, about = "Reaction maps from synthetic multimodal data by branched transport")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON configuration; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated stages, or `all`. Only `run` uses it.
    #[arg(long)]
    stages: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline stages and write results plus a manifest.
    Run(Common),
    /// Time the solver over growing layouts and fit scaling exponents.
    Benchmark(Common),
    /// Compare two run manifests.
    Diff {
        manifest_a: PathBuf,
        manifest_b: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Check the solver against exact references on small random instances.
    Oracle {
        #[arg(long, default_value_t = 50)]
        instances: usize,
        #[arg(long, default_value_t = 7)]
        max_nodes: usize,
        #[command(flatten)]
        common: Common,
    },
}

fn configure(common: &Common) -> Result<PipelineConfig> {
    let mut cfg = load_config(common.config.as_deref())?;
    if let Some(out) = &common.out {
        cfg.out_dir = out.to_string_lossy().into_owned();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(list) = &common.stages {
        cfg.stages = parse_stages(list)?;
    }
    Ok(cfg)
}

fn print(value: &impl serde::Serialize) {
    match serde_json::to_string_pretty(value) {
        Ok(s) => {
            // a closed pipe on stdout is not an error of the run
            let _ = writeln!(std::io::stdout().lock(), "{s}");
        }
        Err(e) => eprintln!("{e}"),
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(common) => {
            let cfg = configure(&common)?;
            let manifest = run_pipeline(&cfg)?;
            print(&serde_json::json!({
                "out_dir": cfg.out_dir,
                "completed_stages": manifest.completed_stages,
                "metrics": manifest.metrics,
                "timings": manifest.timings,
            }));
        }
        Command::Benchmark(common) => {
            let cfg = configure(&common)?;
            let report = run_benchmark(&cfg)?;
            write_benchmark(&report, &PathBuf::from(&cfg.out_dir).join("benchmark"))?;
            print(&report);
        }
        Command::Diff { manifest_a, manifest_b, common } => {
            let diff = diff_runs(&manifest_a, &manifest_b)?;
            if let Some(out) = &common.out {
                write_json(out, &diff)?;
            }
            print(&diff);
        }
        Command::Oracle { instances, max_nodes, common } => {
            let cfg = configure(&common)?;
            let params = OracleParams { instances, max_nodes, ..OracleParams::default() };
            let report = run_oracle(&params, &cfg.transport, cfg.seed)?;
            write_oracle(&report, &PathBuf::from(&cfg.out_dir).join("oracle"))?;
            print(&serde_json::json!({ "seed": report.seed, "summary": report.summary }));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report: Error = e;
            match serde_json::to_string(&report.report()) {
                Ok(s) => eprintln!("{s}"),
                Err(_) => eprintln!("{report}"),
            }
            ExitCode::FAILURE
        }
    }
}
