//! Command-line surface.

use std::path::PathBuf;
use std::process::ExitCode;

use affx_core::emotion::EmotionKind;
use affx_core::experiment::TaskMode;
use anyhow::{anyhow, bail, Result};
use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::{data, pipeline, report};

#[derive(Parser, Debug)]
#[command(
    name = "affx",
    version,
    about = "Emotion-mediated exploration experiments"
)]
pub struct Cli {
    /// Corpus cache directory.
    #[arg(long, global = true, env = data::DATA_DIR_ENV)]
    pub data_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Validate IDX files (raw or .gz) and copy them into the data cache.
    FetchData {
        /// Directory holding the four IDX files under their usual names.
        #[arg(long)]
        from: Option<PathBuf>,
        /// Individual IDX files.
        files: Vec<PathBuf>,
    },
    /// Train the classifier and check the confidence gate.
    Pretrain {
        #[command(flatten)]
        common: Common,
        /// Classifier seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the frozen classifier over the experiment half and store its predictions.
    CachePredictions {
        #[command(flatten)]
        common: Common,
    },
    /// Run the agent population.
    Run {
        #[command(flatten)]
        common: Common,
        /// Master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Concurrent agents.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, value_parser = ["cached-classifier", "synthetic-oracle"])]
        mode: Option<String>,
        #[arg(long, value_parser = ["surprise", "pride"])]
        emotion: Option<String>,
        /// Run directory; overrides `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute the analyses of a finished run.
    Report {
        /// Run directory; defaults to the config's `output_dir`.
        run_dir: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also write SVG figures.
        #[arg(long)]
        plots: bool,
    },
}

#[derive(Args, Debug)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
}

fn load(common: &Common, data_dir: &Option<PathBuf>) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&common.config)?;
    if data_dir.is_some() && cfg.data_dir.is_none() {
        cfg.data_dir = data_dir.clone();
    }
    Ok(cfg)
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::FetchData { from, files } => {
            let dir = data::resolve_data_dir(cli.data_dir.as_deref());
            let mut sources = files;
            if let Some(f) = &from {
                sources.extend(data::sources_in(f));
            }
            if sources.is_empty() {
                if data::missing_files(&dir).is_empty() {
                    println!("data cache {} already complete", dir.display());
                    return Ok(());
                }
                bail!("no sources given; pass IDX files or --from DIR (no network download is attempted)");
            }
            let r = data::fetch(&sources, &dir)?;
            println!(
                "data cache {}: {} written, {} unchanged",
                dir.display(),
                r.written.len(),
                r.unchanged.len()
            );
        }
        Command::Pretrain { common, seed } => {
            let mut cfg = load(&common, &cli.data_dir)?;
            if let Some(s) = seed {
                cfg.classifier.seed = s;
            }
            let m = pipeline::pretrain(&cfg)?;
            println!(
                "test accuracy {:.4} (loss {:.4}) over {} images; gate {} passed; weights at {}",
                m.report.test.accuracy,
                m.report.test.loss,
                m.report.test.count,
                m.confidence_gate,
                cfg.model_path.display()
            );
        }
        Command::CachePredictions { common } => {
            let cfg = load(&common, &cli.data_dir)?;
            let s = pipeline::cache_predictions(&cfg)?;
            println!(
                "cached {} predictions (accuracy against true labels {:.4}) at {}",
                s.instances,
                s.accuracy,
                cfg.cache_path.display()
            );
        }
        Command::Run {
            common,
            seed,
            jobs,
            mode,
            emotion,
            out,
        } => {
            let mut cfg = load(&common, &cli.data_dir)?;
            if let Some(s) = seed {
                cfg.experiment.master_seed = s;
            }
            if let Some(m) = mode {
                cfg.experiment.task_mode =
                    TaskMode::from_name(&m).ok_or_else(|| anyhow!("unknown mode {m}"))?;
            }
            if let Some(e) = emotion {
                cfg.experiment.env.emotion_kind =
                    EmotionKind::from_name(&e).ok_or_else(|| anyhow!("unknown emotion {e}"))?;
            }
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            cfg.validate()?;
            let s = pipeline::run(&cfg, jobs)?;
            println!(
                "{} agents ({}, {}), {} failed, {:.1} s; run directory {}",
                s.agents,
                s.emotion,
                s.task_mode,
                s.failures.len(),
                s.wall_time_seconds,
                cfg.output_dir.display()
            );
        }
        Command::Report {
            run_dir,
            config,
            plots,
        } => {
            let dir = match (run_dir, config) {
                (Some(d), _) => d,
                (None, Some(c)) => RunConfig::load(&c)?.output_dir,
                (None, None) => bail!("pass a run directory or --config"),
            };
            let r = report::report(&dir, plots)?;
            println!(
                "{}: {} agents reported, {} excluded; final rho {:.3} (windowed {:.3}); {} positive / {} negative; exploration change {:.1}%",
                r.emotion,
                r.included.len(),
                r.excluded.len(),
                r.final_rho,
                r.final_windowed_rho,
                r.positive,
                r.negative,
                r.percent_change
            );
        }
    }
    Ok(())
}

pub fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
