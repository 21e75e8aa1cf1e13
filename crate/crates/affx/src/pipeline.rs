//! The command bodies, as library calls: pretrain, cache predictions, run a population and
//! load a run back from disk.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use affx_core::dataset::{split_ids, ImageInstance, LabeledPool};
use affx_core::experiment::{run_agent, AgentRecord, TaskMode, TaskSource};
use affx_core::task::{self, PredictionCache, TrainReport};
use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::data::{self, Corpus};
use crate::files;

pub const INCOMPLETE: &str = ".incomplete";
pub const CONFIG_SNAPSHOT: &str = "config.toml";
pub const ROSTER: &str = "roster.csv";
pub const SUMMARY: &str = "summary.json";

pub fn trace_path(run_dir: &Path, agent_id: u64) -> PathBuf {
    run_dir
        .join("traces")
        .join(format!("agent-{agent_id:03}.csv"))
}

pub fn weights_path(run_dir: &Path, agent_id: u64) -> PathBuf {
    run_dir
        .join("weights")
        .join(format!("agent-{agent_id:03}.json"))
}

pub fn metrics_path(model_path: &Path) -> PathBuf {
    model_path.with_extension("metrics.json")
}

fn data_dir(cfg: &RunConfig) -> PathBuf {
    data::resolve_data_dir(cfg.data_dir.as_deref())
}

/// The experiment half of the training corpus with clean labels.
pub fn experiment_pool(cfg: &RunConfig) -> Result<LabeledPool> {
    let dir = data_dir(cfg);
    let labels = data::load_train_labels(&dir)?;
    let n = labels.len();
    let split = split_ids(&(0..n).collect::<Vec<_>>(), Vec::new(), cfg.split_seed)?;
    let pool_labels = split.experiment_ids.iter().map(|&id| labels[id]).collect();
    Ok(LabeledPool::new(split.experiment_ids, pool_labels)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PretrainMetrics {
    pub report: TrainReport,
    pub confidence_gate: f64,
    pub gate_passed: bool,
    pub pretrain_instances: usize,
}

#[derive(Debug, thiserror::Error)]
#[error("confidence gate not met: test accuracy {accuracy:.4} < {gate}")]
pub struct GateError {
    pub accuracy: f64,
    pub gate: f64,
}

/// Trains on the pretraining half and evaluates on the test corpus. Metrics are always
/// written; weights only when the gate passes, otherwise [`GateError`] is returned.
pub fn pretrain(cfg: &RunConfig) -> Result<PretrainMetrics> {
    let corpus = Corpus::load(&data_dir(cfg))?;
    let test_ids: Vec<usize> = corpus.test.iter().map(|i| i.id).collect();
    let train_ids: Vec<usize> = corpus.train.iter().map(|i| i.id).collect();
    let split = split_ids(&train_ids, test_ids, cfg.split_seed)?;
    let train: Vec<&ImageInstance> = split
        .pretrain_ids
        .iter()
        .map(|&id| corpus.by_id(id))
        .collect();
    let test: Vec<&ImageInstance> = corpus.test.iter().collect();
    let (model, report) = task::pretrain(&cfg.classifier, &train, &test)?;
    let passed = report.test.accuracy >= cfg.confidence_gate;
    let metrics = PretrainMetrics {
        report,
        confidence_gate: cfg.confidence_gate,
        gate_passed: passed,
        pretrain_instances: train.len(),
    };
    files::write_atomic(
        &metrics_path(&cfg.model_path),
        serde_json::to_string_pretty(&metrics)?.as_bytes(),
    )?;
    if !passed {
        return Err(GateError {
            accuracy: metrics.report.test.accuracy,
            gate: cfg.confidence_gate,
        }
        .into());
    }
    files::save_model(&cfg.model_path, &cfg.classifier, &model)?;
    Ok(metrics)
}

fn require_gate(cfg: &RunConfig) -> Result<()> {
    let path = metrics_path(&cfg.model_path);
    let text = fs::read_to_string(&path).with_context(|| {
        format!(
            "classifier metrics {} not found; run `affx pretrain` first",
            path.display()
        )
    })?;
    let m: PretrainMetrics =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if m.report.test.accuracy < cfg.confidence_gate {
        return Err(GateError {
            accuracy: m.report.test.accuracy,
            gate: cfg.confidence_gate,
        }
        .into());
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct CacheSummary {
    pub instances: usize,
    /// Agreement of cached predictions with the true labels.
    pub accuracy: f64,
}

pub fn cache_predictions(cfg: &RunConfig) -> Result<CacheSummary> {
    require_gate(cfg)?;
    if !cfg.model_path.is_file() {
        bail!(
            "classifier weights {} not found; run `affx pretrain` first",
            cfg.model_path.display()
        );
    }
    let (_, model) = files::load_model(&cfg.model_path)?;
    let corpus = Corpus::load(&data_dir(cfg))?;
    let pool = experiment_pool(cfg)?;
    let cache = task::predict_all(&model, &pool, |id| corpus.by_id(id).pixels.as_slice())?;
    files::write_atomic(&cfg.cache_path, &files::cache_csv(&cache)?)?;
    Ok(CacheSummary {
        instances: cache.len(),
        accuracy: cache.agreement_with_truth(&pool),
    })
}

/// Pool and cache for cached-classifier runs, with actionable errors when either is missing.
pub fn load_cached_inputs(cfg: &RunConfig) -> Result<(LabeledPool, PredictionCache)> {
    if !cfg.cache_path.is_file() {
        bail!(
            "prediction cache {} not found; run `affx cache-predictions` first",
            cfg.cache_path.display()
        );
    }
    require_gate(cfg)?;
    let pool = experiment_pool(cfg)?;
    let cache = files::load_cache(&cfg.cache_path)?;
    if !cache.covers(&pool) {
        bail!(
            "prediction cache {} does not match the experiment split (seed {}); rerun `affx cache-predictions`",
            cfg.cache_path.display(),
            cfg.split_seed
        );
    }
    Ok((pool, cache))
}

/// Runs every agent, `jobs` at a time. Results are ordered by agent id and do not depend on
/// `jobs`.
pub fn run_population(
    cfg: &RunConfig,
    source: TaskSource<'_>,
    jobs: usize,
) -> Result<Vec<AgentRecord>> {
    let exp = &cfg.experiment;
    let ids: Vec<u64> = (0..exp.num_agents as u64).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()?;
    let records = pool.install(|| {
        ids.par_iter()
            .map(|&id| run_agent(exp, id, source))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub agent_id: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub emotion: String,
    pub task_mode: String,
    pub agents: usize,
    pub episodes: usize,
    pub steps_per_episode: usize,
    pub master_seed: u64,
    pub failures: Vec<Failure>,
    pub wall_time_seconds: f64,
}

fn ensure_fresh_dir(dir: &Path) -> Result<()> {
    if dir.exists() {
        let empty = fs::read_dir(dir)?.next().is_none();
        if !empty {
            bail!(
                "output directory {} already exists; remove it or pass --out to choose another",
                dir.display()
            );
        }
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(())
}

/// Executes the configured population and writes the run directory. The directory carries
/// an `.incomplete` marker until everything is on disk.
pub fn run(cfg: &RunConfig, jobs: usize) -> Result<RunSummary> {
    let start = Instant::now();
    let exp = &cfg.experiment;
    let cached = match exp.task_mode {
        TaskMode::CachedClassifier => Some(load_cached_inputs(cfg)?),
        TaskMode::SyntheticOracle => None,
    };
    let source = match &cached {
        Some((pool, cache)) => TaskSource::Cached { pool, cache },
        None => TaskSource::Synthetic,
    };
    let dir = &cfg.output_dir;
    ensure_fresh_dir(dir)?;
    let marker = dir.join(INCOMPLETE);
    fs::write(&marker, b"run in progress\n")?;
    fs::write(dir.join(CONFIG_SNAPSHOT), cfg.to_toml()?)?;

    let records = run_population(cfg, source, jobs)?;

    files::write_atomic(&dir.join(ROSTER), &files::roster_csv(&records)?)?;
    for r in &records {
        files::write_atomic(&trace_path(dir, r.agent_id), &files::trace_csv(&r.steps)?)?;
        files::write_atomic(
            &weights_path(dir, r.agent_id),
            files::agent_weights_json(r)?.as_bytes(),
        )?;
    }
    let summary = RunSummary {
        emotion: exp.emotion_kind().name().into(),
        task_mode: exp.task_mode.name().into(),
        agents: records.len(),
        episodes: exp.episodes,
        steps_per_episode: exp.env.steps_per_episode,
        master_seed: exp.master_seed,
        failures: records
            .iter()
            .filter_map(|r| {
                r.failure.as_ref().map(|reason| Failure {
                    agent_id: r.agent_id,
                    reason: reason.clone(),
                })
            })
            .collect(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    files::write_atomic(
        &dir.join(SUMMARY),
        serde_json::to_string_pretty(&summary)?.as_bytes(),
    )?;
    fs::remove_file(&marker)?;
    Ok(summary)
}

pub struct LoadedRun {
    pub config: RunConfig,
    pub summary: RunSummary,
    /// Agents with complete, consistent traces and weights.
    pub records: Vec<AgentRecord>,
    pub excluded: Vec<Failure>,
}

/// Reads a finished run directory. Agents that failed, or whose files are missing or
/// inconsistent, are excluded with a reason instead of aborting the load.
pub fn load_run(dir: &Path) -> Result<LoadedRun> {
    if dir.join(INCOMPLETE).exists() {
        bail!(
            "run directory {} is incomplete (found {INCOMPLETE})",
            dir.display()
        );
    }
    let config = RunConfig::load(&dir.join(CONFIG_SNAPSHOT))?;
    let sp = dir.join(SUMMARY);
    let summary: RunSummary = serde_json::from_str(
        &fs::read_to_string(&sp).with_context(|| format!("reading {}", sp.display()))?,
    )?;
    let roster = files::load_roster(&dir.join(ROSTER))?;
    let exp = &config.experiment;
    let steps_per = exp.env.steps_per_episode;
    let mut records = Vec::new();
    let mut excluded = Vec::new();
    for entry in roster {
        let id = entry.agent_id;
        if let Some(f) = summary.failures.iter().find(|f| f.agent_id == id) {
            excluded.push(f.clone());
            continue;
        }
        let loaded = (|| -> Result<AgentRecord> {
            let steps = files::load_trace(&trace_path(dir, id))?;
            let (wid, actor, critic) = files::load_agent_weights(&weights_path(dir, id))?;
            if wid != id {
                bail!("weights file belongs to agent {wid}");
            }
            if steps.len() != exp.steps_per_agent() {
                bail!(
                    "trace has {} steps, expected {}",
                    steps.len(),
                    exp.steps_per_agent()
                );
            }
            for (i, s) in steps.iter().enumerate() {
                if s.episode != i / steps_per || s.step != i % steps_per {
                    bail!("trace row {} out of order", i + 1);
                }
            }
            let episode_rewards = steps
                .chunks(steps_per)
                .map(|ep| ep.iter().map(|s| s.r()).sum())
                .collect();
            Ok(AgentRecord {
                agent_id: id,
                seed: entry.seed,
                personality: entry.personality,
                steps,
                episode_rewards,
                actor,
                critic,
                failure: None,
            })
        })();
        match loaded {
            Ok(r) => records.push(r),
            Err(e) => excluded.push(Failure {
                agent_id: id,
                reason: format!("{e:#}"),
            }),
        }
    }
    Ok(LoadedRun {
        config,
        summary,
        records,
        excluded,
    })
}
