//! On-disk formats: CSV traces, roster and prediction cache; JSON weights.

use std::fs;
use std::io::Write;
use std::path::Path;

use affx_core::dataset::Digit;
use affx_core::ddpg::{Actor, Critic};
use affx_core::emotion::AgentPersonality;
use affx_core::env::StepOutcome;
use affx_core::experiment::{AgentRecord, StepRecord};
use affx_core::task::{ClassifierConfig, PredictionCache, TaskModel};
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

pub const MODEL_FORMAT: &str = "affx-classifier-v1";
pub const AGENT_FORMAT: &str = "affx-agent-v1";

/// Writes through a sibling temp file so readers never see a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let name = path
        .file_name()
        .context("path has no file name")?
        .to_string_lossy();
    let tmp = path.with_file_name(format!(".{name}.partial"));
    let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
    f.write_all(bytes)?;
    f.sync_all()?;
    fs::rename(&tmp, path).with_context(|| format!("moving into {}", path.display()))?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    config: ClassifierConfig,
    model: TaskModel,
}

pub fn save_model(path: &Path, config: &ClassifierConfig, model: &TaskModel) -> Result<()> {
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        config: config.clone(),
        model: model.clone(),
    };
    write_atomic(path, serde_json::to_string(&file)?.as_bytes())
}

pub fn load_model(path: &Path) -> Result<(ClassifierConfig, TaskModel)> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading model {}", path.display()))?;
    let file: ModelFile =
        serde_json::from_str(&text).with_context(|| format!("parsing model {}", path.display()))?;
    if file.format != MODEL_FORMAT {
        bail!(
            "{}: format {:?} is not {MODEL_FORMAT}",
            path.display(),
            file.format
        );
    }
    Ok((file.config, file.model))
}

#[derive(Serialize, Deserialize)]
struct AgentWeights {
    format: String,
    agent_id: u64,
    actor: Actor,
    critic: Critic,
}

pub fn agent_weights_json(record: &AgentRecord) -> Result<String> {
    Ok(serde_json::to_string(&AgentWeights {
        format: AGENT_FORMAT.into(),
        agent_id: record.agent_id,
        actor: record.actor.clone(),
        critic: record.critic.clone(),
    })?)
}

pub fn load_agent_weights(path: &Path) -> Result<(u64, Actor, Critic)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let w: AgentWeights =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if w.format != AGENT_FORMAT {
        bail!(
            "{}: format {:?} is not {AGENT_FORMAT}",
            path.display(),
            w.format
        );
    }
    Ok((w.agent_id, w.actor, w.critic))
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheRow {
    id: usize,
    predicted_label: u8,
    softmax_max: f64,
}

pub fn cache_csv(cache: &PredictionCache) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for pos in 0..cache.len() {
        w.serialize(CacheRow {
            id: cache.ids()[pos],
            predicted_label: cache.predicted(pos).get(),
            softmax_max: cache.softmax_max(pos),
        })?;
    }
    Ok(w.into_inner()?)
}

pub fn load_cache(path: &Path) -> Result<PredictionCache> {
    let mut r = csv::Reader::from_path(path)
        .with_context(|| format!("reading prediction cache {}", path.display()))?;
    let (mut ids, mut predicted, mut smax) = (Vec::new(), Vec::new(), Vec::new());
    for (line, row) in r.deserialize::<CacheRow>().enumerate() {
        let row = row.with_context(|| format!("{} row {}", path.display(), line + 1))?;
        let d = Digit::new(row.predicted_label).with_context(|| {
            format!(
                "{} row {}: label {}",
                path.display(),
                line + 1,
                row.predicted_label
            )
        })?;
        ids.push(row.id);
        predicted.push(d);
        smax.push(row.softmax_max);
    }
    PredictionCache::from_parts(ids, predicted, smax).context("ragged prediction cache")
}

#[derive(Debug, Serialize, Deserialize)]
struct RosterRow {
    agent_id: u64,
    c1: f64,
    c2_degrees: f64,
    /// Agent seed, derived from the master seed and id.
    seed: u64,
    noise_sigma: f64,
    noise_seed: u64,
}

pub fn roster_csv<'a, I: IntoIterator<Item = &'a AgentRecord>>(records: I) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(RosterRow {
            agent_id: r.agent_id,
            c1: r.personality.c1,
            c2_degrees: r.personality.c2_degrees,
            seed: r.seed,
            noise_sigma: r.personality.noise_sigma,
            noise_seed: r.personality.rng_seed,
        })?;
    }
    Ok(w.into_inner()?)
}

pub struct RosterEntry {
    pub agent_id: u64,
    pub seed: u64,
    pub personality: AgentPersonality,
}

pub fn load_roster(path: &Path) -> Result<Vec<RosterEntry>> {
    let mut r = csv::Reader::from_path(path)
        .with_context(|| format!("reading roster {}", path.display()))?;
    r.deserialize::<RosterRow>()
        .map(|row| {
            let row = row?;
            let personality =
                AgentPersonality::new(row.c1, row.c2_degrees, row.noise_sigma, row.noise_seed)?;
            Ok(RosterEntry {
                agent_id: row.agent_id,
                seed: row.seed,
                personality,
            })
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceRow {
    episode: usize,
    step: usize,
    s: f64,
    a: f64,
    policy_a: f64,
    r: f64,
    single_correct: u8,
    batch_size: usize,
    batch_acc: Option<f64>,
    emotion_before: f64,
    emotion_after: f64,
    confidence: Option<f64>,
    fallback: u8,
    s_next: f64,
    terminal: u8,
}

pub fn trace_csv(steps: &[StepRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for st in steps {
        let o = &st.outcome;
        w.serialize(TraceRow {
            episode: st.episode,
            step: st.step,
            s: st.s(),
            a: st.a(),
            policy_a: st.policy_action,
            r: st.r(),
            single_correct: o.single_correct as u8,
            batch_size: o.batch_size,
            batch_acc: o.batch_accuracy,
            emotion_before: o.emotion_before,
            emotion_after: o.emotion_after,
            confidence: o.confidence,
            fallback: o.fallback as u8,
            s_next: st.s_next,
            terminal: st.terminal as u8,
        })?;
    }
    Ok(w.into_inner()?)
}

pub fn load_trace(path: &Path) -> Result<Vec<StepRecord>> {
    let mut r = csv::Reader::from_path(path)
        .with_context(|| format!("reading trace {}", path.display()))?;
    r.deserialize::<TraceRow>()
        .enumerate()
        .map(|(i, row)| {
            let row = row.with_context(|| format!("{} row {}", path.display(), i + 1))?;
            if row.s != row.emotion_before {
                bail!(
                    "{} row {}: s differs from emotion_before",
                    path.display(),
                    i + 1
                );
            }
            Ok(StepRecord {
                episode: row.episode,
                step: row.step,
                policy_action: row.policy_a,
                outcome: StepOutcome {
                    single_correct: row.single_correct != 0,
                    confidence: row.confidence,
                    emotion_before: row.emotion_before,
                    exploration_rate: row.a,
                    batch_size: row.batch_size,
                    batch_accuracy: row.batch_acc,
                    emotion_after: row.emotion_after,
                    reward: row.r,
                    fallback: row.fallback != 0,
                },
                s_next: row.s_next,
                terminal: row.terminal != 0,
            })
        })
        .collect()
}
