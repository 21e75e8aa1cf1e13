//! Population analyses over a set of agent records, and their CSV/JSON/SVG emission.

use std::path::{Path, PathBuf};

use affx_core::experiment::{behavior_sweep, default_grid, AgentRecord, BehaviorCurve};
use affx_core::metrics::{
    correlation_census, cumulative_reward_curves, emotion_differential_census, episode_spearman,
    mean_census, sliding_window, Band, CorrelationCensus, MeanCensus,
};
use anyhow::{bail, Result};
use serde::Serialize;

use crate::files::write_atomic;
use crate::pipeline::{load_run, Failure};
use crate::svg;

pub const RHO_WINDOW: usize = 40;

pub struct Analysis {
    pub agents: Vec<u64>,
    pub census: Vec<MeanCensus>,
    pub reward: Vec<Band>,
    pub curves: Vec<BehaviorCurve>,
    pub correlation: CorrelationCensus,
    /// Population mean of per-episode ρ.
    pub rho: Vec<f64>,
    /// Population mean of each agent's trailing-window ρ.
    pub rho_windowed: Vec<f64>,
    /// Agents whose ρ was undefined (constant input) per episode.
    pub rho_constant: Vec<usize>,
}

impl Analysis {
    pub fn episodes(&self) -> usize {
        self.reward.len()
    }

    pub fn reward_mean(&self, range: std::ops::Range<usize>) -> f64 {
        let n = range.len() as f64;
        self.reward[range].iter().map(|b| b.mean).sum::<f64>() / n
    }

    pub fn final_rho(&self) -> f64 {
        *self.rho.last().expect("non-empty")
    }

    pub fn final_windowed_rho(&self) -> f64 {
        *self.rho_windowed.last().expect("non-empty")
    }

    pub fn positive_fraction(&self) -> f64 {
        self.correlation.positive as f64 / self.curves.len() as f64
    }
}

fn mean_of(series: &[Vec<f64>], e: usize) -> f64 {
    series.iter().map(|s| s[e]).sum::<f64>() / series.len() as f64
}

pub fn analyze(records: &[&AgentRecord], stasis_epsilon: f64) -> Result<Analysis> {
    if records.is_empty() {
        bail!("no complete agent records to analyse");
    }
    let census: Vec<_> = records
        .iter()
        .map(|r| emotion_differential_census(r, stasis_epsilon))
        .collect();
    let census = mean_census(&census)?;
    let reward = cumulative_reward_curves(records)?;
    let grid = default_grid();
    let curves: Vec<BehaviorCurve> = records
        .iter()
        .map(|r| behavior_sweep(&r.actor, &grid))
        .collect();
    let correlation = correlation_census(&curves)?;
    let series: Vec<_> = records.iter().map(|r| episode_spearman(r)).collect();
    let raw: Vec<Vec<f64>> = series.iter().map(|s| s.values.clone()).collect();
    let windowed: Vec<Vec<f64>> = raw
        .iter()
        .map(|s| sliding_window(s, RHO_WINDOW))
        .collect::<Result<_, _>>()?;
    let episodes = reward.len();
    Ok(Analysis {
        agents: records.iter().map(|r| r.agent_id).collect(),
        census,
        reward,
        rho: (0..episodes).map(|e| mean_of(&raw, e)).collect(),
        rho_windowed: (0..episodes).map(|e| mean_of(&windowed, e)).collect(),
        rho_constant: (0..episodes)
            .map(|e| series.iter().filter(|s| s.constant[e]).count())
            .collect(),
        curves,
        correlation,
    })
}

#[derive(Serialize)]
struct CensusRow {
    episode: usize,
    increase: f64,
    decrease: f64,
    stasis: f64,
    mean_delta: f64,
}

#[derive(Serialize)]
struct RewardRow {
    episode: usize,
    mean: f64,
    min: f64,
    max: f64,
}

#[derive(Serialize)]
struct RhoRow {
    episode: usize,
    mean_rho: f64,
    windowed_rho: f64,
    constant_agents: usize,
}

#[derive(Serialize)]
struct CensusJson<'a> {
    agents: usize,
    positive: usize,
    negative: usize,
    flat: usize,
    percent_change: f64,
    mean_curve_start: f64,
    mean_curve_end: f64,
    mean_curve: &'a [f64],
}

#[derive(Serialize)]
pub struct ReportSummary {
    #[serde(skip)]
    pub run_dir: PathBuf,
    pub emotion: String,
    pub included: Vec<u64>,
    pub excluded: Vec<Failure>,
    pub episodes: usize,
    pub first10_reward_mean: f64,
    pub last10_reward_mean: f64,
    pub final_rho: f64,
    pub final_windowed_rho: f64,
    pub positive: usize,
    pub negative: usize,
    pub percent_change: f64,
    pub files: Vec<String>,
}

fn csv_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(w.into_inner()?)
}

fn curves_csv(a: &Analysis) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["s".to_string(), "mean".to_string()];
    header.extend(a.agents.iter().map(|id| format!("agent_{id:03}")));
    w.write_record(&header)?;
    for (k, s) in a.correlation.mean_curve.grid.iter().enumerate() {
        let mut row = vec![
            s.to_string(),
            a.correlation.mean_curve.values[k].to_string(),
        ];
        row.extend(a.curves.iter().map(|c| c.values[k].to_string()));
        w.write_record(&row)?;
    }
    Ok(w.into_inner()?)
}

/// Writes the analyses of `run_dir` into `run_dir/report`. Output depends only on the
/// run directory's contents.
pub fn report(run_dir: &Path, plots: bool) -> Result<ReportSummary> {
    let run = load_run(run_dir)?;
    for f in &run.excluded {
        eprintln!("warning: agent {} excluded: {}", f.agent_id, f.reason);
    }
    let refs: Vec<&AgentRecord> = run.records.iter().collect();
    let eps = run.config.experiment.env.stasis_epsilon;
    let a = analyze(&refs, eps)?;
    let out = run_dir.join("report");
    let mut files = Vec::new();
    let mut emit = |name: &str, bytes: Vec<u8>| -> Result<()> {
        write_atomic(&out.join(name), &bytes)?;
        files.push(name.to_string());
        Ok(())
    };

    emit(
        "census.csv",
        csv_bytes(a.census.iter().enumerate().map(|(episode, c)| CensusRow {
            episode,
            increase: c.increase,
            decrease: c.decrease,
            stasis: c.stasis,
            mean_delta: c.mean_delta,
        }))?,
    )?;
    emit(
        "cumulative_reward.csv",
        csv_bytes(a.reward.iter().enumerate().map(|(episode, b)| RewardRow {
            episode,
            mean: b.mean,
            min: b.min,
            max: b.max,
        }))?,
    )?;
    emit(
        "spearman.csv",
        csv_bytes((0..a.episodes()).map(|episode| RhoRow {
            episode,
            mean_rho: a.rho[episode],
            windowed_rho: a.rho_windowed[episode],
            constant_agents: a.rho_constant[episode],
        }))?,
    )?;
    emit("behavior_curves.csv", curves_csv(&a)?)?;
    let mc = &a.correlation.mean_curve.values;
    emit(
        "correlation_census.json",
        serde_json::to_vec_pretty(&CensusJson {
            agents: a.curves.len(),
            positive: a.correlation.positive,
            negative: a.correlation.negative,
            flat: a.correlation.flat,
            percent_change: a.correlation.percent_change,
            mean_curve_start: mc[0],
            mean_curve_end: mc[mc.len() - 1],
            mean_curve: mc,
        })?,
    )?;
    if plots {
        for (name, doc) in svg::figures(&a) {
            emit(&name, doc.into_bytes())?;
        }
    }
    let episodes = a.episodes();
    let k = episodes.min(10);
    let summary = ReportSummary {
        run_dir: run_dir.to_path_buf(),
        emotion: run.summary.emotion.clone(),
        included: a.agents.clone(),
        excluded: run.excluded.clone(),
        episodes,
        first10_reward_mean: a.reward_mean(0..k),
        last10_reward_mean: a.reward_mean(episodes - k..episodes),
        final_rho: a.final_rho(),
        final_windowed_rho: a.final_windowed_rho(),
        positive: a.correlation.positive,
        negative: a.correlation.negative,
        percent_change: a.correlation.percent_change,
        files: files.clone(),
    };
    write_atomic(
        &out.join("report.json"),
        &serde_json::to_vec_pretty(&summary)?,
    )?;
    Ok(summary)
}
