//! Batch execution and the four output files.
//!
//! | file | content |
//! |------|---------|
//! | `trajectories.jsonl` | one [`TrajectoryRecord`] per line, rollout order |
//! | `advantage.csv` | one row per `(rollout, t)` |
//! | `summary.csv` | one row per experiment (or per sweep point) |
//! | `constants.json` | fitted constants, bounds and drift buckets |

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::mix_seed;
use super::rollout::{rollout, Prepared, TrajectoryRecord};
use crate::advantage::{
    simulate_drift, AdvantageParams, AdvantageReport, DriftSweepPoint, SyntheticDrift,
};
use crate::agents::{
    estimate_lipschitz_lpi, random_belief_pairs, BoundPolicy, LipschitzEstimate, PolicyContext,
};
use crate::btr::{
    detect_btr_entry, estimate_drift, fit_update_error_growth, DriftBucket, GrowthFit,
    TheoryConstants,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdvantageRow {
    pub rollout: usize,
    pub t: usize,
    pub reward: f64,
    pub value: f64,
    pub delta: f64,
    pub a_hat: f64,
    pub a_hat_pre: Option<f64>,
    pub t_s: Option<usize>,
    pub s_pre: Option<f64>,
    pub s_tail: Option<f64>,
    pub bound_rhs: Option<f64>,
}

/// Fixed column set of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub label: String,
    pub rollouts: usize,
    pub success_rate: f64,
    pub mean_reward: f64,
    pub mean_turns: f64,
    /// Token-cost surrogate: the turn count of each rollout.
    pub mean_tokens_equiv_turn_count: f64,
    pub truncation_frequency: f64,
    pub non_truncated: usize,
    pub success_rate_non_truncated: f64,
    pub btr_entry_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsReport {
    pub eta: f64,
    pub lipschitz: Option<LipschitzEstimate>,
    pub fit: Option<GrowthFit>,
    pub psi0: f64,
    pub mu: f64,
    pub constants: Option<TheoryConstants>,
    pub hitting_time_bound: Option<u64>,
    pub notes: Vec<String>,
    pub btr_entries: usize,
    pub mean_btr_entry: Option<f64>,
    /// Fraction of rollouts whose detected entry step is within the bound.
    pub conformance: Option<f64>,
    pub agent_drift: Vec<DriftBucket>,
    pub oracle_drift: Vec<DriftBucket>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<TrajectoryRecord>,
    pub advantage: Vec<AdvantageRow>,
    pub summary: SummaryRow,
    pub constants: ConstantsReport,
}

/// Runs every rollout in parallel; results keep rollout order.
pub fn run_rollouts(prep: &Prepared) -> Result<Vec<TrajectoryRecord>> {
    let fit = prep.config.analysis.fit_rollouts;
    (0..prep.config.rollouts)
        .into_par_iter()
        .map(|i| rollout(prep, i, i < fit))
        .collect()
}

/// Trap step of a trajectory as an index into its agent potential series.
pub fn btr_entry_index(rec: &TrajectoryRecord, window: usize, min_drift: f64) -> Option<usize> {
    detect_btr_entry(&rec.psi_agent_series(), window, min_drift)
}

pub fn advantage_rows(cfg: &ExperimentConfig, rec: &TrajectoryRecord) -> Result<Vec<AdvantageRow>> {
    let horizon = rec.turns;
    if horizon == 0 {
        return Ok(Vec::new());
    }
    let beliefs = rec.agent_belief_series();
    let mut values: Vec<f64> = beliefs[..horizon]
        .iter()
        .map(|&b| cfg.calibration.apply(b))
        .collect();
    values.push(0.0);
    let mut rewards = vec![0.0; horizon];
    rewards[horizon - 1] = rec.reward;
    let t_s = if rec.truncated {
        None
    } else {
        btr_entry_index(rec, cfg.analysis.window, cfg.analysis.min_drift).filter(|&s| s < horizon)
    };
    let rho = t_s.map_or(0.0, |s| {
        let drops: Vec<f64> = beliefs[s..].windows(2).map(|w| w[0] - w[1]).collect();
        (drops.iter().sum::<f64>() / drops.len().max(1) as f64).max(0.0)
    });
    let params = AdvantageParams {
        gamma: cfg.gamma,
        lambda: cfg.lambda,
        kappa: cfg.calibration.kappa(),
        rho,
    };
    let rep = AdvantageReport::compute(&rewards, &values, t_s, &params)?;
    Ok((0..horizon)
        .map(|t| {
            let bound = rep.bounds.get(t);
            AdvantageRow {
                rollout: rec.rollout,
                t,
                reward: rewards[t],
                value: values[t],
                delta: rep.deltas[t],
                a_hat: rep.a_hat[t],
                a_hat_pre: rep.a_hat_pre.get(t).copied(),
                t_s: rep.t_s,
                s_pre: bound.map(|b| b.0),
                s_tail: bound.map(|b| b.1),
                bound_rhs: bound.map(|b| b.2),
            }
        })
        .collect())
}

pub fn summarize(label: &str, cfg: &ExperimentConfig, records: &[TrajectoryRecord]) -> SummaryRow {
    let n = records.len().max(1) as f64;
    let kept: Vec<&TrajectoryRecord> = records.iter().filter(|r| !r.truncated).collect();
    let mean = |f: &dyn Fn(&TrajectoryRecord) -> f64| records.iter().map(f).sum::<f64>() / n;
    let mean_turns = mean(&|r| r.turns as f64);
    let entries = records
        .iter()
        .filter(|r| btr_entry_index(r, cfg.analysis.window, cfg.analysis.min_drift).is_some())
        .count();
    SummaryRow {
        label: label.to_string(),
        rollouts: records.len(),
        success_rate: mean(&|r| f64::from(u8::from(r.success))),
        mean_reward: mean(&|r| r.reward),
        mean_turns,
        mean_tokens_equiv_turn_count: mean_turns,
        truncation_frequency: mean(&|r| f64::from(u8::from(r.truncated))),
        non_truncated: kept.len(),
        success_rate_non_truncated: if kept.is_empty() {
            0.0
        } else {
            kept.iter().filter(|r| r.success).count() as f64 / kept.len() as f64
        },
        btr_entry_rate: entries as f64 / n,
    }
}

/// Half-nat buckets from 0 past `ln |S|`, then one bucket up to the cap.
pub fn default_drift_edges(num_states: usize, psi_max: f64) -> Vec<f64> {
    let top = ((num_states as f64).ln() / 0.5).ceil() as usize + 1;
    let mut edges: Vec<f64> = (0..=top).map(|i| i as f64 * 0.5).collect();
    if psi_max > *edges.last().unwrap() {
        edges.push(psi_max);
    }
    edges
}

pub fn analyze(prep: &Prepared, records: &[TrajectoryRecord]) -> Result<ConstantsReport> {
    let cfg = &prep.config;
    let an = &cfg.analysis;
    let mut notes = Vec::new();

    let lipschitz = if an.lipschitz_pairs > 0 {
        let ctx = PolicyContext {
            model: &prep.model,
            legal_actions: &prep.legal,
            hypotheses: None,
            action_state: prep.task.action_state.as_deref(),
            turn: 0,
        };
        let pairs = random_belief_pairs(
            prep.task.space.len(),
            an.lipschitz_pairs,
            mix_seed(cfg.seed, 0x11),
        );
        Some(estimate_lipschitz_lpi(
            &BoundPolicy {
                spec: &cfg.agent.policy,
                ctx,
            },
            &pairs,
        )?)
    } else {
        None
    };

    let samples: Vec<(f64, f64)> = records
        .iter()
        .flat_map(|r| r.fit_samples.iter().copied())
        .collect();
    let fit = match fit_update_error_growth(&samples) {
        Ok(f) => Some(f),
        Err(e) => {
            notes.push(format!("update-error fit unavailable: {e}"));
            None
        }
    };

    let entries: Vec<Option<usize>> = records
        .iter()
        .map(|r| btr_entry_index(r, an.window, an.min_drift))
        .collect();
    let psi0 = records
        .iter()
        .map(|r| r.initial.psi_oracle)
        .fold(0.0, f64::max);
    let mu = records
        .iter()
        .zip(&entries)
        .map(|(r, e)| {
            let s = r.psi_oracle_series();
            let end = e.unwrap_or(s.len()).min(s.len()).max(1);
            s[..end].iter().copied().fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min);

    let mut constants = None;
    let mut bound = None;
    let mut conformance = None;
    match (fit, lipschitz.as_ref()) {
        (Some(f), Some(l)) if cfg.eta > 0.0 && f.m_theta > 0.0 => {
            let c = TheoryConstants::derive(cfg.eta, l.value, f.m_theta, f.c0, f.u0, psi0, mu)?;
            if c.delta > 0.0 {
                let per_run: Vec<u64> = records
                    .iter()
                    .map(|r| c.hitting_time_bound(r.initial.psi_agent - r.initial.psi_oracle))
                    .collect::<Result<_>>()?;
                bound = per_run.iter().copied().max();
                let ok = entries
                    .iter()
                    .zip(&per_run)
                    .filter(|(e, b)| e.is_some_and(|i| (i as u64 + 1) <= **b))
                    .count();
                conformance = Some(ok as f64 / records.len().max(1) as f64);
            } else {
                notes.push(format!(
                    "trap margin delta = {:.4} <= 0; hitting-time bound does not apply",
                    c.delta
                ));
            }
            constants = Some(c);
        }
        (Some(f), _) if f.m_theta <= 0.0 => {
            notes.push(format!(
                "fitted m_theta = {:.4} is not positive; no threshold",
                f.m_theta
            ));
        }
        _ if cfg.eta == 0.0 => {
            notes.push("eta = 0: constants need a positive likelihood floor".into())
        }
        _ => {}
    }

    let edges = an
        .drift_edges
        .clone()
        .unwrap_or_else(|| default_drift_edges(prep.task.space.len(), cfg.psi_max));
    let agent_series: Vec<Vec<f64>> = records.iter().map(|r| r.psi_agent_series()).collect();
    let oracle_series: Vec<Vec<f64>> = records.iter().map(|r| r.psi_oracle_series()).collect();
    let detected: Vec<usize> = entries.iter().flatten().map(|i| i + 1).collect();

    Ok(ConstantsReport {
        eta: cfg.eta,
        lipschitz,
        fit,
        psi0,
        mu,
        constants,
        hitting_time_bound: bound,
        notes,
        btr_entries: detected.len(),
        mean_btr_entry: (!detected.is_empty())
            .then(|| detected.iter().sum::<usize>() as f64 / detected.len() as f64),
        conformance,
        agent_drift: estimate_drift(&agent_series, &edges)?,
        oracle_drift: estimate_drift(&oracle_series, &edges)?,
    })
}

pub fn run_prepared(prep: &Prepared) -> Result<ExperimentOutput> {
    let records = run_rollouts(prep)?;
    let mut advantage = Vec::new();
    for r in &records {
        advantage.extend(advantage_rows(&prep.config, r)?);
    }
    let summary = summarize(&prep.config.name, &prep.config, &records);
    let constants = analyze(prep, &records)?;
    Ok(ExperimentOutput {
        records,
        advantage,
        summary,
        constants,
    })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    run_prepared(&Prepared::new(config.clone())?)
}

fn ser<E: std::fmt::Display>(e: E) -> Error {
    Error::Serialization(e.to_string())
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(ser)?;
    }
    w.into_inner().map_err(ser)
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| Error::io(path, e))
}

pub fn trajectories_jsonl(records: &[TrajectoryRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).map_err(ser)?);
        out.push('\n');
    }
    Ok(out)
}

impl ExperimentOutput {
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_file(
            dir,
            "trajectories.jsonl",
            trajectories_jsonl(&self.records)?.as_bytes(),
        )?;
        write_file(dir, "advantage.csv", &csv_bytes(&self.advantage)?)?;
        write_file(
            dir,
            "summary.csv",
            &csv_bytes(std::slice::from_ref(&self.summary))?,
        )?;
        let mut json = serde_json::to_string_pretty(&self.constants).map_err(ser)?;
        json.push('\n');
        write_file(dir, "constants.json", json.as_bytes())
    }
}

/// [`SummaryRow`] columns prefixed by the swept parameter and its value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub parameter: String,
    pub value: f64,
    pub rollouts: usize,
    pub success_rate: f64,
    pub mean_reward: f64,
    pub mean_turns: f64,
    pub mean_tokens_equiv_turn_count: f64,
    pub truncation_frequency: f64,
    pub non_truncated: usize,
    pub success_rate_non_truncated: f64,
    pub btr_entry_rate: f64,
}

impl SweepRow {
    fn new(parameter: &str, value: f64, s: SummaryRow) -> Self {
        Self {
            parameter: parameter.to_string(),
            value,
            rollouts: s.rollouts,
            success_rate: s.success_rate,
            mean_reward: s.mean_reward,
            mean_turns: s.mean_turns,
            mean_tokens_equiv_turn_count: s.mean_tokens_equiv_turn_count,
            truncation_frequency: s.truncation_frequency,
            non_truncated: s.non_truncated,
            success_rate_non_truncated: s.success_rate_non_truncated,
            btr_entry_rate: s.btr_entry_rate,
        }
    }
}

/// Output of a sweep: rollout summaries, or synthetic-drift points when the
/// swept parameter is `synthetic.rho`.
#[derive(Debug, Clone)]
pub enum SweepOutput {
    Rollouts(Vec<SweepRow>),
    Drift(Vec<DriftSweepPoint>),
}

impl SweepOutput {
    pub fn len(&self) -> usize {
        match self {
            SweepOutput::Rollouts(r) => r.len(),
            SweepOutput::Drift(d) => d.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let bytes = match self {
            SweepOutput::Rollouts(r) => csv_bytes(r)?,
            SweepOutput::Drift(d) => csv_bytes(d)?,
        };
        write_file(dir, "summary.csv", &bytes)
    }
}

pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepOutput> {
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("config has no [sweep] section".into()))?;
    if sweep.values.is_empty() {
        return Err(Error::Config("sweep.values is empty".into()));
    }
    if sweep.parameter == "synthetic.rho" {
        let base = config
            .synthetic
            .unwrap_or_else(|| SyntheticDrift::standard(0.0));
        if config.rollouts == 0 {
            return Err(Error::Config("rollouts must be at least 1".into()));
        }
        let points = sweep
            .values
            .iter()
            .enumerate()
            .map(|(i, &rho)| {
                let cfg = SyntheticDrift { rho, ..base };
                simulate_drift(&cfg, config.rollouts, mix_seed(config.seed, i as u64))
                    .map_err(|e| Error::Config(e.to_string()))
            })
            .collect::<Result<_>>()?;
        return Ok(SweepOutput::Drift(points));
    }
    let mut rows = Vec::new();
    for &v in &sweep.values {
        let mut cfg = config.clone();
        cfg.set_parameter(&sweep.parameter, v)?;
        let prep = Prepared::new(cfg)?;
        let records = run_rollouts(&prep)?;
        let summary = summarize(&format!("{}={v}", sweep.parameter), &prep.config, &records);
        rows.push(SweepRow::new(&sweep.parameter, v, summary));
    }
    Ok(SweepOutput::Rollouts(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::CorruptionSpec;
    use crate::env::TaskKind;
    use crate::runner::config::SweepConfig;

    #[test]
    fn outputs_are_written_and_consistent() {
        let mut cfg = ExperimentConfig::for_task(TaskKind::GuessNumbers);
        cfg.rollouts = 20;
        cfg.agent.corruption = CorruptionSpec::psi_coupled(0.1, 0.3, 0.9);
        let out = run_experiment(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        out.write(dir.path()).unwrap();
        let jsonl = std::fs::read_to_string(dir.path().join("trajectories.jsonl")).unwrap();
        assert_eq!(jsonl.lines().count(), 20);
        let truncated = out.records.iter().filter(|r| r.truncated).count() as f64 / 20.0;
        assert_eq!(out.summary.truncation_frequency, truncated);
        let rows = out.advantage.len();
        assert_eq!(rows, out.records.iter().map(|r| r.turns).sum::<usize>());
        assert!(out.constants.fit.is_some());
    }

    #[test]
    fn sweep_rows_per_point() {
        let mut cfg = ExperimentConfig::for_task(TaskKind::GuessNumbers);
        cfg.rollouts = 5;
        cfg.sweep = Some(SweepConfig {
            parameter: "corruption.eps0".into(),
            values: vec![0.0, 0.2, 0.4],
        });
        cfg.agent.corruption = CorruptionSpec::uniform_mix(0.0);
        let out = run_sweep(&cfg).unwrap();
        assert_eq!(out.len(), 3);
        let dir = tempfile::tempdir().unwrap();
        out.write(dir.path()).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(csv.lines().count(), 4);
        cfg.sweep = Some(SweepConfig {
            parameter: "synthetic.rho".into(),
            values: vec![0.02, 0.05],
        });
        assert_eq!(run_sweep(&cfg).unwrap().len(), 2);
    }
}
