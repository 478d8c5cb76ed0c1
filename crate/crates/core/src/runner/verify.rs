//! Named verification suites with machine-readable verdicts.
//!
//! | suite | checks |
//! |-------|--------|
//! | `oracle-equivalence` | η=0 Bayes filter equals the uniform belief over `H_t` on GN(3,4) and CD |
//! | `counting` | `|S| = b!/(b−a)!` for every `b ≤ 8` |
//! | `pe-example` | scores 1.22 / 0.65 / 1.11 and the Movie_A recommendation |
//! | `formulas` | golden values of `B̄`, the hitting-time bound and the inversion threshold |
//! | `thm1-drift` | non-negative agent drift above `U`, negative oracle drift everywhere |
//! | `thm1-hitting` | trap entry within the hitting-time bound for three corruption levels |
//! | `thm2-sign` | sign of `E[Â_0]` across the synthetic drift grid, or the configured drift |
//! | `cor1` | truncation gap against `γ·κ·ρ·S_tail` |
//! | `rule-equivalence` | specialised rules against the generic window rule |
//! | `truncation-efficiency` | fewer turns under `gn_consistency` at comparable success |
//! | `determinism` | identical trajectories for identical config and seed |

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::experiment::{analyze, run_experiment, run_rollouts, summarize, trajectories_jsonl};
use super::mix_seed;
use super::rollout::Prepared;
use crate::advantage::{inversion_threshold, simulate_drift, SyntheticDrift};
use crate::agents::CorruptionSpec;
use crate::belief::{bayes_update, Belief, Evaluator, ObservationModel};
use crate::btr::{compute_bbar, hitting_time_bound};
use crate::env::cd::CircuitInstance;
use crate::env::gn::{gn_enumerate_states, permutation_count, GuessNumbersInstance};
use crate::env::pe::{
    default_reference_movies, mr_recommend, pe_score, worked_example_movies, WORKED_EXAMPLE_WEIGHTS,
};
use crate::env::{Task, TaskKind};
use crate::error::{Error, Result};
use crate::hypothesis::{belief_from_hypotheses, HypothesisSet};
use crate::truncation::{
    cd_stall_rule, gn_consistency_rule, t3_check, RuleKind, TruncationRule, TurnSignal,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    OracleEquivalence,
    Counting,
    PeExample,
    Formulas,
    Thm1Drift,
    Thm1Hitting,
    Thm2Sign,
    Cor1,
    RuleEquivalence,
    TruncationEfficiency,
    Determinism,
}

impl Suite {
    pub const ALL: [Suite; 11] = [
        Suite::OracleEquivalence,
        Suite::Counting,
        Suite::PeExample,
        Suite::Formulas,
        Suite::Thm1Drift,
        Suite::Thm1Hitting,
        Suite::Thm2Sign,
        Suite::Cor1,
        Suite::RuleEquivalence,
        Suite::TruncationEfficiency,
        Suite::Determinism,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::OracleEquivalence => "oracle-equivalence",
            Suite::Counting => "counting",
            Suite::PeExample => "pe-example",
            Suite::Formulas => "formulas",
            Suite::Thm1Drift => "thm1-drift",
            Suite::Thm1Hitting => "thm1-hitting",
            Suite::Thm2Sign => "thm2-sign",
            Suite::Cor1 => "cor1",
            Suite::RuleEquivalence => "rule-equivalence",
            Suite::TruncationEfficiency => "truncation-efficiency",
            Suite::Determinism => "determinism",
        }
    }

    /// Rollouts (or trajectories, or histories) used when none are given.
    pub fn default_rollouts(self) -> usize {
        match self {
            Suite::OracleEquivalence => 1000,
            Suite::Thm1Drift | Suite::TruncationEfficiency => 2000,
            Suite::Thm1Hitting => 500,
            Suite::Thm2Sign | Suite::Cor1 | Suite::RuleEquivalence => 10_000,
            Suite::Determinism => 20,
            Suite::Counting | Suite::PeExample | Suite::Formulas => 1,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown verification suite `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: Option<f64>,
    pub expected: String,
    pub tolerance: Option<f64>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    fn new(
        name: impl Into<String>,
        measured: Option<f64>,
        expected: impl Into<String>,
        passed: bool,
    ) -> Self {
        Self {
            name: name.into(),
            measured,
            expected: expected.into(),
            tolerance: None,
            passed,
            note: None,
        }
    }

    fn tol(mut self, t: f64) -> Self {
        self.tolerance = Some(t);
        self
    }

    fn note(mut self, n: impl Into<String>) -> Self {
        self.note = Some(n.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub rollouts: usize,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    pub rollouts: Option<usize>,
    pub seed: u64,
    /// Base experiment for the rollout-driven suites; GN(3,5) otherwise.
    pub config: Option<ExperimentConfig>,
}

pub fn verify_suite(suite: Suite, opts: &VerifyOptions) -> Result<VerifyReport> {
    let n = opts.rollouts.unwrap_or_else(|| suite.default_rollouts());
    if n == 0 {
        return Err(Error::Config(
            "verification needs at least one rollout".into(),
        ));
    }
    let seed = opts.seed;
    let checks = match suite {
        Suite::OracleEquivalence => oracle_equivalence(n, seed)?,
        Suite::Counting => counting()?,
        Suite::PeExample => pe_example()?,
        Suite::Formulas => formulas()?,
        Suite::Thm1Drift => thm1_drift(&base_config(opts), n)?,
        Suite::Thm1Hitting => thm1_hitting(&base_config(opts), n)?,
        Suite::Thm2Sign => thm2_sign(opts, n)?,
        Suite::Cor1 => cor1(opts, n)?,
        Suite::RuleEquivalence => rule_equivalence(n, seed)?,
        Suite::TruncationEfficiency => truncation_efficiency(&base_config(opts), n)?,
        Suite::Determinism => determinism(&base_config(opts), n)?,
    };
    Ok(VerifyReport {
        suite,
        rollouts: n,
        seed,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

/// GN(3,5) with the ψ-coupled corrupted agent, unless a config is supplied.
fn base_config(opts: &VerifyOptions) -> ExperimentConfig {
    opts.config.clone().unwrap_or_else(|| {
        let mut cfg = ExperimentConfig::for_task(TaskKind::GuessNumbers);
        cfg.seed = opts.seed;
        cfg.agent.corruption = CorruptionSpec::psi_coupled(0.1, 0.3, 1.0);
        cfg
    })
}

/// Largest componentwise gap between the η=0 filter and the uniform belief
/// over the consistent set, over every prefix of `n` random-action episodes.
fn filter_gap(task: &Task, n: usize, seed: u64, horizon: usize) -> Result<f64> {
    let model = ObservationModel::deterministic(task.table.clone());
    let table = task.table.as_ref();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, i as u64));
        let truth = rng.gen_range(0..task.space.len());
        let mut b = Belief::uniform(task.space.len());
        let mut h = HypothesisSet::init_full(&task.space);
        for _ in 0..horizon {
            let a = rng.gen_range(0..task.num_actions());
            let o = table.observe(truth, a);
            b = bayes_update(&b, a, o, &model)?;
            h = h.filter_consistent(a, o, table);
            let hb = belief_from_hypotheses(&h, &task.space)?;
            let gap = b
                .probs()
                .iter()
                .zip(hb.probs())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            worst = worst.max(gap);
        }
    }
    Ok(worst)
}

fn oracle_equivalence(n: usize, seed: u64) -> Result<Vec<Check>> {
    let gn = GuessNumbersInstance::from_preset(3, 4, 0, 3, seed)?.task()?;
    let cd = CircuitInstance::default_library(2, seed)?.task()?;
    let tol = 1e-12;
    let mut out = Vec::new();
    for (name, task) in [("gn(3,4)", gn), ("cd(10 candidates, 2 labels)", cd)] {
        let gap = filter_gap(&task, n, seed, 10)?;
        out.push(
            Check::new(
                format!("{name} max componentwise gap"),
                Some(gap),
                "<= 1e-12",
                gap <= tol,
            )
            .tol(tol),
        );
    }
    Ok(out)
}

fn counting() -> Result<Vec<Check>> {
    let mut mismatches = 0;
    let mut cases = 0;
    for b in 1..=8usize {
        for a in 1..=b {
            let expected = (b - a + 1..=b).map(|x| x as u128).product::<u128>();
            let got = gn_enumerate_states(a, b)?.len() as u128;
            cases += 1;
            if got != expected || permutation_count(a, b) != expected {
                mismatches += 1;
            }
        }
    }
    let h35 = gn_enumerate_states(3, 5)?.len();
    let h410 = gn_enumerate_states(4, 10)?.len();
    Ok(vec![
        Check::new(
            "b <= 8 mismatches",
            Some(mismatches as f64),
            "0",
            mismatches == 0,
        )
        .note(format!("{cases} (a, b) pairs")),
        Check::new("|H| for (3,5)", Some(h35 as f64), "60", h35 == 60),
        Check::new("|H| for (4,10)", Some(h410 as f64), "5040", h410 == 5040),
    ])
}

fn pe_example() -> Result<Vec<Check>> {
    let movies = worked_example_movies();
    let weights = WORKED_EXAMPLE_WEIGHTS;
    let mut out = Vec::new();
    for (m, want) in movies.iter().zip([1.22, 0.65, 1.11]) {
        let s = pe_score(&weights, &m.attributes)?;
        out.push(
            Check::new(
                format!("score {}", m.name),
                Some(s),
                format!("{want}"),
                (s - want).abs() <= 1e-12,
            )
            .tol(1e-12),
        );
    }
    let pick = mr_recommend(&weights, &movies)?;
    out.push(
        Check::new("recommendation", None, "Movie_A", pick.name == "Movie_A")
            .note(pick.name.clone()),
    );
    let refs = default_reference_movies();
    out.push(Check::new(
        "reference catalogue size",
        Some(refs.len() as f64),
        "7",
        refs.len() == 7,
    ));
    Ok(out)
}

fn formulas() -> Result<Vec<Check>> {
    let tol = 1e-12;
    let bbar = compute_bbar(0.5, 1.0)?;
    let want = 2.0 * (2f64.ln() + 2.0);
    let bound = hitting_time_bound(1.0, 10.0, 1.0, 0.0)?;
    let thr = inversion_threshold(0, 2, 13, 1.0, 1.0)?;
    Ok(vec![
        Check::new(
            "bbar(0.5, 1)",
            Some(bbar),
            format!("{want}"),
            (bbar - want).abs() <= tol,
        )
        .tol(tol),
        Check::new(
            "hitting bound (m=1, U=10, delta=1, delta1=0)",
            Some(bound as f64),
            "5",
            bound == 5,
        ),
        Check::new(
            "inversion threshold (gamma*lambda=1, 2 pre, 10 tail)",
            Some(thr),
            "0.2",
            (thr - 0.2).abs() <= tol,
        )
        .tol(tol),
    ])
}

fn thm1_drift(base: &ExperimentConfig, n: usize) -> Result<Vec<Check>> {
    let mut cfg = base.clone();
    cfg.rollouts = n;
    cfg.truncation = TruncationRule::of(RuleKind::None);
    let prep = Prepared::new(cfg.clone())?;
    let records = run_rollouts(&prep)?;
    let rep = analyze(&prep, &records)?;
    let mut out = Vec::new();
    match rep.constants {
        None => out.push(
            Check::new("threshold U available", None, "U computed", false)
                .note(rep.notes.join("; ")),
        ),
        Some(c) => {
            let above: Vec<_> = rep
                .agent_drift
                .iter()
                .filter(|b| b.lo >= c.u && b.stats.is_some())
                .collect();
            let worst = above
                .iter()
                .filter_map(|b| b.stats.map(|s| s.ci_low))
                .fold(f64::INFINITY, f64::min);
            let ok = worst > -0.01;
            let mut chk = Check::new(
                "agent drift CI lower bound above U",
                above
                    .is_empty()
                    .then_some(f64::NAN)
                    .or(Some(worst))
                    .filter(|v| v.is_finite()),
                "> -0.01 in every populated bucket above U",
                ok,
            )
            .tol(0.01);
            let max_psi = rep
                .agent_drift
                .iter()
                .filter(|b| b.count > 0)
                .map(|b| b.hi)
                .fold(0.0, f64::max);
            chk = chk.note(format!(
                "U = {:.3}; {} populated bucket(s) above U; populated buckets end at psi = {max_psi:.2}",
                c.u,
                above.len()
            ));
            out.push(chk);
        }
    }

    cfg.agent.corruption = CorruptionSpec::none();
    let prep = Prepared::new(cfg)?;
    let records = run_rollouts(&prep)?;
    let rep = analyze(&prep, &records)?;
    let populated: Vec<_> = rep.agent_drift.iter().filter_map(|b| b.stats).collect();
    let worst = populated
        .iter()
        .map(|s| s.mean)
        .fold(f64::NEG_INFINITY, f64::max);
    out.push(
        Check::new(
            "oracle drift mean in every populated bucket",
            Some(worst),
            "< 0",
            !populated.is_empty() && worst < 0.0,
        )
        .note(format!("{} populated bucket(s)", populated.len())),
    );
    Ok(out)
}

/// Corruption levels exercised by `thm1-hitting`.
pub const HITTING_CONFIGS: [(f64, f64); 3] = [(0.1, 0.3), (0.05, 0.5), (0.2, 0.6)];

fn thm1_hitting(base: &ExperimentConfig, n: usize) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (i, &(eps0, slope)) in HITTING_CONFIGS.iter().enumerate() {
        let mut cfg = base.clone();
        cfg.rollouts = n;
        cfg.seed = mix_seed(base.seed, i as u64);
        cfg.truncation = TruncationRule::of(RuleKind::None);
        cfg.analysis.window = 3;
        cfg.agent.corruption = CorruptionSpec::psi_coupled(eps0, slope, 1.0);
        let prep = Prepared::new(cfg)?;
        let records = run_rollouts(&prep)?;
        let rep = analyze(&prep, &records)?;
        let name = format!("eps0={eps0}, slope={slope}");
        let Some(c) = rep.constants else {
            out.push(
                Check::new(format!("{name}: constants"), None, "delta > 0", false)
                    .note(rep.notes.join("; ")),
            );
            continue;
        };
        if c.delta <= 0.0 {
            out.push(
                Check::new(format!("{name}: fitted delta"), Some(c.delta), "> 0", false).note(
                    format!(
                        "m_theta = {:.4}, mu = {:.4}, c0 = {:.4}, bbar = {:.3}; bound undefined",
                        c.m_theta, c.mu, c.c0, c.bbar
                    ),
                ),
            );
            continue;
        }
        let conf = rep.conformance.unwrap_or(0.0);
        out.push(
            Check::new(
                format!("{name}: conformance"),
                Some(conf),
                ">= 0.95",
                conf >= 0.95,
            )
            .note(format!(
                "bound {:?}, delta {:.4}",
                rep.hitting_time_bound, c.delta
            )),
        );
    }
    Ok(out)
}

/// Drift rates swept by `thm2-sign` and `cor1` when no `[synthetic]` section is given.
pub const DRIFT_GRID: [f64; 5] = [0.1, 0.15, 0.2, 0.25, 0.3];

fn drift_points(opts: &VerifyOptions, n: usize) -> Result<Vec<crate::advantage::DriftSweepPoint>> {
    let drifts: Vec<SyntheticDrift> = match opts.config.as_ref().and_then(|c| c.synthetic) {
        Some(d) => vec![d],
        None => DRIFT_GRID
            .iter()
            .map(|&r| SyntheticDrift::standard(r))
            .collect(),
    };
    drifts
        .iter()
        .enumerate()
        .map(|(i, d)| simulate_drift(d, n, mix_seed(opts.seed, i as u64)))
        .collect()
}

fn clip_note(p: &crate::advantage::DriftSweepPoint) -> String {
    format!(
        "{} of {} trajectories clipped and excluded",
        p.clipped, p.trajectories
    )
}

fn thm2_sign(opts: &VerifyOptions, n: usize) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for p in drift_points(opts, n)? {
        let m = p.mean_a0;
        let (expected, ok) = if p.rho < p.threshold - 1e-12 {
            ("> 0".to_string(), m > 0.0)
        } else if p.rho > p.threshold + 1e-12 {
            ("< 0".to_string(), m < 0.0)
        } else {
            (
                format!("|mean| <= 3 se ({:.4})", 3.0 * p.se_a0),
                m.abs() <= 3.0 * p.se_a0,
            )
        };
        out.push(
            Check::new(format!("mean A_0 at rho={}", p.rho), Some(m), expected, ok).note(format!(
                "threshold {:.3}; {}",
                p.threshold,
                clip_note(&p)
            )),
        );
    }
    Ok(out)
}

fn cor1(opts: &VerifyOptions, n: usize) -> Result<Vec<Check>> {
    Ok(drift_points(opts, n)?
        .into_iter()
        .map(|p| {
            let floor = p.predicted_gap - 3.0 * p.se_gap;
            Check::new(
                format!("gap at rho={}", p.rho),
                Some(p.mean_gap),
                format!(">= {floor:.4} (predicted {:.4} - 3 se)", p.predicted_gap),
                p.mean_gap >= floor,
            )
            .tol(3.0 * p.se_gap)
            .note(clip_note(&p))
        })
        .collect())
}

fn rule_equivalence(n: usize, seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x9e));
    let (mut gn_bad, mut cd_bad) = (0usize, 0usize);
    for _ in 0..n {
        let len = rng.gen_range(1..=12);
        let delta_min = 1.0 - rng.gen::<f64>();
        let flags: Vec<bool> = (0..len).map(|_| rng.gen_bool(0.5)).collect();
        let signals: Vec<TurnSignal> = flags
            .iter()
            .map(|&c| TurnSignal::progress(f64::from(u8::from(c))))
            .collect();
        if gn_consistency_rule(flags[len - 1]) != t3_check(&signals, 1, delta_min, len)? {
            gn_bad += 1;
        }

        let mut sizes = vec![rng.gen_range(1..=200usize)];
        for _ in 0..len {
            let last = *sizes.last().unwrap();
            let drop = if rng.gen_bool(0.5) {
                0
            } else {
                rng.gen_range(0..=last.saturating_sub(1))
            };
            sizes.push(last - drop);
        }
        let signals: Vec<TurnSignal> = sizes
            .windows(2)
            .map(|w| TurnSignal::progress((w[0] - w[1]) as f64))
            .collect();
        if cd_stall_rule(&sizes, 3) != t3_check(&signals, 3, delta_min, signals.len())? {
            cd_bad += 1;
        }
    }
    Ok(vec![
        Check::new(
            "gn_consistency vs window k=1 disagreements",
            Some(gn_bad as f64),
            "0",
            gn_bad == 0,
        ),
        Check::new(
            "cd_stall vs window k=3 disagreements",
            Some(cd_bad as f64),
            "0",
            cd_bad == 0,
        ),
    ])
}

fn truncation_efficiency(base: &ExperimentConfig, n: usize) -> Result<Vec<Check>> {
    let mut cfg = base.clone();
    cfg.rollouts = n;
    cfg.truncation = TruncationRule::of(RuleKind::None);
    let plain = run_rollouts(&Prepared::new(cfg.clone())?)?;
    cfg.truncation = TruncationRule::of(RuleKind::GnConsistency);
    let cut = run_rollouts(&Prepared::new(cfg.clone())?)?;
    let a = summarize("none", &cfg, &plain);
    let b = summarize("gn_consistency", &cfg, &cut);
    Ok(vec![
        Check::new(
            "mean turns (gn_consistency - none)",
            Some(b.mean_turns - a.mean_turns),
            "< 0",
            b.mean_turns < a.mean_turns,
        )
        .note(format!(
            "none {:.3}, gn_consistency {:.3}",
            a.mean_turns, b.mean_turns
        )),
        Check::new(
            "non-truncated success drop",
            Some(a.success_rate_non_truncated - b.success_rate_non_truncated),
            "<= 0.02",
            b.success_rate_non_truncated >= a.success_rate_non_truncated - 0.02,
        )
        .tol(0.02)
        .note(format!(
            "none {:.4}, gn_consistency {:.4} over {} kept",
            a.success_rate_non_truncated, b.success_rate_non_truncated, b.non_truncated
        )),
    ])
}

fn determinism(base: &ExperimentConfig, n: usize) -> Result<Vec<Check>> {
    let mut cfg = base.clone();
    cfg.rollouts = n;
    let first = trajectories_jsonl(&run_experiment(&cfg)?.records)?;
    let second = trajectories_jsonl(&run_experiment(&cfg)?.records)?;
    Ok(vec![Check::new(
        "trajectories byte-identical",
        Some(first.len() as f64),
        "equal bytes",
        first == second,
    )])
}
