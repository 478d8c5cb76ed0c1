//! Windowed progress rules for cutting trajectories.
//!
//! The generic rule truncates at turn `t` when every progress value in the
//! window `[t − k, t)` is below `Δmin`. The task-specific rules are special
//! cases over different progress signals: hypothesis-set shrinkage,
//! consistency of a guess, uninformative feedback streaks and similarity
//! gains. Two ablation rules cut on query repetition or at random.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::pe::cosine_similarity;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Continue,
    Truncate,
}

impl Verdict {
    pub fn is_truncate(self) -> bool {
        self == Verdict::Truncate
    }

    fn from_bool(cut: bool) -> Self {
        if cut {
            Verdict::Truncate
        } else {
            Verdict::Continue
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeedbackLabel {
    Yes,
    No,
    Unknown,
    Equal,
}

/// Raw per-turn inputs of the rules; each rule reads the fields it needs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TurnSignal {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub progress: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feedback_label: Option<FeedbackLabel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub similarity_gain: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub query_vector: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub action_consistent: Option<bool>,
}

impl TurnSignal {
    pub fn progress(d: f64) -> Self {
        Self {
            progress: Some(d),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    T3Window,
    GnConsistency,
    CdStall,
    StreakUnknown,
    PeSimDrop,
    SimilarityAlpha,
    RandomBeta,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationRule {
    pub kind: RuleKind,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default = "default_delta_min")]
    pub delta_min: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_delta_min() -> f64 {
    1.0
}

fn default_alpha() -> f64 {
    0.9
}

impl Default for TruncationRule {
    fn default() -> Self {
        Self::of(RuleKind::None)
    }
}

impl TruncationRule {
    pub fn of(kind: RuleKind) -> Self {
        Self {
            kind,
            k: None,
            delta_min: default_delta_min(),
            alpha: default_alpha(),
            beta: 0.0,
            seed: 0,
        }
    }

    /// Window size, falling back to each rule's customary value.
    pub fn window(&self) -> usize {
        self.k.unwrap_or(match self.kind {
            RuleKind::T3Window | RuleKind::CdStall => 3,
            RuleKind::StreakUnknown => 5,
            RuleKind::PeSimDrop => 2,
            _ => 1,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.window() == 0 {
            return Err(Error::InvalidParameter(
                "window k must be at least 1".into(),
            ));
        }
        match self.kind {
            RuleKind::T3Window if !(self.delta_min > 0.0) => Err(Error::InvalidParameter(format!(
                "delta_min must be positive, got {}",
                self.delta_min
            ))),
            RuleKind::SimilarityAlpha if !(self.alpha > 0.0 && self.alpha < 1.0) => Err(
                Error::InvalidParameter(format!("alpha {} outside (0,1)", self.alpha)),
            ),
            RuleKind::RandomBeta if !(0.0..=1.0).contains(&self.beta) => Err(
                Error::InvalidParameter(format!("beta {} outside [0,1]", self.beta)),
            ),
            _ => Ok(()),
        }
    }
}

/// Generic window rule at turn `t`; signal `τ` carries `d(H_τ, H_{τ+1})`.
pub fn t3_check(signals: &[TurnSignal], k: usize, delta_min: f64, t: usize) -> Result<Verdict> {
    if t < k || k == 0 {
        return Ok(Verdict::Continue);
    }
    if t > signals.len() {
        return Err(Error::Index(format!(
            "turn {t} beyond {} signals",
            signals.len()
        )));
    }
    let mut cut = true;
    for (tau, s) in signals[t - k..t].iter().enumerate() {
        let d = s
            .progress
            .ok_or_else(|| Error::MissingSignal(format!("progress at step {}", t - k + tau)))?;
        cut &= d < delta_min;
    }
    Ok(Verdict::from_bool(cut))
}

/// Truncate when the guess lies outside the previous consistent set.
pub fn gn_consistency_rule(action_consistent: bool) -> Verdict {
    Verdict::from_bool(!action_consistent)
}

/// Truncate when the set size failed to decrease over the last `k` turns.
pub fn cd_stall_rule(sizes: &[usize], k: usize) -> Verdict {
    if k == 0 || sizes.len() < k + 1 {
        return Verdict::Continue;
    }
    let tail = &sizes[sizes.len() - k - 1..];
    Verdict::from_bool(tail.windows(2).all(|w| w[0] <= w[1]))
}

pub fn streak_unknown_rule(labels: &[FeedbackLabel], k: usize) -> Verdict {
    if k == 0 || labels.len() < k {
        return Verdict::Continue;
    }
    Verdict::from_bool(
        labels[labels.len() - k..]
            .iter()
            .all(|&l| l == FeedbackLabel::Unknown),
    )
}

/// Truncate after `k` strictly negative similarity gains in a row.
pub fn pe_sim_drop_rule(gains: &[f64], k: usize) -> Verdict {
    if k == 0 || gains.len() < k {
        return Verdict::Continue;
    }
    Verdict::from_bool(gains[gains.len() - k..].iter().all(|&g| g < 0.0))
}

/// Truncate when the last query is too similar to any earlier one.
pub fn similarity_alpha_rule(queries: &[Vec<f64>], alpha: f64) -> Result<Verdict> {
    let Some((current, previous)) = queries.split_last() else {
        return Ok(Verdict::Continue);
    };
    for p in previous {
        if cosine_similarity(current, p)? > alpha {
            return Ok(Verdict::Truncate);
        }
    }
    Ok(Verdict::Continue)
}

/// Bernoulli(β) at stream position `t`, replayable from `seed`.
pub fn random_beta_rule(beta: f64, seed: u64, t: usize) -> Verdict {
    if beta <= 0.0 {
        return Verdict::Continue;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(2 * t as u128);
    Verdict::from_bool(rng.gen::<f64>() < beta)
}

fn collect<T: Copy>(
    history: &[TurnSignal],
    k: usize,
    name: &str,
    f: impl Fn(&TurnSignal) -> Option<T>,
) -> Result<Vec<T>> {
    history[history.len().saturating_sub(k)..]
        .iter()
        .map(|s| f(s).ok_or_else(|| Error::MissingSignal(name.into())))
        .collect()
}

/// Verdict after `history.len()` completed turns. Window rules only fire once
/// the window is full.
pub fn evaluate(rule: &TruncationRule, history: &[TurnSignal]) -> Result<Verdict> {
    let t = history.len();
    let k = rule.window();
    if t == 0 {
        return Ok(Verdict::Continue);
    }
    match rule.kind {
        RuleKind::None => Ok(Verdict::Continue),
        RuleKind::T3Window => t3_check(history, k, rule.delta_min, t),
        RuleKind::GnConsistency => {
            if t < k {
                return Ok(Verdict::Continue);
            }
            let flags = collect(history, k, "action_consistent", |s| s.action_consistent)?;
            Ok(Verdict::from_bool(
                flags.iter().all(|&c| gn_consistency_rule(c).is_truncate()),
            ))
        }
        RuleKind::CdStall => {
            if t < k {
                return Ok(Verdict::Continue);
            }
            let d = collect(history, k, "progress", |s| s.progress)?;
            Ok(Verdict::from_bool(d.iter().all(|&x| x <= 0.0)))
        }
        RuleKind::StreakUnknown => {
            let labels = collect(history, k, "feedback_label", |s| s.feedback_label)?;
            Ok(streak_unknown_rule(&labels, k))
        }
        RuleKind::PeSimDrop => {
            let gains = collect(history, k, "similarity_gain", |s| s.similarity_gain)?;
            Ok(pe_sim_drop_rule(&gains, k))
        }
        RuleKind::SimilarityAlpha => {
            let queries: Vec<Vec<f64>> = history
                .iter()
                .map(|s| {
                    s.query_vector
                        .clone()
                        .ok_or_else(|| Error::MissingSignal("query_vector".into()))
                })
                .collect::<Result<_>>()?;
            similarity_alpha_rule(&queries, rule.alpha)
        }
        RuleKind::RandomBeta => Ok(random_beta_rule(rule.beta, rule.seed, t)),
    }
}
