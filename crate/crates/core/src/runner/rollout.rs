//! One seeded interaction episode.
//!
//! The environment answers noiselessly. Two beliefs run side by side: the
//! oracle, updated by exact Bayes under the η-smoothed model, and the agent,
//! updated by its (possibly corrupted) updater. The consistent set `H_t`
//! supplies the progress signal for truncation.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::mix_seed;
use crate::agents::{
    policy_distribution, sample_action, BoundPolicy, CorruptedUpdater, PolicyContext,
};
use crate::belief::{
    bayes_update, psi_from_prob, update_error, Belief, ExpectationOptions, ObservationModel,
    Updater,
};
use crate::env::pe::{binary_similarity, cosine_similarity, DEFAULT_SIMILARITY_THRESHOLD};
use crate::env::{Instance, Task, TaskKind};
use crate::error::{Error, Result};
use crate::hypothesis::{progress, HypothesisSet};
use crate::truncation::{evaluate, FeedbackLabel, TurnSignal, Verdict};

/// Config compiled into a shared task, model and pool of hidden states.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ExperimentConfig,
    pub instance: Instance,
    pub task: Task,
    pub model: ObservationModel,
    pub truth_pool: Vec<usize>,
    pub legal: Vec<usize>,
}

impl Prepared {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let instance = config.instance()?;
        let task = instance.task()?;
        let model = task
            .model(config.eta)
            .map_err(|e| Error::Config(e.to_string()))?;
        let truth_pool = if config.environment.resample {
            truth_pool(&task)
        } else {
            vec![task.space.true_state_index()]
        };
        let legal = (0..task.num_actions()).collect();
        Ok(Self {
            config,
            instance,
            task,
            model,
            truth_pool,
            legal,
        })
    }
}

/// Hidden states the instance class may draw: consistent with the scripted
/// opening (and not solved by it), and non-degenerate for PE.
fn truth_pool(task: &Task) -> Vec<usize> {
    use crate::belief::Evaluator;
    (0..task.space.len())
        .filter(|&s| match task.initial_step {
            Some((a, o)) => {
                task.table.observe(s, a) == o
                    && task.action_state.as_ref().is_none_or(|m| m[a] != s)
            }
            None => true,
        })
        .filter(|&s| match &task.state_features {
            Some(f) => f[s].iter().any(|&x| x != 0.0),
            None => true,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefSnapshot {
    pub agent_belief_true: f64,
    pub oracle_belief_true: f64,
    pub psi_agent: f64,
    pub psi_oracle: f64,
    pub hypothesis_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    pub turn: usize,
    pub action: String,
    pub observation: String,
    pub agent_belief_true: f64,
    pub oracle_belief_true: f64,
    pub psi_agent: f64,
    pub psi_oracle: f64,
    pub hypothesis_size: usize,
    pub progress: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub action_consistent: Option<bool>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub rollout: usize,
    pub seed: u64,
    pub truth: String,
    pub initial: BeliefSnapshot,
    pub steps: Vec<TrajectoryStep>,
    pub turns: usize,
    pub reward: f64,
    pub success: bool,
    pub committed: bool,
    pub truncated: bool,
    pub t_s: Option<usize>,
    pub answer: Option<String>,
    /// `(Ψ(b), c_θ(b))` at visited agent beliefs; only gathered on request.
    #[serde(skip)]
    pub fit_samples: Vec<(f64, f64)>,
}

impl TrajectoryRecord {
    /// Agent potentials `Ψ(b_1), Ψ(b_2), …`, the initial belief first.
    pub fn psi_agent_series(&self) -> Vec<f64> {
        std::iter::once(self.initial.psi_agent)
            .chain(self.steps.iter().map(|s| s.psi_agent))
            .collect()
    }

    pub fn psi_oracle_series(&self) -> Vec<f64> {
        std::iter::once(self.initial.psi_oracle)
            .chain(self.steps.iter().map(|s| s.psi_oracle))
            .collect()
    }

    pub fn agent_belief_series(&self) -> Vec<f64> {
        std::iter::once(self.initial.agent_belief_true)
            .chain(self.steps.iter().map(|s| s.agent_belief_true))
            .collect()
    }
}

fn feature_mean(task: &Task, b: &Belief) -> Option<Vec<f64>> {
    task.state_features
        .as_ref()
        .map(|f| b.expectation(f).expect("aligned features"))
}

fn similarity_to(v: Option<&Vec<f64>>, target: &[f64]) -> f64 {
    v.and_then(|v| cosine_similarity(v, target).ok())
        .unwrap_or(0.0)
}

/// Runs rollout `index` of the prepared experiment.
pub fn rollout(prep: &Prepared, index: usize, collect_fit: bool) -> Result<TrajectoryRecord> {
    let cfg = &prep.config;
    let task = &prep.task;
    let model = &prep.model;
    let seed = mix_seed(cfg.seed, index as u64 + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = prep.truth_pool[(mix_seed(seed, 0x7) % prep.truth_pool.len() as u64) as usize];
    let space = task.space.with_true_state(truth)?;
    let updater = CorruptedUpdater {
        spec: cfg.agent.corruption,
        space: space.clone(),
        model: model.clone(),
    };
    let mut rule = cfg.truncation;
    rule.seed = mix_seed(rule.seed, seed);
    let psi = |b: &Belief| psi_from_prob(b.prob(truth), cfg.psi_max);
    let target = task.state_features.as_ref().map(|f| f[truth].clone());

    let mut oracle = Belief::uniform(space.len());
    let mut agent = oracle.clone();
    let mut h = HypothesisSet::init_full(&space);
    if let Some((a0, o0)) = task.initial_step {
        oracle = bayes_update(&oracle, a0, o0, model)?;
        agent = oracle.clone();
        h = h.filter_consistent(a0, o0, task.table.as_ref());
    }
    let initial = BeliefSnapshot {
        agent_belief_true: agent.prob(truth),
        oracle_belief_true: oracle.prob(truth),
        psi_agent: psi(&agent),
        psi_oracle: psi(&oracle),
        hypothesis_size: h.len(),
    };

    let mut steps = Vec::new();
    let mut signals: Vec<TurnSignal> = Vec::new();
    let mut fit_samples = Vec::new();
    let mut prev_sim = target.as_ref().map_or(0.0, |t| {
        similarity_to(feature_mean(task, &agent).as_ref(), t)
    });
    let (mut solved, mut committed, mut truncated) = (false, false, false);
    let mut t_s = None;
    let mut last_action = None;

    for turn in 0..cfg.horizon() {
        let ctx = PolicyContext {
            model,
            legal_actions: &prep.legal,
            hypotheses: Some(&h),
            action_state: task.action_state.as_deref(),
            turn,
        };
        let (best, p_best) = agent.argmax();
        let confident = p_best >= cfg.commit_confidence;
        let u: f64 = rng.gen();
        let action = match (&task.action_state, confident) {
            (None, true) => {
                committed = true;
                break;
            }
            (Some(map), true) => map.iter().position(|&s| s == best).ok_or_else(|| {
                Error::EnvironmentInconsistency("no action names the argmax state".into())
            })?,
            _ => sample_action(&policy_distribution(&cfg.agent.policy, &agent, &ctx)?, u),
        };

        use crate::belief::Evaluator;
        let obs = task.table.observe(truth, action);
        let consistent = task.action_state.as_ref().map(|m| h.contains(m[action]));
        let next_h = h.filter_consistent(action, obs, task.table.as_ref());
        if next_h.is_empty() {
            return Err(Error::EnvironmentInconsistency(format!(
                "rollout {index}: no hypothesis survives action {action}"
            )));
        }
        let d = progress(&h, &next_h)?;
        oracle = bayes_update(&oracle, action, obs, model)?;
        if collect_fit {
            let policy = BoundPolicy {
                spec: &cfg.agent.policy,
                ctx,
            };
            let opts = ExpectationOptions {
                psi_max: cfg.psi_max,
                seed: mix_seed(seed, turn as u64),
                ..Default::default()
            };
            let c = update_error(&agent, &policy, &updater, &space, model, &opts)?;
            fit_samples.push((psi(&agent), c.value));
        }
        agent = updater.update(&agent, action, obs)?;

        let similarity_gain = target.as_ref().map(|t| {
            let sim = similarity_to(feature_mean(task, &agent).as_ref(), t);
            let gain = sim - prev_sim;
            prev_sim = sim;
            gain
        });
        signals.push(TurnSignal {
            progress: Some(d as f64),
            feedback_label: Some(if d == 0 {
                FeedbackLabel::Unknown
            } else {
                FeedbackLabel::Yes
            }),
            similarity_gain,
            query_vector: Some(task.action_embeddings[action].clone()),
            action_consistent: consistent,
        });
        solved = task.solved_observation == Some(obs);
        let verdict = if solved {
            Verdict::Continue
        } else {
            evaluate(&rule, &signals)?
        };
        steps.push(TrajectoryStep {
            turn: turn + 1,
            action: task.action_labels[action].clone(),
            observation: task.observation_labels[obs].clone(),
            agent_belief_true: agent.prob(truth),
            oracle_belief_true: oracle.prob(truth),
            psi_agent: psi(&agent),
            psi_oracle: psi(&oracle),
            hypothesis_size: next_h.len(),
            progress: d,
            action_consistent: consistent,
            verdict,
        });
        h = next_h;
        last_action = Some(action);
        if solved {
            break;
        }
        if verdict.is_truncate() {
            truncated = true;
            t_s = Some(turn + 1);
            break;
        }
    }

    let (reward, answer) = match task.kind {
        TaskKind::GuessNumbers => (
            f64::from(u8::from(solved)),
            last_action
                .filter(|_| solved)
                .map(|a| task.action_labels[a].clone()),
        ),
        _ if truncated => (0.0, None),
        TaskKind::CircuitDecoding => {
            let guess = agent.argmax().0;
            (
                f64::from(u8::from(guess == truth)),
                Some(space.label(guess).to_string()),
            )
        }
        TaskKind::PreferenceEstimation => {
            let mean = feature_mean(task, &agent).expect("PE has features");
            let target = target.as_ref().expect("PE has features");
            let hit = binary_similarity(&mean, target, DEFAULT_SIMILARITY_THRESHOLD).unwrap_or(0);
            let label = mean
                .iter()
                .map(|x| format!("{x:.3}"))
                .collect::<Vec<_>>()
                .join(",");
            (f64::from(hit), Some(format!("({label})")))
        }
    };

    Ok(TrajectoryRecord {
        rollout: index,
        seed,
        truth: space.label(truth).to_string(),
        initial,
        turns: steps.len(),
        steps,
        reward,
        success: reward >= 1.0,
        committed,
        truncated,
        t_s,
        answer,
        fit_samples,
    })
}
