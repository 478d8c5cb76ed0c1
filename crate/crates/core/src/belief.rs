//! Exact belief machinery over an enumerated latent state space.
//!
//! A [`Belief`] is a probability vector aligned with a [`StateSpace`]. The
//! exact filter is Bayes' rule
//!
//! ```text
//!   b'(s) = O(o | s, a) · b(s) / p_b(o | a),    p_b(o | a) = Σ_s O(o | s, a) · b(s)
//! ```
//!
//! and progress is measured with the truth-anchored potential
//! `Ψ(b) = −ln b(s⋆)`, saturated at a finite cap so drift statistics stay
//! finite when the truth has zero mass.
//!
//! Observation models wrap a deterministic evaluator `f(s, a)` and smooth it
//! with a floor `η`:
//!
//! ```text
//!   O(o | s, a) = (1 − η′) · 1[o = f(s, a)] + η′ / K,    η′ = η · K
//! ```
//!
//! where `K` is the size of the observation alphabet. `η = 0` recovers the
//! deterministic environment.

use std::collections::HashSet;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default saturation value of the potential, in nats.
pub const DEFAULT_PSI_MAX: f64 = 50.0;

/// Largest `|A| · K` for which expectations are enumerated exactly.
pub const DEFAULT_ENUMERATION_CAP: usize = 1_000_000;

/// Tolerance accepted on the sum of caller-supplied probability vectors.
const INPUT_SUM_TOLERANCE: f64 = 1e-9;

/// Ordered, finite set of latent states with a designated true state `s⋆`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSpace {
    states: Vec<String>,
    true_state_index: usize,
}

impl StateSpace {
    pub fn new(states: Vec<String>, true_state_index: usize) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidStateSpace("no states".into()));
        }
        if true_state_index >= states.len() {
            return Err(Error::InvalidStateSpace(format!(
                "true state index {true_state_index} out of range for {} states",
                states.len()
            )));
        }
        let mut seen = HashSet::with_capacity(states.len());
        for s in &states {
            if !seen.insert(s.as_str()) {
                return Err(Error::InvalidStateSpace(format!("duplicate state `{s}`")));
            }
        }
        Ok(Self {
            states,
            true_state_index,
        })
    }

    /// A space of `n` states labelled `s0, s1, …`.
    pub fn indexed(n: usize, true_state_index: usize) -> Result<Self> {
        Self::new((0..n).map(|i| format!("s{i}")).collect(), true_state_index)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn label(&self, index: usize) -> &str {
        &self.states[index]
    }

    pub fn true_state_index(&self) -> usize {
        self.true_state_index
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }

    /// Same states, different ground truth.
    pub fn with_true_state(&self, true_state_index: usize) -> Result<Self> {
        if true_state_index >= self.states.len() {
            return Err(Error::InvalidStateSpace(format!(
                "true state index {true_state_index} out of range for {} states",
                self.states.len()
            )));
        }
        Ok(Self {
            states: self.states.clone(),
            true_state_index,
        })
    }
}

/// Probability vector over a [`StateSpace`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Belief {
    probs: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Belief {
    type Error = Error;

    fn try_from(probs: Vec<f64>) -> Result<Self> {
        Belief::new(probs)
    }
}

impl From<Belief> for Vec<f64> {
    fn from(b: Belief) -> Self {
        b.probs
    }
}

impl Belief {
    /// Validates a caller-supplied distribution. Entries must be finite and
    /// non-negative and sum to one within `1e-9`; the vector is then
    /// renormalized exactly.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidBelief("empty probability vector".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > INPUT_SUM_TOLERANCE {
            return Err(Error::InvalidBelief(format!("entries sum to {sum}")));
        }
        Self::from_weights(probs)
    }

    /// Normalizes arbitrary non-negative weights into a belief.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidBelief("empty probability vector".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidBelief(format!("invalid entry {w}")));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidBelief("weights sum to zero".into()));
        }
        Ok(Self {
            probs: weights.into_iter().map(|w| w / sum).collect(),
        })
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform belief over an empty space");
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(n: usize, index: usize) -> Self {
        assert!(index < n, "point mass index out of range");
        let mut probs = vec![0.0; n];
        probs[index] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, index: usize) -> f64 {
        self.probs[index]
    }

    /// Most probable state, lowest index on ties.
    pub fn argmax(&self) -> (usize, f64) {
        let mut best = (0, self.probs[0]);
        for (i, &p) in self.probs.iter().enumerate().skip(1) {
            if p > best.1 {
                best = (i, p);
            }
        }
        best
    }

    /// `(1 − eps) · self + eps · other`.
    pub fn mix(&self, other: &Belief, eps: f64) -> Result<Belief> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::InvalidParameter(format!(
                "mix rate {eps} outside [0,1]"
            )));
        }
        let probs = self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(p, q)| (1.0 - eps) * p + eps * q)
            .collect();
        Belief::from_weights(probs)
    }

    /// Mean of per-state feature vectors under this belief.
    pub fn expectation(&self, features: &[Vec<f64>]) -> Result<Vec<f64>> {
        if features.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: features.len(),
            });
        }
        let dim = features.first().map_or(0, Vec::len);
        let mut mean = vec![0.0; dim];
        for (p, f) in self.probs.iter().zip(features) {
            for (m, x) in mean.iter_mut().zip(f) {
                *m += p * x;
            }
        }
        Ok(mean)
    }
}

/// Deterministic `(state, action) → observation` mapping.
pub trait Evaluator: Send + Sync {
    fn num_states(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn num_observations(&self) -> usize;
    fn observe(&self, state: usize, action: usize) -> usize;
}

/// Dense precomputed evaluator, `outcomes[state * actions + action]`.
#[derive(Debug, Clone)]
pub struct ObservationTable {
    states: usize,
    actions: usize,
    observations: usize,
    outcomes: Vec<u16>,
}

/// Upper bound on `|S| · |A|` for a dense table.
pub const MAX_TABLE_ENTRIES: usize = 64 * 1024 * 1024;

impl ObservationTable {
    pub fn from_fn<F>(states: usize, actions: usize, observations: usize, f: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> usize,
    {
        if states == 0 || actions == 0 || observations == 0 {
            return Err(Error::InvalidModel(
                "table needs at least one state, action and observation".into(),
            ));
        }
        if observations > u16::MAX as usize {
            return Err(Error::InvalidModel(format!(
                "{observations} observations exceed the table alphabet limit"
            )));
        }
        let entries = states.saturating_mul(actions);
        if entries > MAX_TABLE_ENTRIES {
            return Err(Error::InvalidModel(format!(
                "{states} states x {actions} actions exceeds {MAX_TABLE_ENTRIES} table entries"
            )));
        }
        let mut outcomes = Vec::with_capacity(entries);
        for s in 0..states {
            for a in 0..actions {
                let o = f(s, a);
                if o >= observations {
                    return Err(Error::InvalidModel(format!(
                        "evaluator returned observation {o} outside alphabet of size {observations}"
                    )));
                }
                outcomes.push(o as u16);
            }
        }
        Ok(Self {
            states,
            actions,
            observations,
            outcomes,
        })
    }

    pub fn build(evaluator: &dyn Evaluator) -> Result<Self> {
        Self::from_fn(
            evaluator.num_states(),
            evaluator.num_actions(),
            evaluator.num_observations(),
            |s, a| evaluator.observe(s, a),
        )
    }
}

impl Evaluator for ObservationTable {
    fn num_states(&self) -> usize {
        self.states
    }

    fn num_actions(&self) -> usize {
        self.actions
    }

    fn num_observations(&self) -> usize {
        self.observations
    }

    #[inline]
    fn observe(&self, state: usize, action: usize) -> usize {
        self.outcomes[state * self.actions + action] as usize
    }
}

/// η-smoothed likelihood `O(o | s, a)` over a deterministic evaluator.
#[derive(Debug, Clone)]
pub struct ObservationModel {
    table: Arc<ObservationTable>,
    eta: f64,
    mixing: f64,
}

impl ObservationModel {
    /// `eta` is the likelihood floor; it must satisfy `0 ≤ η ≤ 1/K`.
    pub fn new(table: Arc<ObservationTable>, eta: f64) -> Result<Self> {
        let k = table.num_observations() as f64;
        if !eta.is_finite() || eta < 0.0 {
            return Err(Error::InvalidModel(format!(
                "eta {eta} must be non-negative"
            )));
        }
        let mixing = eta * k;
        if mixing > 1.0 + 1e-12 {
            return Err(Error::InvalidModel(format!(
                "eta {eta} exceeds 1/K = {} for an alphabet of {k} observations",
                1.0 / k
            )));
        }
        Ok(Self {
            table,
            eta,
            mixing: mixing.min(1.0),
        })
    }

    pub fn deterministic(table: Arc<ObservationTable>) -> Self {
        Self {
            table,
            eta: 0.0,
            mixing: 0.0,
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Smoothing weight `η′ = η · K`.
    pub fn mixing(&self) -> f64 {
        self.mixing
    }

    pub fn table(&self) -> &Arc<ObservationTable> {
        &self.table
    }

    pub fn num_states(&self) -> usize {
        self.table.num_states()
    }

    pub fn num_actions(&self) -> usize {
        self.table.num_actions()
    }

    pub fn num_observations(&self) -> usize {
        self.table.num_observations()
    }

    #[inline]
    pub fn outcome(&self, state: usize, action: usize) -> usize {
        self.table.observe(state, action)
    }

    /// Likelihood assigned to the evaluator's own outcome.
    #[inline]
    pub fn peak(&self) -> f64 {
        1.0 - self.mixing + self.floor()
    }

    /// Likelihood assigned to every other observation (equals `η`).
    #[inline]
    pub fn floor(&self) -> f64 {
        self.mixing / self.num_observations() as f64
    }

    #[inline]
    pub fn likelihood(&self, observation: usize, state: usize, action: usize) -> f64 {
        if self.outcome(state, action) == observation {
            self.peak()
        } else {
            self.floor()
        }
    }

    /// `O(· | s, a)` as a dense row.
    pub fn row(&self, state: usize, action: usize) -> Vec<f64> {
        let mut row = vec![self.floor(); self.num_observations()];
        row[self.outcome(state, action)] = self.peak();
        row
    }

    /// Predictive distribution `Q_b(o) = p_b(o | a)`.
    pub fn predictive(&self, b: &Belief, action: usize) -> Vec<f64> {
        let k = self.num_observations();
        let mut mass = vec![0.0; k];
        for (s, &p) in b.probs().iter().enumerate() {
            if p > 0.0 {
                mass[self.outcome(s, action)] += p;
            }
        }
        let floor = self.floor();
        let scale = 1.0 - self.mixing;
        mass.iter().map(|m| scale * m + floor).collect()
    }

    fn check_dims(&self, b: &Belief, action: usize, observation: Option<usize>) -> Result<()> {
        if b.len() != self.num_states() {
            return Err(Error::DimensionMismatch {
                expected: self.num_states(),
                got: b.len(),
            });
        }
        if action >= self.num_actions() {
            return Err(Error::Index(format!(
                "action {action} outside 0..{}",
                self.num_actions()
            )));
        }
        if let Some(o) = observation {
            if o >= self.num_observations() {
                return Err(Error::Index(format!(
                    "observation {o} outside 0..{}",
                    self.num_observations()
                )));
            }
        }
        Ok(())
    }
}

/// Exact Bayes update `B⋆(b, a, o)`.
pub fn bayes_update(
    b: &Belief,
    action: usize,
    observation: usize,
    model: &ObservationModel,
) -> Result<Belief> {
    model.check_dims(b, action, Some(observation))?;
    let weights: Vec<f64> = b
        .probs()
        .iter()
        .enumerate()
        .map(|(s, &p)| model.likelihood(observation, s, action) * p)
        .collect();
    let normalizer: f64 = weights.iter().sum();
    if normalizer <= 0.0 {
        return Err(Error::DegenerateNormalizer {
            action,
            observation,
        });
    }
    Ok(Belief {
        probs: weights.into_iter().map(|w| w / normalizer).collect(),
    })
}

/// Posterior mass of a single state after an exact Bayes update.
pub fn bayes_posterior_at(
    b: &Belief,
    action: usize,
    observation: usize,
    state: usize,
    model: &ObservationModel,
) -> Result<f64> {
    model.check_dims(b, action, Some(observation))?;
    let q = model.predictive(b, action)[observation];
    if q <= 0.0 {
        return Err(Error::DegenerateNormalizer {
            action,
            observation,
        });
    }
    Ok(model.likelihood(observation, state, action) * b.prob(state) / q)
}

/// Value of the truth-anchored potential, in nats.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct PotentialValue(f64);

impl PotentialValue {
    pub fn value(self) -> f64 {
        self.0
    }

    /// Whether the value sits at (or above) the saturation cap.
    pub fn is_saturated(self, psi_max: f64) -> bool {
        self.0 >= psi_max
    }
}

/// `−ln p`, saturated at `psi_max`.
pub fn psi_from_prob(p: f64, psi_max: f64) -> f64 {
    if p <= 0.0 {
        return psi_max;
    }
    // Clamp the tiny negative values produced by rounding when p ≈ 1.
    (-p.ln()).clamp(0.0, psi_max)
}

/// `Ψ(b) = −ln b(s⋆)` with the default cap.
pub fn potential(b: &Belief, space: &StateSpace) -> PotentialValue {
    potential_capped(b, space, DEFAULT_PSI_MAX)
}

pub fn potential_capped(b: &Belief, space: &StateSpace, psi_max: f64) -> PotentialValue {
    PotentialValue(psi_from_prob(b.prob(space.true_state_index()), psi_max))
}

/// `Σ_s |b(s) − b′(s)|`.
pub fn l1_distance(b: &Belief, other: &Belief) -> Result<f64> {
    if b.len() != other.len() {
        return Err(Error::DimensionMismatch {
            expected: b.len(),
            got: other.len(),
        });
    }
    Ok(b.probs()
        .iter()
        .zip(other.probs())
        .map(|(p, q)| (p - q).abs())
        .sum())
}

/// One-step informativeness `I(b, a) = Ψ(b) − E_{o∼O(·|s⋆,a)} Ψ(B⋆(b, a, o))`,
/// evaluated through its closed form `E_P[ln P(o) / Q_b(o)]`.
pub fn informativeness(
    b: &Belief,
    action: usize,
    space: &StateSpace,
    model: &ObservationModel,
) -> Result<f64> {
    model.check_dims(b, action, None)?;
    let truth = space.true_state_index();
    if b.prob(truth) <= 0.0 {
        // Both potentials saturate.
        return Ok(0.0);
    }
    let q = model.predictive(b, action);
    let mut total = 0.0;
    for (o, &qo) in q.iter().enumerate() {
        let p = model.likelihood(o, truth, action);
        if p > 0.0 {
            total += p * (p / qo).ln();
        }
    }
    Ok(total.max(0.0))
}

/// Belief-averaged informativeness: the mutual information between the
/// latent state (drawn from `b`) and the observation of `action`.
///
/// Unlike [`informativeness`] this does not consult `s⋆`, so it is the score
/// a policy can actually compute.
pub fn expected_information_gain(b: &Belief, action: usize, model: &ObservationModel) -> f64 {
    let k = model.num_observations();
    let q = model.predictive(b, action);
    let entropy = |p: f64| if p > 0.0 { -p * p.ln() } else { 0.0 };
    let predictive_entropy: f64 = q.iter().map(|&x| entropy(x)).sum();
    // Every row O(·|s,a) has the same entropy: one peak and K−1 floors.
    let row_entropy = entropy(model.peak()) + (k as f64 - 1.0) * entropy(model.floor());
    (predictive_entropy - row_entropy).max(0.0)
}

/// Action distribution conditioned on a belief, dense over all actions.
pub trait Policy {
    fn distribution(&self, b: &Belief) -> Result<Vec<f64>>;
}

/// Belief update operator `B(b, a, o)`.
pub trait Updater {
    fn update(&self, b: &Belief, action: usize, observation: usize) -> Result<Belief>;

    /// Posterior mass on one state; override when a closed form exists.
    fn posterior_at(
        &self,
        b: &Belief,
        action: usize,
        observation: usize,
        state: usize,
    ) -> Result<f64> {
        Ok(self.update(b, action, observation)?.prob(state))
    }
}

/// The exact Bayesian updater `B⋆`.
#[derive(Debug, Clone)]
pub struct ExactBayes {
    pub model: ObservationModel,
}

impl Updater for ExactBayes {
    fn update(&self, b: &Belief, action: usize, observation: usize) -> Result<Belief> {
        bayes_update(b, action, observation, &self.model)
    }

    fn posterior_at(
        &self,
        b: &Belief,
        action: usize,
        observation: usize,
        state: usize,
    ) -> Result<f64> {
        bayes_posterior_at(b, action, observation, state, &self.model)
    }
}

/// How expectations over `(a, o)` are evaluated.
#[derive(Debug, Clone, Copy)]
pub struct ExpectationOptions {
    pub enumeration_cap: usize,
    pub draws: usize,
    pub seed: u64,
    pub psi_max: f64,
}

impl Default for ExpectationOptions {
    fn default() -> Self {
        Self {
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            draws: 10_000,
            seed: 0,
            psi_max: DEFAULT_PSI_MAX,
        }
    }
}

/// Expectation value; `std_error` is zero when enumerated exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub exact: bool,
}

/// Averages `f(a, o)` over `a ∼ π(·|b)` and `o ∼ O(·|s⋆, a)`.
fn expect_over_outcomes<F>(
    b: &Belief,
    policy: &dyn Policy,
    space: &StateSpace,
    model: &ObservationModel,
    options: &ExpectationOptions,
    mut f: F,
) -> Result<Estimate>
where
    F: FnMut(usize, usize) -> Result<f64>,
{
    let truth = space.true_state_index();
    let pi = policy.distribution(b)?;
    if pi.len() != model.num_actions() {
        return Err(Error::DimensionMismatch {
            expected: model.num_actions(),
            got: pi.len(),
        });
    }
    let k = model.num_observations();
    if pi.len().saturating_mul(k) <= options.enumeration_cap {
        let mut total = 0.0;
        for (a, &pa) in pi.iter().enumerate() {
            if pa <= 0.0 {
                continue;
            }
            for o in 0..k {
                let po = model.likelihood(o, truth, a);
                if po > 0.0 {
                    total += pa * po * f(a, o)?;
                }
            }
        }
        return Ok(Estimate {
            value: total,
            std_error: 0.0,
            exact: true,
        });
    }

    let draws = options.draws.max(2);
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let cumulative: Vec<f64> = pi
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let total_mass = *cumulative.last().unwrap_or(&1.0);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..draws {
        let u = rng.gen::<f64>() * total_mass;
        let a = cumulative.partition_point(|&c| c <= u).min(pi.len() - 1);
        let o = if rng.gen::<f64>() < 1.0 - model.mixing() {
            model.outcome(truth, a)
        } else {
            rng.gen_range(0..k)
        };
        let x = f(a, o)?;
        sum += x;
        sum_sq += x * x;
    }
    let n = draws as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(Estimate {
        value: mean,
        std_error: (var / n).sqrt(),
        exact: false,
    })
}

/// Policy-averaged informativeness `E_{a∼π(·|b)} I(b, a)`.
pub fn mean_informativeness(
    b: &Belief,
    policy: &dyn Policy,
    space: &StateSpace,
    model: &ObservationModel,
) -> Result<f64> {
    let pi = policy.distribution(b)?;
    let mut total = 0.0;
    for (a, &pa) in pi.iter().enumerate() {
        if pa > 0.0 {
            total += pa * informativeness(b, a, space, model)?;
        }
    }
    Ok(total)
}

/// One-step agent progress `P_θ(b) = Ψ(b) − E_a E_o Ψ(B_θ(b, a, o))`.
pub fn agent_progress(
    b: &Belief,
    policy: &dyn Policy,
    updater: &dyn Updater,
    space: &StateSpace,
    model: &ObservationModel,
    options: &ExpectationOptions,
) -> Result<Estimate> {
    let truth = space.true_state_index();
    let psi = psi_from_prob(b.prob(truth), options.psi_max);
    let next = expect_over_outcomes(b, policy, space, model, options, |a, o| {
        Ok(psi_from_prob(
            updater.posterior_at(b, a, o, truth)?,
            options.psi_max,
        ))
    })?;
    Ok(Estimate {
        value: psi - next.value,
        ..next
    })
}

/// Conditional update error
/// `c_θ(b) = E_a E_o [Ψ(B_θ(b, a, o)) − Ψ(B⋆(b, a, o))]`.
pub fn update_error(
    b: &Belief,
    policy: &dyn Policy,
    updater: &dyn Updater,
    space: &StateSpace,
    model: &ObservationModel,
    options: &ExpectationOptions,
) -> Result<Estimate> {
    let truth = space.true_state_index();
    expect_over_outcomes(b, policy, space, model, options, |a, o| {
        let agent = psi_from_prob(updater.posterior_at(b, a, o, truth)?, options.psi_max);
        let exact = psi_from_prob(bayes_posterior_at(b, a, o, truth, model)?, options.psi_max);
        Ok(agent - exact)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Three states, two actions, deterministic outcomes.
    /// Action 0 separates {0,1} from {2}; action 1 is constant.
    fn three_state_model(eta: f64) -> ObservationModel {
        let table = ObservationTable::from_fn(3, 2, 2, |s, a| match a {
            0 => usize::from(s == 2),
            _ => 0,
        })
        .unwrap();
        ObservationModel::new(Arc::new(table), eta).unwrap()
    }

    struct Fixed(Vec<f64>);
    impl Policy for Fixed {
        fn distribution(&self, _b: &Belief) -> Result<Vec<f64>> {
            Ok(self.0.clone())
        }
    }

    struct ToUniform;
    impl Updater for ToUniform {
        fn update(&self, b: &Belief, _a: usize, _o: usize) -> Result<Belief> {
            Ok(Belief::uniform(b.len()))
        }
    }

    #[test]
    fn bayes_update_splits_consistent_states() {
        let m = three_state_model(0.0);
        let post = bayes_update(&Belief::uniform(3), 0, 0, &m).unwrap();
        assert_eq!(post.probs(), &[0.5, 0.5, 0.0]);
    }

    #[test]
    fn uninformative_observation_leaves_belief_unchanged() {
        let m = three_state_model(0.0);
        let b = Belief::new(vec![0.2, 0.3, 0.5]).unwrap();
        let post = bayes_update(&b, 1, 0, &m).unwrap();
        for (x, y) in post.probs().iter().zip(b.probs()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-15);
        }
    }

    #[test]
    fn single_consistent_state_becomes_point_mass() {
        let table = ObservationTable::from_fn(4, 1, 4, |s, _| s).unwrap();
        let m = ObservationModel::deterministic(Arc::new(table));
        let post = bayes_update(&Belief::uniform(4), 0, 2, &m).unwrap();
        assert_eq!(post.probs(), &[0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn degenerate_normalizer_is_an_error() {
        let m = three_state_model(0.0);
        let b = Belief::point_mass(3, 0);
        assert!(matches!(
            bayes_update(&b, 0, 1, &m),
            Err(Error::DegenerateNormalizer { .. })
        ));
    }

    #[test]
    fn smoothed_model_rows_sum_to_one_with_floor_eta() {
        let m = three_state_model(0.2);
        for s in 0..3 {
            for a in 0..2 {
                let row = m.row(s, a);
                assert_abs_diff_eq!(row.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
                assert!(row.iter().all(|&x| x >= 0.2 - 1e-15));
            }
        }
        assert!(ObservationModel::new(m.table().clone(), 0.6).is_err());
    }

    #[test]
    fn potential_values() {
        let space = StateSpace::indexed(2, 0).unwrap();
        assert_eq!(potential(&Belief::point_mass(2, 0), &space).value(), 0.0);
        assert_abs_diff_eq!(
            potential(&Belief::uniform(2), &space).value(),
            std::f64::consts::LN_2,
            epsilon = 1e-15
        );
        let zero = potential(&Belief::point_mass(2, 1), &space);
        assert_eq!(zero.value(), DEFAULT_PSI_MAX);
        assert!(zero.is_saturated(DEFAULT_PSI_MAX));
    }

    #[test]
    fn l1_distance_examples() {
        let a = Belief::new(vec![0.5, 0.5]).unwrap();
        let b = Belief::new(vec![0.75, 0.25]).unwrap();
        assert_eq!(l1_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(
            l1_distance(&Belief::point_mass(2, 0), &Belief::point_mass(2, 1)).unwrap(),
            2.0
        );
        assert_abs_diff_eq!(l1_distance(&a, &b).unwrap(), 0.5, epsilon = 1e-15);
        assert!(l1_distance(&a, &Belief::uniform(3)).is_err());
    }

    #[test]
    fn informativeness_zero_at_point_mass_and_for_constant_rows() {
        let m = three_state_model(0.1);
        let space = StateSpace::indexed(3, 2).unwrap();
        assert_eq!(
            informativeness(&Belief::point_mass(3, 2), 0, &space, &m).unwrap(),
            0.0
        );
        let b = Belief::new(vec![0.1, 0.6, 0.3]).unwrap();
        assert_abs_diff_eq!(
            informativeness(&b, 1, &space, &m).unwrap(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn informativeness_ln4_on_isolating_partition() {
        // Four states, outcome classes {2} and {0,1,3}; s⋆ = 2.
        let table = ObservationTable::from_fn(4, 1, 2, |s, _| usize::from(s == 2)).unwrap();
        let m = ObservationModel::deterministic(Arc::new(table));
        let space = StateSpace::indexed(4, 2).unwrap();
        let got = informativeness(&Belief::uniform(4), 0, &space, &m).unwrap();
        // Brute force: the only outcome under s⋆ is `1`, posterior is δ_{s⋆}.
        let post = bayes_update(&Belief::uniform(4), 0, 1, &m).unwrap();
        let brute =
            potential(&Belief::uniform(4), &space).value() - potential(&post, &space).value();
        assert_abs_diff_eq!(got, brute, epsilon = 1e-12);
        assert_abs_diff_eq!(got, 4f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn informativeness_closed_form_matches_definition() {
        let m = three_state_model(0.15);
        let space = StateSpace::indexed(3, 1).unwrap();
        let b = Belief::new(vec![0.2, 0.3, 0.5]).unwrap();
        let psi = potential(&b, &space).value();
        let mut expected_next = 0.0;
        for o in 0..2 {
            let p = m.likelihood(o, 1, 0);
            let post = bayes_update(&b, 0, o, &m).unwrap();
            expected_next += p * potential(&post, &space).value();
        }
        assert_abs_diff_eq!(
            informativeness(&b, 0, &space, &m).unwrap(),
            psi - expected_next,
            epsilon = 1e-12
        );
    }

    #[test]
    fn exact_updater_has_zero_error_and_progress_equals_information() {
        let m = three_state_model(0.1);
        let space = StateSpace::indexed(3, 0).unwrap();
        let b = Belief::new(vec![0.3, 0.3, 0.4]).unwrap();
        let policy = Fixed(vec![0.7, 0.3]);
        let exact = ExactBayes { model: m.clone() };
        let opts = ExpectationOptions::default();
        let err = update_error(&b, &policy, &exact, &space, &m, &opts).unwrap();
        assert!(err.exact);
        assert_abs_diff_eq!(err.value, 0.0, epsilon = 1e-12);
        let progress = agent_progress(&b, &policy, &exact, &space, &m, &opts).unwrap();
        let info = mean_informativeness(&b, &policy, &space, &m).unwrap();
        assert_abs_diff_eq!(progress.value, info, epsilon = 1e-12);
    }

    #[test]
    fn uniform_resetting_updater_makes_negative_progress() {
        let m = three_state_model(0.1);
        let space = StateSpace::indexed(3, 0).unwrap();
        let b = Belief::new(vec![0.6, 0.2, 0.2]).unwrap();
        let policy = Fixed(vec![0.5, 0.5]);
        let opts = ExpectationOptions::default();
        let progress = agent_progress(&b, &policy, &ToUniform, &space, &m, &opts).unwrap();
        // Ψ(b) = −ln 0.6, next potential is ln 3 for every outcome.
        assert_abs_diff_eq!(progress.value, -(0.6f64.ln()) - 3f64.ln(), epsilon = 1e-12);
        assert!(progress.value < 0.0);

        // c_θ(b) enumerated by hand: ln 3 − E[Ψ(B⋆)].
        let mut expected = 0.0;
        for a in 0..2 {
            for o in 0..2 {
                let p = 0.5 * m.likelihood(o, 0, a);
                let post = bayes_update(&b, a, o, &m).unwrap();
                expected += p * (3f64.ln() - potential(&post, &space).value());
            }
        }
        let err = update_error(&b, &policy, &ToUniform, &space, &m, &opts).unwrap();
        assert_abs_diff_eq!(err.value, expected, epsilon = 1e-12);
    }

    #[test]
    fn point_mass_on_truth_makes_no_progress() {
        let m = three_state_model(0.0);
        let space = StateSpace::indexed(3, 1).unwrap();
        let b = Belief::point_mass(3, 1);
        let exact = ExactBayes { model: m.clone() };
        let progress = agent_progress(
            &b,
            &Fixed(vec![1.0, 0.0]),
            &exact,
            &space,
            &m,
            &ExpectationOptions::default(),
        )
        .unwrap();
        assert_eq!(progress.value, 0.0);
    }

    #[test]
    fn monte_carlo_path_agrees_with_enumeration() {
        let m = three_state_model(0.1);
        let space = StateSpace::indexed(3, 0).unwrap();
        let b = Belief::new(vec![0.6, 0.2, 0.2]).unwrap();
        let policy = Fixed(vec![0.5, 0.5]);
        let exact = update_error(
            &b,
            &policy,
            &ToUniform,
            &space,
            &m,
            &ExpectationOptions::default(),
        )
        .unwrap();
        let mc_opts = ExpectationOptions {
            enumeration_cap: 0,
            draws: 40_000,
            seed: 11,
            ..Default::default()
        };
        let mc = update_error(&b, &policy, &ToUniform, &space, &m, &mc_opts).unwrap();
        assert!(!mc.exact);
        assert!((mc.value - exact.value).abs() < 4.0 * mc.std_error + 1e-9);
    }

    #[test]
    fn state_space_validation() {
        assert!(StateSpace::new(vec![], 0).is_err());
        assert!(StateSpace::new(vec!["a".into(), "a".into()], 0).is_err());
        assert!(StateSpace::new(vec!["a".into()], 1).is_err());
    }

    #[test]
    fn belief_validation() {
        assert!(Belief::new(vec![0.5, 0.4]).is_err());
        assert!(Belief::new(vec![1.5, -0.5]).is_err());
        assert!(Belief::from_weights(vec![0.0, 0.0]).is_err());
        let b: Belief = serde_json::from_str("[0.25,0.75]").unwrap();
        assert_eq!(b.argmax(), (1, 0.75));
    }
}
