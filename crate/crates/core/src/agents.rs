//! Belief-conditioned policies and the imperfect updater family `B_θ`.
//!
//! Corrupted updaters run exact Bayes and then mix the posterior toward the
//! uniform belief. The mixing rate is either constant or grows linearly with
//! the potential of the prior, capped:
//!
//! ```text
//!   ε(b) = min(eps_cap, eps0 + slope · Ψ(b))
//!   B_θ(b, a, o) = (1 − ε(b)) · B⋆(b, a, o) + ε(b) · uniform
//! ```

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::belief::{
    bayes_posterior_at, bayes_update, expected_information_gain, l1_distance, psi_from_prob,
    Belief, ObservationModel, Policy, StateSpace, Updater, DEFAULT_PSI_MAX,
};
use crate::error::{Error, Result};
use crate::hypothesis::HypothesisSet;

/// Below this temperature the softmax policy becomes a deterministic argmax.
pub const TEMPERATURE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    InfogainSoftmax,
    UniformConsistent,
    FixedSequence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default)]
    pub seed: u64,
    /// Scripted actions for `fixed_sequence`; the last one repeats.
    #[serde(default)]
    pub sequence: Vec<usize>,
}

fn default_temperature() -> f64 {
    0.05
}

impl Default for PolicySpec {
    fn default() -> Self {
        Self {
            kind: PolicyKind::InfogainSoftmax,
            temperature: default_temperature(),
            seed: 0,
            sequence: Vec::new(),
        }
    }
}

impl PolicySpec {
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            PolicyKind::InfogainSoftmax if !(self.temperature > 0.0) => {
                Err(Error::InvalidParameter(format!(
                    "softmax temperature must be positive, got {}",
                    self.temperature
                )))
            }
            PolicyKind::FixedSequence if self.sequence.is_empty() => Err(Error::InvalidParameter(
                "fixed_sequence policy needs a non-empty sequence".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// What a policy may look at besides the belief.
#[derive(Debug, Clone, Copy)]
pub struct PolicyContext<'a> {
    pub model: &'a ObservationModel,
    pub legal_actions: &'a [usize],
    /// Consistent set tracked by the environment; the belief support is used
    /// when absent.
    pub hypotheses: Option<&'a HypothesisSet>,
    /// Action → state it names, for tasks whose actions are candidate answers.
    pub action_state: Option<&'a [usize]>,
    pub turn: usize,
}

fn softmax(scores: &[(usize, f64)], temperature: f64, n: usize) -> Vec<f64> {
    let mut dist = vec![0.0; n];
    if temperature < TEMPERATURE_FLOOR {
        let mut best = scores[0];
        for &(a, s) in &scores[1..] {
            if s > best.1 || (s == best.1 && a < best.0) {
                best = (a, s);
            }
        }
        dist[best.0] = 1.0;
        return dist;
    }
    let max = scores.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for &(a, s) in scores {
        let w = ((s - max) / temperature).exp();
        dist[a] = w;
        z += w;
    }
    dist.iter_mut().for_each(|p| *p /= z);
    dist
}

/// Dense action distribution `π(· | b)` over all actions of the model.
pub fn policy_distribution(
    spec: &PolicySpec,
    b: &Belief,
    ctx: &PolicyContext<'_>,
) -> Result<Vec<f64>> {
    if ctx.legal_actions.is_empty() {
        return Err(Error::Empty("legal action set".into()));
    }
    let n = ctx.model.num_actions();
    if let Some(&bad) = ctx.legal_actions.iter().find(|&&a| a >= n) {
        return Err(Error::Index(format!("legal action {bad} outside 0..{n}")));
    }
    match spec.kind {
        PolicyKind::InfogainSoftmax => {
            let scores: Vec<(usize, f64)> = ctx
                .legal_actions
                .iter()
                .map(|&a| (a, expected_information_gain(b, a, ctx.model)))
                .collect();
            Ok(softmax(&scores, spec.temperature, n))
        }
        PolicyKind::UniformConsistent => {
            let support;
            let h = match ctx.hypotheses {
                Some(h) => h,
                None => {
                    let members = (0..b.len()).filter(|&s| b.prob(s) > 0.0).collect();
                    support = HypothesisSet::from_members(members, b.len())?;
                    &support
                }
            };
            let table = ctx.model.table().as_ref();
            let chosen: Vec<usize> = match ctx.action_state {
                Some(map) => ctx
                    .legal_actions
                    .iter()
                    .copied()
                    .filter(|&a| h.contains(map[a]))
                    .collect(),
                None => ctx
                    .legal_actions
                    .iter()
                    .copied()
                    .filter(|&a| h.splits(a, table))
                    .collect(),
            };
            let chosen = if chosen.is_empty() {
                ctx.legal_actions.to_vec()
            } else {
                chosen
            };
            let mut dist = vec![0.0; n];
            let p = 1.0 / chosen.len() as f64;
            for a in chosen {
                dist[a] = p;
            }
            Ok(dist)
        }
        PolicyKind::FixedSequence => {
            let idx = ctx.turn.min(spec.sequence.len().saturating_sub(1));
            let a = *spec
                .sequence
                .get(idx)
                .ok_or_else(|| Error::Empty("fixed_sequence policy has no actions".into()))?;
            if !ctx.legal_actions.contains(&a) {
                return Err(Error::InvalidParameter(format!(
                    "scripted action {a} is not legal"
                )));
            }
            let mut dist = vec![0.0; n];
            dist[a] = 1.0;
            Ok(dist)
        }
    }
}

/// A [`PolicySpec`] bound to a context, usable where a [`Policy`] is expected.
pub struct BoundPolicy<'a> {
    pub spec: &'a PolicySpec,
    pub ctx: PolicyContext<'a>,
}

impl Policy for BoundPolicy<'_> {
    fn distribution(&self, b: &Belief) -> Result<Vec<f64>> {
        policy_distribution(self.spec, b, &self.ctx)
    }
}

/// Draws an action from a dense distribution with one uniform variate.
pub fn sample_action(dist: &[f64], u: f64) -> usize {
    let total: f64 = dist.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (a, &p) in dist.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = a;
        if target < acc {
            return a;
        }
    }
    last
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionKind {
    None,
    UniformMix,
    PsiCoupledMix,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorruptionSpec {
    pub kind: CorruptionKind,
    #[serde(default)]
    pub eps0: f64,
    #[serde(default)]
    pub slope: f64,
    #[serde(default = "one")]
    pub eps_cap: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for CorruptionSpec {
    fn default() -> Self {
        Self::none()
    }
}

impl CorruptionSpec {
    pub fn none() -> Self {
        Self {
            kind: CorruptionKind::None,
            eps0: 0.0,
            slope: 0.0,
            eps_cap: 1.0,
        }
    }

    pub fn uniform_mix(eps0: f64) -> Self {
        Self {
            kind: CorruptionKind::UniformMix,
            eps0,
            slope: 0.0,
            eps_cap: 1.0,
        }
    }

    pub fn psi_coupled(eps0: f64, slope: f64, eps_cap: f64) -> Self {
        Self {
            kind: CorruptionKind::PsiCoupledMix,
            eps0,
            slope,
            eps_cap,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == CorruptionKind::None {
            return Ok(());
        }
        let ok = (0.0..=1.0).contains(&self.eps0)
            && (0.0..=1.0).contains(&self.eps_cap)
            && self.slope >= 0.0
            && self.slope.is_finite();
        let ordered = self.kind == CorruptionKind::UniformMix || self.eps0 <= self.eps_cap;
        if !(ok && ordered) {
            return Err(Error::InvalidParameter(format!(
                "corruption needs 0 <= eps0 <= eps_cap <= 1 and slope >= 0, got {self:?}"
            )));
        }
        Ok(())
    }

    /// Mixing rate applied when updating from prior potential `psi`.
    pub fn mix_rate(&self, psi: f64) -> f64 {
        match self.kind {
            CorruptionKind::None => 0.0,
            CorruptionKind::UniformMix => self.eps0,
            CorruptionKind::PsiCoupledMix => self.eps_cap.min(self.eps0 + self.slope * psi),
        }
    }
}

/// `B_θ(b, a, o)` for the mixing family.
pub fn corrupted_update(
    spec: &CorruptionSpec,
    b: &Belief,
    action: usize,
    observation: usize,
    space: &StateSpace,
    model: &ObservationModel,
) -> Result<Belief> {
    let posterior = bayes_update(b, action, observation, model)?;
    let psi = psi_from_prob(b.prob(space.true_state_index()), DEFAULT_PSI_MAX);
    let eps = spec.mix_rate(psi);
    if eps == 0.0 {
        return Ok(posterior);
    }
    posterior.mix(&Belief::uniform(b.len()), eps)
}

/// [`Updater`] wrapper around [`corrupted_update`].
#[derive(Debug, Clone)]
pub struct CorruptedUpdater {
    pub spec: CorruptionSpec,
    pub space: StateSpace,
    pub model: ObservationModel,
}

impl Updater for CorruptedUpdater {
    fn update(&self, b: &Belief, action: usize, observation: usize) -> Result<Belief> {
        corrupted_update(&self.spec, b, action, observation, &self.space, &self.model)
    }

    fn posterior_at(
        &self,
        b: &Belief,
        action: usize,
        observation: usize,
        state: usize,
    ) -> Result<f64> {
        let exact = bayes_posterior_at(b, action, observation, state, &self.model)?;
        let psi = psi_from_prob(b.prob(self.space.true_state_index()), DEFAULT_PSI_MAX);
        let eps = self.spec.mix_rate(psi);
        Ok((1.0 - eps) * exact + eps / b.len() as f64)
    }
}

/// Empirical `L_π` with the pair that attains it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzEstimate {
    pub value: f64,
    pub pairs_used: usize,
    pub argmax_pair: Option<usize>,
}

pub const MIN_LIPSCHITZ_PAIRS: usize = 100;

/// `max TV(π(·|b), π(·|b′)) / ‖b − b′‖₁` over the supplied pairs; pairs with
/// `b = b′` are skipped.
pub fn estimate_lipschitz_lpi(
    policy: &dyn Policy,
    pairs: &[(Belief, Belief)],
) -> Result<LipschitzEstimate> {
    if pairs.len() < MIN_LIPSCHITZ_PAIRS {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_LIPSCHITZ_PAIRS} belief pairs, got {}",
            pairs.len()
        )));
    }
    let mut est = LipschitzEstimate {
        value: 0.0,
        pairs_used: 0,
        argmax_pair: None,
    };
    for (i, (b, b2)) in pairs.iter().enumerate() {
        let d = l1_distance(b, b2)?;
        if d == 0.0 {
            continue;
        }
        est.pairs_used += 1;
        let (p, q) = (policy.distribution(b)?, policy.distribution(b2)?);
        let tv = 0.5 * p.iter().zip(&q).map(|(x, y)| (x - y).abs()).sum::<f64>();
        let ratio = tv / d;
        if est.argmax_pair.is_none() || ratio > est.value {
            est.value = ratio;
            est.argmax_pair = Some(i);
        }
    }
    Ok(est)
}

/// Random belief pairs over `n` states: half independent draws, half small
/// perturbations of a shared base (where policy sensitivity peaks).
pub fn random_belief_pairs(n: usize, count: usize, seed: u64) -> Vec<(Belief, Belief)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| {
        let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        Belief::from_weights(w).expect("positive weights")
    };
    (0..count)
        .map(|i| {
            let b = draw(&mut rng);
            let b2 = if i % 2 == 0 {
                draw(&mut rng)
            } else {
                let scale = 10f64.powf(-rng.gen_range(1.0..4.0));
                let w = b
                    .probs()
                    .iter()
                    .map(|p| p * (1.0 + scale * (rng.gen::<f64>() - 0.5)))
                    .collect();
                Belief::from_weights(w).expect("positive weights")
            };
            (b, b2)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::ObservationTable;
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    fn model() -> ObservationModel {
        // Two actions over three states: action 0 separates state 2, action 1
        // separates state 0; both equally informative under a uniform belief.
        let t = ObservationTable::from_fn(3, 2, 2, |s, a| usize::from(s == 2 - 2 * a)).unwrap();
        ObservationModel::new(Arc::new(t), 0.05).unwrap()
    }

    fn ctx<'a>(m: &'a ObservationModel, legal: &'a [usize]) -> PolicyContext<'a> {
        PolicyContext {
            model: m,
            legal_actions: legal,
            hypotheses: None,
            action_state: None,
            turn: 0,
        }
    }

    #[test]
    fn softmax_symmetry_and_argmax_limit() {
        let m = model();
        let legal = [0, 1];
        let spec = PolicySpec {
            temperature: 1.0,
            ..Default::default()
        };
        let d = policy_distribution(&spec, &Belief::uniform(3), &ctx(&m, &legal)).unwrap();
        assert_abs_diff_eq!(d[0], 0.5, epsilon = 1e-12);
        let skew = Belief::new(vec![0.1, 0.45, 0.45]).unwrap();
        let cold = PolicySpec {
            temperature: 1e-9,
            ..Default::default()
        };
        let d = policy_distribution(&cold, &skew, &ctx(&m, &legal)).unwrap();
        assert_eq!(d, vec![1.0, 0.0]);
    }

    #[test]
    fn uniform_consistent_over_guess_set() {
        let t = ObservationTable::from_fn(20, 20, 2, |s, a| usize::from(s == a)).unwrap();
        let m = ObservationModel::deterministic(Arc::new(t));
        let legal: Vec<usize> = (0..20).collect();
        let h = HypothesisSet::from_members((0..12).collect(), 20).unwrap();
        let map: Vec<usize> = (0..20).collect();
        let c = PolicyContext {
            hypotheses: Some(&h),
            action_state: Some(&map),
            ..ctx(&m, &legal)
        };
        let spec = PolicySpec {
            kind: PolicyKind::UniformConsistent,
            ..Default::default()
        };
        let d = policy_distribution(&spec, &Belief::uniform(20), &c).unwrap();
        assert!(d[..12].iter().all(|&p| (p - 1.0 / 12.0).abs() < 1e-15));
        assert!(d[12..].iter().all(|&p| p == 0.0));
    }

    #[test]
    fn fixed_sequence_is_scripted() {
        let m = model();
        let legal = [0, 1];
        let spec = PolicySpec {
            kind: PolicyKind::FixedSequence,
            sequence: vec![1, 0],
            ..Default::default()
        };
        let mut c = ctx(&m, &legal);
        assert_eq!(
            policy_distribution(&spec, &Belief::uniform(3), &c).unwrap(),
            vec![0.0, 1.0]
        );
        c.turn = 5;
        assert_eq!(
            policy_distribution(&spec, &Belief::uniform(3), &c).unwrap(),
            vec![1.0, 0.0]
        );
        let pairs = random_belief_pairs(3, 120, 1);
        let est = estimate_lipschitz_lpi(
            &BoundPolicy {
                spec: &spec,
                ctx: c,
            },
            &pairs,
        )
        .unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn lipschitz_skips_identical_pairs() {
        let m = model();
        let legal = [0, 1];
        let spec = PolicySpec {
            temperature: 100.0,
            ..Default::default()
        };
        let mut pairs = random_belief_pairs(3, 100, 2);
        pairs[0] = (Belief::uniform(3), Belief::uniform(3));
        let est = estimate_lipschitz_lpi(
            &BoundPolicy {
                spec: &spec,
                ctx: ctx(&m, &legal),
            },
            &pairs,
        )
        .unwrap();
        assert_eq!(est.pairs_used, 99);
        assert!(est.value > 0.0 && est.value < 0.05);
        assert!(estimate_lipschitz_lpi(
            &BoundPolicy {
                spec: &spec,
                ctx: ctx(&m, &legal)
            },
            &pairs[..50]
        )
        .is_err());
    }

    #[test]
    fn corruption_arithmetic() {
        let t = ObservationTable::from_fn(2, 1, 2, |s, _| s).unwrap();
        let m = ObservationModel::deterministic(Arc::new(t));
        let space = StateSpace::indexed(2, 0).unwrap();
        let b = Belief::uniform(2);
        let half =
            corrupted_update(&CorruptionSpec::uniform_mix(0.5), &b, 0, 0, &space, &m).unwrap();
        assert_eq!(half.probs(), &[0.75, 0.25]);
        let full =
            corrupted_update(&CorruptionSpec::uniform_mix(1.0), &b, 0, 0, &space, &m).unwrap();
        assert_eq!(full.probs(), &[0.5, 0.5]);
        let none = corrupted_update(&CorruptionSpec::none(), &b, 0, 0, &space, &m).unwrap();
        assert_eq!(none, bayes_update(&b, 0, 0, &m).unwrap());
    }

    #[test]
    fn psi_coupled_rate_grows_then_caps() {
        let spec = CorruptionSpec::psi_coupled(0.1, 0.3, 0.6);
        assert_abs_diff_eq!(spec.mix_rate(0.0), 0.1);
        assert_abs_diff_eq!(spec.mix_rate(1.0), 0.4, epsilon = 1e-15);
        assert_eq!(spec.mix_rate(10.0), 0.6);
        assert!(CorruptionSpec::psi_coupled(0.7, 0.3, 0.6)
            .validate()
            .is_err());
        assert!(CorruptionSpec::uniform_mix(1.2).validate().is_err());
    }

    #[test]
    fn sampling_respects_support() {
        let d = [0.0, 0.25, 0.0, 0.75];
        assert_eq!(sample_action(&d, 0.0), 1);
        assert_eq!(sample_action(&d, 0.3), 3);
        assert_eq!(sample_action(&d, 0.999_999), 3);
    }
}
