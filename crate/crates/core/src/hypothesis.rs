//! Consistent-hypothesis sets `H_t` under deterministic feedback.
//!
//! With noiseless observations the exact posterior is uniform over `H_t`,
//! so this module doubles as a brute-force oracle for the Bayes filter.

use serde::{Deserialize, Serialize};

use crate::belief::{Belief, Evaluator, StateSpace};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisSet {
    /// Sorted, unique state indices.
    members: Vec<usize>,
    generation: usize,
    universe: usize,
}

impl HypothesisSet {
    pub fn init_full(space: &StateSpace) -> Self {
        Self {
            members: (0..space.len()).collect(),
            generation: 0,
            universe: space.len(),
        }
    }

    pub fn from_members(mut members: Vec<usize>, universe: usize) -> Result<Self> {
        members.sort_unstable();
        members.dedup();
        if members.last().is_some_and(|&m| m >= universe) {
            return Err(Error::SubsetViolation(format!(
                "member outside a universe of {universe} states"
            )));
        }
        Ok(Self {
            members,
            generation: 0,
            universe,
        })
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn contains(&self, state: usize) -> bool {
        self.members.binary_search(&state).is_ok()
    }

    pub fn is_subset_of(&self, other: &HypothesisSet) -> bool {
        self.members.iter().all(|&m| other.contains(m))
    }

    /// Keeps exactly the members whose evaluator output equals `observation`.
    pub fn filter_consistent(
        &self,
        action: usize,
        observation: usize,
        evaluator: &dyn Evaluator,
    ) -> Self {
        Self {
            members: self
                .members
                .iter()
                .copied()
                .filter(|&s| evaluator.observe(s, action) == observation)
                .collect(),
            generation: self.generation + 1,
            universe: self.universe,
        }
    }

    /// True when at least two members disagree on the action's outcome.
    pub fn splits(&self, action: usize, evaluator: &dyn Evaluator) -> bool {
        let mut it = self.members.iter().map(|&s| evaluator.observe(s, action));
        match it.next() {
            Some(first) => it.any(|o| o != first),
            None => false,
        }
    }
}

/// `d(H_prev, H_next) = |H_prev| − |H_next|`.
pub fn progress(prev: &HypothesisSet, next: &HypothesisSet) -> Result<usize> {
    if !next.is_subset_of(prev) {
        return Err(Error::SubsetViolation(
            "next hypothesis set is not contained in the previous one".into(),
        ));
    }
    Ok(prev.len() - next.len())
}

/// Uniform belief over the members of `h`.
pub fn belief_from_hypotheses(h: &HypothesisSet, space: &StateSpace) -> Result<Belief> {
    if h.is_empty() {
        return Err(Error::Empty("hypothesis set".into()));
    }
    if h.universe != space.len() {
        return Err(Error::DimensionMismatch {
            expected: space.len(),
            got: h.universe,
        });
    }
    let mut w = vec![0.0; space.len()];
    for &m in &h.members {
        w[m] = 1.0;
    }
    Belief::from_weights(w)
}
