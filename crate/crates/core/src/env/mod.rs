//! Task mechanics and instance files.
//!
//! Each environment compiles an instance into a [`Task`]: an enumerated state
//! space with the true state marked, a dense deterministic outcome table, and
//! the labels and embeddings the runner needs for logging and truncation.

pub mod cd;
pub mod gn;
pub mod pe;

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::belief::{ObservationModel, ObservationTable, StateSpace};
use crate::error::{Error, Result};

pub use cd::{cd_eval, Circuit, CircuitInstance};
pub use gn::{gn_enumerate_states, gn_feedback, GuessNumbersInstance};
pub use pe::{
    binary_similarity, cosine_similarity, mr_recommend, pe_compare, pe_grid_states, pe_score,
    Comparison, Movie, PreferenceInstance,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    GuessNumbers,
    CircuitDecoding,
    PreferenceEstimation,
}

/// A compiled, immutable task shared by every rollout on an instance.
#[derive(Debug, Clone)]
pub struct Task {
    pub kind: TaskKind,
    pub space: StateSpace,
    pub table: Arc<ObservationTable>,
    pub action_labels: Vec<String>,
    pub observation_labels: Vec<String>,
    /// For tasks where an action names a candidate answer (GN guesses).
    pub action_state: Option<Vec<usize>>,
    /// Per-action query embedding for similarity-based truncation.
    pub action_embeddings: Vec<Vec<f64>>,
    /// Per-state feature vector (PE weights), used for posterior means.
    pub state_features: Option<Vec<Vec<f64>>>,
    /// Scripted opening `(action, observation)` applied before the first turn.
    pub initial_step: Option<(usize, usize)>,
    /// Observation that ends the episode in success.
    pub solved_observation: Option<usize>,
}

impl Task {
    pub fn model(&self, eta: f64) -> Result<ObservationModel> {
        if eta == 0.0 {
            Ok(ObservationModel::deterministic(self.table.clone()))
        } else {
            ObservationModel::new(self.table.clone(), eta)
        }
    }

    pub fn num_actions(&self) -> usize {
        self.action_labels.len()
    }
}

/// Tagged instance document, `{"task": "...", ...fields}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum Instance {
    GuessNumbers(GuessNumbersInstance),
    CircuitDecoding(CircuitInstance),
    PreferenceEstimation(PreferenceInstance),
}

impl Instance {
    pub fn validate(&self) -> Result<()> {
        match self {
            Instance::GuessNumbers(i) => i.validate(),
            Instance::CircuitDecoding(i) => i.validate(),
            Instance::PreferenceEstimation(i) => i.validate(),
        }
    }

    pub fn task(&self) -> Result<Task> {
        match self {
            Instance::GuessNumbers(i) => i.task(),
            Instance::CircuitDecoding(i) => i.task(),
            Instance::PreferenceEstimation(i) => i.task(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let inst: Instance =
            serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        inst.validate()?;
        Ok(inst)
    }

    /// Canonical serialization: pretty JSON, fixed field order, trailing newline.
    pub fn to_json(&self) -> Result<String> {
        let mut s =
            serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_json_round_trip_is_byte_stable() {
        let docs = [
            Instance::GuessNumbers(GuessNumbersInstance::from_preset(3, 5, 1, 2, 1).unwrap()),
            Instance::CircuitDecoding(CircuitInstance::default_library(2, 5).unwrap()),
            Instance::PreferenceEstimation(PreferenceInstance::default_catalogue(2).unwrap()),
        ];
        for inst in docs {
            let text = inst.to_json().unwrap();
            let back = Instance::from_json(&text).unwrap();
            assert_eq!(back, inst);
            assert_eq!(back.to_json().unwrap(), text);
        }
    }

    #[test]
    fn invalid_documents_rejected() {
        assert!(Instance::from_json(r#"{"task":"guess_numbers"}"#).is_err());
        let bad = r#"{"task":"circuit_decoding","num_inputs":2,"candidates":["AND"],
                      "hidden_assignment":{"A":3}}"#;
        assert!(Instance::from_json(bad).is_err());
    }
}
