//! GuessNumbers: find an `a`-digit secret of distinct symbols from `{1..b}`.
//!
//! Every guess is answered with `xAyB`: `x` digits right in value and
//! position, `y` digits right in value but misplaced.

use serde::{Deserialize, Serialize};

use super::{Task, TaskKind};
use crate::belief::{ObservationTable, StateSpace};
use crate::error::{Error, Result};

/// Named sub-groups `(a, b, x0, y0)`: digits, symbols, and the feedback the
/// fixed opening guess `(1, 2, …, a)` receives.
pub const PRESETS: [(usize, usize, usize, usize); 9] = [
    (3, 4, 0, 3),
    (3, 4, 2, 0),
    (3, 4, 1, 2),
    (3, 5, 1, 2),
    (3, 5, 0, 3),
    (3, 5, 1, 0),
    (3, 5, 2, 0),
    (4, 4, 0, 4),
    (4, 5, 3, 0),
];

/// Preset name, e.g. `gn-3-5-1-2`.
pub fn preset_name(p: (usize, usize, usize, usize)) -> String {
    format!("gn-{}-{}-{}-{}", p.0, p.1, p.2, p.3)
}

pub fn parse_preset(name: &str) -> Option<(usize, usize, usize, usize)> {
    PRESETS.iter().copied().find(|&p| preset_name(p) == name)
}

/// `xAyB` feedback of `guess` against `secret`.
pub fn gn_feedback(guess: &[u8], secret: &[u8]) -> Result<(usize, usize)> {
    if guess.len() != secret.len() {
        return Err(Error::DimensionMismatch {
            expected: secret.len(),
            got: guess.len(),
        });
    }
    let x = guess.iter().zip(secret).filter(|(g, s)| g == s).count();
    let shared = guess
        .iter()
        .enumerate()
        .filter(|&(i, g)| secret[i] != *g && secret.contains(g))
        .count();
    Ok((x, shared))
}

/// Number of ordered `a`-permutations of `b` symbols, `b!/(b−a)!`.
pub fn permutation_count(a: usize, b: usize) -> u128 {
    if a > b {
        return 0;
    }
    ((b - a + 1)..=b).map(|v| v as u128).product()
}

/// All ordered `a`-permutations of `{1..b}` in lexicographic order.
pub fn gn_permutations(a: usize, b: usize) -> Result<Vec<Vec<u8>>> {
    if a == 0 || a > b {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= a <= b, got a={a}, b={b}"
        )));
    }
    if b > u8::MAX as usize {
        return Err(Error::InvalidParameter(format!(
            "b={b} exceeds symbol range"
        )));
    }
    let mut out = Vec::with_capacity(permutation_count(a, b) as usize);
    let mut current = Vec::with_capacity(a);
    let mut used = vec![false; b + 1];
    fn rec(a: usize, b: usize, cur: &mut Vec<u8>, used: &mut [bool], out: &mut Vec<Vec<u8>>) {
        if cur.len() == a {
            out.push(cur.clone());
            return;
        }
        for s in 1..=b {
            if !used[s] {
                used[s] = true;
                cur.push(s as u8);
                rec(a, b, cur, used, out);
                cur.pop();
                used[s] = false;
            }
        }
    }
    rec(a, b, &mut current, &mut used, &mut out);
    Ok(out)
}

pub fn digits_label(digits: &[u8]) -> String {
    if digits.iter().all(|&d| d < 10) {
        digits.iter().map(|d| char::from(b'0' + d)).collect()
    } else {
        digits
            .iter()
            .map(u8::to_string)
            .collect::<Vec<_>>()
            .join("-")
    }
}

/// State space of all secrets; `s⋆` defaults to the first permutation.
pub fn gn_enumerate_states(a: usize, b: usize) -> Result<StateSpace> {
    let perms = gn_permutations(a, b)?;
    StateSpace::new(perms.iter().map(|p| digits_label(p)).collect(), 0)
}

/// Observation alphabet: every `(x, y)` with `x + y ≤ a`, `x` major.
pub fn feedback_alphabet(a: usize) -> Vec<(usize, usize)> {
    (0..=a)
        .flat_map(|x| (0..=(a - x)).map(move |y| (x, y)))
        .collect()
}

pub fn feedback_index(a: usize, x: usize, y: usize) -> usize {
    (0..x).map(|xp| a - xp + 1).sum::<usize>() + y
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuessNumbersInstance {
    pub num_digits: usize,
    pub num_symbols: usize,
    pub secret: Vec<u8>,
    pub initial_guess: Vec<u8>,
    pub initial_feedback: (usize, usize),
}

impl GuessNumbersInstance {
    pub fn new(
        num_digits: usize,
        num_symbols: usize,
        secret: Vec<u8>,
        initial_guess: Vec<u8>,
    ) -> Result<Self> {
        let initial_feedback = gn_feedback(&initial_guess, &secret)?;
        let inst = Self {
            num_digits,
            num_symbols,
            secret,
            initial_guess,
            initial_feedback,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Draws a secret from the preset's feedback class, deterministically in
    /// `seed`. The opening guess is `(1, …, a)`.
    pub fn from_preset(a: usize, b: usize, x0: usize, y0: usize, seed: u64) -> Result<Self> {
        let opening: Vec<u8> = (1..=a as u8).collect();
        let class: Vec<Vec<u8>> = gn_permutations(a, b)?
            .into_iter()
            .filter(|s| *s != opening && gn_feedback(&opening, s).ok() == Some((x0, y0)))
            .collect();
        if class.is_empty() {
            return Err(Error::InvalidInstance(format!(
                "no secret of GN({a},{b}) answers the opening guess with {x0}A{y0}B"
            )));
        }
        let pick = (crate::runner::mix_seed(seed, 0x6e) % class.len() as u64) as usize;
        Self::new(a, b, class[pick].clone(), opening)
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = (self.num_digits, self.num_symbols);
        if a == 0 || a > b || b > u8::MAX as usize {
            return Err(Error::InvalidInstance(format!(
                "need 1 <= a <= b, got a={a}, b={b}"
            )));
        }
        for (name, seq) in [
            ("secret", &self.secret),
            ("initial_guess", &self.initial_guess),
        ] {
            if seq.len() != a {
                return Err(Error::InvalidInstance(format!(
                    "{name} must have {a} digits"
                )));
            }
            if seq.iter().any(|&d| d == 0 || d as usize > b) {
                return Err(Error::InvalidInstance(format!(
                    "{name} uses symbols outside 1..={b}"
                )));
            }
            let mut sorted = seq.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != a {
                return Err(Error::InvalidInstance(format!("{name} repeats a symbol")));
            }
        }
        if self.secret == self.initial_guess {
            return Err(Error::InvalidInstance(
                "initial guess already equals the secret".into(),
            ));
        }
        if gn_feedback(&self.initial_guess, &self.secret)? != self.initial_feedback {
            return Err(Error::InvalidInstance(
                "initial feedback disagrees with the secret".into(),
            ));
        }
        Ok(())
    }

    /// Builds the task: states and actions are both the permutations, and
    /// action `i` guesses state `i`.
    pub fn task(&self) -> Result<Task> {
        self.validate()?;
        let (a, b) = (self.num_digits, self.num_symbols);
        let perms = gn_permutations(a, b)?;
        let labels: Vec<String> = perms.iter().map(|p| digits_label(p)).collect();
        let truth = perms
            .iter()
            .position(|p| *p == self.secret)
            .expect("validated secret is a permutation");
        let opening = perms
            .iter()
            .position(|p| *p == self.initial_guess)
            .expect("validated guess is a permutation");
        let alphabet = feedback_alphabet(a);
        let table = ObservationTable::from_fn(perms.len(), perms.len(), alphabet.len(), |s, g| {
            let (x, y) = gn_feedback(&perms[g], &perms[s]).expect("equal lengths");
            feedback_index(a, x, y)
        })?;
        let embeddings = perms
            .iter()
            .map(|p| p.iter().map(|&d| f64::from(d)).collect())
            .collect();
        Ok(Task {
            kind: TaskKind::GuessNumbers,
            space: StateSpace::new(labels.clone(), truth)?,
            table: std::sync::Arc::new(table),
            action_labels: labels,
            observation_labels: alphabet.iter().map(|(x, y)| format!("{x}A{y}B")).collect(),
            action_state: Some((0..perms.len()).collect()),
            action_embeddings: embeddings,
            state_features: None,
            initial_step: Some((
                opening,
                feedback_index(a, self.initial_feedback.0, self.initial_feedback.1),
            )),
            solved_observation: Some(feedback_index(a, a, 0)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feedback_examples() {
        assert_eq!(gn_feedback(&[1, 2, 3, 4], &[1, 2, 3, 4]).unwrap(), (4, 0));
        assert_eq!(gn_feedback(&[3, 2, 1], &[1, 2, 3]).unwrap(), (1, 2));
        assert_eq!(gn_feedback(&[1, 2], &[3, 4]).unwrap(), (0, 0));
        assert!(gn_feedback(&[1, 2], &[1, 2, 3]).is_err());
    }

    #[test]
    fn state_counts() {
        assert_eq!(gn_enumerate_states(3, 5).unwrap().len(), 60);
        assert_eq!(gn_enumerate_states(1, 1).unwrap().len(), 1);
        assert!(gn_enumerate_states(4, 3).is_err());
        assert_eq!(permutation_count(4, 10), 5040);
    }

    #[test]
    fn alphabet_indexing_is_dense() {
        for a in 1..=5 {
            let alpha = feedback_alphabet(a);
            assert_eq!(alpha.len(), (a + 1) * (a + 2) / 2);
            for (i, &(x, y)) in alpha.iter().enumerate() {
                assert_eq!(feedback_index(a, x, y), i);
            }
        }
    }

    #[test]
    fn every_preset_has_a_secret() {
        for &(a, b, x, y) in &PRESETS {
            let inst = GuessNumbersInstance::from_preset(a, b, x, y, 3).unwrap();
            assert_eq!(inst.initial_feedback, (x, y));
            assert_ne!(inst.secret, inst.initial_guess);
            assert_eq!(parse_preset(&preset_name((a, b, x, y))), Some((a, b, x, y)));
        }
    }

    #[test]
    fn task_outcomes_match_feedback() {
        let inst = GuessNumbersInstance::from_preset(3, 4, 1, 2, 0).unwrap();
        let task = inst.task().unwrap();
        let (g0, o0) = task.initial_step.unwrap();
        use crate::belief::Evaluator;
        assert_eq!(task.table.observe(task.space.true_state_index(), g0), o0);
        assert_eq!(task.observation_labels[o0], "1A2B");
        assert_eq!(
            task.space.label(task.space.true_state_index()),
            digits_label(&inst.secret)
        );
    }

    #[test]
    fn invalid_instances_rejected() {
        assert!(GuessNumbersInstance::new(3, 5, vec![1, 2, 3], vec![1, 2, 3]).is_err());
        assert!(GuessNumbersInstance::new(3, 5, vec![1, 1, 3], vec![1, 2, 3]).is_err());
        assert!(GuessNumbersInstance::new(3, 5, vec![1, 6, 3], vec![1, 2, 4]).is_err());
        let mut inst = GuessNumbersInstance::new(3, 5, vec![3, 2, 1], vec![1, 2, 3]).unwrap();
        inst.initial_feedback = (0, 0);
        assert!(inst.validate().is_err());
    }
}
