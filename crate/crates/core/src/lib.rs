//! Desk-scale laboratory for belief traps in active reasoning.
//!
//! The crate simulates agents that gather evidence in small enumerable
//! games, tracks their (possibly corrupted) beliefs next to the exact
//! Bayesian posterior, and measures when the agent stops making progress.
//! Around that core it provides:
//!
//! - [`belief`]: beliefs, Bayes updates, the truth-anchored potential `Ψ`,
//!   informativeness, agent progress and update error.
//! - [`env`]: GuessNumbers, CircuitDecoding and PreferenceEstimation
//!   mechanics plus JSON instance files.
//! - [`hypothesis`]: consistent-hypothesis sets and elimination progress.
//! - [`agents`]: belief-conditioned policies and imperfect updaters.
//! - [`btr`]: trap constants, hitting-time bounds, empirical trap detection.
//! - [`advantage`]: TD errors, GAE, truncated GAE and the inversion bound.
//! - [`truncation`]: windowed progress rules and their task-specific forms.
//! - [`runner`]: seeded rollouts, experiment outputs and verification suites.
//!
//! ```
//! use belief_trap::belief::{bayes_update, potential, Belief};
//! use belief_trap::env::gn::GuessNumbersInstance;
//!
//! let inst = GuessNumbersInstance::from_preset(3, 5, 1, 2, 7).unwrap();
//! let task = inst.task().unwrap();
//! let model = task.model(0.0).unwrap();
//! let (a0, o0) = task.initial_step.unwrap();
//! let b = bayes_update(&Belief::uniform(task.space.len()), a0, o0, &model).unwrap();
//! assert!(potential(&b, &task.space).value() < (60f64).ln());
//! ```

// Negated comparisons deliberately reject NaN alongside out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod advantage;
pub mod agents;
pub mod belief;
pub mod btr;
pub mod env;
pub mod error;
pub mod hypothesis;
pub mod runner;
pub mod truncation;

pub use error::{Error, Result};
