//! Experiment orchestration: seeded rollouts, output files, and the
//! verification suites behind `belieftrap verify`.

pub mod config;
pub mod experiment;
pub mod rollout;
pub mod verify;

pub use config::{AnalysisConfig, EnvironmentConfig, ExperimentConfig, SweepConfig};
pub use experiment::{
    run_experiment, run_sweep, ConstantsReport, ExperimentOutput, SummaryRow, SweepOutput,
};
pub use rollout::{rollout, Prepared, TrajectoryRecord, TrajectoryStep};
pub use verify::{verify_suite, Check, Suite, VerifyOptions, VerifyReport};

/// SplitMix64 finalizer over `seed` and a salt; used to derive independent
/// per-rollout and per-purpose seeds from one experiment seed.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::mix_seed;

    #[test]
    fn seeds_are_spread() {
        let a: Vec<u64> = (0..100).map(|i| mix_seed(1, i)).collect();
        let mut b = a.clone();
        b.sort_unstable();
        b.dedup();
        assert_eq!(b.len(), 100);
        assert_eq!(mix_seed(1, 5), a[5]);
        assert_ne!(mix_seed(2, 5), a[5]);
    }
}
