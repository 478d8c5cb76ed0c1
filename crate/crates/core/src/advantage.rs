//! TD errors, generalized advantage estimation, and the truncation bound.
//!
//! Rewards are indexed `0..T`, values `0..=T` with `V_T = 0`:
//!
//! ```text
//!   δ_t  = r_t + γ V_{t+1} − V_t
//!   Â_t  = Σ_{j=0}^{T−t−1} (γλ)^j δ_{t+j}
//!   Â_t^pre = Σ_{j=0}^{t_S−t−1} (γλ)^j δ_{t+j}
//! ```
//!
//! When the belief in the truth drops by at least `ρ` per step after `t_S`
//! and values are calibrated with slope at least `κ`,
//! `E[Â_t] ≤ γ (S_pre − κ ρ S_tail)`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn td_errors(rewards: &[f64], values: &[f64], gamma: f64) -> Result<Vec<f64>> {
    if values.len() != rewards.len() + 1 {
        return Err(Error::DimensionMismatch {
            expected: rewards.len() + 1,
            got: values.len(),
        });
    }
    Ok(rewards
        .iter()
        .enumerate()
        .map(|(t, r)| r + gamma * values[t + 1] - values[t])
        .collect())
}

fn discounted_sum(deltas: &[f64], q: f64) -> f64 {
    // Horner from the back keeps the sum exact for q = 1.
    deltas.iter().rev().fold(0.0, |acc, d| d + q * acc)
}

pub fn gae(deltas: &[f64], gamma: f64, lambda: f64, t: usize) -> Result<f64> {
    if t >= deltas.len() {
        return Err(Error::Index(format!("t={t} outside 0..{}", deltas.len())));
    }
    Ok(discounted_sum(&deltas[t..], gamma * lambda))
}

/// All `Â_t` at once, `t = 0..T`.
pub fn gae_all(deltas: &[f64], gamma: f64, lambda: f64) -> Vec<f64> {
    let q = gamma * lambda;
    let mut out = vec![0.0; deltas.len()];
    let mut acc = 0.0;
    for t in (0..deltas.len()).rev() {
        acc = deltas[t] + q * acc;
        out[t] = acc;
    }
    out
}

pub fn truncated_gae(deltas: &[f64], gamma: f64, lambda: f64, t: usize, t_s: usize) -> Result<f64> {
    if t >= t_s {
        return Err(Error::Index(format!("t={t} must precede t_S={t_s}")));
    }
    if t_s > deltas.len() {
        return Err(Error::Index(format!(
            "t_S={t_s} beyond {} steps",
            deltas.len()
        )));
    }
    Ok(discounted_sum(&deltas[t..t_s], gamma * lambda))
}

/// `Σ_{j=lo}^{hi} q^j`, zero when `lo > hi`.
fn geometric_range(q: f64, lo: usize, hi: usize) -> f64 {
    if lo > hi {
        return 0.0;
    }
    if q == 1.0 {
        return (hi - lo + 1) as f64;
    }
    (q.powi(lo as i32) - q.powi(hi as i32 + 1)) / (1.0 - q)
}

/// `(S_pre, S_tail)` for step `t`, trap step `t_S` and horizon `T`.
pub fn geometric_sums(
    t: usize,
    t_s: usize,
    horizon: usize,
    gamma: f64,
    lambda: f64,
) -> Result<(f64, f64)> {
    if !(t < t_s && t_s < horizon) {
        return Err(Error::Index(format!(
            "need t < t_S < T, got t={t}, t_S={t_s}, T={horizon}"
        )));
    }
    let q = gamma * lambda;
    let s_pre = geometric_range(q, 0, t_s - t - 1);
    let s_tail = if horizon - t >= 2 {
        geometric_range(q, t_s - t, horizon - t - 2)
    } else {
        0.0
    };
    Ok((s_pre, s_tail))
}

/// Smallest `κ ρ` that forces `E[Â_t] < 0`: `S_pre / S_tail`.
pub fn inversion_threshold(
    t: usize,
    t_s: usize,
    horizon: usize,
    gamma: f64,
    lambda: f64,
) -> Result<f64> {
    let (s_pre, s_tail) = geometric_sums(t, t_s, horizon, gamma, lambda)?;
    if s_tail <= 0.0 {
        return Err(Error::Index(
            "empty tail: t_S is the last informative step".into(),
        ));
    }
    Ok(s_pre / s_tail)
}

/// Increasing value map `V = g(b(s⋆))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ValueCalibration {
    #[default]
    Identity,
    Affine {
        scale: f64,
        offset: f64,
    },
    Logistic {
        steepness: f64,
        midpoint: f64,
    },
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl ValueCalibration {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ValueCalibration::Identity => Ok(()),
            ValueCalibration::Affine { scale, offset } if scale > 0.0 && offset.is_finite() => {
                Ok(())
            }
            ValueCalibration::Logistic {
                steepness,
                midpoint,
            } if steepness > 0.0 && midpoint.is_finite() => Ok(()),
            other => Err(Error::InvalidParameter(format!(
                "calibration {other:?} is not increasing"
            ))),
        }
    }

    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            ValueCalibration::Identity => x,
            ValueCalibration::Affine { scale, offset } => offset + scale * x,
            ValueCalibration::Logistic {
                steepness,
                midpoint,
            } => sigmoid(steepness * (x - midpoint)),
        }
    }

    /// Minimum of `g′` on `[0, 1]`.
    pub fn kappa(&self) -> f64 {
        match *self {
            ValueCalibration::Identity => 1.0,
            ValueCalibration::Affine { scale, .. } => scale,
            ValueCalibration::Logistic {
                steepness,
                midpoint,
            } => {
                // σ′ is unimodal around the midpoint, so the minimum sits at
                // the endpoint farther from it.
                let far = midpoint.abs().max((1.0 - midpoint).abs());
                let s = sigmoid(steepness * far);
                steepness * s * (1.0 - s)
            }
        }
    }
}

pub fn calibrated_values(beliefs_at_truth: &[f64], cal: &ValueCalibration) -> Result<Vec<f64>> {
    if let Some(x) = beliefs_at_truth.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::InvalidParameter(format!("belief {x} outside [0,1]")));
    }
    Ok(beliefs_at_truth.iter().map(|&x| cal.apply(x)).collect())
}

/// Only the terminal step may carry a non-zero reward.
pub fn validate_sparse_rewards(rewards: &[f64]) -> Result<()> {
    let n = rewards.len();
    if let Some(t) = rewards
        .iter()
        .take(n.saturating_sub(1))
        .position(|&r| r != 0.0)
    {
        return Err(Error::InvalidParameter(format!(
            "non-terminal reward at step {t}; only the last step may be rewarded"
        )));
    }
    Ok(())
}

/// Per-trajectory advantage breakdown.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdvantageReport {
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub deltas: Vec<f64>,
    pub a_hat: Vec<f64>,
    /// Truncated estimates for `t < t_S`; empty without a trap step.
    pub a_hat_pre: Vec<f64>,
    pub t_s: Option<usize>,
    /// `(S_pre, S_tail, bound_rhs)` for each `t < t_S`.
    pub bounds: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, Copy)]
pub struct AdvantageParams {
    pub gamma: f64,
    pub lambda: f64,
    pub kappa: f64,
    /// Per-step belief drop after `t_S` plugged into the bound.
    pub rho: f64,
}

impl AdvantageReport {
    /// `values` has one more entry than `rewards` (the terminal bootstrap).
    pub fn compute(
        rewards: &[f64],
        values: &[f64],
        t_s: Option<usize>,
        p: &AdvantageParams,
    ) -> Result<Self> {
        validate_sparse_rewards(rewards)?;
        let deltas = td_errors(rewards, values, p.gamma)?;
        let a_hat = gae_all(&deltas, p.gamma, p.lambda);
        let horizon = rewards.len();
        let t_s = t_s.filter(|&s| s > 0 && s < horizon);
        let (mut a_hat_pre, mut bounds) = (Vec::new(), Vec::new());
        if let Some(s) = t_s {
            for t in 0..s {
                a_hat_pre.push(truncated_gae(&deltas, p.gamma, p.lambda, t, s)?);
                let (pre, tail) = geometric_sums(t, s, horizon, p.gamma, p.lambda)?;
                bounds.push((pre, tail, p.gamma * (pre - p.kappa * p.rho * tail)));
            }
        }
        Ok(Self {
            rewards: rewards.to_vec(),
            values: values.to_vec(),
            deltas,
            a_hat,
            a_hat_pre,
            t_s,
            bounds,
        })
    }
}

/// Synthetic belief process: `b(s⋆)` climbs linearly from `b0` to `peak` at
/// `t_S`, then drops by exactly `ρ` per step until the horizon. The terminal
/// reward is Bernoulli with the calibrated final value as success rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticDrift {
    pub horizon: usize,
    pub t_s: usize,
    pub b0: f64,
    pub peak: f64,
    pub rho: f64,
    #[serde(default)]
    pub calibration: ValueCalibration,
    #[serde(default = "unit")]
    pub gamma: f64,
    #[serde(default = "unit")]
    pub lambda: f64,
}

fn unit() -> f64 {
    1.0
}

impl SyntheticDrift {
    /// Trap two steps in, ten uninformative steps after it.
    pub fn standard(rho: f64) -> Self {
        Self {
            horizon: 13,
            t_s: 2,
            b0: 0.2,
            peak: 1.0,
            rho,
            calibration: ValueCalibration::Identity,
            gamma: 1.0,
            lambda: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_s >= 1 && self.t_s + 1 < self.horizon) {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= t_S < T-1, got t_S={}, T={}",
                self.t_s, self.horizon
            )));
        }
        for (name, v) in [("b0", self.b0), ("peak", self.peak)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name}={v} outside [0,1]")));
            }
        }
        if !(self.rho >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "rho={} must be non-negative",
                self.rho
            )));
        }
        self.calibration.validate()
    }

    /// Deterministic belief path and whether it had to be clipped.
    pub fn belief_path(&self) -> (Vec<f64>, bool) {
        let mut clipped = false;
        let path = (0..self.horizon)
            .map(|k| {
                let raw = if k <= self.t_s {
                    self.b0 + (self.peak - self.b0) * k as f64 / self.t_s as f64
                } else {
                    self.peak - self.rho * (k - self.t_s) as f64
                };
                // Tolerate float noise at the boundary.
                if !(-1e-12..=1.0 + 1e-12).contains(&raw) {
                    clipped = true;
                }
                raw.clamp(0.0, 1.0)
            })
            .collect();
        (path, clipped)
    }

    pub fn sample(&self, rng: &mut impl Rng) -> SyntheticTrajectory {
        let (beliefs, clipped) = self.belief_path();
        let mut values: Vec<f64> = beliefs.iter().map(|&b| self.calibration.apply(b)).collect();
        let success = values[self.horizon - 1].clamp(0.0, 1.0);
        let mut rewards = vec![0.0; self.horizon];
        rewards[self.horizon - 1] = f64::from(u8::from(rng.gen::<f64>() < success));
        values.push(0.0);
        SyntheticTrajectory {
            beliefs,
            values,
            rewards,
            clipped,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTrajectory {
    pub beliefs: Vec<f64>,
    pub values: Vec<f64>,
    pub rewards: Vec<f64>,
    pub clipped: bool,
}

/// Monte-Carlo summary for one drift rate, at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftSweepPoint {
    pub rho: f64,
    pub trajectories: usize,
    pub clipped: usize,
    pub used: usize,
    pub mean_a0: f64,
    pub se_a0: f64,
    pub mean_gap: f64,
    pub se_gap: f64,
    pub predicted_gap: f64,
    pub bound_rhs: f64,
    pub threshold: f64,
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Runs `n` synthetic trajectories; clipped runs are counted and excluded.
pub fn simulate_drift(cfg: &SyntheticDrift, n: usize, seed: u64) -> Result<DriftSweepPoint> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kappa = cfg.calibration.kappa();
    let params = AdvantageParams {
        gamma: cfg.gamma,
        lambda: cfg.lambda,
        kappa,
        rho: cfg.rho,
    };
    let (mut a0, mut gap) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut clipped = 0;
    for _ in 0..n {
        let traj = cfg.sample(&mut rng);
        if traj.clipped {
            clipped += 1;
            continue;
        }
        let rep = AdvantageReport::compute(&traj.rewards, &traj.values, Some(cfg.t_s), &params)?;
        a0.push(rep.a_hat[0]);
        gap.push(rep.a_hat_pre[0] - rep.a_hat[0]);
    }
    let (s_pre, s_tail) = geometric_sums(0, cfg.t_s, cfg.horizon, cfg.gamma, cfg.lambda)?;
    let (mean_a0, se_a0) = mean_se(&a0);
    let (mean_gap, se_gap) = mean_se(&gap);
    Ok(DriftSweepPoint {
        rho: cfg.rho,
        trajectories: n,
        clipped,
        used: a0.len(),
        mean_a0,
        se_a0,
        mean_gap,
        se_gap,
        predicted_gap: cfg.gamma * kappa * cfg.rho * s_tail,
        bound_rhs: cfg.gamma * (s_pre - kappa * cfg.rho * s_tail),
        threshold: s_pre / s_tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn td_examples() {
        assert_eq!(td_errors(&[0.0; 3], &[0.0; 4], 1.0).unwrap(), vec![0.0; 3]);
        assert_eq!(
            td_errors(&[0.0, 0.0, 1.0], &[0.0; 4], 1.0).unwrap(),
            vec![0.0, 0.0, 1.0]
        );
        assert_eq!(td_errors(&[0.0], &[0.5, 0.0], 1.0).unwrap(), vec![-0.5]);
        assert!(td_errors(&[0.0], &[0.0], 1.0).is_err());
    }

    #[test]
    fn gae_examples() {
        assert_eq!(gae(&[0.0, 0.0, 1.0], 1.0, 1.0, 0).unwrap(), 1.0);
        assert_eq!(gae(&[0.0; 4], 0.9, 0.9, 2).unwrap(), 0.0);
        assert_abs_diff_eq!(gae(&[1.0, 1.0], 1.0, 0.5, 0).unwrap(), 1.5);
        assert_eq!(gae_all(&[1.0, 1.0], 1.0, 0.5), vec![1.5, 1.0]);
    }

    #[test]
    fn truncated_examples() {
        let d = [1.0, -1.0, -1.0, -1.0];
        assert_eq!(truncated_gae(&d, 1.0, 1.0, 0, 1).unwrap(), 1.0);
        assert_eq!(gae(&d, 1.0, 1.0, 0).unwrap(), -2.0);
        assert_eq!(truncated_gae(&d, 1.0, 1.0, 0, 4).unwrap(), -2.0);
        assert!(truncated_gae(&d, 1.0, 1.0, 2, 2).is_err());
        assert_eq!(
            truncated_gae(&[0.3, 0.2, 0.0], 1.0, 1.0, 0, 2).unwrap(),
            gae(&[0.3, 0.2, 0.0], 1.0, 1.0, 0).unwrap()
        );
    }

    #[test]
    fn sums_and_threshold() {
        assert_eq!(geometric_sums(0, 2, 13, 1.0, 1.0).unwrap(), (2.0, 10.0));
        let (p, t) = geometric_sums(0, 1, 3, 1.0, 0.5).unwrap();
        assert_abs_diff_eq!(p, 1.0);
        assert_abs_diff_eq!(t, 0.5);
        assert_eq!(geometric_sums(0, 4, 5, 0.9, 0.8).unwrap().1, 0.0);
        assert_abs_diff_eq!(
            inversion_threshold(0, 2, 13, 1.0, 1.0).unwrap(),
            0.2,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            inversion_threshold(0, 5, 11, 1.0, 1.0).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            inversion_threshold(0, 1, 3, 1.0, 0.5).unwrap(),
            2.0,
            epsilon = 1e-12
        );
        assert!(inversion_threshold(0, 4, 5, 1.0, 1.0).is_err());
        assert!(geometric_sums(3, 3, 5, 1.0, 1.0).is_err());
    }

    #[test]
    fn calibrations() {
        assert_eq!(
            calibrated_values(&[0.0, 0.5, 1.0], &ValueCalibration::Identity).unwrap(),
            vec![0.0, 0.5, 1.0]
        );
        let half = ValueCalibration::Affine {
            scale: 0.5,
            offset: 0.0,
        };
        assert_eq!(half.apply(1.0), 0.5);
        assert_eq!(half.kappa(), 0.5);
        let lg = ValueCalibration::Logistic {
            steepness: 4.0,
            midpoint: 0.3,
        };
        // Brute-force minimum of the derivative on a fine grid.
        let brute = (0..=10_000)
            .map(|i| {
                let x = i as f64 / 10_000.0;
                let s = sigmoid(4.0 * (x - 0.3));
                4.0 * s * (1.0 - s)
            })
            .fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(lg.kappa(), brute, epsilon = 1e-12);
        assert!(calibrated_values(&[1.2], &lg).is_err());
        assert!(ValueCalibration::Affine {
            scale: 0.0,
            offset: 0.0
        }
        .validate()
        .is_err());
    }

    #[test]
    fn sparse_reward_guard() {
        assert!(validate_sparse_rewards(&[0.0, 0.0, 1.0]).is_ok());
        assert!(validate_sparse_rewards(&[0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn synthetic_path_shape() {
        let (path, clipped) = SyntheticDrift::standard(0.05).belief_path();
        assert_eq!(path.len(), 13);
        assert_abs_diff_eq!(path[0], 0.2);
        assert_abs_diff_eq!(path[2], 1.0);
        assert_abs_diff_eq!(path[12], 0.5, epsilon = 1e-12);
        assert!(!clipped);
        assert!(SyntheticDrift::standard(0.2).belief_path().1);
    }

    #[test]
    fn drift_gap_matches_prediction() {
        let pt = simulate_drift(&SyntheticDrift::standard(0.05), 4000, 9).unwrap();
        assert_eq!(pt.clipped, 0);
        assert!(pt.mean_gap >= pt.predicted_gap - 3.0 * pt.se_gap);
        assert!(pt.mean_a0 <= pt.bound_rhs + 3.0 * pt.se_a0);
    }
}
