//! Trap constants, hitting-time bounds and empirical trap detection.
//!
//! With `Λ = −ln η` and policy sensitivity `L_π`:
//!
//! ```text
//!   B̄ = 2 (Λ · L_π + 1/η)
//!   U = max(U0, (Ψ0 + B̄ + c0) / m_θ)
//!   δ = m_θ · μ − (c0 + B̄)
//!   t_S ≤ 1 + ⌈ log_{1+m_θ} ((m_θ U + δ) / (m_θ Δ1 + δ)) ⌉
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `B̄ = 2(−ln η · L_π + 1/η)`.
pub fn compute_bbar(eta: f64, l_pi: f64) -> Result<f64> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParameter(format!("eta {eta} outside (0,1]")));
    }
    if !(l_pi >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "L_pi {l_pi} must be non-negative"
        )));
    }
    Ok(2.0 * (-eta.ln() * l_pi + 1.0 / eta))
}

/// `U = max(U0, (Ψ0 + B̄ + c0) / m_θ)`.
pub fn compute_threshold_u(u0: f64, psi0: f64, bbar: f64, c0: f64, m_theta: f64) -> Result<f64> {
    if !(m_theta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "m_theta {m_theta} must be positive"
        )));
    }
    Ok(u0.max((psi0 + bbar + c0) / m_theta))
}

/// Upper bound on the expected trap-entry step. Requires `δ > 0`.
pub fn hitting_time_bound(m_theta: f64, u: f64, delta: f64, delta1: f64) -> Result<u64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "trap margin delta = {delta} must be positive"
        )));
    }
    if !(m_theta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "m_theta {m_theta} must be positive"
        )));
    }
    let denom = m_theta * delta1 + delta;
    if denom <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "m_theta * Delta1 + delta = {denom} must be positive"
        )));
    }
    let arg = (m_theta * u + delta) / denom;
    if arg <= 1.0 {
        return Ok(1);
    }
    let steps = arg.ln() / m_theta.ln_1p();
    // Absorb rounding on exact powers before taking the ceiling.
    Ok(1 + (steps - 1e-12).ceil().max(0.0) as u64)
}

/// Fitted constants `c_θ(b) ≳ m_θ Ψ(b) − c0` for `Ψ(b) ≥ U0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub m_theta: f64,
    pub intercept: f64,
    pub c0: f64,
    pub u0: f64,
    pub r_squared: f64,
    pub samples: usize,
}

/// Least-squares line through `(Ψ, c_θ)` samples. `c0 = max(0, −intercept)`
/// and `U0` is the smallest sampled potential.
pub fn fit_update_error_growth(samples: &[(f64, f64)]) -> Result<GrowthFit> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 samples, got {n}"
        )));
    }
    let nf = n as f64;
    let mx = samples.iter().map(|s| s.0).sum::<f64>() / nf;
    let my = samples.iter().map(|s| s.1).sum::<f64>() / nf;
    let sxx: f64 = samples.iter().map(|s| (s.0 - mx).powi(2)).sum();
    let sxy: f64 = samples.iter().map(|s| (s.0 - mx) * (s.1 - my)).sum();
    let syy: f64 = samples.iter().map(|s| (s.1 - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::InvalidParameter(
            "all samples share one potential value".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 {
        sxy * sxy / (sxx * syy)
    } else {
        1.0
    };
    Ok(GrowthFit {
        m_theta: slope,
        intercept,
        c0: (-intercept).max(0.0),
        u0: samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min),
        r_squared,
        samples: n,
    })
}

/// All constants of one configuration. `delta` may be non-positive, in which
/// case the hitting-time bound does not apply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryConstants {
    pub eta: f64,
    pub l_pi: f64,
    pub m_theta: f64,
    pub c0: f64,
    pub u0: f64,
    pub psi0: f64,
    pub bbar: f64,
    pub u: f64,
    pub mu: f64,
    pub delta: f64,
}

impl TheoryConstants {
    pub fn derive(
        eta: f64,
        l_pi: f64,
        m_theta: f64,
        c0: f64,
        u0: f64,
        psi0: f64,
        mu: f64,
    ) -> Result<Self> {
        let bbar = compute_bbar(eta, l_pi)?;
        let u = compute_threshold_u(u0, psi0, bbar, c0, m_theta)?;
        Ok(Self {
            eta,
            l_pi,
            m_theta,
            c0,
            u0,
            psi0,
            bbar,
            u,
            mu,
            delta: m_theta * mu - (c0 + bbar),
        })
    }

    pub fn hitting_time_bound(&self, delta1: f64) -> Result<u64> {
        hitting_time_bound(self.m_theta, self.u, self.delta, delta1)
    }
}

/// Earliest index `t` whose trailing window of one-step changes
/// `Ψ_{τ+1} − Ψ_τ`, `τ ∈ [t − window, t)`, has mean `≥ −min_drift`.
pub fn detect_btr_entry(psi: &[f64], window: usize, min_drift: f64) -> Option<usize> {
    let window = window.max(1);
    if psi.len() <= window {
        return None;
    }
    let diffs: Vec<f64> = psi.windows(2).map(|w| w[1] - w[0]).collect();
    (window..=diffs.len()).find(|&t| {
        let mean = diffs[t - window..t].iter().sum::<f64>() / window as f64;
        mean >= -min_drift
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftStats {
    pub mean: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftBucket {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// Absent when no transition started in the bucket.
    pub stats: Option<DriftStats>,
}

pub const CI_Z: f64 = 1.96;

/// Mean one-step `ΔΨ` grouped by the starting potential. Buckets are
/// `[edges[i], edges[i+1])`, the last one closed on the right.
pub fn estimate_drift(trajectories: &[Vec<f64>], edges: &[f64]) -> Result<Vec<DriftBucket>> {
    if trajectories.is_empty() {
        return Err(Error::Empty("no trajectories".into()));
    }
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter(
            "bucket edges must be strictly increasing".into(),
        ));
    }
    let nb = edges.len() - 1;
    let mut acc = vec![(0usize, 0.0f64, 0.0f64); nb];
    let last = edges[nb];
    for traj in trajectories {
        for w in traj.windows(2) {
            let x = w[0];
            let bucket = if x == last {
                Some(nb - 1)
            } else {
                edges.windows(2).position(|e| e[0] <= x && x < e[1])
            };
            if let Some(i) = bucket {
                let d = w[1] - w[0];
                acc[i].0 += 1;
                acc[i].1 += d;
                acc[i].2 += d * d;
            }
        }
    }
    Ok(acc
        .iter()
        .enumerate()
        .map(|(i, &(n, s, ss))| {
            let stats = (n > 0).then(|| {
                let nf = n as f64;
                let mean = s / nf;
                let sd = if n > 1 {
                    ((ss - nf * mean * mean) / (nf - 1.0)).max(0.0).sqrt()
                } else {
                    0.0
                };
                let se = sd / nf.sqrt();
                DriftStats {
                    mean,
                    std_error: se,
                    ci_low: mean - CI_Z * se,
                    ci_high: mean + CI_Z * se,
                }
            });
            DriftBucket {
                lo: edges[i],
                hi: edges[i + 1],
                count: n,
                stats,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bbar_values() {
        assert_abs_diff_eq!(compute_bbar(1.0, 0.0).unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            compute_bbar(0.5, 1.0).unwrap(),
            2.0 * (std::f64::consts::LN_2 + 2.0),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(compute_bbar(0.5, 0.0).unwrap(), 4.0, epsilon = 1e-12);
        assert!(compute_bbar(0.0, 1.0).is_err());
        assert!(compute_bbar(1.5, 1.0).is_err());
    }

    #[test]
    fn threshold_values() {
        assert_eq!(
            compute_threshold_u(100.0, 1.0, 4.0, 0.0, 0.5).unwrap(),
            100.0
        );
        assert_abs_diff_eq!(compute_threshold_u(0.0, 1.0, 4.0, 0.0, 0.5).unwrap(), 10.0);
        assert_eq!(compute_threshold_u(0.0, 0.0, 0.0, 0.0, 0.7).unwrap(), 0.0);
        assert!(compute_threshold_u(0.0, 1.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn hitting_time_values() {
        assert_eq!(hitting_time_bound(1.0, 10.0, 1.0, 0.0).unwrap(), 5);
        assert_eq!(hitting_time_bound(0.5, 10.0, 2.0, 2.0).unwrap(), 4);
        assert_eq!(hitting_time_bound(0.5, 3.0, 2.0, 3.0).unwrap(), 1);
        // (1·7 + 1)/(0 + 1) = 8 = 2^3 exactly.
        assert_eq!(hitting_time_bound(1.0, 7.0, 1.0, 0.0).unwrap(), 4);
        assert!(hitting_time_bound(1.0, 10.0, 0.0, 0.0).is_err());
        assert!(hitting_time_bound(1.0, 10.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn detection() {
        assert_eq!(detect_btr_entry(&[5.0, 4.0, 3.0, 2.0, 1.0], 3, 1e-6), None);
        assert_eq!(detect_btr_entry(&[2.0; 6], 3, 1e-6), Some(3));
        let series = [5.0, 4.0, 3.0, 2.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(detect_btr_entry(&series, 3, 1e-6), Some(8));
        assert_eq!(detect_btr_entry(&[1.0, 1.0], 3, 1e-6), None);
    }

    #[test]
    fn drift_buckets() {
        let traj = vec![vec![1.0; 5]];
        let b = estimate_drift(&traj, &[0.0, 2.0, 4.0]).unwrap();
        assert_eq!(b[0].count, 4);
        assert_eq!(b[0].stats.unwrap().mean, 0.0);
        assert!(b[1].stats.is_none());
        let rising = vec![vec![0.5, 1.5, 2.5], vec![0.5, 1.0]];
        let b = estimate_drift(&rising, &[0.0, 1.0, 3.0]).unwrap();
        assert_eq!(b[0].count, 2);
        assert_abs_diff_eq!(b[0].stats.unwrap().mean, 0.75);
        assert_eq!(b[1].count, 1);
        assert!(estimate_drift(&[], &[0.0, 1.0]).is_err());
        assert!(estimate_drift(&rising, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn growth_fit_recovers_line() {
        let samples: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 0.4 * i as f64 - 1.5)).collect();
        let fit = fit_update_error_growth(&samples).unwrap();
        assert_abs_diff_eq!(fit.m_theta, 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.c0, 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
        assert!(fit_update_error_growth(&[(1.0, 1.0), (1.0, 2.0)]).is_err());
    }

    #[test]
    fn constants_assemble() {
        let c = TheoryConstants::derive(0.5, 0.0, 0.5, 0.0, 0.0, 1.0, 10.0).unwrap();
        assert_eq!(c.bbar, 4.0);
        assert_eq!(c.u, 10.0);
        assert_eq!(c.delta, 1.0);
        // (0.5·10 + 1)/1 = 6, log_1.5 6 ≈ 4.42.
        assert_eq!(c.hitting_time_bound(0.0).unwrap(), 6);
    }
}
