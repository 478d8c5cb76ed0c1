//! GAE on a trajectory whose belief collapses after an early peak, and the
//! truncated estimate that drops the uninformative tail.

use belief_trap::advantage::{
    inversion_threshold, simulate_drift, AdvantageParams, AdvantageReport, SyntheticDrift,
};

fn main() -> belief_trap::Result<()> {
    let cfg = SyntheticDrift::standard(0.07);
    let (path, _) = cfg.belief_path();
    let mut values = path.clone();
    values.push(0.0);
    let mut rewards = vec![0.0; cfg.horizon];
    rewards[cfg.horizon - 1] = 1.0;
    let params = AdvantageParams {
        gamma: 1.0,
        lambda: 1.0,
        kappa: 1.0,
        rho: cfg.rho,
    };
    let rep = AdvantageReport::compute(&rewards, &values, Some(cfg.t_s), &params)?;
    for t in 0..cfg.t_s {
        println!(
            "t={t}: full {:+.3}, truncated {:+.3}, bound {:+.3}",
            rep.a_hat[t], rep.a_hat_pre[t], rep.bounds[t].2
        );
    }

    println!(
        "threshold {:.3}",
        inversion_threshold(0, cfg.t_s, cfg.horizon, 1.0, 1.0)?
    );
    println!("rho    mean A0   gap     predicted");
    for rho in [0.02, 0.04, 0.06, 0.08, 0.1] {
        let p = simulate_drift(&SyntheticDrift::standard(rho), 5000, 1)?;
        println!(
            "{rho:.2}  {:+.4}  {:.4}  {:.4}",
            p.mean_a0, p.mean_gap, p.predicted_gap
        );
    }
    Ok(())
}
