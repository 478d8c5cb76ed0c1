//! Runs a corrupted GuessNumbers experiment and writes the four output files.
//!
//! ```text
//! cargo run --example run_experiment -- [output_dir]
//! ```

use belief_trap::agents::CorruptionSpec;
use belief_trap::env::TaskKind;
use belief_trap::runner::{run_experiment, ExperimentConfig};

fn main() -> belief_trap::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "out/example".into());
    let mut cfg = ExperimentConfig::for_task(TaskKind::GuessNumbers);
    cfg.rollouts = 200;
    cfg.seed = 3;
    cfg.agent.corruption = CorruptionSpec::psi_coupled(0.1, 0.3, 0.9);
    let out = run_experiment(&cfg)?;
    out.write(dir.as_ref())?;

    let s = &out.summary;
    println!(
        "rollouts {}  success {:.3}  mean turns {:.2}",
        s.rollouts, s.success_rate, s.mean_turns
    );
    let c = &out.constants;
    if let Some(f) = &c.fit {
        println!(
            "m_theta {:.4}  c0 {:.4}  r2 {:.3}",
            f.m_theta, f.c0, f.r_squared
        );
    }
    if let Some(l) = &c.lipschitz {
        println!("L_pi {:.4}", l.value);
    }
    if let Some(k) = &c.constants {
        println!(
            "Bbar {:.2}  U {:.2}  mu {:.4}  delta {:.3}",
            k.bbar, k.u, k.mu, k.delta
        );
    }
    for n in &c.notes {
        println!("note: {n}");
    }
    println!("trap entries {} / {}", c.btr_entries, s.rollouts);
    for b in &c.agent_drift {
        if let Some(st) = b.stats {
            println!(
                "  agent psi [{:.1},{:.1}) n={} drift {:+.4}",
                b.lo, b.hi, b.count, st.mean
            );
        }
    }
    println!("wrote {dir}");
    Ok(())
}
