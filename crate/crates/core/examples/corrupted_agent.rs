//! Exact against corrupted updates: update error and agent progress as the
//! belief drifts away from the truth.

use belief_trap::agents::{
    BoundPolicy, CorruptedUpdater, CorruptionSpec, PolicyContext, PolicySpec,
};
use belief_trap::belief::{agent_progress, update_error, Belief, ExactBayes, ExpectationOptions};
use belief_trap::env::gn::GuessNumbersInstance;

fn main() -> belief_trap::Result<()> {
    let task = GuessNumbersInstance::from_preset(3, 5, 1, 2, 0)?.task()?;
    let model = task.model(0.01)?;
    let space = &task.space;
    let n = space.len();
    let legal: Vec<usize> = (0..task.num_actions()).collect();
    let spec = PolicySpec::default();
    let policy = BoundPolicy {
        spec: &spec,
        ctx: PolicyContext {
            model: &model,
            legal_actions: &legal,
            hypotheses: None,
            action_state: task.action_state.as_deref(),
            turn: 0,
        },
    };
    let corrupted = CorruptedUpdater {
        spec: CorruptionSpec::psi_coupled(0.1, 0.3, 1.0),
        space: space.clone(),
        model: model.clone(),
    };
    let exact = ExactBayes {
        model: model.clone(),
    };
    let opts = ExpectationOptions::default();

    println!("b(s*)   psi    c_theta  P_theta  P_exact");
    for p in [0.9, 0.5, 0.2, 0.05, 1.0 / n as f64] {
        let truth = space.true_state_index();
        let rest = (1.0 - p) / (n - 1) as f64;
        let b = Belief::new((0..n).map(|s| if s == truth { p } else { rest }).collect())?;
        let c = update_error(&b, &policy, &corrupted, space, &model, &opts)?;
        let pt = agent_progress(&b, &policy, &corrupted, space, &model, &opts)?;
        let pe = agent_progress(&b, &policy, &exact, space, &model, &opts)?;
        println!(
            "{p:.3}  {:.3}  {:+.4}  {:+.4}  {:+.4}",
            -p.ln(),
            c.value,
            pt.value,
            pe.value
        );
    }
    Ok(())
}
