//! CircuitDecoding: evaluate candidate circuits and narrow the hidden
//! assignment from probe answers.

use belief_trap::belief::Evaluator;
use belief_trap::env::cd::{cd_eval, Circuit, CircuitInstance};
use belief_trap::hypothesis::HypothesisSet;

fn main() -> belief_trap::Result<()> {
    let c: Circuit = "OR(AND(x0,x1),x2)".parse()?;
    println!(
        "{c} on 110 = {}, on 001 = {}",
        cd_eval(&c, &[1, 1, 0])?,
        cd_eval(&c, &[0, 0, 1])?
    );

    let inst = CircuitInstance::default_library(2, 4)?;
    let task = inst.task()?;
    let truth = task.space.true_state_index();
    println!(
        "{} assignments, {} probes; hidden {}",
        task.space.len(),
        task.num_actions(),
        task.space.label(truth)
    );

    let mut h = HypothesisSet::init_full(&task.space);
    for a in 0..task.num_actions() {
        if h.len() == 1 {
            break;
        }
        if !h.splits(a, task.table.as_ref()) {
            continue;
        }
        let o = task.table.observe(truth, a);
        h = h.filter_consistent(a, o, task.table.as_ref());
        println!(
            "probe {} -> {} ({} left)",
            task.action_labels[a],
            task.observation_labels[o],
            h.len()
        );
    }
    println!("decoded {}", task.space.label(h.members()[0]));
    Ok(())
}
