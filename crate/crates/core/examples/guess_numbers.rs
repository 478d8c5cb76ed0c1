//! GuessNumbers: xAyB feedback, consistent-set elimination and the presets.

use belief_trap::belief::Evaluator;
use belief_trap::env::gn::{digits_label, gn_feedback, preset_name, GuessNumbersInstance, PRESETS};
use belief_trap::hypothesis::HypothesisSet;

fn main() -> belief_trap::Result<()> {
    let (x, y) = gn_feedback(&[1, 2, 3], &[1, 3, 2])?;
    println!("123 against 132: {x}A{y}B");

    let inst = GuessNumbersInstance::from_preset(3, 5, 1, 2, 11)?;
    let task = inst.task()?;
    let (a0, o0) = task.initial_step.expect("scripted opening");
    let mut h =
        HypothesisSet::init_full(&task.space).filter_consistent(a0, o0, task.table.as_ref());
    println!(
        "secret {} hidden among {} states; {} remain after the opening {}",
        digits_label(&inst.secret),
        task.space.len(),
        h.len(),
        task.action_labels[a0]
    );

    // Always guess the first consistent candidate.
    let truth = task
        .space
        .index_of(&digits_label(&inst.secret))
        .expect("secret enumerated");
    while h.len() > 1 {
        let a = h.members()[0];
        let o = task.table.observe(truth, a);
        h = h.filter_consistent(a, o, task.table.as_ref());
        println!(
            "guess {} -> {} ({} left)",
            task.action_labels[a],
            task.observation_labels[o],
            h.len()
        );
    }

    for p in PRESETS {
        print!("{} ", preset_name(p));
    }
    println!();
    Ok(())
}
