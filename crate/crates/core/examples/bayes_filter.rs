//! Exact Bayesian filtering under a smoothed observation model, with the
//! truth-anchored potential and one-step informativeness.

use std::sync::Arc;

use belief_trap::belief::{
    bayes_update, informativeness, potential, Belief, ObservationModel, ObservationTable,
    StateSpace,
};

fn main() -> belief_trap::Result<()> {
    // Four states, two binary tests: test 0 reads bit 0, test 1 reads bit 1.
    let table = ObservationTable::from_fn(4, 2, 2, |s, a| (s >> a) & 1)?;
    let model = ObservationModel::new(Arc::new(table), 0.05)?;
    let space = StateSpace::indexed(4, 3)?;
    println!(
        "likelihood peak {:.3}, floor {:.3}",
        model.peak(),
        model.floor()
    );

    let mut b = Belief::uniform(4);
    for (a, o) in [(0, 1), (1, 1), (0, 1)] {
        let info = informativeness(&b, a, &space, &model)?;
        b = bayes_update(&b, a, o, &model)?;
        println!(
            "test {a} -> {o}: I = {info:.4}, psi = {:.4}, belief {:?}",
            potential(&b, &space).value(),
            b.probs()
                .iter()
                .map(|p| format!("{p:.3}"))
                .collect::<Vec<_>>()
        );
    }
    Ok(())
}
