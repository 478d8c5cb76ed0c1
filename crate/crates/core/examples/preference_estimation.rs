//! PreferenceEstimation: pairwise comparisons, the recommendation rule and
//! binary similarity of an estimate.

use belief_trap::env::pe::{
    binary_similarity, cosine_similarity, mr_recommend, pe_compare, pe_score,
    worked_example_movies, PreferenceInstance, DEFAULT_SIMILARITY_THRESHOLD, DEFAULT_TIE_EPS,
    WORKED_EXAMPLE_WEIGHTS,
};

fn main() -> belief_trap::Result<()> {
    let w = WORKED_EXAMPLE_WEIGHTS;
    let movies = worked_example_movies();
    for m in &movies {
        println!("{}: {:.2}", m.name, pe_score(&w, &m.attributes)?);
    }
    println!("recommend {}", mr_recommend(&w, &movies)?.name);
    let cmp = pe_compare(
        &w,
        &movies[0].attributes,
        &movies[1].attributes,
        DEFAULT_TIE_EPS,
    )?;
    println!("{} over {}: {cmp:?}", movies[0].name, movies[1].name);

    let inst = PreferenceInstance::default_catalogue(5)?;
    let task = inst.task()?;
    println!(
        "hidden weights {:?}; {} grid states, {} pair queries",
        inst.weights,
        task.space.len(),
        task.num_actions()
    );
    let guess = [0.4, 0.4, 0.8];
    println!(
        "estimate {guess:?}: cosine {:.3}, binary {}",
        cosine_similarity(&guess, &inst.weights)?,
        binary_similarity(&guess, &inst.weights, DEFAULT_SIMILARITY_THRESHOLD)?
    );
    Ok(())
}
