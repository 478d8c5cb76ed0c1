//! Trap constants from a fitted update-error slope, and trap-entry detection
//! on a potential trace.

use belief_trap::btr::{compute_bbar, detect_btr_entry, fit_update_error_growth, TheoryConstants};

fn main() -> belief_trap::Result<()> {
    for eta in [0.5, 0.2, 0.05, 0.01] {
        println!("eta {eta}: bbar {:.3}", compute_bbar(eta, 1.0)?);
    }

    let samples: Vec<(f64, f64)> = (0..40)
        .map(|i| {
            let psi = i as f64 * 0.1;
            (psi, 0.6 * psi - 0.2)
        })
        .collect();
    let fit = fit_update_error_growth(&samples)?;
    println!(
        "fit: m {:.3}, c0 {:.3}, r2 {:.3}",
        fit.m_theta, fit.c0, fit.r_squared
    );

    let c = TheoryConstants::derive(0.5, 0.2, fit.m_theta, fit.c0, fit.u0, 1.0, 20.0)?;
    println!("U {:.3}, delta {:.3}", c.u, c.delta);
    if c.delta > 0.0 {
        println!("entry within {} steps", c.hitting_time_bound(0.5)?);
    }

    let psi = [2.0, 1.6, 1.3, 1.2, 1.25, 1.3, 1.32, 1.4];
    match detect_btr_entry(&psi, 3, 1e-6) {
        Some(i) => println!("trap entered at trace index {i}"),
        None => println!("no trap entry"),
    }
    Ok(())
}
