//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fail.

use std::process::Command;
use std::time::{Duration, Instant};

use belief_trap::advantage::inversion_threshold;
use belief_trap::btr::{compute_bbar, hitting_time_bound};
use belief_trap::env::gn::gn_enumerate_states;
use belief_trap::env::pe::{mr_recommend, pe_score, worked_example_movies, WORKED_EXAMPLE_WEIGHTS};
use belief_trap::runner::{verify_suite, Suite, VerifyOptions, VerifyReport};

struct Outcome {
    passed: bool,
    detail: String,
}

fn suite(s: Suite) -> Outcome {
    match verify_suite(s, &VerifyOptions::default()) {
        Ok(r) => from_report(&r),
        Err(e) => Outcome {
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn from_report(r: &VerifyReport) -> Outcome {
    let detail = r
        .checks
        .iter()
        .map(|c| {
            let m = c.measured.map_or("-".into(), |v| format!("{v:.6}"));
            let flag = if c.passed { "ok" } else { "FAILED" };
            match &c.note {
                Some(n) => format!("{} = {m} (want {}; {n}) {flag}", c.name, c.expected),
                None => format!("{} = {m} (want {}) {flag}", c.name, c.expected),
            }
        })
        .collect::<Vec<_>>()
        .join(" | ");
    Outcome {
        passed: r.passed,
        detail,
    }
}

fn counting() -> Outcome {
    // b!/(b-a)! as a running falling product.
    let mut bad = Vec::new();
    for b in 1..=8usize {
        let mut falling = 1usize;
        for a in 1..=b {
            falling *= b - a + 1;
            let got = gn_enumerate_states(a, b).map(|s| s.len()).unwrap_or(0);
            if got != falling {
                bad.push(format!("({a},{b}) got {got} want {falling}"));
            }
        }
    }
    let h35 = gn_enumerate_states(3, 5).map(|s| s.len()).unwrap_or(0);
    let h410 = gn_enumerate_states(4, 10).map(|s| s.len()).unwrap_or(0);
    Outcome {
        passed: bad.is_empty() && h35 == 60 && h410 == 5040,
        detail: format!("|H(3,5)| = {h35}, |H(4,10)| = {h410}, mismatches {bad:?}"),
    }
}

fn pe_example() -> Outcome {
    let movies = worked_example_movies();
    let w = WORKED_EXAMPLE_WEIGHTS;
    let scores: Vec<f64> = movies
        .iter()
        .map(|m| pe_score(&w, &m.attributes).unwrap_or(f64::NAN))
        .collect();
    let want = [1.22, 0.65, 1.11];
    let pick = mr_recommend(&w, &movies)
        .map(|m| m.name.clone())
        .unwrap_or_default();
    let ok = scores.iter().zip(want).all(|(s, w)| (s - w).abs() <= 1e-12) && pick == "Movie_A";
    Outcome {
        passed: ok,
        detail: format!("scores {scores:?}, recommended {pick}"),
    }
}

fn formulas() -> Outcome {
    // bbar(0.5, 1) = 2 (-ln 0.5 * 1 + 1/0.5) = 2 ln 2 + 4 = 5.386294361...
    let bbar_want = 2.0 * std::f64::consts::LN_2 + 4.0;
    // arg = (1*10 + 1) / (1*0 + 1) = 11; log2 11 = 3.459...; 1 + ceil = 5.
    let bound_want = 5u64;
    // Two pre-trap steps against ten tail steps with unit discount.
    let thr_want = 2.0 / 10.0;
    let bbar = compute_bbar(0.5, 1.0).unwrap_or(f64::NAN);
    let bound = hitting_time_bound(1.0, 10.0, 1.0, 0.0).unwrap_or(0);
    let thr = inversion_threshold(0, 2, 13, 1.0, 1.0).unwrap_or(f64::NAN);
    Outcome {
        passed: (bbar - bbar_want).abs() <= 1e-12
            && bound == bound_want
            && (thr - thr_want).abs() <= 1e-12,
        detail: format!("bbar {bbar:.12}, bound {bound}, threshold {thr}"),
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let cfg = dir.path().join("gn.toml");
    std::fs::write(
        &cfg,
        "rollouts = 50\nseed = 42\n\n[environment]\ntask = \"guess_numbers\"\npreset = \"gn-3-5-1-2\"\n\n\
         [agent.corruption]\nkind = \"psi_coupled_mix\"\neps0 = 0.1\nslope = 0.3\n",
    )
    .expect("write config");
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let res = Command::new(env!("CARGO_BIN_EXE_belieftrap"))
            .args(["run", "--config"])
            .arg(&cfg)
            .arg("--output")
            .arg(&out)
            .output()
            .expect("spawn belieftrap");
        if !res.status.success() {
            return Outcome {
                passed: false,
                detail: format!("run exited {:?}", res.status.code()),
            };
        }
        outputs.push(std::fs::read(out.join("trajectories.jsonl")).unwrap_or_default());
    }
    Outcome {
        passed: !outputs[0].is_empty() && outputs[0] == outputs[1],
        detail: format!("{} and {} bytes", outputs[0].len(), outputs[1].len()),
    }
}

type Criterion = (&'static str, u64, Box<dyn Fn() -> Outcome>);

fn main() {
    let criteria: Vec<Criterion> = vec![
        (
            "1 oracle equivalence",
            30,
            Box::new(|| suite(Suite::OracleEquivalence)),
        ),
        ("2 counting", 5, Box::new(counting)),
        ("3 pe worked example", 1, Box::new(pe_example)),
        ("4 formula golden values", 1, Box::new(formulas)),
        (
            "5 drift above U and oracle drift",
            300,
            Box::new(|| suite(Suite::Thm1Drift)),
        ),
        (
            "6 hitting-time conformance",
            300,
            Box::new(|| suite(Suite::Thm1Hitting)),
        ),
        (
            "7 advantage sign flip",
            120,
            Box::new(|| suite(Suite::Thm2Sign)),
        ),
        ("8 truncation gap", 120, Box::new(|| suite(Suite::Cor1))),
        (
            "9 rule equivalences",
            30,
            Box::new(|| suite(Suite::RuleEquivalence)),
        ),
        ("10 determinism", 60, Box::new(determinism)),
        (
            "11 truncation efficiency",
            300,
            Box::new(|| suite(Suite::TruncationEfficiency)),
        ),
    ];
    let mut failed = 0;
    for (name, limit, check) in criteria {
        let start = Instant::now();
        let out = check();
        let took = start.elapsed();
        let passed = out.passed && took <= Duration::from_secs(limit);
        failed += usize::from(!passed);
        println!(
            "{} criterion {name} [{:.2}s of {limit}s] {}",
            if passed { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            out.detail
        );
    }
    println!("{failed} of 11 criteria failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
