use std::path::Path;
use std::process::{Command, Output};

use belief_trap::runner::{run_experiment, ExperimentConfig};

const GN: &str = "rollouts = 12\nseed = 5\n\n[environment]\ntask = \"guess_numbers\"\npreset = \"gn-3-5-1-2\"\n\n\
[agent.corruption]\nkind = \"psi_coupled_mix\"\neps0 = 0.1\nslope = 0.3\n\n[truncation]\nkind = \"gn_consistency\"\n";

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_belieftrap"))
        .args(args)
        .output()
        .expect("spawn belieftrap")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_writes_four_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "gn.toml", GN);
    let out = dir.path().join("out");
    let res = bin(&["run", "--config", &cfg, "--output", out.to_str().unwrap()]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    for f in [
        "trajectories.jsonl",
        "advantage.csv",
        "summary.csv",
        "constants.json",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }

    let jsonl = std::fs::read_to_string(out.join("trajectories.jsonl")).unwrap();
    let keys = [
        "rollout",
        "seed",
        "truth",
        "initial",
        "steps",
        "turns",
        "reward",
        "success",
        "committed",
        "truncated",
        "t_s",
        "answer",
    ];
    let mut truncated = 0;
    for line in jsonl.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let obj = v.as_object().unwrap();
        assert_eq!(obj.len(), keys.len());
        let at: Vec<usize> = keys
            .iter()
            .map(|k| line.find(&format!("\"{k}\":")).unwrap())
            .collect();
        assert!(at.windows(2).all(|w| w[0] < w[1]), "key order {at:?}");
        truncated += usize::from(obj["truncated"].as_bool().unwrap());
        let mut last = usize::MAX;
        for step in obj["steps"].as_array().unwrap() {
            let size = step["hypothesis_size"].as_u64().unwrap() as usize;
            assert!(size <= last);
            last = size;
            let b = step["agent_belief_true"].as_f64().unwrap();
            let psi = step["psi_agent"].as_f64().unwrap();
            assert!((psi - (-b.ln()).min(50.0)).abs() < 1e-9);
        }
    }
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(
        lines.next().unwrap(),
        "label,rollouts,success_rate,mean_reward,mean_turns,mean_tokens_equiv_turn_count,\
         truncation_frequency,non_truncated,success_rate_non_truncated,btr_entry_rate"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let freq: f64 = row[6].parse().unwrap();
    assert!((freq - truncated as f64 / 12.0).abs() < 1e-12);

    let constants: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("constants.json")).unwrap())
            .unwrap();
    assert!(constants["lipschitz"]["value"].as_f64().unwrap() >= 0.0);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.toml");
    assert_eq!(
        bin(&["run", "--config", missing.to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );

    let bad = write_config(dir.path(), "bad.toml", &format!("{GN}bogus = 1\n"));
    assert_eq!(bin(&["run", "--config", &bad]).status.code(), Some(1));

    let cfg = write_config(dir.path(), "gn.toml", GN);
    assert_eq!(
        bin(&["run", "--config", &cfg, "--rollouts", "0"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(bin(&["verify", "--suite", "nope"]).status.code(), Some(1));
    assert_eq!(
        bin(&["verify", "--suite", "formulas", "--rollouts", "0"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        bin(&["verify", "--suite", "formulas"]).status.code(),
        Some(0)
    );
    // The drift grid clips above 0.1, so this suite reports a failed verdict.
    assert_eq!(
        bin(&["verify", "--suite", "thm2-sign", "--rollouts", "100"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn sweep_has_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "gn.toml", GN);
    let out = dir.path().join("sweep");
    let res = bin(&[
        "sweep",
        "--config",
        &cfg,
        "--parameter",
        "corruption.eps0",
        "--values",
        "0,0.2,0.4,0.6",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let csv = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn presets_listing_and_instances() {
    let res = bin(&["presets"]);
    let text = String::from_utf8(res.stdout).unwrap();
    assert!(
        text.contains("gn-3-5-1-2") && text.contains("cd-default") && text.contains("thm1-drift")
    );

    let dir = tempfile::tempdir().unwrap();
    for name in ["gn-4-5-3-0", "cd-default", "pe-default"] {
        let json = bin(&["presets", "--show", name]).stdout;
        let file = dir.path().join(format!("{name}.json"));
        std::fs::write(&file, &json).unwrap();
        let task = match &name[..2] {
            "gn" => "guess_numbers",
            "cd" => "circuit_decoding",
            _ => "preference_estimation",
        };
        let cfg = write_config(
            dir.path(),
            &format!("{name}.toml"),
            &format!("rollouts = 3\n\n[environment]\ntask = \"{task}\"\ninstance_file = \"{name}.json\"\n"),
        );
        let out = dir.path().join(name);
        let res = bin(&["run", "--config", &cfg, "--output", out.to_str().unwrap()]);
        assert!(
            res.status.success(),
            "{name}: {}",
            String::from_utf8_lossy(&res.stderr)
        );
    }
}

#[test]
fn library_runs_are_reproducible() {
    let cfg = ExperimentConfig::from_toml(GN).unwrap();
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a.records, b.records);
    assert_eq!(a.advantage, b.advantage);
}
