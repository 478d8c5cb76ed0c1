use std::path::{Path, PathBuf};
use std::process::ExitCode;

use belief_trap::runner::config::preset_names;
use belief_trap::runner::{
    run_experiment, run_sweep, verify_suite, ExperimentConfig, Suite, VerifyOptions,
};
use belief_trap::{Error, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "belieftrap",
    version,
    about = "Belief-trap experiments over active-reasoning tasks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    rollouts: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    output: Option<PathBuf>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(n) = self.rollouts {
            cfg.rollouts = n;
        }
        if let Some(h) = self.horizon {
            cfg.horizon = Some(h);
        }
        if let Some(e) = self.eta {
            cfg.eta = e;
        }
        if let Some(o) = &self.output {
            cfg.output_dir = o.clone();
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its four output files.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run one experiment per value of a parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Dotted parameter name, e.g. `corruption.eps0` or `synthetic.rho`.
        #[arg(long)]
        parameter: Option<String>,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run a verification suite and print its JSON verdict.
    Verify {
        #[arg(long)]
        suite: String,
        /// Base experiment for rollout-driven suites.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        rollouts: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the verdict to this file.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// List presets and verification suites, or show one preset's instance.
    Presets {
        #[arg(long)]
        show: Option<String>,
    },
}

fn load(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn show_preset(name: &str) -> Result<String> {
    let task = if name.starts_with("gn-") {
        "guess_numbers"
    } else if name.starts_with("cd-") {
        "circuit_decoding"
    } else {
        "preference_estimation"
    };
    let cfg = ExperimentConfig::from_toml(&format!(
        "[environment]\ntask = \"{task}\"\npreset = \"{name}\"\n"
    ))?;
    cfg.instance()?.to_json()
}

/// Returns `Ok(false)` when a verification suite fails.
fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config, overrides } => {
            let cfg = load(&config, &overrides)?;
            let out = run_experiment(&cfg)?;
            out.write(&cfg.output_dir)?;
            let s = &out.summary;
            println!(
                "{}: {} rollouts, success {:.3}, mean turns {:.2}, truncated {:.3} -> {}",
                s.label,
                s.rollouts,
                s.success_rate,
                s.mean_turns,
                s.truncation_frequency,
                cfg.output_dir.display()
            );
        }
        Command::Sweep {
            config,
            parameter,
            values,
            overrides,
        } => {
            let mut cfg = load(&config, &overrides)?;
            match (parameter, values, cfg.sweep.as_mut()) {
                (Some(p), Some(v), _) => {
                    cfg.sweep = Some(belief_trap::runner::SweepConfig {
                        parameter: p,
                        values: v,
                    })
                }
                (None, None, Some(_)) => {}
                (p, v, Some(sw)) => {
                    if let Some(p) = p {
                        sw.parameter = p;
                    }
                    if let Some(v) = v {
                        sw.values = v;
                    }
                }
                _ => {
                    return Err(Error::Config(
                        "sweep needs --parameter and --values or a [sweep] section".into(),
                    ))
                }
            }
            let out = run_sweep(&cfg)?;
            out.write(&cfg.output_dir)?;
            println!(
                "{} sweep point(s) -> {}",
                out.len(),
                cfg.output_dir.join("summary.csv").display()
            );
        }
        Command::Verify {
            suite,
            config,
            rollouts,
            seed,
            output,
        } => {
            let suite: Suite = suite.parse()?;
            let config = config.map(|p| ExperimentConfig::load(&p)).transpose()?;
            let report = verify_suite(
                suite,
                &VerifyOptions {
                    rollouts,
                    seed,
                    config,
                },
            )?;
            let mut json = serde_json::to_string_pretty(&report)
                .map_err(|e| Error::Serialization(e.to_string()))?;
            json.push('\n');
            print!("{json}");
            if let Some(path) = output {
                std::fs::write(&path, &json).map_err(|e| Error::Io { path, source: e })?;
            }
            return Ok(report.passed);
        }
        Command::Presets { show: Some(name) } => print!("{}", show_preset(&name)?),
        Command::Presets { show: None } => {
            println!("presets:");
            for n in preset_names() {
                println!("  {n}");
            }
            println!("suites:");
            for s in Suite::ALL {
                println!("  {s}");
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Io { .. } => 3,
                _ => 1,
            })
        }
    }
}
