use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use endotrust::harness::{self, sweep};

#[derive(Parser)]
#[command(name = "endotrust", version, about = "Endogenous DeGroot opinion dynamics over sequences of topics")]
struct Cli {
    /// Replace the config seed (and any replication seeds) with this one.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for replications; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write trace.csv, weights.csv and report.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = "ENDOTRUST_OUT_DIR", default_value = "out")]
        out: PathBuf,
    },
    /// Run the bundled scenario for a figure or example and check it.
    Reproduce {
        /// Target id, or `all`.
        target: String,
        #[arg(long, env = "ENDOTRUST_OUT_DIR", default_value = "out")]
        out: PathBuf,
    },
    /// Run a scenario once per value of a dotted config parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Dotted path into the config, e.g. `trust.delta` or `model.eta_h`.
        #[arg(long)]
        param: String,
        /// Comma-separated values; each is read as JSON, else as a string.
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[arg(long, env = "ENDOTRUST_OUT_DIR", default_value = "out")]
        out: PathBuf,
    },
    /// Check a scenario file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// List the reproduce targets.
    Targets,
}

fn load(path: &Path, seed: Option<u64>) -> Result<endotrust::scenario::ScenarioConfig> {
    let mut cfg = harness::load_config(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(s) = seed {
        cfg.seed = s;
        cfg.seeds.clear();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = load(&config, cli.seed)?;
            let dirs = harness::run_to_dir(&cfg, &out, cli.threads)?;
            for d in dirs {
                println!("wrote {}", d.display());
            }
            Ok(true)
        }
        Command::Reproduce { target, out } => {
            let targets: Vec<&str> = if target == "all" { harness::TARGETS.to_vec() } else { vec![target.as_str()] };
            let mut all = true;
            for t in targets {
                let dir = if target == "all" { out.join(t) } else { out.clone() };
                let report = harness::reproduce(t, &dir, cli.threads)?;
                println!("{t}: {}", if report.passed { "PASS" } else { "FAIL" });
                for c in &report.checks {
                    println!("  {} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                }
                for n in &report.notes {
                    println!("  note: {n}");
                }
                all &= report.passed;
            }
            Ok(all)
        }
        Command::Sweep { config, param, grid, out } => {
            let cfg = load(&config, cli.seed)?;
            let values: Vec<_> = grid.split(',').filter(|s| !s.trim().is_empty()).map(sweep::parse_grid_value).collect();
            if values.is_empty() {
                bail!("sweep grid is empty");
            }
            let rows = harness::sweep(&cfg, &param, &values, cli.threads)?;
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let path = out.join("sweep.csv");
            std::fs::write(&path, sweep::sweep_csv(&rows)).with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {} rows to {}", rows.len(), path.display());
            Ok(true)
        }
        Command::Validate { config } => {
            let cfg = load(&config, cli.seed)?;
            println!("{}: valid {} scenario, {} agents, {} topics", config.display(), cfg.model.name(), cfg.n(), cfg.topics);
            Ok(true)
        }
        Command::Targets => {
            for t in harness::TARGETS {
                println!("{t}");
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
