use std::path::PathBuf;
use std::process::ExitCode;

use amdim_cli::commands::{cmd_mdim, cmd_rd, cmd_tiling, cmd_verify_vp};
use amdim_cli::selftest;
use amdim_cli::{ConfigError, Outcome, RawConfig, Sink};
use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

/// Metric mean dimension and rate-distortion experiments on shift systems.
#[derive(Parser)]
#[command(name = "amdim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Covering-number brackets S, S~ and slope estimates.
    Mdim(RunArgs),
    /// Rate-distortion curves of a shift-invariant measure.
    Rd(RunArgs),
    /// Rates against covering bounds; exits 1 if an exact inequality fails.
    VerifyVp(RunArgs),
    /// Tiles a window, validates it and reports densities and multiplicities.
    Tiling(RunArgs),
    /// Runs the built-in battery over all modules.
    Selftest(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Output directory.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Cap on source support times codebook size per solve.
    #[arg(long)]
    budget_cells: Option<usize>,
    /// Cap on enumerated configurations per window.
    #[arg(long)]
    budget_points: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
}

fn load(args: &RunArgs) -> Result<RawConfig> {
    let text = std::fs::read_to_string(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let mut cfg = RawConfig::parse(&text)?;
    let c = &args.common;
    if let Some(s) = c.seed {
        cfg.set("seed", s);
    }
    if let Some(b) = c.budget_cells {
        cfg.set("budget_cells", b);
    }
    if let Some(b) = c.budget_points {
        cfg.set("budget_points", b);
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<Outcome> {
    let common = match &cli.command {
        Command::Mdim(a) | Command::Rd(a) | Command::VerifyVp(a) | Command::Tiling(a) => &a.common,
        Command::Selftest(c) => c,
    };
    if let Some(j) = common.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global()?;
    }
    match &cli.command {
        Command::Selftest(c) => {
            let mut settings = selftest::default_settings(c.seed.unwrap_or(0));
            if let Some(b) = c.budget_cells {
                settings.budget_cells = b;
            }
            if let Some(b) = c.budget_points {
                settings.budget_points = b;
            }
            let hash = hex::encode(Sha256::digest(settings.canonical().as_bytes()));
            selftest::run(&settings, &Sink::new(&c.out_dir, hash)?)
        }
        Command::Mdim(a) | Command::Rd(a) | Command::VerifyVp(a) | Command::Tiling(a) => {
            let cfg = load(a)?;
            let sink = Sink::new(&a.common.out_dir, cfg.hash())?;
            match &cli.command {
                Command::Mdim(_) => cmd_mdim(&cfg, &sink),
                Command::Rd(_) => cmd_rd(&cfg, &sink),
                Command::VerifyVp(_) => cmd_verify_vp(&cfg, &sink),
                _ => cmd_tiling(&cfg, &sink),
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            if out.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                for f in &out.failures {
                    eprintln!("FAIL {f}");
                }
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.downcast_ref::<ConfigError>().is_some() { 2 } else { 3 })
        }
    }
}
