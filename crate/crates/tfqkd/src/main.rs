use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use tfqkd::commands;
use tfqkd::config::{ProtocolName, RunConfig, SystemOverrides};
use tfqkd::validate;

/// Finite-key rates for twin-field QKD.
#[derive(Parser, Debug)]
#[command(name = "tfqkd", version)]
struct Cli {
    /// TOML run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (a directory for compare-bounds); stdout when omitted
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    protocol: Option<ProtocolName>,
    /// Worker threads; defaults to one per core
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(flatten)]
    system: SystemOverrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate or optimize one operating point
    Rate,
    /// Optimize along the configured distance or pulse-count grid
    Sweep,
    /// Write interval, gap and sampling-deviation tables
    CompareBounds,
    /// Check the bounds against exact and Monte-Carlo tails
    Validate {
        #[arg(long, hide = true)]
        gamma_scale: Option<f64>,
    },
    /// Print the effective configuration as TOML
    ShowConfig,
}

fn load(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let mut c = RunConfig::load(p)?;
            if let Some(proto) = cli.protocol {
                c.protocol = proto;
            }
            c
        }
        None => match cli.protocol {
            Some(proto) => RunConfig::new(proto),
            None => bail!("missing field `protocol`: pass --protocol or --config"),
        },
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    cli.system.apply(&mut cfg.system);
    if let Command::Validate { gamma_scale: Some(g) } = cli.command {
        cfg.validation.gamma_scale = g;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let cfg = load(cli)?;
    let out = cfg.out.as_deref();
    match cli.command {
        Command::Rate => {
            let p = commands::rate(&cfg)?;
            eprintln!("{}", commands::describe(&p));
            commands::rate_table(std::slice::from_ref(&p)).save(out)?;
        }
        Command::Sweep => {
            let pts = commands::sweep(&cfg)?;
            commands::rate_table(&pts).save(out)?;
        }
        Command::CompareBounds => {
            let dir = out.unwrap_or(Path::new("."));
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            for (name, t) in commands::compare_bounds(&cfg)? {
                t.save(Some(&dir.join(name)))?;
            }
        }
        Command::Validate { .. } => {
            let report = validate::run(&cfg)?;
            report.table.save(out)?;
            eprintln!("{} checks, {} violations", report.table.rows.len(), report.violations);
            if report.violations > 0 {
                return Ok(ExitCode::from(2));
            }
        }
        Command::ShowConfig => print!("{}", cfg.to_toml()?),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
