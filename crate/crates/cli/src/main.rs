mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use commands::Outcome;

/// Safety certificates for monotone systems from recorded trajectories.
///
/// Exit status: 0 on success, 2 when the result is inconclusive (no
/// certificate, or validation flagged a problem), 1 on errors.
#[derive(Parser, Debug)]
#[command(name = "monocert", version, about)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Writes the assembled linear program in LP format.
    #[arg(long, global = true, value_name = "FILE")]
    lp_dump: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generates the trajectories listed under [simulate].
    Simulate,
    /// Searches for a robust certificate (systems with disturbances).
    Verify,
    /// Searches for a certificate and a safe controller set.
    Synthesize {
        /// Branch and bound over indicator variables instead of enumeration.
        #[arg(long)]
        milp: bool,
    },
    /// Re-checks a stored certificate and samples its properties.
    Validate {
        /// Certificate file (default: certificate.output from the config).
        #[arg(long)]
        certificate: Option<PathBuf>,
        /// Samples per property check.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Evaluates a certificate on a 2-D grid and writes CSV.
    EvalGrid {
        #[arg(long)]
        certificate: PathBuf,
        #[arg(long, default_value_t = config::defaults::GRID_RESOLUTION)]
        resolution: usize,
        /// Two 1-based axes, e.g. `1,2`.
        #[arg(long, default_value = "1,2")]
        axes: String,
        /// Values for the remaining coordinates, comma separated.
        #[arg(long)]
        at: Option<String>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Prints defaults, built-in systems and a summary of the config.
    Info,
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().with_context(|| format!("{what}: `{v}` is not a number")))
        .collect()
}

fn parse_axes(s: &str) -> Result<(usize, usize)> {
    let v: Vec<&str> = s.split(',').collect();
    let [a, b] = v.as_slice() else {
        bail!("--axes: expected two comma-separated axes, got `{s}`");
    };
    let p = |x: &str| -> Result<usize> {
        let k: usize = x.trim().parse().with_context(|| format!("--axes: `{x}` is not an axis number"))?;
        if k == 0 {
            bail!("--axes: axes are numbered from 1");
        }
        Ok(k - 1)
    };
    Ok((p(a)?, p(b)?))
}

fn need_config(path: Option<&Path>) -> Result<config::Loaded> {
    let p = path.context("this command needs --config <FILE>")?;
    config::load(p)
}

fn run(cli: Cli) -> Result<Outcome> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .context("cannot configure worker threads")?;
    }
    let lp = cli.lp_dump.as_deref();
    let loaded = match (&cli.command, cli.config.as_deref()) {
        (Command::EvalGrid { .. }, _) => None,
        (Command::Info, None) => None,
        (_, p) => Some(need_config(p)?),
    };
    let seed = cli
        .seed
        .or(loaded.as_ref().map(|l| l.config.seed))
        .unwrap_or(config::defaults::SEED);
    match &cli.command {
        Command::Simulate => commands::cmd_simulate(loaded.as_ref().unwrap(), seed),
        Command::Verify => commands::cmd_verify(loaded.as_ref().unwrap(), seed, lp),
        Command::Synthesize { milp } => commands::cmd_synthesize(loaded.as_ref().unwrap(), seed, lp, *milp),
        Command::Validate { certificate, samples } => {
            commands::cmd_validate(loaded.as_ref().unwrap(), seed, certificate.as_deref(), *samples)
        }
        Command::EvalGrid {
            certificate,
            resolution,
            axes,
            at,
            output,
        } => {
            let axes = parse_axes(axes)?;
            let at = at.as_deref().map(|s| parse_list(s, "--at")).transpose()?;
            commands::cmd_eval_grid(certificate, *resolution, axes, at.as_deref(), output.as_deref())
        }
        Command::Info => commands::cmd_info(loaded.as_ref(), seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Inconclusive) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
