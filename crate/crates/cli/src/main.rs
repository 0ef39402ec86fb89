use clap::{Args, Parser, Subcommand};
use compadv_cli::commands::{cmd_allocate, cmd_curve, cmd_gen_channel, cmd_oracle_check};
use compadv_cli::config::{ScenarioConfig, StrategyName};
use compadv_cli::{CliError, CliResult};
use std::io::{self, Write};
use std::path::PathBuf;
use std::process;

/// Comparative-advantage resource block allocation.
#[derive(Parser)]
#[command(name = "compadv", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario TOML file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic channels and write them as a trace CSV.
    GenChannel(Common),
    /// Rank, partition and allocate blocks for the configured users.
    Allocate(Common),
    /// Capacity tradeoff curves and equal-capacity improvement.
    Curve {
        #[command(flatten)]
        common: Common,
        /// Comma-separated subset of ca, anti_ca, random.
        #[arg(long, value_delimiter = ',')]
        strategies: Option<Vec<StrategyName>>,
    },
    /// Compare exhaustive and greedy sum-capacity oracles on small grids.
    OracleCheck {
        #[command(flatten)]
        common: Common,
        /// Largest block count to enumerate.
        #[arg(long)]
        max_n: Option<usize>,
    },
}

fn effective(common: &Common) -> CliResult<ScenarioConfig> {
    let mut cfg = match &common.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> CliResult<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::GenChannel(common) => cmd_gen_channel(&effective(&common)?, &mut out).map(drop),
        Command::Allocate(common) => cmd_allocate(&effective(&common)?, &mut out),
        Command::Curve { common, strategies } => {
            let mut cfg = effective(&common)?;
            if let Some(s) = strategies {
                cfg.curve.strategies = s;
            }
            if cfg.curve.strategies.is_empty() {
                return Err(CliError::Validation("at least one strategy is required".into()));
            }
            let strategies = cfg.curve.strategies.clone();
            cmd_curve(&cfg, &strategies, &mut out)
        }
        Command::OracleCheck { common, max_n } => {
            let mut cfg = effective(&common)?;
            if let Some(n) = max_n {
                cfg.oracle.max_n = n;
            }
            cmd_oracle_check(&cfg, cfg.oracle.max_n, &mut out).map(drop)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        let _ = io::stdout().flush();
        eprintln!("error: {err}");
        process::exit(err.exit_code() as i32);
    }
}
