mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, ValueEnum};

use commands::Failure;
use config::{ExperimentConfig, GridConfig};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  verification failure (a deviation improves on the candidate by more than improvement_tol)
  2  configuration error (parse error, invariant violation, unsupported model for the command)
  3  I/O error (unreadable config, unwritable output)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    /// Closed-form n-player equilibrium with a fixed-point cross-check
    Equilibrium,
    /// Per-type mean-field equilibrium
    Mfe,
    /// Grid search for profitable constant deviations
    Verify,
    /// Monte Carlo simulation of terminal log-returns
    Simulate,
    /// Analytic and finite-difference partial derivatives, optional sweep
    Sensitivity,
    /// Distance between sampled n-player and mean-field equilibria
    Converge,
    /// Sweeps behind the published figures
    Figures,
}

#[derive(Debug, Parser)]
#[command(version, about = "Fund-manager competition games: equilibria, checks and experiments", after_help = EXIT_CODES)]
struct Cli {
    command: Command,
    /// Experiment config (TOML); optional for `figures`
    config: Option<PathBuf>,
    /// Output directory (overrides `output`)
    #[arg(long)]
    output: Option<PathBuf>,
    /// Fixed-point tolerance (default 1e-12)
    #[arg(long)]
    tol: Option<f64>,
    /// Deviation grid as `lo,hi,step` (default -10,10,0.05)
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    deviation_grid: Option<GridConfig>,
    /// Monte Carlo paths
    #[arg(long)]
    paths: Option<usize>,
    /// Monte Carlo seed
    #[arg(long)]
    seed: Option<u64>,
    /// Write the simulated path matrix here (`.bin` for raw little-endian f64, CSV otherwise)
    #[arg(long)]
    dump_paths: Option<PathBuf>,
    /// Print the effective config as TOML and exit
    #[arg(long)]
    dump_config: bool,
}

fn parse_grid(s: &str) -> Result<GridConfig, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [lo, hi, step] => Ok(GridConfig { lo, hi, step }),
        _ => Err("expected lo,hi,step".into()),
    }
}

fn load(cli: &Cli) -> Result<Option<ExperimentConfig>, Failure> {
    let Some(path) = &cli.config else {
        return Ok(None);
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Io)?;
    let mut cfg: ExperimentConfig = toml::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(Failure::Config)?;
    if let Some(o) = &cli.output {
        cfg.output = o.display().to_string();
    }
    if let Some(t) = cli.tol {
        cfg.tol = t;
    }
    if let Some(g) = cli.deviation_grid {
        cfg.deviation_grid = g;
    }
    if let Some(p) = cli.paths {
        cfg.simulation.paths = p;
    }
    if let Some(s) = cli.seed {
        cfg.simulation.seed = s;
    }
    cfg.validate()
        .with_context(|| format!("invalid config {}", path.display()))
        .map_err(Failure::Config)?;
    Ok(Some(cfg))
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    let cfg = load(cli)?;
    if cli.dump_config {
        let cfg = cfg.ok_or_else(|| Failure::Config(anyhow!("--dump-config needs a config file")))?;
        print!("{}", cfg.to_toml().map_err(Failure::Config)?);
        return Ok(true);
    }
    let out: PathBuf = match (&cfg, &cli.output) {
        (Some(c), _) => PathBuf::from(&c.output),
        (None, Some(o)) => o.clone(),
        (None, None) => PathBuf::from("out"),
    };
    let cfg = match (cli.command, cfg) {
        (Command::Figures, _) => {
            commands::prepare_output(&out)?;
            return commands::figures(&out);
        }
        (_, Some(c)) => c,
        (cmd, None) => return Err(Failure::Config(anyhow!("`{cmd:?}` needs a config file"))),
    };
    commands::prepare_output(&out)?;
    let out: &Path = &out;
    match cli.command {
        Command::Equilibrium => commands::equilibrium(&cfg, out),
        Command::Mfe => commands::mfe(&cfg, out),
        Command::Verify => commands::verify(&cfg, out),
        Command::Simulate => commands::simulate_cmd(&cfg, out, cli.dump_paths.as_deref()),
        Command::Sensitivity => commands::sensitivity(&cfg, out),
        Command::Converge => commands::converge(&cfg, out),
        Command::Figures => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Io(e)) => {
            eprintln!("I/O error: {e:#}");
            ExitCode::from(3)
        }
    }
}
