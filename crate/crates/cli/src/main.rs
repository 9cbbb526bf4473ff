use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use onehomog_cli::{commands, init_threads, report::render_summary, ScenarioConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Construct,
    Verify,
    Minimize,
    Compare,
    Meyers,
    Unique,
    All,
}

/// Runs the verification suites for a scenario and writes report.json,
/// sweep_*.csv and profile_*.csv.
#[derive(Debug, Parser)]
#[command(name = "onehomog", version)]
struct Cli {
    #[arg(value_enum, default_value = "all")]
    command: Command,
    /// Scenario file; the flagship scenario when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding [output] dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Multiplies every N_R and N_theta.
    #[arg(long)]
    grid_scale: Option<f64>,
    /// Overrides [scenario] seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    let mut cfg = match &cli.config {
        Some(p) => ScenarioConfig::from_path(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = cli.grid_scale {
        anyhow::ensure!(s > 0.0 && s.is_finite(), "--grid-scale must be positive");
        cfg = cfg.with_grid_scale(s);
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli.out.clone().unwrap_or_else(|| cfg.output.clone());
    let names: Vec<&str> = match cli.command {
        Command::All => commands::COMMANDS.to_vec(),
        c => vec![match c {
            Command::Construct => "construct",
            Command::Verify => "verify",
            Command::Minimize => "minimize",
            Command::Compare => "compare",
            Command::Meyers => "meyers",
            Command::Unique => "unique",
            Command::All => unreachable!(),
        }],
    };
    let report = commands::run(&cfg, &names)?;
    report.write(&out)?;
    render_summary(&report, &mut std::io::stdout().lock())?;
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
