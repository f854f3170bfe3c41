use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hessim::cli::{self, CliError};
use hessim::config::RunConfig;

/// Minute-resolution PV + hybrid-battery simulator with energy and economic
/// KPI reports.
#[derive(Parser)]
#[command(name = "hessim", version, about)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate scenarios and write ledger, KPI and economics reports.
    Run {
        /// TOML run configuration; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Scenario(s) to run (s1, s2, s3, s4, s5_vrfb, s5_lib); overrides
        /// the config list.
        #[arg(long = "scenario")]
        scenarios: Vec<String>,
        /// Horizon years (1..=15).
        #[arg(long)]
        years: Option<u32>,
        /// Worker threads for multi-scenario batches (0 = all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Also write the per-minute trace CSV (large).
        #[arg(long)]
        trace: bool,
        /// Output directory (overrides config and HESSIM_OUT_DIR).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the 266-case seasonal SOC-range study.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        /// uc1 (all-year variable), uc2 (winter variable), uc3 (summer
        /// variable); overrides the config.
        #[arg(long = "use-case")]
        use_case: Option<String>,
        #[arg(long)]
        years: Option<u32>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a configuration and list diagnostics without simulating.
    Validate {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Re-render the combined CSV mirrors from JSON reports.
    Report {
        /// Directory holding kpi_*.json / economics_*.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig, CliError> {
    match path {
        Some(p) => Ok(RunConfig::load(p)?),
        None => Ok(RunConfig::default()),
    }
}

/// --out flag, then HESSIM_OUT_DIR, then the config value.
fn resolve_out_dir(flag: Option<PathBuf>, config: &RunConfig) -> PathBuf {
    flag.or_else(|| std::env::var_os("HESSIM_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| config.run.out_dir.clone())
}

fn main() -> ExitCode {
    match dispatch(Args::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn dispatch(args: Args) -> Result<ExitCode, CliError> {
    match args.command {
        Command::Run {
            config,
            scenarios,
            years,
            workers,
            trace,
            out,
        } => {
            let mut config = load_config(&config)?;
            if !scenarios.is_empty() {
                config.run.scenarios = scenarios;
            }
            if let Some(y) = years {
                config.run.years = y;
            }
            if let Some(w) = workers {
                config.run.workers = w;
            }
            if trace {
                config.run.trace = true;
            }
            let out_dir = resolve_out_dir(out, &config);
            let outcome = cli::run(&config, &out_dir)?;
            for file in &outcome.files {
                println!("wrote {}", file.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            config,
            use_case,
            years,
            workers,
            out,
        } => {
            let mut config = load_config(&config)?;
            if let Some(uc) = use_case {
                config.sweep.use_case = uc;
            }
            if let Some(y) = years {
                config.run.years = y;
            }
            if let Some(w) = workers {
                config.run.workers = w;
            }
            let out_dir = resolve_out_dir(out, &config);
            let outcome = cli::sweep(&config, &out_dir)?;
            for file in &outcome.files {
                println!("wrote {}", file.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { config } => {
            let config = load_config(&config)?;
            let diagnostics = cli::validate(&config);
            if diagnostics.is_empty() {
                println!("configuration ok");
                Ok(ExitCode::SUCCESS)
            } else {
                for d in &diagnostics {
                    println!("diagnostic: {d}");
                }
                Ok(ExitCode::from(2))
            }
        }
        Command::Report { out } => {
            let config = RunConfig::default();
            let out_dir = resolve_out_dir(out, &config);
            let outcome = cli::rerender(&out_dir)?;
            for file in &outcome.files {
                println!("wrote {}", file.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
