use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qbattery_cli::commands::{compare, simulate, sweep};
use qbattery_cli::config::RunConfig;
use qbattery_cli::selftest::{run_selftest, CheckStatus, Fault, SelftestOptions};
use qbattery_cli::CliError;

#[derive(Parser)]
#[command(name = "qbattery", version, about = "Open quantum battery charging simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write its samples.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run one simulation per value of the sweep block.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Peak ergotropy of counterdiabatic, bare and static drives.
    Compare {
        #[arg(long)]
        config: PathBuf,
    },
    /// Cross-check the solvers against each other.
    Selftest {
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long, hide = true)]
        inject_fault: Option<FaultArg>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    FlipBatteryExchange,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { config } => {
            let manifest = simulate(&RunConfig::load(&config)?)?;
            for o in &manifest.outputs {
                println!("wrote {} rows to {}", o.rows, o.file.display());
            }
        }
        Command::Sweep { config } => {
            let manifest = sweep(&RunConfig::load(&config)?)?;
            for o in &manifest.outputs {
                println!("{} -> {} ({} rows)", o.value.unwrap_or(f64::NAN), o.file.display(), o.rows);
            }
        }
        Command::Compare { config } => {
            let report = compare(&RunConfig::load(&config)?)?;
            println!("{}", serde_json::to_string_pretty(&report.points).expect("report serializes"));
        }
        Command::Selftest { json, inject_fault } => {
            let options = SelftestOptions {
                fault: inject_fault.map(|FaultArg::FlipBatteryExchange| Fault::FlipBatteryExchange),
            };
            let report = run_selftest(&options);
            for c in &report.checks {
                let tag = match c.status {
                    CheckStatus::Pass => "PASS",
                    CheckStatus::Warn => "WARN",
                    CheckStatus::Fail => "FAIL",
                };
                println!("{tag} {}: {}", c.name, c.detail);
            }
            if let Some(path) = json {
                let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
                std::fs::write(&path, text).map_err(|source| CliError::Io { path, source })?;
            }
            if report.failed() {
                let names: Vec<_> = report
                    .checks
                    .iter()
                    .filter(|c| c.status == CheckStatus::Fail)
                    .map(|c| c.name.as_str())
                    .collect();
                return Err(CliError::SelftestFailed(names.join(", ")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qbattery: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
