use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lambda_transfer_cli::{parse_scenario, run_file, scan_file, CliError};

#[derive(Parser)]
#[command(name = "lambda-transfer", version, about = "Run photon-transfer scenarios and write CSV results")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario.
    Run {
        file: PathBuf,
        /// Output directory (overrides outputs.dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeat a scenario over values of one numeric parameter.
    Scan {
        file: PathBuf,
        /// Dotted key inside [params], e.g. `gamma1` or `reservoir.classes`.
        #[arg(long)]
        axis: String,
        /// Comma-separated values; an empty string gives a header-only table.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a scenario without running it.
    Validate { file: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let outcome: Result<(), CliError> = match cli.command {
        Command::Run { file, out } => run_file(&file, out.as_deref()).map(|files| {
            for f in files {
                println!("{}", f.display());
            }
        }),
        Command::Scan { file, axis, values, out } => {
            scan_file(&file, &axis, &values, out.as_deref()).map(|files| {
                for f in files {
                    println!("{}", f.display());
                }
            })
        }
        Command::Validate { file } => parse_scenario(&file).map(|s| {
            println!("ok: {} ({:?})", s.name, s.kind);
        }),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
