use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use semlift::cli::{cmd_lift, cmd_selftest, cmd_verify, parse_emit, parse_sizes, CliError, Emit, LiftOptions, EXIT_INPUT};

#[derive(Parser)]
#[command(name = "semlift", version, about = "Lift numerical kernels to SPL and named transform specifications")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lift a KernelC file and report every stage.
    Lift {
        file: PathBuf,
        #[arg(long)]
        entry: Option<String>,
        /// Comma-separated: sigma-spl, spl, equation, spec, trace.
        #[arg(long)]
        emit: Option<String>,
        #[arg(long, default_value = "4,8,16")]
        sizes: String,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        json: bool,
    },
    /// Compare a kernel against a candidate SPL expression.
    Verify {
        file: PathBuf,
        #[arg(long)]
        spl: String,
        #[arg(long, default_value = "4,8,16")]
        sizes: String,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Check the built-in operator identities.
    Selftest {
        #[arg(long)]
        json: bool,
    },
}

fn run(cli: Cli) -> Result<(i32, String), CliError> {
    Ok(match cli.command {
        Command::Lift { file, entry, emit, sizes, tol, json } => {
            let emit = match emit {
                Some(e) => parse_emit(&e)?,
                None => Emit::ALL.to_vec(),
            };
            let opts = LiftOptions { entry, emit, sizes: parse_sizes(&sizes)?, tolerance: tol, json };
            cmd_lift(&file, &opts)
        }
        Command::Verify { file, spl, sizes, tol } => cmd_verify(&file, &spl, &parse_sizes(&sizes)?, tol),
        Command::Selftest { json } => cmd_selftest(json),
    })
}

fn main() -> ExitCode {
    let (code, text) = run(Cli::parse()).unwrap_or_else(|e| (EXIT_INPUT, format!("error: {e}\n")));
    print!("{text}");
    ExitCode::from(code as u8)
}
