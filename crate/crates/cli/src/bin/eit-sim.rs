use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eit_sim::{parse_config_with, run_scenario, write_artifacts, RunError, Scenario};

#[derive(Parser)]
#[command(name = "eit-sim", version, about = "Coupled-resonator EIT scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Steady-state transmission and group delay against detuning.
    Spectrum(RunArgs),
    /// Group delay on resonance against the effective coupling.
    DelayCurve(RunArgs),
    /// Single-photon pulse slowed by a constant coupling.
    Slow(RunArgs),
    /// Catch, hold and release of a single photon.
    Store(RunArgs),
    /// Full three-level model against the adiabatically eliminated one.
    Oracle(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Directory for the output files.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Also write an SVG plot.
    #[arg(long)]
    svg: bool,
    /// Parse and check the config, then exit.
    #[arg(long)]
    validate_only: bool,
}

fn run(scenario: Scenario, args: &RunArgs) -> Result<(), RunError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| RunError::Io(format!("{}: {e}", args.config.display())))?;
    let config = parse_config_with(&text, Some(scenario))?;
    if args.validate_only {
        println!("{}: ok", args.config.display());
        return Ok(());
    }
    let artifacts = run_scenario(&config, args.svg)?;
    for path in write_artifacts(&args.out_dir, &artifacts)? {
        println!("wrote {}", path.display());
    }
    Ok(())
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
    let (scenario, args) = match &cli.command {
        Command::Spectrum(a) => (Scenario::Spectrum, a),
        Command::DelayCurve(a) => (Scenario::DelayCurve, a),
        Command::Slow(a) => (Scenario::Slow, a),
        Command::Store(a) => (Scenario::Store, a),
        Command::Oracle(a) => (Scenario::Oracle, a),
    };
    match run(scenario, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("eit-sim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
