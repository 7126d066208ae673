use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};

use lorascale_cli::commands::{self, Report};
use lorascale_cli::error::CliError;
use lorascale_cli::scenario::{Scenario, KEYS};

const ABOUT: &str = "Uplink outage and coverage of a single-gateway LoRa network";

fn cli() -> Command {
    let mut cmd = Command::new("lorascale")
        .version(env!("CARGO_PKG_VERSION"))
        .about(ABOUT)
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(Command::new("analyze").about("Analytic h1, q1, q1_approx and joint over the d1 grid"))
        .subcommand(Command::new("simulate").about("Monte Carlo estimates on the d1 grid or over the disk"))
        .subcommand(Command::new("sweep").about("Coverage against mean device count, with the crossover"))
        .subcommand(Command::new("table").about("SF table and derived link quantities"))
        .arg(
            Arg::new("config")
                .long("config")
                .value_name("PATH")
                .value_parser(clap::value_parser!(PathBuf))
                .global(true)
                .help("Scenario file of key = value lines"),
        )
        .arg(
            Arg::new("out")
                .long("out")
                .value_name("PATH")
                .global(true)
                .help("Write output here instead of stdout"),
        )
        .arg(
            Arg::new("nbar")
                .long("nbar")
                .value_name("N")
                .global(true)
                .help("Mean number of devices (same as --mean_devices)"),
        );
    for key in KEYS {
        cmd = cmd.arg(
            Arg::new(*key)
                .long(*key)
                .value_name("VALUE")
                .action(ArgAction::Set)
                .global(true)
                .allow_hyphen_values(true),
        );
    }
    cmd
}

fn overrides(m: &ArgMatches) -> Vec<(&'static str, String)> {
    let mut out = Vec::new();
    for key in KEYS.iter().copied().chain(["nbar", "out"]) {
        if let Some(v) = m.get_one::<String>(key) {
            out.push((key, v.clone()));
        }
    }
    out
}

fn emit(report: &Report, scenario: &Scenario) -> Result<(), CliError> {
    match &scenario.output_path {
        Some(path) => fs::write(path, &report.body).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(report.body.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })?
        }
    }
    if let Some(summary) = &report.summary {
        eprint!("{summary}");
    }
    Ok(())
}

fn run(m: &ArgMatches) -> Result<(), CliError> {
    let (name, sub) = m.subcommand().expect("subcommand is required");
    let config = sub.get_one::<PathBuf>("config");
    let scenario = Scenario::load(config.map(PathBuf::as_path), &overrides(sub))?;
    let report = match name {
        "analyze" => commands::analyze(&scenario)?,
        "simulate" => commands::simulate(&scenario)?,
        "sweep" => commands::sweep(&scenario)?,
        "table" => commands::table(&scenario)?,
        _ => unreachable!(),
    };
    emit(&report, &scenario)?;
    match report.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&matches) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
