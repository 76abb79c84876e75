//! Command-line front end: `solve`, `verify`, `resolvent` and `scenario`.
//!
//! Reports go to stdout as JSON. Files are written only when the config names
//! them or when `SUNSTAR_OUTPUT_DIR` is set, in which case every artifact lands
//! in that directory.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sunstar::report::{resolvent_csv, resolvent_report, solve_scenario, trajectory_csv, write_atomic};
use sunstar::scenario::ScenarioConfig;
use sunstar::verify::{self, Suite, VerifyOptions};
use sunstar::Error;

const OUTPUT_DIR_VAR: &str = "SUNSTAR_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "sunstar", version, about = "Delay equations as abstract integral equations: solver and verification harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario and report its mild-equation residual.
    Solve {
        /// Path to a JSON config, or the name of a bundled scenario.
        config: String,
    },
    /// Run verification suites.
    Verify {
        #[arg(long, default_value = "all")]
        suite: Suite,
        #[arg(long, default_value_t = VerifyOptions::default().seed)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "50,100,200,400")]
        m_ladder: Vec<usize>,
        /// Flip the sign of the memory term in the sun-dual shift quadrature.
        #[arg(long)]
        inject_sign_bug: bool,
    },
    /// Cross-check resolvent pairings against Laplace quadrature.
    Resolvent {
        config: String,
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        lambdas: Vec<f64>,
        /// Relative tolerance for both cross-checks.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Print a bundled scenario config, or list the bundled names.
    Scenario { name: Option<String> },
}

enum Failure {
    Verification,
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. }
        | Error::InvalidInput(_)
        | Error::Misaligned { .. }
        | Error::LambdaNotAdmissible { .. }
        | Error::DimensionMismatch { .. }
        | Error::NegativeTime(_)
        | Error::LipschitzViolated { .. } => 2,
        _ => 3,
    }
}

fn load_config(arg: &str) -> Result<ScenarioConfig, Error> {
    let path = Path::new(arg);
    if !path.exists() && ScenarioConfig::bundled_names().contains(&arg) {
        return ScenarioConfig::bundled(arg);
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::config("<path>", format!("cannot read {arg}: {e}")))?;
    ScenarioConfig::from_json(&text)
}

/// Where an artifact goes: inside the override directory when set, otherwise
/// the path named in the config. `None` means the artifact is not written.
fn artifact_path(named: Option<&str>, default_name: &str) -> Option<PathBuf> {
    match std::env::var_os(OUTPUT_DIR_VAR) {
        Some(dir) => {
            let file = named.and_then(|n| Path::new(n).file_name()).map(PathBuf::from).unwrap_or_else(|| default_name.into());
            Some(PathBuf::from(dir).join(file))
        }
        None => named.map(PathBuf::from),
    }
}

/// `out/run.csv` with suffix `_x` becomes `out/run_x.csv`.
fn with_suffix(path: &str, suffix: &str) -> String {
    let p = Path::new(path);
    let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match p.extension() {
        Some(ext) => format!("{stem}{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}{suffix}"),
    };
    p.with_file_name(name).to_string_lossy().into_owned()
}

fn to_json<S: serde::Serialize>(value: &S) -> Result<String, Error> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))
}

fn emit(path: Option<PathBuf>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => write_atomic(&p, text.as_bytes()),
        None => Ok(()),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve { config } => {
            let cfg = load_config(&config)?;
            let (traj, summary) = solve_scenario(&cfg)?;
            let json = to_json(&summary)?;
            println!("{json}");
            emit(artifact_path(cfg.outputs.csv.as_deref(), &format!("{}.csv", cfg.name)), &trajectory_csv(&traj)?)?;
            emit(artifact_path(cfg.outputs.json.as_deref(), &format!("{}.json", cfg.name)), &json)?;
            if !summary.passed {
                return Err(Failure::Verification);
            }
        }
        Command::Verify { suite, seed, m_ladder, inject_sign_bug } => {
            let opts = VerifyOptions { seed, m_ladder, inject_sign_bug };
            let reports = verify::run(suite, &opts)?;
            let json = to_json(&reports)?;
            println!("{json}");
            emit(artifact_path(None, &format!("verify_{}.json", suite.name())), &json)?;
            for r in reports.iter().filter(|r| !r.passed) {
                eprintln!("suite {} failed: {}", r.suite.name(), r.failures().join(", "));
            }
            if reports.iter().any(|r| !r.passed) {
                return Err(Failure::Verification);
            }
        }
        Command::Resolvent { config, lambdas, tol } => {
            let cfg = load_config(&config)?;
            let rep = resolvent_report(&cfg, &lambdas, tol)?;
            let json = to_json(&rep)?;
            println!("{json}");
            let csv = cfg.outputs.csv.as_deref().map(|p| with_suffix(p, "_resolvent"));
            let js = cfg.outputs.json.as_deref().map(|p| with_suffix(p, "_resolvent"));
            emit(artifact_path(csv.as_deref(), &format!("{}_resolvent.csv", cfg.name)), &resolvent_csv(&rep)?)?;
            emit(artifact_path(js.as_deref(), &format!("{}_resolvent.json", cfg.name)), &json)?;
            if !rep.passed {
                return Err(Failure::Verification);
            }
        }
        Command::Scenario { name } => match name {
            Some(n) => println!("{}", ScenarioConfig::bundled(&n)?.to_json()),
            None => ScenarioConfig::bundled_names().iter().for_each(|n| println!("{n}")),
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffix_keeps_directory_and_extension() {
        assert_eq!(with_suffix("out/run.csv", "_r"), "out/run_r.csv");
        assert_eq!(with_suffix("run", "_r"), "run_r");
    }

    #[test]
    fn exit_codes_by_error_kind() {
        assert_eq!(exit_code(&Error::config("dt", "bad")), 2);
        assert_eq!(exit_code(&Error::LambdaNotAdmissible { lambda: 0.0, omega: 0.0 }), 2);
        assert_eq!(exit_code(&Error::Overflow(1.0)), 3);
    }
}
