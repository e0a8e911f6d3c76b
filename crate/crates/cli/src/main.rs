//! `homog`: batch driver for effective-Hamiltonian and homogenisation
//! experiments described by a TOML scenario file.
//!
//! Exit status: 0 when every check passes, 1 on a tolerance failure,
//! 2 on a schema violation, 3 on a solver or I/O failure.  Failures are
//! also reported as one JSON record on stderr.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use commands::{CliError, Command};
use config::ScenarioConfig;
use output::{write_artifacts, ErrorRecord};

#[derive(Debug, Parser)]
#[command(name = "homog", version, about = "Effective Hamiltonians and homogenisation on abelian covers")]
struct Args {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum)]
    command: Command,
    /// Overrides `output.dir`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads (defaults to `compute.threads`, then all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Replaces every seed in the scenario.
    #[arg(long)]
    seed_override: Option<u64>,
}

fn fail(status: &'static str, code: u8, path: Option<String>, message: String) -> ExitCode {
    ErrorRecord {
        status,
        exit_code: code as i32,
        path,
        message,
        failures: Vec::new(),
    }
    .emit();
    ExitCode::from(code)
}

fn schema_fail(e: config::ConfigError) -> ExitCode {
    let path = (!e.path.is_empty()).then(|| e.path.clone());
    fail("schema_error", 2, path, e.message)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut cfg = match ScenarioConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => return schema_fail(e),
    };
    if let Some(s) = args.seed_override {
        cfg.override_seed(s);
    }
    if let Some(n) = args.threads.or(cfg.compute.threads) {
        if n == 0 {
            return fail("schema_error", 2, Some("--threads".into()), "must be positive".into());
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail("solver_error", 3, None, format!("thread pool: {e}"));
        }
    }

    let art = match commands::run(&cfg, args.command) {
        Ok(a) => a,
        Err(CliError::Schema(e)) => return schema_fail(e),
        Err(CliError::Solver(m)) => return fail("solver_error", 3, None, m),
    };

    let name = args.command.name();
    if args.command == Command::Validate {
        println!("{}", serde_json::to_string_pretty(&art.report).expect("serialisable report"));
    } else {
        let dir = args.out_dir.unwrap_or_else(|| cfg.output.dir.clone());
        let written = match write_artifacts(&dir, name, &art, cfg.output.csv, cfg.output.json) {
            Ok(w) => w,
            Err(e) => return fail("io_error", 3, None, format!("{}: {e}", dir.display())),
        };
        let summary = json!({
            "scenario": cfg.name,
            "command": name,
            "pass": art.pass,
            "outputs": written.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        });
        println!("{summary}");
    }
    if art.pass {
        ExitCode::SUCCESS
    } else {
        ErrorRecord {
            status: "tolerance_failure",
            exit_code: 1,
            path: None,
            message: format!("{name} checks failed"),
            failures: art.failures,
        }
        .emit();
        ExitCode::from(1)
    }
}
