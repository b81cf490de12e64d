//! Command-line front end: runs catalog or custom analyses, prints the
//! reference verification battery, and lists the built-in systems.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dirac_kit::catalog;
use dirac_kit::config;
use dirac_kit::error::Error;
use dirac_kit::report::{exit_code_for, run_analysis, AnalysisOptions};
use dirac_kit::verify::{criterion_lines, run_paper_checks};

#[derive(Parser)]
#[command(name = "dirac-kit", version, about = "Dirac structures, reduction, and constrained mechanics on charts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the analysis pipeline for a built-in system and action.
    Analyze {
        #[arg(long)]
        system: String,
        #[arg(long)]
        action: String,
        /// Parameter overrides as `name=value`.
        #[arg(long, value_name = "NAME=VALUE")]
        params: Vec<String>,
        #[arg(long, default_value_t = 128)]
        samples: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the reference verification battery.
    Verify {
        /// Check every catalog expectation (the default and only mode).
        #[arg(long)]
        paper: bool,
        /// Only run checks whose name contains this string.
        #[arg(long)]
        only: Option<String>,
        #[arg(long, default_value_t = 128)]
        samples: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// List the built-in systems and their actions.
    ListSystems,
    /// Run the analysis pipeline for a system described by a JSON document.
    Custom {
        #[arg(long)]
        file: PathBuf,
        /// Action name to analyze (defaults to the first).
        #[arg(long)]
        action: Option<String>,
        #[arg(long, default_value_t = 128)]
        samples: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_params(items: &[String]) -> Result<BTreeMap<String, f64>, Error> {
    let mut map = BTreeMap::new();
    for item in items {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("expected name=value, got `{item}`")))?;
        let value: f64 = v
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad value in `{item}`")))?;
        map.insert(k.trim().to_string(), value);
    }
    Ok(map)
}

fn input_error(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::RankInstability { .. } | Error::Degenerate { .. } => ExitCode::from(3),
        _ => ExitCode::from(2),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Analyze { system, action, params, samples, seed, tol, out } => {
            let overrides = match parse_params(&params) {
                Ok(p) => p,
                Err(e) => return input_error(&e),
            };
            let entry = match catalog::load(&system, &overrides) {
                Ok(e) => e,
                Err(e) => return input_error(&e),
            };
            let options = AnalysisOptions { seed, samples, tol };
            let result = run_analysis(&entry, &action, &options);
            let code = exit_code_for(&result);
            match result {
                Ok(report) => {
                    let json = report.to_json().expect("serializable report");
                    match out {
                        Some(path) => {
                            if let Err(e) = std::fs::write(&path, &json) {
                                return input_error(&Error::Io(e));
                            }
                            for c in &report.checks {
                                println!("{:<40} {:?}", c.name, c.status);
                            }
                            println!("report written to {}", path.display());
                        }
                        None => println!("{json}"),
                    }
                    ExitCode::from(code as u8)
                }
                Err(e) => input_error(&e),
            }
        }
        Command::Verify { paper: _, only, samples, seed, tol } => {
            let options = AnalysisOptions { seed, samples, tol };
            match run_paper_checks(only.as_deref(), &options) {
                Ok(checks) => {
                    let mut failed = 0usize;
                    for c in &checks {
                        let status = if c.record.ok() { "PASS" } else { "FAIL" };
                        if !c.record.ok() {
                            failed += 1;
                        }
                        match c.record.max_residual {
                            Some(r) if r.is_finite() => {
                                println!("{status} {:<44} residual {r:.3e}", c.record.name)
                            }
                            _ => println!("{status} {:<44}", c.record.name),
                        }
                        if !c.record.ok() {
                            if let Some(d) = &c.record.detail {
                                println!("     ↳ {d}");
                            }
                        }
                    }
                    if only.is_none() {
                        println!("---");
                        for (criterion, ok, passed, total) in criterion_lines(&checks) {
                            println!(
                                "criterion {criterion}: {} ({passed}/{total} checks)",
                                if ok { "PASS" } else { "FAIL" }
                            );
                        }
                    }
                    if failed == 0 {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => input_error(&e),
            }
        }
        Command::ListSystems => {
            for name in catalog::SYSTEM_NAMES {
                match catalog::spec_of(name) {
                    Ok(spec) => {
                        let actions: Vec<String> =
                            spec.actions.iter().map(|a| a.name.clone()).collect();
                        let params: Vec<String> = spec.params.keys().cloned().collect();
                        println!("{name}");
                        println!("  actions: {}", actions.join(", "));
                        if !params.is_empty() {
                            println!("  params:  {}", params.join(", "));
                        }
                    }
                    Err(e) => eprintln!("{name}: {e}"),
                }
            }
            ExitCode::SUCCESS
        }
        Command::Custom { file, action, samples, seed, tol, out } => {
            let spec = match config::load_file(&file) {
                Ok(s) => s,
                Err(e) => return input_error(&e),
            };
            let entry = match config::build_spec(&spec, &BTreeMap::new()) {
                Ok(e) => e,
                Err(e) => return input_error(&e),
            };
            let action_name = match action
                .or_else(|| spec.actions.first().map(|a| a.name.clone()))
            {
                Some(a) => a,
                None => {
                    return input_error(&Error::Config("document has no actions".into()));
                }
            };
            let options = AnalysisOptions { seed, samples, tol };
            let result = run_analysis(&entry, &action_name, &options);
            let code = exit_code_for(&result);
            match result {
                Ok(report) => {
                    let json = report.to_json().expect("serializable report");
                    match out {
                        Some(path) => {
                            if let Err(e) = std::fs::write(&path, &json) {
                                return input_error(&Error::Io(e));
                            }
                            println!("report written to {}", path.display());
                        }
                        None => println!("{json}"),
                    }
                    ExitCode::from(code as u8)
                }
                Err(e) => input_error(&e),
            }
        }
    }
}
