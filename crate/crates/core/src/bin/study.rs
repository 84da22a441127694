//! `study` command line: runs configured studies and writes CSV reports.
//!
//! Exit status: 0 when every checked row passes, 1 when any fails, 2 on
//! usage or configuration errors.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sgspline::study::{run_study, StudyConfig, StudyKind};

#[derive(Parser)]
#[command(name = "study", version, about = "Sparse-grid spline convergence and identity studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the study described by a configuration file.
    Run {
        config: PathBuf,
        /// Override a configuration key (repeatable).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// CSV destination; stdout when neither this nor `out` is given.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List study kinds.
    ListKinds,
    /// Print a template configuration for a kind.
    GenConfig { kind: String },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match cli.command {
        Command::ListKinds => {
            for k in StudyKind::ALL {
                println!("{:<24} {}", k.name(), k.description());
            }
            ExitCode::SUCCESS
        }
        Command::GenConfig { kind } => match StudyKind::parse(&kind) {
            Ok(k) => {
                print!("{}", StudyConfig::template(k));
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Command::Run { config, set, out } => {
            let mut cfg = match StudyConfig::from_file(&config, &set) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {}: {e}", config.display());
                    return ExitCode::from(2);
                }
            };
            if out.is_some() {
                cfg.out = out;
            }
            let report = match run_study(&cfg) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            if cfg.out.is_none() {
                let stdout = std::io::stdout();
                if let Err(e) = report.write_csv(stdout.lock()) {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            }
            let _ = std::io::stderr().write_all(report.summary().as_bytes());
            if report.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
