use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod config;
mod report;
mod run;
mod summary;

use summary::Status;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("summary schema: {0}")]
    Schema(String),
    #[error(transparent)]
    Core(#[from] rectif::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Schema(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "rectif", version, about = "Batch experiments on multiscale coefficients of discrete measures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the tasks of a config file and write CSV/JSON artifacts plus summary.json.
    Run {
        config: PathBuf,
        /// Exit 1 when any check fails, not only when a task errors.
        #[arg(long)]
        strict: bool,
        /// Cap on worker threads.
        #[arg(long)]
        threads: Option<usize>,
        /// Output directory (overrides the config's `out`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Merge summary files into report.csv and plot.csv.
    Report {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, strict, threads, out } => {
            if let Some(n) = threads {
                rectif::par::set_threads(n.max(1));
            }
            run::run(&config, out.as_deref()).map(|o| {
                for t in &o.summary.tasks {
                    let msg = t.message.as_deref().map(|m| format!(": {m}")).unwrap_or_default();
                    eprintln!("{:<14} {:<20}{msg}", t.task, t.status.as_str());
                }
                eprintln!("wrote {}", o.path.display());
                let errored = o.summary.tasks.iter().any(|t| t.status == Status::Error);
                let failed = o.summary.tasks.iter().any(|t| t.status != Status::Ok);
                if errored || (strict && failed) {
                    1
                } else {
                    0
                }
            })
        }
        Command::Report { files, out } => report::report(&files, &out).map(|n| {
            eprintln!("{n} rows written to {}", out.join("report.csv").display());
            0
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
