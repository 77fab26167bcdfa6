use std::path::PathBuf;
use std::process::ExitCode;

use carespace_cli::{cmd_analyze, cmd_report, cmd_simulate, CliError, ReportFormat, RunConfig};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "carespace", version, about = "Simulate, analyze and report on care-space sensor corpora")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a deterministic synthetic corpus.
    Simulate {
        /// Scenario spec (JSON). Defaults to the built-in scenario.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Analyze a corpus into a result bundle.
    Analyze {
        /// Corpus directory; falls back to `corpus` in the config.
        corpus: Option<PathBuf>,
        /// Run configuration (JSON).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Bundle directory; falls back to `out` in the config, then `<corpus>/results`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Maximum sessions analyzed concurrently.
        #[arg(long)]
        jobs: Option<usize>,
        /// Human-readable renderings to include; replaces the config's list.
        #[arg(long, value_enum)]
        format: Vec<ReportFormat>,
    },
    /// Render a stored bundle as tables and plots.
    Report {
        bundle: PathBuf,
        /// Output directory; defaults to `<bundle>-report`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Defaults to every format.
        #[arg(long, value_enum)]
        format: Vec<ReportFormat>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { config, seed, out } => {
            let c = cmd_simulate(config.as_deref(), seed, &out)?;
            eprintln!("wrote {} sessions to {}", c.sessions.len(), out.display());
        }
        Command::Analyze { corpus, config, out, jobs, format } => {
            let mut cfg = match &config {
                Some(p) => RunConfig::load(p)?,
                None => RunConfig::default(),
            };
            if !format.is_empty() {
                cfg.formats = format;
            }
            let corpus = corpus
                .or_else(|| cfg.corpus.clone())
                .ok_or_else(|| CliError::Config("no corpus given on the command line or in the config".into()))?;
            let out = out.or_else(|| cfg.out.clone()).unwrap_or_else(|| corpus.join("results"));
            let o = cmd_analyze(&corpus, &cfg, &out, jobs)?;
            for f in &o.analysis.failures {
                eprintln!("warning: {} skipped: {}", f.session, f.message);
            }
            for n in &o.analysis.notes {
                eprintln!("note: {n}");
            }
            eprintln!(
                "analyzed {} of {} sessions; bundle at {}",
                o.analysis.sessions.len(),
                o.analysis.declared,
                out.display()
            );
        }
        Command::Report { bundle, out, format } => {
            let out = out.unwrap_or_else(|| {
                let mut name = bundle.file_name().map(|n| n.to_os_string()).unwrap_or_else(|| "bundle".into());
                name.push("-report");
                bundle.with_file_name(name)
            });
            let m = cmd_report(&bundle, &format, &out)?;
            eprintln!("wrote {} files to {}", m.files.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
