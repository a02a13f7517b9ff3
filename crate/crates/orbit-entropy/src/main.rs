use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use orbit_entropy::report::{emit, Format};
use orbit_entropy::{run, Command, ExperimentConfig, Overrides};

/// Batch experiments on the entropy of Z+^k actions on the circle and torus.
///
/// Exit status: 0 when every internal check passed, 1 when some check
/// failed, 2 on configuration or I/O errors.
#[derive(Parser, Debug)]
#[command(name = "orbit-entropy", version)]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the command named in the configuration.
    #[arg(long, value_enum)]
    command: Option<Command>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Maximum number of candidates per row.
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Leave `elapsed_ms` cells empty so reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: &Cli) -> anyhow::Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let overrides = Overrides {
        command: cli.command,
        out: cli.out.clone(),
        budget: cli.budget,
        seed: cli.seed,
        no_timing: cli.no_timing,
    };
    let config = ExperimentConfig::load(&cli.config, &overrides)?;
    let report = run(&config)?;
    let mut files = emit(&report, &config.out, Format::Csv)?;
    files.extend(emit(&report, &config.out, Format::StructuredText)?);
    for f in &files {
        println!("wrote {}", f.display());
    }
    for c in report.checks.iter().filter(|c| !c.ok) {
        eprintln!("check failed: {} ({})", c.name, c.detail);
    }
    for e in &report.row_errors {
        eprintln!("row skipped: {e}");
    }
    println!(
        "{}: {} checks, {} failed, {} rows skipped",
        config.command,
        report.checks.len(),
        report.checks.iter().filter(|c| !c.ok).count(),
        report.row_errors.len()
    );
    Ok(report.ok())
}
