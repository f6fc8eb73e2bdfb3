use std::{ fs, path::PathBuf, process::ExitCode };
use anyhow::Context;
use clap::{ Args, Parser, Subcommand };
use photon_filters::{
    experiments::{ self, ExperimentConfig, ExperimentKind },
    Execution,
};

/// Photon-number filters from atoms crossing a cavity mode.
#[derive(Debug, Parser)]
#[command(name = "photon-filters", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Filter functions |a-(n)|^2 for Rosen-Zener and microwave pulses.
    FilterCurves(RunArgs),
    /// Photon distribution after m lower-level detections.
    Sharpen(RunArgs),
    /// Mandel Q after m detections as a function of g0.
    QSweep(RunArgs),
    /// Detuning shift of the n = 49 minimum for five pulse shapes.
    DetuningSensitivity(RunArgs),
    /// Atom transit time against the cavity loss time.
    Feasibility(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML config; omitted keys take the defaults for this experiment.
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Accepted for scripting; every run is deterministic.
    #[arg(long)]
    seedless: bool,
    /// Run on one thread.
    #[arg(long)]
    sequential: bool,
    /// Print the resolved config as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

impl Command {
    fn split(self) -> (ExperimentKind, RunArgs) {
        match self {
            Self::FilterCurves(a) => (ExperimentKind::FilterCurves, a),
            Self::Sharpen(a) => (ExperimentKind::SharpeningSequence, a),
            Self::QSweep(a) => (ExperimentKind::QSweep, a),
            Self::DetuningSensitivity(a) => (ExperimentKind::DetuningSensitivity, a),
            Self::Feasibility(a) => (ExperimentKind::Feasibility, a),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let (kind, args) = cli.command.split();
    let config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ExperimentConfig::from_toml_str(&text, Some(kind))
                .with_context(|| format!("loading {}", path.display()))?
        }
        None => ExperimentConfig::defaults(kind),
    };
    if args.print_config {
        print!("{}", config.to_toml_string()?);
        return Ok(ExitCode::SUCCESS);
    }
    let out_dir = args
        .out
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(kind.name()));
    let exec = if args.sequential { Execution::Sequential } else { Execution::Parallel };

    let record = experiments::run(&config, &out_dir, exec)?;
    println!("{kind}: {} files in {} ({:.2} s)", record.manifest.len(), out_dir.display(), record.duration_secs);
    for entry in &record.manifest {
        println!("  {}  {}", &entry.sha256[..12], entry.path);
    }
    for (key, value) in &record.summary {
        println!("  {key} = {value}");
    }
    let failed: Vec<_> = record.convergence.iter().filter(|c| !c.converged).collect();
    for flag in &failed {
        log::error!("{}: {}", flag.label, flag.message.as_deref().unwrap_or("did not converge"));
    }
    Ok(if failed.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}
