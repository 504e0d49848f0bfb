use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use efw_cli::config::{Command, ExperimentConfig};
use efw_cli::{emit, run, CliError, WORKERS_ENV};

#[derive(Parser)]
#[command(name = "efw", version, about = "Electric-field entanglement witness experiments")]
struct Cli {
    /// Worker threads for parallel sweeps (defaults to all cores).
    #[arg(long, global = true, env = WORKERS_ENV)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Witness over a sphere of directions for the three-atom state.
    Fig1Sphere(Common),
    /// Analytic angle sweep for a single-excitation Dicke state.
    DickeSweep(Common),
    /// Exact decay dynamics: witness, concurrence and diagnostics over time.
    Decay(Common),
    /// Cumulant detection times over a grid of chain sizes and spacings.
    CumulantTent(Common),
    /// Random separable states against the witness bounds (JSON report).
    Fuzz(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config; missing keys take the subcommand's defaults.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set geometry.n=6` (value parsed as JSON).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output file (stdout when absent).
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Also write an SVG plot here.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Print the resolved config and exit.
    #[arg(long)]
    print_config: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, common) = match cli.command {
        Sub::Fig1Sphere(c) => (Command::Fig1Sphere, c),
        Sub::DickeSweep(c) => (Command::DickeSweep, c),
        Sub::Decay(c) => (Command::Decay, c),
        Sub::CumulantTent(c) => (Command::CumulantTent, c),
        Sub::Fuzz(c) => (Command::Fuzz, c),
    };
    match execute(cmd, &common, cli.workers) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("efw {}: {e}", cmd.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cmd: Command, common: &Common, workers: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = workers {
        if n == 0 {
            return Err(CliError::Config(format!("{WORKERS_ENV} must be at least 1")));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(e.to_string()))?;
    }
    let text = match &common.config {
        Some(p) => Some(
            std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?,
        ),
        None => None,
    };
    let cfg = ExperimentConfig::resolve(cmd, text.as_deref(), &common.overrides)?;
    if common.print_config {
        println!("{}", serde_json::to_string_pretty(&cfg).expect("config serializes"));
        return Ok(());
    }
    let result = run(cmd, &cfg)?;
    let mut sink: Box<dyn Write> = match &common.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let failure = emit(&result, cmd, &cfg, &mut sink, common.plot.as_deref())?;
    sink.flush()?;
    match failure {
        Some(msg) => Err(CliError::Numerical(msg)),
        None => Ok(()),
    }
}
