use std::path::PathBuf;
use std::process::ExitCode;

use bargmann_lens_cli::config::{ExperimentConfig, Overrides};
use bargmann_lens_cli::output::{summarize, write_summary};
use bargmann_lens_cli::{execute_and_write, status_code, CliError, Experiment, EXIT_CHECKS_FAILED, EXIT_OK};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bargmann-lens", version, about = "Renormalization experiments for powers of prequantum line bundles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Identities of the model bundle: curvature, radial flatness, holomorphy criteria.
    ModelCheck(RunArgs),
    /// One chart and gauge: structure and connection deviations.
    Renorm(RunArgs),
    /// A full ladder of powers with limit extraction.
    Sweep(RunArgs),
    /// Zero locus, symplectic margin and curvature for one section.
    Zeroset(RunArgs),
    /// Merge prior run directories into one summary table.
    Report {
        /// Run directories or report files.
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "summary")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, env = "BARGMANN_LENS_THREADS", default_value_t = 0)]
    threads: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated powers, e.g. `4,16,64`.
    #[arg(long, value_delimiter = ',')]
    k_ladder: Option<Vec<u32>>,
    /// Comma-separated real coordinates of the chart center.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    center: Option<Vec<f64>>,
    /// Grid points per axis.
    #[arg(long)]
    grid: Option<usize>,
    /// Transversality level as a fraction of max |σ|.
    #[arg(long)]
    epsilon: Option<f64>,
}

fn run(experiment: Experiment, args: RunArgs) -> Result<i32, CliError> {
    let overrides = Overrides {
        seed: args.seed,
        out: args.out,
        k_ladder: args.k_ladder,
        center: args.center,
        grid: args.grid,
        epsilon: args.epsilon,
    };
    let preset = args.preset.or_else(|| (experiment == Experiment::ModelCheck).then(|| "model-check".to_string()));
    let cfg = ExperimentConfig::load(args.config.as_deref(), preset.as_deref(), &overrides)?;
    let (report, dir) = execute_and_write(experiment, &cfg, args.threads)?;
    for c in &report.report.checks {
        println!("{} {}: {:?}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value);
    }
    if let Some(e) = &report.error {
        eprintln!("numeric failure: {e}");
    }
    println!("{:?} -> {}", report.status, dir.display());
    Ok(status_code(report.status))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::ModelCheck(a) => run(Experiment::ModelCheck, a),
        Command::Renorm(a) => run(Experiment::Renorm, a),
        Command::Sweep(a) => run(Experiment::Sweep, a),
        Command::Zeroset(a) => run(Experiment::Zeroset, a),
        Command::Report { inputs, out } => summarize(&inputs)
            .and_then(|s| write_summary(&out, &s).map(|_| s))
            .map(|s| if s.passed { EXIT_OK } else { EXIT_CHECKS_FAILED })
            .map_err(CliError::from),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
