use std::path::PathBuf;
use std::process::ExitCode;

use amp_lab::cli::{
    check_ensemble, error_record, parse_seeds, run_experiment, run_se, ExperimentConfig, RunMode,
    SeRequest,
};
use amp_lab::ensembles::DiagnosticMode;
use amp_lab::Result;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "amp-lab", about = "AMP experiments on semi-random ensembles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// key=value file applied before the flags
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    ensemble: Option<String>,
    #[arg(long = "N")]
    n: Option<usize>,
    #[arg(long = "T")]
    t: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    /// `a..b` (inclusive) or a comma list
    #[arg(long)]
    seeds: Option<String>,
    /// simple, projected or tap
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    nonlinearity: Option<String>,
    #[arg(long = "sigma0-sq")]
    sigma0_sq: Option<f64>,
    #[arg(long)]
    degree: Option<usize>,
    /// report CSV; printed to stdout when absent
    #[arg(long)]
    output: Option<PathBuf>,
    /// also write every iterate per seed
    #[arg(long)]
    trace: bool,
}

#[derive(Subcommand)]
enum Command {
    /// AMP run with a nonlinearity preset (or --mode tap)
    Run(RunArgs),
    /// TAP iteration on an Ising coupling
    Tap(RunArgs),
    /// State-evolution table
    Se {
        /// `tap` or a nonlinearity preset
        #[arg(long, default_value = "tap")]
        preset: String,
        #[arg(long = "T", default_value_t = 10)]
        t: usize,
        #[arg(long, default_value_t = 2.0)]
        beta: f64,
        #[arg(long, default_value_t = 2.0)]
        theta: f64,
        /// TAP ensemble whose law is used
        #[arg(long, default_value = "signed-sine")]
        ensemble: String,
        #[arg(long = "sigma0-sq", default_value_t = 1.0)]
        sigma0_sq: f64,
        #[arg(long = "sigma-psi-sq", default_value_t = 1.0)]
        sigma_psi_sq: f64,
        #[arg(long, default_value_t = amp_lab::hermite::DEFAULT_DEGREE)]
        degree: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Semi-random diagnostics of one realization
    CheckEnsemble {
        #[arg(long)]
        ensemble: String,
        #[arg(long = "N")]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// dense or probe
        #[arg(long, default_value = "dense")]
        mode: String,
    },
}

fn config_from(args: RunArgs, tap: bool) -> Result<ExperimentConfig> {
    let mut c = ExperimentConfig::default();
    if tap {
        c.mode = RunMode::Tap;
    }
    if let Some(p) = &args.config {
        c.apply_file(p)?;
    }
    if let Some(v) = args.ensemble {
        c.ensemble = v;
    }
    if let Some(v) = args.n {
        c.n = v;
    }
    if let Some(v) = args.t {
        c.t_max = v;
    }
    if let Some(v) = args.beta {
        c.beta = v;
    }
    if let Some(v) = args.theta {
        c.theta = v;
    }
    if let Some(v) = args.seeds {
        c.seeds = parse_seeds(&v)?;
    }
    if let Some(v) = args.mode {
        c.mode = v.parse()?;
    }
    if tap && c.mode != RunMode::Tap {
        return Err(amp_lab::Error::InvalidArgument(
            "the tap subcommand only runs in tap mode".into(),
        ));
    }
    if let Some(v) = args.nonlinearity {
        c.nonlinearity = v;
    }
    if let Some(v) = args.sigma0_sq {
        c.sigma0_sq = v;
    }
    if let Some(v) = args.degree {
        c.degree = v;
    }
    if let Some(v) = args.output {
        c.output = Some(v);
    }
    c.trace |= args.trace;
    Ok(c)
}

fn write_or_print(text: &str, output: Option<PathBuf>) -> Result<()> {
    match output {
        Some(p) => std::fs::write(&p, text).map_err(|e| amp_lab::Error::Io { path: p, source: e }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(a) => experiment(config_from(a, false)?),
        Command::Tap(a) => experiment(config_from(a, true)?),
        Command::Se {
            preset,
            t,
            beta,
            theta,
            ensemble,
            sigma0_sq,
            sigma_psi_sq,
            degree,
            output,
        } => {
            let text = run_se(&SeRequest {
                preset,
                t_max: t,
                beta,
                theta,
                ensemble,
                sigma0_sq,
                sigma_psi_sq,
                degree,
            })?;
            write_or_print(&text, output)
        }
        Command::CheckEnsemble {
            ensemble,
            n,
            seed,
            mode,
        } => {
            let mode: DiagnosticMode = mode.parse()?;
            println!("{}", check_ensemble(&ensemble, n, seed, mode)?);
            Ok(())
        }
    }
}

fn experiment(c: ExperimentConfig) -> Result<()> {
    let out = run_experiment(&c)?;
    if c.output.is_none() {
        print!("{}", out.report.to_csv());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_record(&e));
            ExitCode::FAILURE
        }
    }
}
