use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hdc_core::harness::{
    read_records, run_experiment, summarize, write_records, write_summary, ExperimentConfig,
    Method, RunMode, SweepConfig,
};
use hdc_core::{BasisKind, HdcError, Result, TreeKind};

#[derive(Parser)]
#[command(name = "hdc", version, about = "Noisy halfspace learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write per-trial records as CSV.
    Run(RunArgs),
    /// Run every grid point of a JSON sweep file into one CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate a records CSV into per-configuration error statistics.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    rho: f64,
    #[arg(long, default_value = "dc")]
    method: Method,
    /// Total query budget.
    #[arg(long, conflicts_with = "eps", required_unless_present = "eps")]
    budget: Option<usize>,
    /// Target accuracy; rounds follow the theoretical schedule.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 0.05, requires = "eps")]
    delta: f64,
    #[arg(long, default_value = "balanced")]
    tree: TreeKind,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "standard")]
    basis: BasisKind,
    /// Fixed majority-vote count for repetitive-dc.
    #[arg(long)]
    repetitions: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> ExperimentConfig {
        let mode = match (self.budget, self.eps) {
            (Some(b), _) => RunMode::Budget(b),
            (None, Some(eps)) => RunMode::Schedule {
                eps,
                delta: self.delta,
            },
            (None, None) => unreachable!("clap requires --budget or --eps"),
        };
        ExperimentConfig {
            d: self.d,
            rho: self.rho,
            method: self.method,
            mode,
            tree: self.tree,
            trials: self.trials,
            seed: self.seed,
            basis: self.basis,
            repetitions: self.repetitions,
        }
    }
}

fn create(path: &PathBuf) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run(args) => {
            let records = run_experiment(&args.config())?;
            match &args.out {
                Some(path) => write_records(create(path)?, &records),
                None => write_records(io::stdout().lock(), &records),
            }
        }
        Command::Sweep { config, out } => {
            let text = fs::read_to_string(&config)?;
            let mut records = Vec::new();
            for cfg in SweepConfig::from_json(&text)?.expand()? {
                records.extend(run_experiment(&cfg)?);
            }
            write_records(create(&out)?, &records)
        }
        Command::Summarize { input, out } => {
            let records = read_records(File::open(&input)?)?;
            write_summary(create(&out)?, &summarize(&records)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(io::stderr(), "hdc: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &HdcError) -> u8 {
    if e.is_config_error() {
        2
    } else {
        3
    }
}
