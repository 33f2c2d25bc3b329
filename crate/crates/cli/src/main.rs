use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod io;

/// Exit status shared by every subcommand.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// Bad input: unreadable file, schema violation, parameter window.
    Config,
    /// The computation ran but did not succeed (step failure, failed check).
    Failed,
}

impl From<Status> for ExitCode {
    fn from(s: Status) -> Self {
        ExitCode::from(match s {
            Status::Ok => 0,
            Status::Config => 1,
            Status::Failed => 2,
        })
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "kamreduce",
    version,
    about = "Reduce quasi-periodic quadratic Hamiltonians to constant coefficients"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Problem configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Overrides the seed stored in the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Largest accepted relative conjugacy defect for `verify`.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tolerance: f64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the reduction; writes report.json and steps.csv.
    Reduce,
    /// Check a report against direct integration; writes conjugacy.json and defect.csv.
    Verify(commands::verify::VerifyArgs),
    /// Admissibility of a grid of frequency vectors; writes scan.csv.
    Scan(commands::scan::ScanArgs),
    /// Sample the change of variables of a report on a θ-grid; writes map.csv.
    DumpMap(commands::dump_map::DumpMapArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("KAMREDUCE_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Some(t) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("error: cannot configure {t} threads: {e}");
            return Status::Config.into();
        }
    }
    let res = match &cli.command {
        Command::Reduce => commands::reduce::run(&cli.global),
        Command::Verify(a) => commands::verify::run(&cli.global, a),
        Command::Scan(a) => commands::scan::run(&cli.global, a),
        Command::DumpMap(a) => commands::dump_map::run(&cli.global, a),
    };
    match res {
        Ok(s) => s.into(),
        Err(e) => {
            eprintln!("error: {e:#}");
            Status::Config.into()
        }
    }
}
