use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use klflow_cli::{cmd_check, cmd_rates, cmd_run, cmd_sweep, CliError, ExitCode, ExperimentConfig};

#[derive(Parser)]
#[command(name = "klflow", version, about = "Hessian-damped and proximal flow experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate every initial point of a config
    Run(ConfigArgs),
    /// Run the cartesian product of the sweep axes
    Sweep(ConfigArgs),
    /// Validate oracles and the KL inequality of the configured problem
    Check(ConfigArgs),
    /// Compare observed decay regimes with the predicted ones
    Rates {
        /// Report JSON files written by run or sweep
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig, CliError> {
        let mut config = ExperimentConfig::load(&self.config)?;
        if let Some(w) = self.workers {
            config.workers = w;
        }
        config.prepare(self.seed)
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Run(args) => Ok(cmd_run(args.load()?, args.out.as_deref())?.0),
        Command::Sweep(args) => Ok(cmd_sweep(args.load()?, args.out.as_deref())?.0),
        Command::Check(args) => cmd_check(args.load()?),
        Command::Rates { reports, out } => Ok(cmd_rates(&reports, out.as_deref())?.0),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("KLFLOW_LOG", "warn")).init();
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("klflow: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code.code());
}
