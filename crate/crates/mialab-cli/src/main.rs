use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mialab_cli::config::validate_config;
use mialab_cli::experiment::{run_appendix_experiment, run_experiment};

#[derive(Parser)]
#[command(
    name = "mialab",
    about = "Membership-inference attack experiments on small classifiers",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the shadow-size attack grid from a config file.
    Run(RunArgs),
    /// Run the target-model attack sweep from a config file.
    RunAppendix(RunArgs),
    /// Parse and validate a config file, reporting every violation.
    Validate { config: PathBuf },
}

#[derive(clap::Args)]
struct RunArgs {
    config: PathBuf,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for grid cells (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(path: &PathBuf) -> Result<(String, mialab_cli::ExperimentConfig), ExitCode> {
    let raw = match std::fs::read_to_string(path) {
        Ok(raw) => raw,
        Err(e) => {
            eprintln!("cannot read {}: {e}", path.display());
            return Err(ExitCode::from(1));
        }
    };
    match validate_config(&raw) {
        Ok(cfg) => Ok((raw, cfg)),
        Err(issues) => {
            eprintln!("config {} is invalid:", path.display());
            for issue in issues {
                eprintln!("  {issue}");
            }
            Err(ExitCode::from(1))
        }
    }
}

fn run(args: &RunArgs, appendix: bool) -> ExitCode {
    let (raw, cfg) = match load(&args.config) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let master_seed = args.seed.unwrap_or(cfg.master_seed);
    let out_dir = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.out_dir));

    let workers = args.workers.unwrap_or(cfg.workers);
    if workers > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global() {
            eprintln!("could not size the worker pool: {e}");
        }
    }

    let result = if appendix {
        run_appendix_experiment(&cfg, &raw, master_seed, &out_dir)
    } else {
        run_experiment(&cfg, &raw, master_seed, &out_dir)
    };
    match result {
        Ok(report) if report.partial => {
            eprintln!(
                "{} of {} cells failed; partial report written to {}",
                report.failures.len(),
                report.failures.len() + report.cells.len(),
                out_dir.display()
            );
            ExitCode::from(2)
        }
        Ok(report) => {
            println!(
                "{} cells completed; summary at {}",
                report.cells.len(),
                out_dir.join("summary.csv").display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("experiment failed: {e}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match &cli.command {
        Command::Run(args) => run(args, false),
        Command::RunAppendix(args) => run(args, true),
        Command::Validate { config } => match load(config) {
            Ok((_, cfg)) => {
                let cells = if cfg.appendix.is_some() { "run or run-appendix" } else { "run" };
                println!(
                    "ok: {} regimes x {} kinds x {} sizes, {} repeats (usable with `{cells}`)",
                    cfg.attack.regimes.len(),
                    cfg.attack.kinds.len(),
                    cfg.shadows.sizes.len(),
                    cfg.attack.repeats
                );
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
    }
}
