use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mimo_rab::experiment::{
    bound_demo, csv_bytes, parse_snr_range, write_manifest, Averaging, ExperimentConfig, ExperimentError,
    RunOptions,
};

const DEFAULT_CONFIG: &str = include_str!("../../../configs/default.toml");

/// Monte-Carlo SINR-versus-SNR study for robust MIMO radar beamformers.
#[derive(Debug, Parser)]
#[command(name = "mimo-rab", version)]
struct Args {
    /// Experiment configuration (TOML). The built-in default is used if omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path; the manifest is written next to it with a `.manifest.toml` suffix.
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,
    /// Master seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated method names to keep (e.g. SMI,WorstCase).
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// SNR grid as lo:hi:step in dB.
    #[arg(long)]
    snr: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Average SINR in dB instead of on a linear scale.
    #[arg(long)]
    db_average: bool,
    /// Exclude the target echo from the training snapshots.
    #[arg(long)]
    signal_free_training: bool,
    /// Print lower-bound certificates for the probability-constrained designs and exit.
    #[arg(long)]
    bound_demo: bool,
}

fn resolve(args: &Args) -> Result<ExperimentConfig, ExperimentError> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p).map_err(|e| match e {
            ExperimentError::Io { .. } => ExperimentError::Config(e.to_string()),
            ExperimentError::Parse(p_err) => ExperimentError::Config(format!("{}: {p_err}", p.display())),
            other => other,
        })?,
        None => ExperimentConfig::from_toml_str(DEFAULT_CONFIG)?,
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(s) = &args.snr {
        cfg.snr_db = parse_snr_range(s)?;
    }
    if let Some(m) = &args.methods {
        cfg.filter_methods(m)?;
    }
    if args.db_average {
        cfg.averaging = Averaging::Db;
    }
    if args.signal_free_training {
        cfg.scenario.signal_in_training = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: &Args, cfg: &ExperimentConfig) -> Result<(), ExperimentError> {
    if args.bound_demo {
        for d in bound_demo(cfg)? {
            println!("{} at {} dB SNR (eta1 = {}, eta2 = {}):", d.method, d.snr_db, d.eta.0, d.eta.1);
            for (side, c) in [("transmit", &d.transmit), ("receive", &d.receive)] {
                println!(
                    "  {side}: lower bound {:.6} (raw {:.3e}), lambda {:.6e}, status {:?}",
                    c.bound, c.raw_bound, c.lambda, c.status
                );
            }
        }
        return Ok(());
    }
    let table = mimo_rab::experiment::run_experiment(cfg, &RunOptions { jobs: args.jobs })?;
    let bytes = csv_bytes(&table);
    std::fs::write(&args.out, &bytes).map_err(|source| ExperimentError::Io {
        path: args.out.clone(),
        source,
    })?;
    let manifest = args.out.with_extension("manifest.toml");
    write_manifest(cfg, &args.out, &bytes, &manifest)?;
    eprintln!("wrote {} and {}", args.out.display(), manifest.display());
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match resolve(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match run(&args, &cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
