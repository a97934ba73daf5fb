//! `hdst`: hyperdimensional encoding of spatio-temporal signals, with an
//! in-memory-computing datapath simulator and classifier.

mod commands;
mod config;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};

use config::RunConfig;
use hdst_core::crossbar::NoiseParams;

#[derive(Parser)]
#[command(
    name = "hdst",
    version,
    about = "Hyperdimensional spatio-temporal encoding: training, inference, crossbar simulation, sweeps, and cost reports"
)]
struct Cli {
    /// JSON run configuration; flags below override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Global seed (falls back to the config file, then HDST_SEED).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Hypervector dimension D.
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// Uniform n-gram size N.
    #[arg(long, global = true)]
    ngram: Option<usize>,
    /// Uniform quantization level count L.
    #[arg(long, global = true)]
    levels: Option<usize>,
    /// Crossbar noise preset.
    #[arg(long, global = true, value_enum)]
    noise_preset: Option<NoisePreset>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = default pool).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum NoisePreset {
    /// All non-idealities off.
    Off,
    /// Default surrogate: 1% programming flips, 0.3% read flips.
    Default,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic dataset and write it as CSV.
    Prepare,
    /// Train class prototypes and freeze model.bin + metrics.json.
    Train,
    /// Evaluate trained models on the held-out split.
    Eval {
        /// Model file per subject; defaults to the files `train` wrote.
        #[arg(long)]
        model: Vec<PathBuf>,
    },
    /// Train and evaluate over the (N, L) grid; writes sweep.csv + sweep.json.
    Sweep,
    /// Conventional vs in-memory encoder divergence report.
    Compare,
    /// Operation counts and energy estimates; writes cost.json.
    Cost,
}

fn run(cli: &Cli, cfg: &RunConfig, seed: u64) -> Result<()> {
    match &cli.command {
        Command::Prepare => commands::prepare(cfg, seed),
        Command::Train => commands::train(cfg, seed),
        Command::Eval { model } => commands::eval(cfg, seed, model),
        Command::Sweep => commands::sweep(cfg, seed),
        Command::Compare => commands::compare(cfg, seed),
        Command::Cost => commands::cost(cfg, seed),
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(dim) = cli.dim {
        cfg.dim = dim;
    }
    if let Some(ngram) = cli.ngram {
        cfg.ngram = ngram;
        cfg.ngram_per_channel = None;
    }
    if let Some(levels) = cli.levels {
        cfg.levels = levels;
        cfg.levels_per_channel = None;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(jobs) = cli.jobs {
        cfg.jobs = jobs;
    }
    if let Some(preset) = cli.noise_preset {
        cfg.noise = match preset {
            NoisePreset::Off => NoiseParams::noiseless(),
            NoisePreset::Default => NoiseParams::default_preset(0),
        };
    }
    cfg.validate()?;
    let seed = cfg.resolve_seed(cli.seed)?;
    std::fs::create_dir_all(&cfg.out_dir)?;

    if cfg.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()?
            .install(|| run(&cli, &cfg, seed))
    } else {
        run(&cli, &cfg, seed)
    }
}
