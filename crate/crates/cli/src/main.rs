use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use beamlab::dataset::{generate_dataset, Dataset};
use beamlab::eval::{evaluate, robustness_sweep, write_reports_csv};
use beamlab::experiment::{
    complexity_rows, run_sweep, train_on_dataset, write_complexity_csv, ExperimentConfig, SweepKind,
};
use beamlab::models::store::{load_model, save_model, ModelKind};
use beamlab::{Error, ErrorKind};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "beamlab",
    version,
    about = "Location-assisted mmWave beam alignment toolkit"
)]
struct Cli {
    /// Master seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled dataset.
    Gen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `dataset.n_samples`.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Train a classifier on the training split of a dataset.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a trained model.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated candidate-set sizes.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,5,8,13,21,34")]
        nb: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Evaluate on the held-out split recorded with the model, or on every sample.
        #[arg(long, value_enum, default_value_t = SplitArg::Test)]
        split: SplitArg,
        /// Location error standard deviation, meters.
        #[arg(long, default_value_t = 0.0)]
        sigma_p: f64,
        /// Orientation error standard deviation, radians.
        #[arg(long, default_value_t = 0.0)]
        sigma_o: f64,
    },
    /// Run a dataset-size, pose-noise or antenna-count sweep.
    Sweep {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print inference multiplications and parameter counts as CSV.
    Complexity {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Write a dataset as CSV, one row per sample.
    ExportCsv {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Append every RSS entry.
        #[arg(long)]
        rss: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Gnn,
    Dnn,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Size,
    Noise,
    Antenna,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SplitArg {
    Test,
    All,
}

fn load_config(path: &Path, seed: Option<u64>) -> beamlab::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn create(path: &Path) -> beamlab::Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn run(cli: Cli) -> beamlab::Result<()> {
    match cli.command {
        Command::Gen {
            config,
            out,
            samples,
        } => {
            let cfg = load_config(&config, cli.seed)?;
            let n = samples.unwrap_or(cfg.dataset.n_samples);
            let data = generate_dataset(&cfg.generation_config()?, n, cfg.seeds().data)?;
            let mut w = create(&out)?;
            w.write_all(&data.encode())?;
            w.flush()?;
            log::info!("wrote {} samples to {}", data.len(), out.display());
        }
        Command::Train {
            config,
            data,
            model,
            out,
        } => {
            let cfg = load_config(&config, cli.seed)?;
            let dataset = Dataset::load(&data)?;
            let gen = cfg.generation_config()?;
            if (gen.tx, gen.rx) == (dataset.header.tx, dataset.header.rx)
                && gen.scene_hash() != dataset.header.scene_hash
            {
                log::warn!("dataset scene hash differs from the one implied by the config");
            }
            let kind = match model {
                ModelArg::Gnn => ModelKind::Gnn,
                ModelArg::Dnn => ModelKind::Dnn,
            };
            let art = train_on_dataset(&cfg, kind, &dataset)?;
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            save_model(&out, &art.model, &art.meta)?;
            log::info!(
                "trained {kind} for {} epochs (best {}, loss {:.4})",
                art.report.epochs_run(),
                art.report.best_epoch,
                art.report.best_loss
            );
        }
        Command::Eval {
            model,
            data,
            nb,
            out,
            split,
            sigma_p,
            sigma_o,
        } => {
            let (m, meta) = load_model(&model)?;
            let dataset = Dataset::load(&data)?;
            let test = match split {
                SplitArg::Test => dataset.split(meta.train_fraction, meta.split_seed)?.1,
                SplitArg::All => dataset,
            };
            let params = test.header.params;
            let report = if sigma_p == 0.0 && sigma_o == 0.0 {
                evaluate(&m, &meta.normalizer, &test, &nb, &params)?
            } else {
                let seed = cli.seed.unwrap_or(meta.seed);
                robustness_sweep(
                    &m,
                    &meta.normalizer,
                    &test,
                    &[(sigma_p, sigma_o)],
                    &nb,
                    &params,
                    seed,
                )?
                .remove(0)
            };
            let mut w = create(&out)?;
            write_reports_csv(std::slice::from_ref(&report), &mut w)?;
            w.flush()?;
        }
        Command::Sweep { kind, config, out } => {
            let cfg = load_config(&config, cli.seed)?;
            let kind = match kind {
                KindArg::Size => SweepKind::Size,
                KindArg::Noise => SweepKind::Noise,
                KindArg::Antenna => SweepKind::Antenna,
            };
            let result = run_sweep(&cfg, kind, &out)?;
            log::info!(
                "{kind} sweep wrote {} files to {}",
                result.files.len(),
                out.display()
            );
        }
        Command::Complexity { config } => {
            let cfg = match config {
                Some(p) => load_config(&p, cli.seed)?,
                None => ExperimentConfig::default(),
            };
            let stdout = io::stdout();
            write_complexity_csv(&complexity_rows(&cfg)?, stdout.lock())?;
        }
        Command::ExportCsv { data, out, rss } => {
            let dataset = Dataset::load(&data)?;
            let mut w = create(&out)?;
            dataset.write_csv(&mut w, rss)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::Numeric => 4,
        ErrorKind::Other => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
