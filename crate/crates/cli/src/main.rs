//! Command-line driver for the `arcforest` library.
//!
//! Four subcommands cover the full workflow:
//!
//! * `simulate`   — draw a synthetic benchmark dataset and save it as CSV;
//! * `wind-prep`  — convert a raw INMET station export into the canonical
//!   hourly wind layout;
//! * `experiment` — fit a conformal predictor, evaluate it on a held-out
//!   test split, and write the report files;
//! * `hist`       — print a text histogram of the angular responses in a
//!   dataset.
//!
//! Input paths are used as given when they exist; otherwise, when the
//! `ARCFOREST_DATA_DIR` environment variable is set, they are retried
//! relative to that directory.
//!
//! Failures print a single `error[<category>]: <message>` line on stderr
//! and exit with a category-specific code: `2` for configuration errors,
//! `3` for data errors, `4` for numeric errors, and `5` for I/O errors.

use arcforest::{
    circular_histogram, convert_inmet, generate_synthetic, load_dataset_csv, load_wind_csv,
    run_experiment, save_dataset_csv, write_report, Dataset, DatasetSpec, Error, ExperimentConfig,
    Result, SplitSizes,
};
use clap::{Args, Parser, Subcommand};
use std::f64::consts::TAU;
use std::io::BufRead;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "arcforest",
    version,
    about = "Conformal prediction of circular responses with projected random forests"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic benchmark dataset and write it as CSV.
    Simulate(SimulateArgs),
    /// Convert a raw INMET station export to the canonical wind layout.
    WindPrep(WindPrepArgs),
    /// Run a conformal prediction experiment and report the results.
    Experiment(ExperimentArgs),
    /// Print a text histogram of the angular responses in a dataset.
    Hist(HistArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Number of units to draw.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Concentration of the von Mises noise around the mean direction.
    #[arg(long, default_value_t = 5.0)]
    kappa: f64,
    /// Seed for the dataset stream.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct WindPrepArgs {
    /// Raw INMET export (CSV with a station preamble; `;`-separated).
    #[arg(long)]
    input: PathBuf,
    /// Output path for the canonical hourly CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Prediction method: `prf` (projected random forest) or `pn`
    /// (projected normal baseline).
    #[arg(long, default_value = "prf")]
    method: String,
    /// Nominal miscoverage level in (0, 1).
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Trees per forest.
    #[arg(long, default_value_t = 500)]
    trees: usize,
    /// Root seed; every derived stream is a pure function of it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Concentration for a synthetic dataset (conflicts with --data).
    #[arg(long, conflicts_with = "data")]
    kappa: Option<f64>,
    /// Dataset CSV: either the canonical wind layout (header starting
    /// with `timestamp`) or a plain dataset CSV (header starting with `y`).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Training split size.
    #[arg(long)]
    train: Option<usize>,
    /// Calibration split size.
    #[arg(long)]
    calib: Option<usize>,
    /// Test split size.
    #[arg(long)]
    test: Option<usize>,
    /// Directory for the report files (records.csv, summary.json,
    /// table.txt); created if missing.  The summary table always prints
    /// to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses one per available core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Minimal bootstrap weight of a splittable node.
    #[arg(long, default_value_t = 5)]
    min_node_size: usize,
    /// Candidate features per split; defaults to ceil(d / 3).
    #[arg(long)]
    mtry: Option<usize>,
    /// Maximal tree depth; unlimited when omitted.
    #[arg(long)]
    max_depth: Option<u32>,
    /// Angle aggregation across trees: `arithmetic` or `component`.
    #[arg(long, default_value = "arithmetic")]
    aggregation: String,
}

#[derive(Args)]
struct HistArgs {
    /// Dataset CSV (canonical wind layout or plain dataset layout).
    #[arg(long)]
    data: PathBuf,
    /// Number of equal-width bins over the circle.
    #[arg(long, default_value_t = 12)]
    bins: usize,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::WindPrep(args) => wind_prep(args),
        Command::Experiment(args) => experiment(args),
        Command::Hist(args) => hist(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error[{}]: {err}", err.category());
            ExitCode::from(match err.category() {
                "config" => 2,
                "data" => 3,
                "numeric" => 4,
                _ => 5,
            })
        }
    }
}

/// Uses `path` as given when it exists; otherwise retries it relative to
/// `ARCFOREST_DATA_DIR` when that variable is set and the joined path
/// exists.  Falls back to the original path so the subsequent open error
/// names what the user typed.
fn resolve_data_path(path: PathBuf) -> PathBuf {
    if path.exists() {
        return path;
    }
    if let Some(dir) = std::env::var_os("ARCFOREST_DATA_DIR") {
        let joined = Path::new(&dir).join(&path);
        if joined.exists() {
            return joined;
        }
    }
    path
}

/// Loads either dataset layout, sniffing by the header's first column.
fn load_any_dataset(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    let first_line = std::io::BufReader::new(file)
        .lines()
        .next()
        .transpose()?
        .unwrap_or_default();
    if first_line.starts_with("timestamp") {
        load_wind_csv(path)
    } else {
        load_dataset_csv(path)
    }
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let data = generate_synthetic(args.n, args.kappa, args.seed)?;
    save_dataset_csv(&data, &args.out)?;
    println!(
        "wrote {} units ({} features) to {}",
        data.n(),
        data.n_features(),
        args.out.display()
    );
    Ok(())
}

fn wind_prep(args: WindPrepArgs) -> Result<()> {
    let input = resolve_data_path(args.input);
    let stats = convert_inmet(&input, &args.out)?;
    println!(
        "read {} rows, wrote {} ({} missing values) to {}",
        stats.rows_read,
        stats.rows_written,
        stats.missing_values,
        args.out.display()
    );
    for (target, source) in &stats.columns {
        println!("  {target:<16} <- {source}");
    }
    Ok(())
}

fn experiment(args: ExperimentArgs) -> Result<()> {
    let dataset = match args.data {
        Some(path) => DatasetSpec::File {
            path: resolve_data_path(path),
        },
        None => DatasetSpec::Synthetic {
            kappa: args.kappa.unwrap_or(5.0),
        },
    };
    let split = match (args.train, args.calib, args.test) {
        (None, None, None) => None,
        (Some(train), Some(calib), Some(test)) => Some(SplitSizes { train, calib, test }),
        _ => {
            return Err(Error::Config(
                "--train, --calib and --test must be given together".into(),
            ))
        }
    };
    let config = ExperimentConfig {
        dataset,
        method: args.method.parse()?,
        alpha: args.alpha,
        trees: args.trees,
        seed: args.seed,
        split,
        threads: args.threads,
        min_node_size: args.min_node_size,
        mtry: args.mtry,
        max_depth: args.max_depth,
        aggregation: args.aggregation.parse()?,
    };

    let report = run_experiment(&config)?;
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
        write_report(&report, dir)?;
        log::info!("report files written to {}", dir.display());
    }
    print!("{}", report.human_table());
    Ok(())
}

fn hist(args: HistArgs) -> Result<()> {
    if args.bins == 0 {
        return Err(Error::Config("--bins must be positive".into()));
    }
    let path = resolve_data_path(args.data);
    let data = load_any_dataset(&path)?;
    let bins = circular_histogram(&data.y, args.bins);
    let peak = bins.iter().copied().max().unwrap_or(0).max(1);
    let width = TAU / args.bins as f64;
    println!("{} units in {} bins of {:.4} rad", data.n(), args.bins, width);
    for (i, &count) in bins.iter().enumerate() {
        let lo = i as f64 * width;
        let bar_len = (count as f64 / peak as f64 * 50.0).round() as usize;
        println!(
            "[{lo:6.4}, {:6.4})  {count:>7}  {}",
            lo + width,
            "#".repeat(bar_len)
        );
    }
    Ok(())
}
