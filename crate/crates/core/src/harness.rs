//! End-to-end experiment harness: dataset preparation, model fitting,
//! conformal calibration, per-unit prediction records, and summaries.
//!
//! One [`ExperimentConfig`] fully determines an experiment; the same config
//! produces byte-identical reports regardless of how many worker threads are
//! used, because every parallel step maps units or trees independently and
//! collects them in input order.
//!
//! Two methods are available:
//!
//! * **`prf`** — projected random forest with out-of-bag conformal
//!   calibration.  The training and calibration parts are merged into one
//!   fitting set, since out-of-bag residuals play the calibration role.
//! * **`pn`** — projected-normal regression fitted on the training part,
//!   a linear scale model fitted on its absolute angular residuals, and
//!   ordinary split conformal calibration on the held-out calibration part.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{fit_linear_scale, fit_projected_normal, pn_predict};
use crate::circular::{angular_distance, Angle};
use crate::conformal::{
    build_prediction_set, quantile_rank, split_conformal_calibrate, OobConformalConfig,
    OobConformalModel, PredictionSet,
};
use crate::data::{
    generate_synthetic, load_dataset_csv, split_dataset, wind::load_wind_csv, Dataset, SplitSizes,
};
use crate::error::{Error, Result};
use crate::projection::AngleAggregation;
use crate::seeding::{derive_seed, domain};

/// What data an experiment runs on.
#[derive(Clone, Debug, PartialEq)]
pub enum DatasetSpec {
    /// Draw from the built-in simulator with the given concentration; the
    /// number of units is the total of the split sizes.
    Synthetic { kappa: f64 },
    /// Load from a file: either a dataset CSV (`y,...` header) or a
    /// canonical wind CSV (`timestamp,...` header), detected by peeking at
    /// the first line.
    File { path: PathBuf },
}

/// The two conformal prediction methods the harness can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Prf,
    ProjectedNormal,
}

impl Method {
    /// Short identifier used in machine-readable outputs.
    pub fn code(self) -> &'static str {
        match self {
            Method::Prf => "prf",
            Method::ProjectedNormal => "pn",
        }
    }

    /// Descriptive name used in the human-readable table.
    pub fn long_name(self) -> &'static str {
        match self {
            Method::Prf => "projected random forest (out-of-bag conformal)",
            Method::ProjectedNormal => "projected normal (split conformal)",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "prf" => Ok(Method::Prf),
            "pn" => Ok(Method::ProjectedNormal),
            other => Err(Error::Config(format!(
                "unknown method `{other}`; expected `prf` or `pn`"
            ))),
        }
    }
}

/// Complete description of one experiment run.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub method: Method,
    /// Target miscoverage level in (0, 1).
    pub alpha: f64,
    /// Trees per forest (for `pn`, the residual scale forest).
    pub trees: usize,
    /// Root seed; data generation, splitting, and model fitting use
    /// independent streams derived from it.
    pub seed: u64,
    /// Explicit split sizes.  Required for synthetic data; optional for
    /// files, which default to near-equal thirds.
    pub split: Option<SplitSizes>,
    /// Worker threads for forest training and prediction; 0 uses all cores.
    /// The outputs do not depend on this value.
    pub threads: usize,
    pub min_node_size: usize,
    pub mtry: Option<usize>,
    pub max_depth: Option<u32>,
    pub aggregation: AngleAggregation,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetSpec::Synthetic { kappa: 5.0 },
            method: Method::Prf,
            alpha: 0.1,
            trees: 500,
            seed: 0,
            split: None,
            threads: 0,
            min_node_size: 5,
            mtry: None,
            max_depth: None,
            aggregation: AngleAggregation::ArithmeticMean,
        }
    }
}

/// One test unit's prediction outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitRecord {
    pub unit: usize,
    /// Point prediction in radians.
    pub yhat: f64,
    /// Arc half-width; `None` when the set is the full circle.
    pub epsilon: Option<f64>,
    pub full_circle: bool,
    /// Observed response in radians.
    pub y_true: f64,
    pub covered: bool,
}

/// Aggregate results of one experiment.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Summary {
    pub method: String,
    pub dataset: String,
    pub alpha: f64,
    pub trees: usize,
    pub seed: u64,
    pub n_train: usize,
    pub n_calib: usize,
    pub n_test: usize,
    /// Number of calibration scores actually used (after any drops).
    pub n_scores: usize,
    pub quantile_rank: usize,
    pub quantile_rule: String,
    /// Conformity-score quantile `r̂`.
    pub threshold: f64,
    pub coverage: f64,
    pub median_arc_length: f64,
    pub iqr_arc_length: f64,
    pub mean_arc_length: f64,
    pub full_circle_fraction: f64,
    /// Fitting units without out-of-bag trees (always 0 for `pn`).
    pub dropped_no_oob: usize,
    /// Scale predictions clamped during calibration.
    pub sigma_clamped: usize,
    /// False when the likelihood optimizer hit its iteration cap (`pn`).
    pub model_converged: bool,
}

/// Per-unit records plus the summary.
#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub records: Vec<UnitRecord>,
    pub summary: Summary,
}

impl ExperimentReport {
    /// Records as CSV with schema
    /// `unit,yhat,epsilon,full_circle,y_true,covered`; `epsilon` is empty
    /// for full-circle sets.
    pub fn records_csv(&self) -> String {
        let mut out = String::from("unit,yhat,epsilon,full_circle,y_true,covered\n");
        for r in &self.records {
            let _ = write!(out, "{},{},", r.unit, r.yhat);
            if let Some(e) = r.epsilon {
                let _ = write!(out, "{e}");
            }
            let _ = writeln!(out, ",{},{},{}", r.full_circle, r.y_true, r.covered);
        }
        out
    }

    /// Summary as pretty-printed JSON.
    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.summary)?)
    }

    /// Fixed-width human-readable summary table.
    pub fn human_table(&self) -> String {
        let s = &self.summary;
        let mut out = String::new();
        let mut line = |label: &str, value: String| {
            let _ = writeln!(out, "{label:<24}{value}");
        };
        line("method", s.method.clone());
        line("dataset", s.dataset.clone());
        line(
            "train / calib / test",
            format!("{} / {} / {}", s.n_train, s.n_calib, s.n_test),
        );
        line("trees", s.trees.to_string());
        line("seed", s.seed.to_string());
        line("alpha", format!("{}", s.alpha));
        line("quantile rule", s.quantile_rule.clone());
        line("threshold r-hat", format!("{:.6}", s.threshold));
        line("coverage", format!("{:.4}", s.coverage));
        line("median arc length", format!("{:.4}", s.median_arc_length));
        line("iqr arc length", format!("{:.4}", s.iqr_arc_length));
        line("mean arc length", format!("{:.4}", s.mean_arc_length));
        line(
            "full-circle fraction",
            format!("{:.4}", s.full_circle_fraction),
        );
        line("units without oob", s.dropped_no_oob.to_string());
        line("sigma clamped", s.sigma_clamped.to_string());
        line(
            "optimizer converged",
            if s.model_converged { "yes" } else { "no" }.to_string(),
        );
        out
    }
}

/// Writes `records.csv`, `summary.json`, and `table.txt` into `dir`,
/// creating it if needed.
pub fn write_report<P: AsRef<Path>>(report: &ExperimentReport, dir: P) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("records.csv"), report.records_csv())?;
    std::fs::write(dir.join("summary.json"), report.summary_json()?)?;
    std::fs::write(dir.join("table.txt"), report.human_table())?;
    Ok(())
}

/// Type-7 (linear interpolation) sample quantile of a sorted slice.
pub fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    assert!((0.0..=1.0).contains(&p), "quantile level must be in [0, 1]");
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Median and interquartile range (type-7 quantiles) of an unsorted sample.
pub fn median_iqr(values: &[f64]) -> (f64, f64) {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let median = quantile_type7(&sorted, 0.5);
    let iqr = quantile_type7(&sorted, 0.75) - quantile_type7(&sorted, 0.25);
    (median, iqr)
}

fn make_record(unit: usize, center: Angle, set: &PredictionSet, y: Angle) -> UnitRecord {
    UnitRecord {
        unit,
        yhat: center.radians(),
        epsilon: match *set {
            PredictionSet::Arc { epsilon, .. } => Some(epsilon),
            PredictionSet::FullCircle => None,
        },
        full_circle: set.is_full_circle(),
        y_true: y.radians(),
        covered: set.covers(y),
    }
}

fn load_spec(spec: &DatasetSpec, config: &ExperimentConfig) -> Result<(Dataset, String)> {
    match spec {
        DatasetSpec::Synthetic { kappa } => {
            let sizes = config.split.ok_or_else(|| {
                Error::Config("synthetic datasets need explicit split sizes".to_string())
            })?;
            let data = generate_synthetic(
                sizes.total(),
                *kappa,
                derive_seed(config.seed, domain::EXPERIMENT_DATA, 0),
            )?;
            Ok((data, format!("synthetic (kappa = {kappa})")))
        }
        DatasetSpec::File { path } => {
            let first_line = {
                use std::io::BufRead;
                let file = std::fs::File::open(path)?;
                let mut line = String::new();
                std::io::BufReader::new(file).read_line(&mut line)?;
                line
            };
            let data = if first_line.trim_start().starts_with("timestamp") {
                load_wind_csv(path)?
            } else {
                load_dataset_csv(path)?
            };
            Ok((data, path.display().to_string()))
        }
    }
}

fn quantile_rule_text(k: usize, n: usize, alpha: f64) -> String {
    format!("k = ceil((1 - alpha) * (n + 1)) = {k} with n = {n} scores and alpha = {alpha}")
}

/// Runs one experiment end to end.
///
/// The conformal feasibility of `alpha` against the calibration size is
/// checked before any training starts, so impossible configurations fail
/// fast.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let (data, dataset_label) = load_spec(&config.dataset, config)?;
    let sizes = match config.split {
        Some(sizes) => sizes,
        None => SplitSizes::thirds(data.n()),
    };
    // fail fast on infeasible miscoverage levels (for `prf` this is an
    // optimistic bound: out-of-bag drops can only shrink the score count)
    let upstream_n = match config.method {
        Method::Prf => sizes.train + sizes.calib,
        Method::ProjectedNormal => sizes.calib,
    };
    quantile_rank(upstream_n, config.alpha)?;

    let (train, calib, test) = split_dataset(
        &data,
        sizes,
        derive_seed(config.seed, domain::EXPERIMENT_SPLIT, 0),
    )?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::Config(format!("could not build the worker pool: {e}")))?;
    let (records, partial) = pool.install(|| match config.method {
        Method::Prf => run_prf(config, &train, &calib, &test),
        Method::ProjectedNormal => run_pn(config, &train, &calib, &test),
    })?;

    let coverage =
        records.iter().filter(|r| r.covered).count() as f64 / records.len() as f64;
    let lengths: Vec<f64> = records
        .iter()
        .map(|r| r.epsilon.map_or(TAU, |e| 2.0 * e))
        .collect();
    let (median_arc_length, iqr_arc_length) = median_iqr(&lengths);
    let mean_arc_length = lengths.iter().sum::<f64>() / lengths.len() as f64;
    let full_circle_fraction =
        records.iter().filter(|r| r.full_circle).count() as f64 / records.len() as f64;

    let summary = Summary {
        method: config.method.code().to_string(),
        dataset: dataset_label,
        alpha: config.alpha,
        trees: config.trees,
        seed: config.seed,
        n_train: train.n(),
        n_calib: calib.n(),
        n_test: test.n(),
        n_scores: partial.n_scores,
        quantile_rank: partial.rank,
        quantile_rule: quantile_rule_text(partial.rank, partial.n_scores, config.alpha),
        threshold: partial.threshold,
        coverage,
        median_arc_length,
        iqr_arc_length,
        mean_arc_length,
        full_circle_fraction,
        dropped_no_oob: partial.dropped_no_oob,
        sigma_clamped: partial.sigma_clamped,
        model_converged: partial.model_converged,
    };
    Ok(ExperimentReport { records, summary })
}

/// Method-specific pieces of the summary.
struct PartialSummary {
    n_scores: usize,
    rank: usize,
    threshold: f64,
    dropped_no_oob: usize,
    sigma_clamped: usize,
    model_converged: bool,
}

fn run_prf(
    config: &ExperimentConfig,
    train: &Dataset,
    calib: &Dataset,
    test: &Dataset,
) -> Result<(Vec<UnitRecord>, PartialSummary)> {
    // out-of-bag calibration frees the held-out part, so both are fitted on
    let merged = train.concat(calib)?;
    let oob_config = OobConformalConfig {
        trees: config.trees,
        seed: derive_seed(config.seed, domain::EXPERIMENT_MODEL, 0),
        min_node_size: config.min_node_size,
        mtry: config.mtry,
        max_depth: config.max_depth,
        aggregation: config.aggregation,
        ..OobConformalConfig::default()
    };
    let model = OobConformalModel::fit(&merged.x, &merged.y, &oob_config)?;
    let threshold = model.threshold(config.alpha)?;
    let rank = quantile_rank(model.scores().len(), config.alpha)?;

    let records: Vec<UnitRecord> = (0..test.n())
        .into_par_iter()
        .map(|i| {
            let x = test.x.row(i);
            let center = model.predict_point(x);
            let set = build_prediction_set(center, threshold * model.predict_sigma(x));
            make_record(i, center, &set, test.y[i])
        })
        .collect();

    Ok((
        records,
        PartialSummary {
            n_scores: model.scores().len(),
            rank,
            threshold,
            dropped_no_oob: model.diagnostics().dropped_no_oob,
            sigma_clamped: model.diagnostics().sigma_clamped,
            model_converged: true,
        },
    ))
}

fn run_pn(
    config: &ExperimentConfig,
    train: &Dataset,
    calib: &Dataset,
    test: &Dataset,
) -> Result<(Vec<UnitRecord>, PartialSummary)> {
    let pn = fit_projected_normal(&train.x, &train.y)?;

    // Scale model: linear least squares on the absolute angular training
    // residuals, so the baseline's arcs adapt only as far as its own model
    // family supports.  Predictions are clamped into the declared (0, π]
    // codomain, and clamps are counted for the summary.
    let deltas: Vec<f64> = (0..train.n())
        .map(|i| angular_distance(train.y[i], pn_predict(&pn, train.x.row(i))))
        .collect();
    let scale = fit_linear_scale(&train.x, &deltas)?;

    let clamp_count = AtomicUsize::new(0);
    let sigma = |x: &[f64]| {
        let raw = scale[0] + x.iter().zip(&scale[1..]).map(|(v, b)| v * b).sum::<f64>();
        let clamped = raw.clamp(1e-6, PI);
        if clamped != raw {
            clamp_count.fetch_add(1, Ordering::Relaxed);
        }
        clamped
    };
    let mu = |x: &[f64]| pn_predict(&pn, x);

    let calibration = split_conformal_calibrate(&mu, &sigma, &calib.x, &calib.y, config.alpha)?;

    let records: Vec<UnitRecord> = (0..test.n())
        .into_par_iter()
        .map(|i| {
            let x = test.x.row(i);
            let center = mu(x);
            let set = build_prediction_set(center, calibration.threshold * sigma(x));
            make_record(i, center, &set, test.y[i])
        })
        .collect();

    Ok((
        records,
        PartialSummary {
            n_scores: calibration.scores.len(),
            rank: calibration.rank,
            threshold: calibration.threshold,
            dropped_no_oob: 0,
            sigma_clamped: clamp_count.into_inner(),
            model_converged: pn.converged,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use crate::data::save_dataset_csv;

    fn small_config(method: Method) -> ExperimentConfig {
        ExperimentConfig {
            dataset: DatasetSpec::Synthetic { kappa: 5.0 },
            method,
            alpha: 0.1,
            trees: 60,
            seed: 42,
            split: Some(SplitSizes {
                train: 150,
                calib: 100,
                test: 60,
            }),
            threads: 1,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn quantile_type7_matches_hand_computed_values() {
        assert_eq!(quantile_type7(&[1.0, 2.0, 3.0], 0.5), 2.0);
        assert_eq!(quantile_type7(&[1.0, 2.0, 3.0], 0.25), 1.5);
        assert_eq!(quantile_type7(&[1.0, 2.0, 3.0], 0.75), 2.5);
        assert_eq!(quantile_type7(&[1.0, 2.0, 3.0, 4.0], 0.5), 2.5);
        assert_eq!(quantile_type7(&[5.0], 0.9), 5.0);
        let (median, iqr) = median_iqr(&[3.0, 1.0, 2.0]);
        assert_eq!((median, iqr), (2.0, 1.0));
    }

    #[test]
    fn prf_experiment_produces_consistent_records() {
        let report = run_experiment(&small_config(Method::Prf)).unwrap();
        assert_eq!(report.records.len(), 60);
        assert_eq!(report.summary.n_scores, 250);
        assert!(report.summary.threshold > 0.0);
        // coverage recomputed from the records must match the summary
        let covered = report.records.iter().filter(|r| r.covered).count();
        assert_abs_diff_eq!(
            report.summary.coverage,
            covered as f64 / 60.0,
            epsilon = 1e-15
        );
        // units are in test order
        for (i, r) in report.records.iter().enumerate() {
            assert_eq!(r.unit, i);
            assert!(r.yhat >= 0.0 && r.yhat < TAU);
            if let Some(e) = r.epsilon {
                assert!((0.0..PI).contains(&e));
            } else {
                assert!(r.full_circle);
            }
        }
        // noisy-but-informative data at this size should not cover trivially
        assert!(report.summary.coverage > 0.6);
        assert!(report.summary.full_circle_fraction < 1.0);
    }

    #[test]
    fn reports_are_identical_across_thread_counts() {
        let mut config = small_config(Method::Prf);
        let one = run_experiment(&config).unwrap();
        config.threads = 2;
        let two = run_experiment(&config).unwrap();
        assert_eq!(one.records_csv(), two.records_csv());
        assert_eq!(
            one.summary_json().unwrap(),
            two.summary_json().unwrap()
        );
        assert_eq!(one.human_table(), two.human_table());
    }

    #[test]
    fn pn_experiment_runs_and_converges() {
        let report = run_experiment(&small_config(Method::ProjectedNormal)).unwrap();
        assert_eq!(report.records.len(), 60);
        assert!(report.summary.model_converged);
        assert_eq!(report.summary.n_scores, 100);
        assert_eq!(report.summary.dropped_no_oob, 0);
        assert!(report.summary.coverage > 0.6);
        assert_eq!(report.summary.method, "pn");
    }

    #[test]
    fn both_methods_share_the_record_schema() {
        let prf = run_experiment(&small_config(Method::Prf)).unwrap();
        let pn = run_experiment(&small_config(Method::ProjectedNormal)).unwrap();
        let header = |csv: &str| csv.lines().next().unwrap().to_string();
        assert_eq!(header(&prf.records_csv()), header(&pn.records_csv()));
        assert_eq!(
            header(&prf.records_csv()),
            "unit,yhat,epsilon,full_circle,y_true,covered"
        );
        for line in prf.records_csv().lines().skip(1) {
            assert_eq!(line.split(',').count(), 6, "bad line: {line}");
        }
    }

    #[test]
    fn smaller_alpha_never_shrinks_the_arcs() {
        let mut config = small_config(Method::Prf);
        config.alpha = 0.5;
        let loose = run_experiment(&config).unwrap();
        config.alpha = 0.1;
        let tight = run_experiment(&config).unwrap();
        // same seed ⇒ identical forests and scores; only the rank moves
        assert!(loose.summary.threshold <= tight.summary.threshold);
        assert!(loose.summary.median_arc_length <= tight.summary.median_arc_length);
        assert!(loose.summary.coverage <= tight.summary.coverage);
    }

    #[test]
    fn file_datasets_round_trip_through_the_harness() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("synth.csv");
        let data = generate_synthetic(240, 5.0, 3).unwrap();
        save_dataset_csv(&data, &path).unwrap();

        let config = ExperimentConfig {
            dataset: DatasetSpec::File { path: path.clone() },
            method: Method::Prf,
            trees: 40,
            threads: 1,
            split: None, // thirds of 240
            ..ExperimentConfig::default()
        };
        let report = run_experiment(&config).unwrap();
        assert_eq!(report.summary.n_train, 80);
        assert_eq!(report.summary.n_calib, 80);
        assert_eq!(report.summary.n_test, 80);
        assert!(report.summary.dataset.ends_with("synth.csv"));
    }

    #[test]
    fn infeasible_alpha_fails_before_training() {
        let mut config = small_config(Method::ProjectedNormal);
        config.alpha = 0.001; // needs more than 100 calibration scores
        match run_experiment(&config) {
            Err(Error::InsufficientCalibration { available, .. }) => {
                assert_eq!(available, 100);
            }
            other => panic!("expected an insufficient-calibration error, got {other:?}"),
        }
    }

    #[test]
    fn synthetic_specs_require_split_sizes() {
        let config = ExperimentConfig {
            split: None,
            ..small_config(Method::Prf)
        };
        assert!(matches!(run_experiment(&config), Err(Error::Config(_))));
    }

    #[test]
    fn write_report_emits_all_three_files() {
        let report = run_experiment(&small_config(Method::Prf)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("nested").join("run1");
        write_report(&report, &out).unwrap();
        let csv = std::fs::read_to_string(out.join("records.csv")).unwrap();
        assert_eq!(csv, report.records_csv());
        let json = std::fs::read_to_string(out.join("summary.json")).unwrap();
        assert!(json.contains("\"coverage\""));
        let table = std::fs::read_to_string(out.join("table.txt")).unwrap();
        assert!(table.contains("quantile rule"));
    }
}
