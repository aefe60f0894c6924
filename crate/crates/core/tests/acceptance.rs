//! Acceptance gate: one test per release criterion.
//!
//! Every test checks one criterion end to end at its stated tolerance and
//! prints a single `ACCEPTANCE cN <name>: PASS (...)` line with the measured
//! quantities (run with `--nocapture` to see the numbers; a failing
//! criterion fails its test with the same diagnostics).
//!
//! Criteria c2 and c3 reproduce the reference simulation at full scale
//! (30 000 units per concentration, 500 trees) and take a few minutes each
//! on a single core.  c4 enumerates the exhaustive bootstrap oracle over
//! 2 000 simulated datasets.  The remaining criteria run in seconds.

use arcforest::{
    angular_distance, atan_project, bessel_i0, bessel_i1, conformity_score, idealized_oob_scores,
    load_wind_csv, plan_bootstrap, quantile_rank, run_experiment, sample_von_mises,
    split_conformal_calibrate, stump_config, von_mises_density, Angle, DatasetSpec,
    ExperimentConfig, Matrix, Method, OobConformalConfig, OobConformalModel, OobIndex,
    PredictionSet, SplitSizes, Summary, VonMisesParams,
};
use chrono::{NaiveDate, TimeDelta};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::Instant;

// ---------------------------------------------------------------------------
// c1: split-conformal coverage band
// ---------------------------------------------------------------------------

/// With a fixed `(mu-hat, sigma-hat)` pair and continuous scores, the
/// empirical coverage over repeated draws of 99 calibration units and one
/// test unit at `alpha = 0.2` must land in the finite-sample band
/// `[0.80, 0.81)` up to three binomial standard errors on each edge.
#[test]
fn c1_split_conformal_coverage_band() {
    let start = Instant::now();
    let alpha = 0.2;
    let n_calib = 99;
    let reps = 2000usize;

    // Deliberately imperfect predictors fixed before any data are drawn:
    // exchangeability of the scores is all the guarantee needs.
    let mu_hat = |x: &[f64]| Angle::new(2.0 * x[0] + 3.0 + 0.3);
    let sigma_hat = |x: &[f64]| 0.7 + 0.2 * x[0] * x[0];

    let noise = VonMisesParams::new(Angle::new(0.0), 2.0).unwrap();
    let mut covered = 0usize;
    for rep in 0..reps {
        let mut rng = ChaCha8Rng::seed_from_u64(100_000 + rep as u64);
        let draws = sample_von_mises(&noise, n_calib + 1, 500_000 + rep as u64);
        let mut rows = Vec::with_capacity(n_calib);
        let mut ys = Vec::with_capacity(n_calib);
        let mut test_x = [0.0f64];
        let mut test_y = Angle::new(0.0);
        for (i, noise_draw) in draws.iter().enumerate() {
            let x: f64 = rng.random_range(-1.0..1.0);
            let y = Angle::new(2.0 * x + 3.0 + noise_draw.radians());
            if i < n_calib {
                rows.push(vec![x]);
                ys.push(y);
            } else {
                test_x[0] = x;
                test_y = y;
            }
        }
        let x_mat = Matrix::from_rows(rows).unwrap();
        let result = split_conformal_calibrate(mu_hat, sigma_hat, &x_mat, &ys, alpha).unwrap();
        let score = conformity_score(test_y, mu_hat(&test_x), sigma_hat(&test_x)).unwrap();
        if score <= result.threshold {
            covered += 1;
        }
    }

    let coverage = covered as f64 / reps as f64;
    // Exact band for n = 99, alpha = 0.2 is [0.80, 0.81); widen each edge by
    // three binomial standard errors for the Monte Carlo replication noise.
    let lo = 0.80 - 3.0 * (0.80f64 * 0.20 / reps as f64).sqrt();
    let hi = 0.81 + 3.0 * (0.81f64 * 0.19 / reps as f64).sqrt();
    let elapsed = start.elapsed();
    assert!(
        coverage >= lo && coverage <= hi,
        "c1 FAIL: empirical coverage {coverage:.4} outside [{lo:.4}, {hi:.4}]"
    );
    assert!(
        elapsed.as_secs() < 60,
        "c1 FAIL: runtime {elapsed:.1?} exceeded one minute"
    );
    println!(
        "ACCEPTANCE c1 split-conformal coverage band: PASS \
         (coverage {coverage:.4} in [{lo:.4}, {hi:.4}], {reps} replications, {elapsed:.1?})"
    );
}

// ---------------------------------------------------------------------------
// c2 / c3: full-scale synthetic comparison
// ---------------------------------------------------------------------------

const KAPPAS: [f64; 4] = [1.0, 2.0, 5.0, 10.0];
const REFERENCE_SEED: u64 = 20_260_825;

fn reference_config(kappa: f64, method: Method) -> ExperimentConfig {
    ExperimentConfig {
        dataset: DatasetSpec::Synthetic { kappa },
        method,
        alpha: 0.1,
        trees: 500,
        seed: REFERENCE_SEED,
        split: Some(SplitSizes {
            train: 10_000,
            calib: 10_000,
            test: 10_000,
        }),
        ..ExperimentConfig::default()
    }
}

/// The four full-scale projected-forest runs, shared between c2 and c3 so
/// the forests are only trained once per process.
fn prf_reference_runs() -> &'static [(f64, Summary)] {
    static CACHE: OnceLock<Vec<(f64, Summary)>> = OnceLock::new();
    CACHE.get_or_init(|| {
        KAPPAS
            .iter()
            .map(|&kappa| {
                let report = run_experiment(&reference_config(kappa, Method::Prf))
                    .unwrap_or_else(|e| panic!("PRF run at kappa {kappa} failed: {e}"));
                (kappa, report.summary)
            })
            .collect()
    })
}

/// Projected random forests at reference scale: 20 000 fitting units
/// (train and calibration merged), 10 000 test units, 500 trees,
/// `alpha = 0.1`.  Coverage must sit within 1.5 points of 90% and the
/// median arc length within 15% of the reference values, strictly
/// decreasing in the concentration.
#[test]
fn c2_projected_forest_reference_table() {
    let start = Instant::now();
    let expected_medians = [4.51, 2.96, 1.70, 1.24];
    let runs = prf_reference_runs();

    let mut details = String::new();
    for ((kappa, summary), &expected) in runs.iter().zip(&expected_medians) {
        let median = summary.median_arc_length;
        details.push_str(&format!(
            "kappa {kappa}: coverage {:.4}, median {:.3} (ref {expected}); ",
            summary.coverage, median
        ));
        assert!(
            (summary.coverage - 0.90).abs() <= 0.015,
            "c2 FAIL: coverage {:.4} at kappa {kappa} not within 1.5 points of 90%",
            summary.coverage
        );
        assert!(
            (median - expected).abs() <= 0.15 * expected,
            "c2 FAIL: median arc {median:.3} at kappa {kappa} not within 15% of {expected}"
        );
    }
    for pair in runs.windows(2) {
        assert!(
            pair[1].1.median_arc_length < pair[0].1.median_arc_length,
            "c2 FAIL: median arcs not strictly decreasing in kappa ({} -> {})",
            pair[0].1.median_arc_length,
            pair[1].1.median_arc_length
        );
    }
    println!(
        "ACCEPTANCE c2 projected-forest reference table: PASS ({details}{:.1?})",
        start.elapsed()
    );
}

/// Projected-normal baseline at reference scale: 10 000/10 000/10 000
/// splits, `alpha = 0.1`.  Coverage within 1.5 points of 90%; median arcs
/// within 20% of the reference values (the reference scale model for this
/// baseline is underspecified, hence the wider band); and the forests must
/// beat the baseline on median arc length at every concentration.
#[test]
fn c3_projected_normal_reference_table() {
    let start = Instant::now();
    let expected_medians = [4.90, 4.05, 3.40, 3.21];
    let prf = prf_reference_runs();

    let mut details = String::new();
    for ((&kappa, &expected), (_, prf_summary)) in
        KAPPAS.iter().zip(&expected_medians).zip(prf.iter())
    {
        let report = run_experiment(&reference_config(kappa, Method::ProjectedNormal))
            .unwrap_or_else(|e| panic!("PN run at kappa {kappa} failed: {e}"));
        let summary = report.summary;
        let median = summary.median_arc_length;
        details.push_str(&format!(
            "kappa {kappa}: coverage {:.4}, median {:.3} (ref {expected}, prf {:.3}); ",
            summary.coverage, median, prf_summary.median_arc_length
        ));
        assert!(
            (summary.coverage - 0.90).abs() <= 0.015,
            "c3 FAIL: coverage {:.4} at kappa {kappa} not within 1.5 points of 90%",
            summary.coverage
        );
        assert!(
            (median - expected).abs() <= 0.20 * expected,
            "c3 FAIL: median arc {median:.3} at kappa {kappa} not within 20% of {expected}"
        );
        assert!(
            prf_summary.median_arc_length < median,
            "c3 FAIL: projected forest median {:.3} not below baseline median {median:.3} at kappa {kappa}",
            prf_summary.median_arc_length
        );
    }
    println!(
        "ACCEPTANCE c3 projected-normal reference table: PASS ({details}{:.1?})",
        start.elapsed()
    );
}

// ---------------------------------------------------------------------------
// c4: exhaustive-bootstrap oracle
// ---------------------------------------------------------------------------

/// The idealized out-of-bag construction restores exact exchangeability:
/// with n = 4 training units, one test unit, stump trees and
/// `alpha = 0.2`, coverage over simulated datasets must not fall more than
/// three binomial standard errors below 0.8.
#[test]
fn c4_idealized_bootstrap_oracle_bound() {
    let start = Instant::now();
    let trials = 2000usize;
    let config = stump_config();
    let rank = quantile_rank(4, 0.2).unwrap();
    assert_eq!(rank, 4, "rank for n = 4, alpha = 0.2 must be 4");

    let mut covered = 0usize;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(40_000 + trial as u64);
        let mut rows = Vec::with_capacity(5);
        let mut ys = Vec::with_capacity(5);
        for _ in 0..5 {
            let x: f64 = rng.random_range(0.0..1.0);
            let eps: f64 = rng.sample(StandardNormal);
            rows.push(vec![x]);
            ys.push(1.0 + 2.0 * x + 0.5 * eps);
        }
        let x = Matrix::from_rows(rows).unwrap();
        let oracle = idealized_oob_scores(&x, &ys, &config).unwrap();
        let mut train_scores = oracle.scores[..4].to_vec();
        train_scores.sort_unstable_by(f64::total_cmp);
        if oracle.scores[4] <= train_scores[rank - 1] {
            covered += 1;
        }
    }

    let coverage = covered as f64 / trials as f64;
    let bound = 0.8 - 3.0 * (0.8f64 * 0.2 / trials as f64).sqrt();
    let elapsed = start.elapsed();
    assert!(
        coverage >= bound,
        "c4 FAIL: idealized coverage {coverage:.4} below the bound {bound:.4}"
    );
    assert!(
        elapsed.as_secs() < 600,
        "c4 FAIL: runtime {elapsed:.1?} exceeded ten minutes"
    );
    println!(
        "ACCEPTANCE c4 idealized bootstrap oracle: PASS \
         (coverage {coverage:.4} >= {bound:.4}, {trials} datasets, {elapsed:.1?})"
    );
}

// ---------------------------------------------------------------------------
// c5: von Mises correctness
// ---------------------------------------------------------------------------

/// The density integrates to one within 1e-6 at every tested
/// concentration, and the sampler's mean resultant length matches
/// `I1(kappa) / I0(kappa)` within 0.01 at 100 000 draws.
#[test]
fn c5_von_mises_density_and_sampler() {
    let start = Instant::now();
    let kappas = [0.5, 1.0, 2.0, 5.0, 10.0, 50.0];
    let n_draws = 100_000usize;
    let mut details = String::new();

    for (i, &kappa) in kappas.iter().enumerate() {
        let params = VonMisesParams::new(Angle::new(1.1), kappa).unwrap();

        // Midpoint rule over one period: spectrally accurate for smooth
        // periodic integrands, so 8192 points leave only rounding error.
        let n = 8192;
        let step = TAU / n as f64;
        let integral: f64 = (0..n)
            .map(|j| von_mises_density(Angle::new((j as f64 + 0.5) * step), &params))
            .sum::<f64>()
            * step;
        assert!(
            (integral - 1.0).abs() < 1e-6,
            "c5 FAIL: density integral {integral:.9} at kappa {kappa} off by more than 1e-6"
        );

        let draws = sample_von_mises(&params, n_draws, 77 + i as u64);
        let (mut c, mut s) = (0.0f64, 0.0f64);
        for a in &draws {
            c += a.radians().cos();
            s += a.radians().sin();
        }
        let mrl = (c * c + s * s).sqrt() / n_draws as f64;
        let expected = bessel_i1(kappa) / bessel_i0(kappa);
        assert!(
            (mrl - expected).abs() < 0.01,
            "c5 FAIL: mean resultant length {mrl:.4} at kappa {kappa} vs expected {expected:.4}"
        );
        details.push_str(&format!("kappa {kappa}: mrl {mrl:.4}/{expected:.4}; "));
    }
    println!(
        "ACCEPTANCE c5 von Mises density and sampler: PASS ({details}{:.1?})",
        start.elapsed()
    );
}

// ---------------------------------------------------------------------------
// c6: determinism across thread counts
// ---------------------------------------------------------------------------

/// Two runs of the experiment pipeline with identical configuration on one
/// thread and on four threads produce byte-identical reports.
#[test]
fn c6_reports_thread_count_invariant() {
    let start = Instant::now();
    for method in [Method::Prf, Method::ProjectedNormal] {
        let single_config = ExperimentConfig {
            dataset: DatasetSpec::Synthetic { kappa: 5.0 },
            method,
            alpha: 0.1,
            trees: 120,
            seed: 31,
            split: Some(SplitSizes {
                train: 600,
                calib: 300,
                test: 300,
            }),
            threads: 1,
            ..ExperimentConfig::default()
        };
        let multi_config = ExperimentConfig {
            threads: 4,
            ..single_config.clone()
        };
        let single = run_experiment(&single_config).unwrap();
        let multi = run_experiment(&multi_config).unwrap();
        assert_eq!(
            single.records_csv(),
            multi.records_csv(),
            "c6 FAIL: per-unit CSV differs across thread counts for {method:?}"
        );
        assert_eq!(
            single.summary_json().unwrap(),
            multi.summary_json().unwrap(),
            "c6 FAIL: summary differs across thread counts for {method:?}"
        );
        assert_eq!(
            single.human_table(),
            multi.human_table(),
            "c6 FAIL: table differs across thread counts for {method:?}"
        );
    }
    println!(
        "ACCEPTANCE c6 thread-count determinism: PASS \
         (both methods byte-identical on 1 vs 4 threads, {:.1?})",
        start.elapsed()
    );
}

// ---------------------------------------------------------------------------
// c7: wind pipeline
// ---------------------------------------------------------------------------

/// Draws a deterministic, physically plausible hourly wind extract in the
/// canonical column layout: persistent direction driven by the previous
/// hour's speed and pressure, diurnal temperature, correlated humidity and
/// dew point, sporadic precipitation, a two-hour outage, and scattered
/// missing values.
fn synthesize_wind_extract(path: &Path, rows: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::with_capacity(rows * 72);
    out.push_str(
        "timestamp,wind_dir_deg,precip_mm,pressure_mb,temp_c,dew_point_c,\
         humidity_pct,gust_ms,wind_speed_ms\n",
    );
    let origin = NaiveDate::from_ymd_opt(2018, 1, 1)
        .unwrap()
        .and_hms_opt(0, 0, 0)
        .unwrap();

    let mut theta: f64 = 1.0;
    let mut pressure = 1012.0;
    let mut temp_ar = 0.0;
    let mut hum_ar = 0.0;
    let mut speed = 3.0;
    let mut hour_offset: i64 = 0;

    for i in 0..rows {
        if i == 7000 {
            hour_offset += 2; // a short outage the loader must skip over
        }
        let hours = i as i64 + hour_offset;
        let stamp = origin + TimeDelta::hours(hours);

        let n1: f64 = rng.sample(StandardNormal);
        pressure = 1012.0 + 0.995 * (pressure - 1012.0) + 0.4 * n1;
        let n2: f64 = rng.sample(StandardNormal);
        temp_ar = 0.95 * temp_ar + 0.5 * n2;
        let clock = hours.rem_euclid(24) as f64;
        let temp = 22.0 + 6.0 * (TAU * clock / 24.0 - 2.0).sin() + temp_ar;
        let n3: f64 = rng.sample(StandardNormal);
        hum_ar = 0.9 * hum_ar + 2.0 * n3;
        let humidity = (70.0 + hum_ar - 1.5 * (temp - 22.0)).clamp(20.0, 100.0);
        let dew = temp - (100.0 - humidity) / 5.0;
        let n4: f64 = rng.sample(StandardNormal);
        speed = (3.0 + 0.9 * (speed - 3.0) + 0.5 * n4).max(0.3);
        let n5: f64 = rng.sample(StandardNormal);
        let gust = speed * (1.3 + 0.2 * n5.abs());
        let precip = if rng.random_range(0.0..1.0) < 0.04 {
            let n6: f64 = rng.sample(StandardNormal);
            2.0 * n6.abs()
        } else {
            0.0
        };
        let n7: f64 = rng.sample(StandardNormal);
        theta += 0.04 * (speed - 3.0) + 0.002 * (pressure - 1012.0) + 0.25 * n7;
        let dir_deg = theta.rem_euclid(TAU).to_degrees();

        let dir_field = if rng.random_range(0.0..1.0) < 0.006 {
            String::new()
        } else {
            format!("{dir_deg:.1}")
        };
        let mut met = |value: f64, decimals: usize| -> String {
            if rng.random_range(0.0..1.0) < 0.004 {
                String::new()
            } else {
                format!("{value:.decimals$}")
            }
        };
        let fields = [
            met(precip, 1),
            met(pressure, 1),
            met(temp, 1),
            met(dew, 1),
            met(humidity, 0),
            met(gust, 1),
            met(speed, 1),
        ];
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            stamp.format("%Y-%m-%dT%H:%M:%S"),
            dir_field,
            fields[0],
            fields[1],
            fields[2],
            fields[3],
            fields[4],
            fields[5],
            fields[6],
        ));
    }
    std::fs::write(path, out).unwrap();
}

/// Wind pipeline at `alpha = 0.1` with 10 000/5 000/5 000 splits.
///
/// Without the original station extract the criterion runs in its
/// downgraded form: both methods must cover within two points of 90% on a
/// conforming hourly extract, and the invariant criteria (c1, c4, c5, c6)
/// stay binding.  Set `ARCFOREST_WIND_DATA` to a canonical wind CSV from
/// the original station to enable the full reference comparison
/// (coverage within 2 points of 89.5% / 89.2% and median arcs within 0.4
/// of 1.90 / 2.04 for the forest and the baseline respectively).
#[test]
fn c7_wind_pipeline_coverage() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let reference = std::env::var_os("ARCFOREST_WIND_DATA").map(PathBuf::from);
    let path = match &reference {
        Some(p) => p.clone(),
        None => {
            let p = dir.path().join("wind.csv");
            synthesize_wind_extract(&p, 21_500, 2024);
            p
        }
    };

    // Sanity-check the extract through the loader before spending time on
    // forests; a conforming extract must supply at least the split total.
    let pairs = load_wind_csv(&path).unwrap();
    assert!(
        pairs.n() >= 20_000,
        "c7 FAIL: extract yields {} usable pairs, need 20000",
        pairs.n()
    );

    let mut results = Vec::new();
    for method in [Method::Prf, Method::ProjectedNormal] {
        let config = ExperimentConfig {
            dataset: DatasetSpec::File { path: path.clone() },
            method,
            alpha: 0.1,
            trees: 500,
            seed: 17,
            split: Some(SplitSizes {
                train: 10_000,
                calib: 5_000,
                test: 5_000,
            }),
            ..ExperimentConfig::default()
        };
        let summary = run_experiment(&config).unwrap().summary;
        results.push((method, summary));
    }

    let mut details = String::new();
    for (method, summary) in &results {
        details.push_str(&format!(
            "{:?}: coverage {:.4}, median {:.3}; ",
            method, summary.coverage, summary.median_arc_length
        ));
    }

    match &reference {
        None => {
            for (method, summary) in &results {
                assert!(
                    (summary.coverage - 0.90).abs() <= 0.02,
                    "c7 FAIL (downgraded): {method:?} coverage {:.4} not within 2 points of 90%",
                    summary.coverage
                );
            }
            println!(
                "ACCEPTANCE c7 wind pipeline (downgraded: no station extract packaged, \
                 synthetic conforming extract): PASS ({details}{:.1?})",
                start.elapsed()
            );
        }
        Some(_) => {
            let targets = [(0.895, 1.90), (0.892, 2.04)];
            for ((method, summary), (cov, med)) in results.iter().zip(targets) {
                assert!(
                    (summary.coverage - cov).abs() <= 0.02,
                    "c7 FAIL: {method:?} coverage {:.4} not within 2 points of {cov}",
                    summary.coverage
                );
                assert!(
                    (summary.median_arc_length - med).abs() <= 0.4,
                    "c7 FAIL: {method:?} median {:.3} not within 0.4 of {med}",
                    summary.median_arc_length
                );
            }
            println!(
                "ACCEPTANCE c7 wind pipeline (reference extract): PASS ({details}{:.1?})",
                start.elapsed()
            );
        }
    }
}

// ---------------------------------------------------------------------------
// c8: module property suite
// ---------------------------------------------------------------------------

/// The binding property suites (including randomized property tests) live
/// next to each module and run as part of the normal test pass.  This
/// criterion re-runs one representative check per family through the
/// public API so the gate itself witnesses them.
#[test]
fn c8_module_property_suite() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(808);

    // Angular distance is a bounded metric.
    for _ in 0..300 {
        let a = Angle::new(rng.random_range(-10.0..10.0));
        let b = Angle::new(rng.random_range(-10.0..10.0));
        let c = Angle::new(rng.random_range(-10.0..10.0));
        let d_ab = angular_distance(a, b);
        assert!((0.0..=PI).contains(&d_ab));
        assert_eq!(d_ab, angular_distance(b, a), "c8 FAIL: metric not symmetric");
        assert_eq!(angular_distance(a, a), 0.0, "c8 FAIL: metric not reflexive");
        assert!(
            angular_distance(a, c) <= d_ab + angular_distance(b, c) + 1e-12,
            "c8 FAIL: triangle inequality violated"
        );
    }

    // The two-argument arctangent inverts the embedding on canonical angles.
    for _ in 0..300 {
        let theta = Angle::new(rng.random_range(-10.0..10.0));
        let back = atan_project(theta.radians().cos(), theta.radians().sin()).unwrap();
        assert!(
            angular_distance(theta, back) < 1e-12,
            "c8 FAIL: atan round-trip drifted"
        );
    }

    // Out-of-bag sets are exactly the complement of bag membership.
    let plan = plan_bootstrap(40, 25, 9).unwrap();
    let index = OobIndex::from_plan(&plan);
    for unit in 0..40 {
        for tree in 0..25u32 {
            let in_bag = plan.rows()[tree as usize].contains(&(unit as u32));
            let in_oob = index.oob_trees(unit).contains(&tree);
            assert!(
                in_bag != in_oob,
                "c8 FAIL: unit {unit}, tree {tree}: bag and OOB sets overlap or leak"
            );
        }
    }

    // covers(y) is equivalent to score(y) <= threshold, and thresholds
    // shrink as alpha grows.
    let data = arcforest::generate_synthetic(90, 2.0, 606).unwrap();
    let model = OobConformalModel::fit(
        &data.x,
        &data.y,
        &OobConformalConfig {
            trees: 40,
            seed: 5,
            ..OobConformalConfig::default()
        },
    )
    .unwrap();
    let row = data.x.row(0);
    let alpha = 0.2;
    let (center, set) = model.prediction_set(row, alpha).unwrap();
    let sigma = model.predict_sigma(row);
    let threshold = model.threshold(alpha).unwrap();
    for k in 0..64 {
        let y = Angle::new(k as f64 * TAU / 64.0);
        let score = conformity_score(y, center, sigma).unwrap();
        if (score - threshold).abs() < 1e-9 {
            continue; // skip the knife-edge where float ties are legitimate
        }
        assert_eq!(
            set.covers(y),
            score <= threshold,
            "c8 FAIL: set membership and score comparison disagree at {y:?}"
        );
    }
    let mut last = f64::INFINITY;
    for alpha in [0.05, 0.1, 0.2, 0.3, 0.45] {
        let t = model.threshold(alpha).unwrap();
        assert!(
            t <= last,
            "c8 FAIL: threshold increased from {last} to {t} as alpha grew"
        );
        last = t;
    }

    // Rescaling sigma-hat cancels out of the prediction set.
    let mu = |x: &[f64]| Angle::new(x[0]);
    let sigma_one = |x: &[f64]| 0.5 + x[0].abs();
    let sigma_three = |x: &[f64]| 3.0 * (0.5 + x[0].abs());
    let cal_rows: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64 / 10.0]).collect();
    let cal_y: Vec<Angle> = (0..50)
        .map(|i| Angle::new(i as f64 / 10.0 + ((i * 37) % 11) as f64 / 13.0))
        .collect();
    let cal_x = Matrix::from_rows(cal_rows).unwrap();
    let one = split_conformal_calibrate(mu, sigma_one, &cal_x, &cal_y, 0.2).unwrap();
    let three = split_conformal_calibrate(mu, sigma_three, &cal_x, &cal_y, 0.2).unwrap();
    let probe = [2.2];
    let eps_one = one.threshold * sigma_one(&probe);
    let eps_three = three.threshold * sigma_three(&probe);
    assert!(
        (one.threshold - 3.0 * three.threshold).abs() <= 1e-12 * one.threshold,
        "c8 FAIL: threshold did not scale inversely with sigma-hat"
    );
    assert!(
        (eps_one - eps_three).abs() <= 1e-12 * eps_one,
        "c8 FAIL: arc half-width changed under sigma-hat rescaling"
    );
    match arcforest::build_prediction_set(Angle::new(1.0), eps_one) {
        PredictionSet::Arc { epsilon, .. } => assert!(epsilon < PI),
        PredictionSet::FullCircle => panic!("c8 FAIL: unexpectedly degenerate probe set"),
    }

    println!(
        "ACCEPTANCE c8 module property suite: PASS \
         (metric axioms, atan round-trip, OOB bookkeeping, set/score equivalence, \
          alpha monotonicity, scale cancellation; {:.1?})",
        start.elapsed()
    );
}
