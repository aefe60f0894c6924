//! Conformal prediction of circular responses with projected random forests.
//!
//! This crate provides distribution-free prediction sets for angular
//! regression targets (wind directions, phases, orientations).  The centre
//! piece is the *projected random forest*: a circular response is lifted to
//! its `(cos, sin)` components, two regression forests are trained on the
//! components under one shared bootstrap plan, and per-tree predictions are
//! projected back to the circle and averaged.  Out-of-bag residuals then
//! calibrate conformal arcs of the form `[μ̂(x) − ε(x), μ̂(x) + ε(x)]` whose
//! coverage is guaranteed for exchangeable data without any distributional
//! assumptions.
//!
//! # Modules
//!
//! * [`circular`] — angles, angular distance, the projection `(c, s) ↦ θ`,
//!   and von Mises sampling/density utilities.
//! * [`forest`] — bootstrap plans and deterministic regression forests.
//! * [`projection`] — the projected forest built from component forests.
//! * [`conformal`] — split conformal calibration, out-of-bag conformal
//!   forests, and a small exhaustive-bootstrap oracle for validity checks.
//! * [`baselines`] — projected-normal regression fitted by maximum
//!   likelihood, used as a parametric comparison method.
//! * [`data`] — synthetic data generation, dataset CSV persistence, and
//!   hourly wind-record ingestion.
//! * [`harness`] — end-to-end experiments with per-unit records and
//!   summaries.
//!
//! # Determinism
//!
//! Every random choice flows from explicit `u64` seeds through independent
//! derived streams; training and prediction parallelise over units and trees
//! without any order-dependent reductions.  The same configuration therefore
//! produces bit-identical results on any machine and with any number of
//! worker threads.
//!
//! # Example
//!
//! ```
//! use arcforest::conformal::{OobConformalConfig, OobConformalModel};
//! use arcforest::data::generate_synthetic;
//!
//! let data = generate_synthetic(300, 5.0, 7).unwrap();
//! let config = OobConformalConfig { trees: 50, ..OobConformalConfig::default() };
//! let model = OobConformalModel::fit(&data.x, &data.y, &config).unwrap();
//! let (center, set) = model.prediction_set(data.x.row(0), 0.1).unwrap();
//! assert!(set.arc_length() > 0.0);
//! assert!(center.radians() >= 0.0);
//! ```

pub mod baselines;
pub mod circular;
pub mod conformal;
pub mod data;
pub mod error;
pub mod forest;
pub mod harness;
pub mod matrix;
pub mod projection;
mod seeding;

pub use baselines::{
    fit_projected_normal, fit_projected_normal_with, pn_density, pn_log_likelihood, pn_predict,
    ProjectedNormalModel,
};
pub use circular::{
    angular_distance, atan_project, bessel_i0, bessel_i1, circular_histogram, sample_von_mises,
    von_mises_density, Angle, VonMisesParams,
};
pub use conformal::{
    build_prediction_set, conformity_score, idealized_oob_scores, oob_conformal_predict,
    quantile_rank, split_conformal_calibrate, stump_config, CalibrationResult, IdealizedOob,
    OobConformalConfig, OobConformalModel, OobDiagnostics, PredictionSet, ResidualRecord,
};
pub use data::wind::{convert_inmet, load_wind_csv, InmetStats};
pub use data::{
    generate_synthetic, load_dataset_csv, save_dataset_csv, split_dataset, synthetic_mean_angle,
    Dataset, Provenance, SplitSizes,
};
pub use error::{Error, Result};
pub use forest::{
    plan_bootstrap, train_forest, BootstrapPlan, Forest, ForestConfig, OobIndex, PlanSource,
};
pub use harness::{
    run_experiment, write_report, DatasetSpec, ExperimentConfig, ExperimentReport, Method,
    Summary, UnitRecord,
};
pub use matrix::Matrix;
pub use projection::{train_projected, AngleAggregation, ProjectedForest};
