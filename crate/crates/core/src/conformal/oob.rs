//! Out-of-bag conformal prediction with projected random forests.
//!
//! Training fits four forests on one shared bootstrap plan: a projected
//! pair `(μ̂_c, μ̂_s)` on `(cos y, sin y)`, and a second projected pair
//! `(σ̂_c, σ̂_s)` on `(cos δ, sin δ)` where `δ_i` is the angular residual of
//! unit `i` under its own *out-of-bag* μ-prediction.  The conformity score
//! of unit `i` is `r_i = δ_i / σ̂_oob(x_i)`.  Because every unit is scored
//! only by trees that never saw it, no separate calibration split is
//! needed: the training and calibration samples can be merged.
//!
//! For a new point, the center and scale are aggregated over all trees
//! (full bag), and the set half-width is `ε = r_(k) · σ̂(x_new)` with
//! `k = ⌈(1−α)(n′+1)⌉` over the `n′` retained scores.

use crate::circular::{angular_distance, Angle};
use crate::conformal::{build_prediction_set, quantile_rank, PredictionSet};
use crate::error::{Error, Result};
use crate::forest::{BootstrapPlan, ForestConfig, OobIndex};
use crate::matrix::Matrix;
use crate::projection::{AngleAggregation, ProjectedForest};
use crate::seeding::{derive_seed, domain};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;

/// Configuration of the out-of-bag conformal model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OobConformalConfig {
    /// Number of trees `B` in each of the four component forests.
    pub trees: usize,
    /// Root seed; the bootstrap plan and all four feature-sampling streams
    /// are derived from it.
    pub seed: u64,
    pub min_node_size: usize,
    /// Candidate features per node; `None` resolves to `⌈d/3⌉`.
    pub mtry: Option<usize>,
    pub max_depth: Option<u32>,
    pub aggregation: AngleAggregation,
    /// Lower clamp for aggregated σ̂ predictions (the upper clamp is π).
    pub sigma_floor: f64,
}

impl Default for OobConformalConfig {
    fn default() -> Self {
        Self {
            trees: 500,
            seed: 0,
            min_node_size: 5,
            mtry: None,
            max_depth: None,
            aggregation: AngleAggregation::ArithmeticMean,
            sigma_floor: 1e-6,
        }
    }
}

/// Per-unit calibration record.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ResidualRecord {
    /// Index of the training unit.
    pub unit: usize,
    /// Out-of-bag angular prediction for the unit (radians).
    pub mu_oob: f64,
    /// Angular residual `δ_i = d(y_i, μ̂_oob(x_i))`.
    pub delta: f64,
    /// Out-of-bag scale prediction, already clamped to
    /// `[sigma_floor, π]`.
    pub sigma_oob: f64,
    /// Conformity score `δ_i / σ̂_oob(x_i)`.
    pub score: f64,
}

/// Counters describing corrective actions taken during fitting.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct OobDiagnostics {
    /// Units that appear in every bootstrap row and therefore have no
    /// out-of-bag prediction.  They are excluded from the score list; the
    /// quantile rank uses the reduced count.
    pub dropped_no_oob: usize,
    /// Out-of-bag σ̂ values clamped into `[sigma_floor, π]`.
    pub sigma_clamped: usize,
}

/// A fitted out-of-bag conformal model.
///
/// Fitting is α-free: the score list is computed once and any miscoverage
/// level can be queried afterwards.
#[derive(Clone, Debug)]
pub struct OobConformalModel {
    mu_forest: ProjectedForest,
    sigma_forest: ProjectedForest,
    records: Vec<ResidualRecord>,
    sorted_scores: Vec<f64>,
    diagnostics: OobDiagnostics,
    config: OobConformalConfig,
}

impl OobConformalModel {
    /// Fits the four forests and computes the out-of-bag score list.
    pub fn fit(x: &Matrix, y: &[Angle], config: &OobConformalConfig) -> Result<Self> {
        let n = x.n_rows();
        if n != y.len() {
            return Err(Error::Data(format!(
                "covariates ({} rows) and responses ({}) differ in length",
                n,
                y.len()
            )));
        }
        if n < 2 {
            return Err(Error::Data(
                "out-of-bag conformal prediction needs at least two training units".into(),
            ));
        }
        if config.trees == 0 {
            return Err(Error::Config("the forest needs at least one tree".into()));
        }
        if !(config.sigma_floor.is_finite() && config.sigma_floor > 0.0 && config.sigma_floor < PI)
        {
            return Err(Error::Config(format!(
                "sigma_floor must lie in (0, π), got {}",
                config.sigma_floor
            )));
        }

        let forest_cfg = ForestConfig {
            mtry: config.mtry,
            min_node_size: config.min_node_size,
            max_depth: config.max_depth,
            seed: 0, // overridden per component below
        };
        let plan = Arc::new(BootstrapPlan::new(
            n,
            config.trees,
            derive_seed(config.seed, domain::PLAN, 0),
        )?);
        let oob = Arc::new(OobIndex::from_plan(&plan));

        let mu_forest = ProjectedForest::train(
            x,
            y,
            Arc::clone(&plan),
            Arc::clone(&oob),
            &forest_cfg,
            derive_seed(config.seed, domain::MU_COS, 0),
            derive_seed(config.seed, domain::MU_SIN, 0),
            config.aggregation,
        )?;

        // out-of-bag residuals δ_i
        let mu_oob: Vec<Option<Angle>> = (0..n)
            .into_par_iter()
            .map(|i| {
                if oob.is_empty(i) {
                    None
                } else {
                    Some(
                        mu_forest
                            .predict_angle_oob(i, x.row(i))
                            .expect("non-empty OOB subset"),
                    )
                }
            })
            .collect();

        let dropped_no_oob = mu_oob.iter().filter(|m| m.is_none()).count();
        if dropped_no_oob == n {
            return Err(Error::Data(
                "every unit appears in every bootstrap row; no out-of-bag residuals exist".into(),
            ));
        }
        let deltas: Vec<Option<f64>> = (0..n)
            .map(|i| mu_oob[i].map(|m| angular_distance(y[i], m)))
            .collect();

        // The σ forests are trained on all n units with the shared plan, so
        // units without an out-of-bag residual (an event with probability
        // ≈ (1−e^{-1})^B, negligible for realistic B) receive the mean
        // defined residual as a stand-in response.  They stay excluded from
        // the score list.
        let defined: Vec<f64> = deltas.iter().flatten().copied().collect();
        let fallback = defined.iter().sum::<f64>() / defined.len() as f64;
        if dropped_no_oob > 0 {
            log::warn!(
                "{dropped_no_oob} of {n} units have no out-of-bag trees; \
                 they are dropped from calibration and their σ-forest response \
                 is imputed with the mean residual"
            );
        }
        let delta_angles: Vec<Angle> = deltas
            .iter()
            .map(|d| Angle::new(d.unwrap_or(fallback)))
            .collect();

        let sigma_forest = ProjectedForest::train(
            x,
            &delta_angles,
            Arc::clone(&plan),
            Arc::clone(&oob),
            &forest_cfg,
            derive_seed(config.seed, domain::SIGMA_COS, 0),
            derive_seed(config.seed, domain::SIGMA_SIN, 0),
            config.aggregation,
        )?;

        // conformity scores r_i = δ_i / σ̂_oob(x_i)
        let sigma_floor = config.sigma_floor;
        let raw: Vec<Option<(usize, f64, f64, f64, bool)>> = (0..n)
            .into_par_iter()
            .map(|i| {
                deltas[i].map(|delta| {
                    let sigma_raw = sigma_forest
                        .predict_angle_oob(i, x.row(i))
                        .expect("non-empty OOB subset")
                        .radians();
                    let sigma = sigma_raw.clamp(sigma_floor, PI);
                    (i, mu_oob[i].unwrap().radians(), delta, sigma, sigma != sigma_raw)
                })
            })
            .collect();

        let mut records = Vec::with_capacity(n - dropped_no_oob);
        let mut sigma_clamped = 0usize;
        for item in raw.into_iter().flatten() {
            let (unit, mu, delta, sigma, clamped) = item;
            if clamped {
                sigma_clamped += 1;
            }
            records.push(ResidualRecord {
                unit,
                mu_oob: mu,
                delta,
                sigma_oob: sigma,
                score: delta / sigma,
            });
        }
        if sigma_clamped > 0 {
            log::warn!(
                "{sigma_clamped} of {} out-of-bag σ̂ values clamped into [{sigma_floor}, π]",
                records.len()
            );
            if sigma_clamped == records.len() {
                log::warn!("every out-of-bag σ̂ was clamped; the scale forest carries no signal");
            }
        }

        let mut sorted_scores: Vec<f64> = records.iter().map(|r| r.score).collect();
        sorted_scores.sort_unstable_by(f64::total_cmp);

        Ok(Self {
            mu_forest,
            sigma_forest,
            records,
            sorted_scores,
            diagnostics: OobDiagnostics {
                dropped_no_oob,
                sigma_clamped,
            },
            config: *config,
        })
    }

    /// Point prediction: the full-bag aggregated angle.
    pub fn predict_point(&self, x: &[f64]) -> Angle {
        self.mu_forest.predict_angle_fullbag(x)
    }

    /// Full-bag scale prediction, clamped to `[sigma_floor, π]`.
    pub fn predict_sigma(&self, x: &[f64]) -> f64 {
        let raw = self.sigma_forest.predict_angle_fullbag(x).radians();
        let sigma = raw.clamp(self.config.sigma_floor, PI);
        if sigma != raw {
            log::debug!("full-bag σ̂ {raw} clamped into [{}, π]", self.config.sigma_floor);
        }
        sigma
    }

    /// The conformal threshold `r̂ = r_(k)` for miscoverage `alpha`.
    pub fn threshold(&self, alpha: f64) -> Result<f64> {
        let k = quantile_rank(self.sorted_scores.len(), alpha)?;
        Ok(self.sorted_scores[k - 1])
    }

    /// Point prediction plus conformal set at miscoverage `alpha`.
    pub fn prediction_set(&self, x: &[f64], alpha: f64) -> Result<(Angle, PredictionSet)> {
        let rhat = self.threshold(alpha)?;
        let center = self.predict_point(x);
        let epsilon = rhat * self.predict_sigma(x);
        Ok((center, build_prediction_set(center, epsilon)))
    }

    /// Calibration scores in increasing order (`n′` entries after drops).
    pub fn scores(&self) -> &[f64] {
        &self.sorted_scores
    }

    /// Per-unit calibration records, in unit order.
    pub fn records(&self) -> &[ResidualRecord] {
        &self.records
    }

    pub fn diagnostics(&self) -> &OobDiagnostics {
        &self.diagnostics
    }

    pub fn config(&self) -> &OobConformalConfig {
        &self.config
    }

    pub fn mu_forest(&self) -> &ProjectedForest {
        &self.mu_forest
    }

    pub fn sigma_forest(&self) -> &ProjectedForest {
        &self.sigma_forest
    }
}

/// One-shot convenience: fit on `(x, y)` and return the point prediction
/// and conformal set at `x_new`.
pub fn oob_conformal_predict(
    x: &Matrix,
    y: &[Angle],
    x_new: &[f64],
    alpha: f64,
    config: &OobConformalConfig,
) -> Result<(Angle, PredictionSet)> {
    let model = OobConformalModel::fit(x, y, config)?;
    model.prediction_set(x_new, alpha)
}
