//! Split conformal prediction for circular responses.
//!
//! The calibration scores are scaled angular residuals
//! `R_i = d(Y_i, μ̂(X_i)) / σ̂(X_i)`; with `n` scores and miscoverage `α`,
//! the threshold is the `k`-th smallest score where `k = ⌈(1−α)(n+1)⌉`.
//! For exchangeable data the resulting sets cover with probability in
//! `[1−α, 1−α + 1/(n+1))`.
//!
//! A prediction set is an arc `[μ̂ − ε, μ̂ + ε]` when the half-width
//! `ε = r̂ σ̂` is below π, and the whole circle otherwise.

mod idealized;
mod oob;

pub use idealized::{idealized_oob_scores, stump_config, IdealizedOob};
pub use oob::{
    oob_conformal_predict, OobConformalConfig, OobConformalModel, OobDiagnostics, ResidualRecord,
};

use crate::circular::{angular_distance, Angle};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// The conformal quantile rank `k = ⌈(1−α)(n+1)⌉`.
///
/// Errors when `α` is outside `(0, 1)` or when `k > n`, in which case no
/// finite threshold delivers the requested coverage.  The product
/// `(1−α)(n+1)` is rounded to the nearest integer first when it is within
/// `1e-9` of one, so that mathematically integral ranks (e.g. `n = 99`,
/// `α = 0.2`) are not bumped up by floating-point noise.
pub fn quantile_rank(n: usize, alpha: f64) -> Result<usize> {
    if !alpha.is_finite() || alpha <= 0.0 || alpha >= 1.0 {
        return Err(Error::Config(format!(
            "miscoverage level must lie strictly between 0 and 1, got {alpha}"
        )));
    }
    let t = (1.0 - alpha) * (n as f64 + 1.0);
    let k = if (t - t.round()).abs() < 1e-9 {
        t.round() as usize
    } else {
        t.ceil() as usize
    };
    if k > n {
        return Err(Error::InsufficientCalibration {
            rank: k,
            available: n,
        });
    }
    Ok(k.max(1))
}

/// Scaled angular conformity score `d(y, μ) / σ`.
///
/// `σ` must be finite and strictly positive.
pub fn conformity_score(y: Angle, mu: Angle, sigma: f64) -> Result<f64> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::Numeric(format!(
            "conformity score needs a positive finite scale, got {sigma}"
        )));
    }
    Ok(angular_distance(y, mu) / sigma)
}

/// The outcome of split-conformal calibration.
#[derive(Clone, Debug, Serialize)]
pub struct CalibrationResult {
    /// Calibration scores sorted in increasing order.
    pub scores: Vec<f64>,
    /// The order-statistic rank `k`.
    pub rank: usize,
    /// The threshold `r̂`, i.e. the `k`-th smallest score.
    pub threshold: f64,
    /// Miscoverage level the rank was computed for.
    pub alpha: f64,
}

impl CalibrationResult {
    /// Lower and upper bounds of the finite-sample coverage band
    /// `[1−α, 1−α + 1/(n+1))` implied by the calibration size.
    pub fn coverage_band(&self) -> (f64, f64) {
        let n = self.scores.len() as f64;
        (1.0 - self.alpha, 1.0 - self.alpha + 1.0 / (n + 1.0))
    }
}

/// Computes calibration scores for fitted prediction functions `mu` and
/// `sigma` on a held-out calibration set, and extracts the conformal
/// threshold for level `alpha`.
pub fn split_conformal_calibrate(
    mu: impl Fn(&[f64]) -> Angle,
    sigma: impl Fn(&[f64]) -> f64,
    x: &Matrix,
    y: &[Angle],
    alpha: f64,
) -> Result<CalibrationResult> {
    if x.n_rows() != y.len() {
        return Err(Error::Data(format!(
            "calibration covariates ({} rows) and responses ({}) differ in length",
            x.n_rows(),
            y.len()
        )));
    }
    let rank = quantile_rank(y.len(), alpha)?;
    let mut scores = Vec::with_capacity(y.len());
    for i in 0..y.len() {
        let xi = x.row(i);
        scores.push(conformity_score(y[i], mu(xi), sigma(xi))?);
    }
    scores.sort_unstable_by(f64::total_cmp);
    let threshold = scores[rank - 1];
    Ok(CalibrationResult {
        scores,
        rank,
        threshold,
        alpha,
    })
}

/// A conformal prediction set on the circle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PredictionSet {
    /// The arc of half-width `epsilon` (radians) centered at `center`.
    Arc { center: Angle, epsilon: f64 },
    /// The whole circle: the calibrated half-width reached π.
    FullCircle,
}

/// Builds the prediction set with center `center` and half-width
/// `epsilon ≥ 0`: an arc when `epsilon < π`, the full circle otherwise.
pub fn build_prediction_set(center: Angle, epsilon: f64) -> PredictionSet {
    assert!(
        epsilon.is_finite() && epsilon >= 0.0,
        "prediction set half-width must be finite and non-negative, got {epsilon}"
    );
    if epsilon < PI {
        PredictionSet::Arc { center, epsilon }
    } else {
        PredictionSet::FullCircle
    }
}

impl PredictionSet {
    /// Membership test; arcs include both endpoints.
    pub fn covers(&self, y: Angle) -> bool {
        match *self {
            PredictionSet::Arc { center, epsilon } => angular_distance(y, center) <= epsilon,
            PredictionSet::FullCircle => true,
        }
    }

    /// Total arc length: `2ε` for an arc (0 for a degenerate point set),
    /// `2π` for the full circle.
    pub fn arc_length(&self) -> f64 {
        match *self {
            PredictionSet::Arc { epsilon, .. } => 2.0 * epsilon,
            PredictionSet::FullCircle => TAU,
        }
    }

    pub fn is_full_circle(&self) -> bool {
        matches!(self, PredictionSet::FullCircle)
    }

    /// Reporting representation `(lower, upper)` with
    /// `lower = center − ε` and `upper = center + ε` left unwrapped, so the
    /// numbers always lie in `[−π, 3π]`; the full circle reports `(0, 2π)`.
    pub fn interval(&self) -> (f64, f64) {
        match *self {
            PredictionSet::Arc { center, epsilon } => {
                (center.radians() - epsilon, center.radians() + epsilon)
            }
            PredictionSet::FullCircle => (0.0, TAU),
        }
    }
}
