//! Parametric baseline: projected-normal regression for angular responses.
//!
//! The projected normal distribution PN(γ) on the circle arises by radially
//! projecting a bivariate normal N(γ, I₂) onto the unit circle.  Its density
//! at angle y is
//!
//! ```text
//! f(y | γ) = (2π)^{-1} exp(-‖γ‖²/2) · (1 + t·Φ(t)/φ(t)),   t = γ·(cos y, sin y)
//! ```
//!
//! where Φ and φ are the standard normal CDF and density.  The regression
//! model makes both mean-vector components linear in the covariates,
//! `γ(x) = (β_cᵀ x̃, β_sᵀ x̃)` with `x̃ = (1, x)`, and fits the two coefficient
//! vectors by maximum likelihood.
//!
//! Numerical care goes into `log(1 + t·Φ(t)/φ(t))`: the direct expression
//! overflows for large positive t and suffers catastrophic cancellation for
//! large negative t, so both tails switch to asymptotic expansions.
//!
//! Fitting sorts the observations into a canonical order first, which makes
//! the returned coefficients invariant (bitwise) under permutation of the
//! input rows.

mod optim;

pub use optim::{minimize, OptimOptions, OptimOutcome};

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::circular::Angle;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::projection::project_or_perturb;

/// Fitted projected-normal regression model.
///
/// Both coefficient vectors have length `d + 1`; index 0 is the intercept.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProjectedNormalModel {
    pub beta_cos: Vec<f64>,
    pub beta_sin: Vec<f64>,
    /// Whether the likelihood optimizer met its convergence criterion.
    pub converged: bool,
    /// Maximized log-likelihood of the training sample.
    pub log_likelihood: f64,
    /// Optimizer iterations spent.
    pub iterations: usize,
}

impl ProjectedNormalModel {
    /// Number of covariates the model expects (excluding the intercept).
    pub fn n_features(&self) -> usize {
        self.beta_cos.len() - 1
    }
}

/// Stable evaluation of `log(1 + t·Φ(t)/φ(t))`.
///
/// For moderate `t` the ratio is computed through `erfc`; the tails use
/// asymptotic expansions of the Mills ratio.
pub(crate) fn log_one_plus_a(t: f64) -> f64 {
    if t > 30.0 {
        // A(t) ≈ t²·√(2π)·φ-free growth; log(1+A) = t²/2 + log t + log√(2π)
        // up to a relative error below 1e-16 at this threshold.
        0.5 * t * t + t.ln() + 0.5 * (2.0 * PI).ln()
    } else if t < -30.0 {
        // 1 + A(t) = t^{-2}·(1 - 3/t² + 15/t⁴ - 105/t⁶ + O(t⁻⁸))
        let inv2 = 1.0 / (t * t);
        let series = inv2 * (-3.0 + inv2 * (15.0 - inv2 * 105.0));
        -2.0 * t.abs().ln() + series.ln_1p()
    } else {
        // A(t) = t·√(π/2)·e^{t²/2}·erfc(-t/√2); every factor stays within
        // f64 range for |t| ≤ 30.
        let a = t * (PI / 2.0).sqrt() * (0.5 * t * t).exp() * erfc(-t / std::f64::consts::SQRT_2);
        a.ln_1p()
    }
}

/// Projected-normal density at angle `y` for mean vector `(gamma_c, gamma_s)`.
pub fn pn_density(gamma_c: f64, gamma_s: f64, y: Angle) -> f64 {
    let t = gamma_c * y.cos() + gamma_s * y.sin();
    let norm2 = gamma_c * gamma_c + gamma_s * gamma_s;
    (-(2.0 * PI).ln() - 0.5 * norm2 + log_one_plus_a(t)).exp()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `β₀ + β₁ x₁ + … + β_d x_d` for a coefficient vector with leading intercept.
fn linear_predictor(beta: &[f64], x: &[f64]) -> f64 {
    beta[0] + dot(&beta[1..], x)
}

/// Log-likelihood of `(x, y)` under a packed parameter vector
/// `[β_c ; β_s]`, using precomputed `(cos y, sin y)` pairs.
fn log_likelihood_packed(params: &[f64], p: usize, x: &Matrix, trig: &[(f64, f64)]) -> f64 {
    let (beta_c, beta_s) = params.split_at(p);
    let ln_2pi = (2.0 * PI).ln();
    let mut ll = 0.0;
    for (i, &(cy, sy)) in trig.iter().enumerate() {
        let row = x.row(i);
        let gc = linear_predictor(beta_c, row);
        let gs = linear_predictor(beta_s, row);
        let t = gc * cy + gs * sy;
        ll += -ln_2pi - 0.5 * (gc * gc + gs * gs) + log_one_plus_a(t);
    }
    ll
}

/// Log-likelihood of a fitted model on a dataset.
pub fn pn_log_likelihood(model: &ProjectedNormalModel, x: &Matrix, y: &[Angle]) -> Result<f64> {
    if x.n_rows() != y.len() {
        return Err(Error::Config(format!(
            "design matrix has {} rows but {} responses were given",
            x.n_rows(),
            y.len()
        )));
    }
    if x.n_cols() != model.n_features() {
        return Err(Error::Config(format!(
            "model expects {} features but the design matrix has {} columns",
            model.n_features(),
            x.n_cols()
        )));
    }
    let p = model.n_features() + 1;
    let params: Vec<f64> = model
        .beta_cos
        .iter()
        .chain(model.beta_sin.iter())
        .copied()
        .collect();
    let trig: Vec<(f64, f64)> = y.iter().map(|a| (a.cos(), a.sin())).collect();
    Ok(log_likelihood_packed(&params, p, x, &trig))
}

/// Point prediction: the direction of the fitted mean vector at `x`.
///
/// A mean vector at the exact origin is perturbed to angle zero with a
/// warning rather than treated as an error, mirroring the per-tree
/// projection rule.
pub fn pn_predict(model: &ProjectedNormalModel, x: &[f64]) -> Angle {
    assert_eq!(
        x.len(),
        model.n_features(),
        "pn_predict called with {} features; model expects {}",
        x.len(),
        model.n_features()
    );
    let gc = linear_predictor(&model.beta_cos, x);
    let gs = linear_predictor(&model.beta_sin, x);
    Angle::new(project_or_perturb(gc, gs))
}

/// Solves `(AᵀA + ridge·I) b = Aᵀz` by Cholesky; `a` is symmetric row-major.
fn cholesky_solve(mut a: Vec<f64>, p: usize, rhs: &[f64]) -> Result<Vec<f64>> {
    // factorize in place: lower triangle of `a` becomes L with A = L Lᵀ
    for j in 0..p {
        for k in 0..j {
            a[j * p + j] -= a[j * p + k] * a[j * p + k];
        }
        if a[j * p + j] <= 0.0 || !a[j * p + j].is_finite() {
            return Err(Error::Numeric(
                "normal equations are not positive definite".to_string(),
            ));
        }
        a[j * p + j] = a[j * p + j].sqrt();
        for i in (j + 1)..p {
            let mut v = a[i * p + j];
            for k in 0..j {
                v -= a[i * p + k] * a[j * p + k];
            }
            a[i * p + j] = v / a[j * p + j];
        }
    }
    // forward solve L w = rhs
    let mut w = rhs.to_vec();
    for i in 0..p {
        for k in 0..i {
            w[i] -= a[i * p + k] * w[k];
        }
        w[i] /= a[i * p + i];
    }
    // back solve Lᵀ b = w
    for i in (0..p).rev() {
        for k in (i + 1)..p {
            w[i] -= a[k * p + i] * w[k];
        }
        w[i] /= a[i * p + i];
    }
    Ok(w)
}

/// Least-squares regressions of `cos y` and `sin y` on `x̃`, used only to
/// seed the likelihood optimizer.  A tiny ridge keeps the normal equations
/// invertible for degenerate designs.
fn least_squares_init(x: &Matrix, trig: &[(f64, f64)], p: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut xtx = vec![0.0; p * p];
    let mut xtc = vec![0.0; p];
    let mut xts = vec![0.0; p];
    let mut xt = vec![0.0; p];
    for (i, &(cy, sy)) in trig.iter().enumerate() {
        xt[0] = 1.0;
        xt[1..p].copy_from_slice(x.row(i));
        for r in 0..p {
            for c in 0..p {
                xtx[r * p + c] += xt[r] * xt[c];
            }
            xtc[r] += xt[r] * cy;
            xts[r] += xt[r] * sy;
        }
    }
    for r in 0..p {
        xtx[r * p + r] += 1e-10;
    }
    let beta_c = cholesky_solve(xtx.clone(), p, &xtc)?;
    let beta_s = cholesky_solve(xtx, p, &xts)?;
    Ok((beta_c, beta_s))
}

/// Ridge-stabilized least-squares fit of a linear variability model
/// `σ̂(x) = b₀ + b·x` to absolute angular residuals.  Returns the packed
/// coefficients `[b₀, b₁, …, b_d]`.  Keeping the scale model in the same
/// family as the linear mean model makes the baseline's arcs adapt at the
/// rate the mean model itself supports, rather than borrowing flexibility
/// from a stronger learner.
pub(crate) fn fit_linear_scale(x: &Matrix, delta: &[f64]) -> Result<Vec<f64>> {
    let n = x.n_rows();
    if n != delta.len() {
        return Err(Error::Config(format!(
            "design matrix has {n} rows but {} residuals were given",
            delta.len()
        )));
    }
    if delta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data(
            "linear scale fit requires finite residuals".to_string(),
        ));
    }
    let p = x.n_cols() + 1;
    let mut xtx = vec![0.0; p * p];
    let mut xtd = vec![0.0; p];
    let mut xt = vec![0.0; p];
    for (i, &d) in delta.iter().enumerate() {
        xt[0] = 1.0;
        xt[1..p].copy_from_slice(x.row(i));
        for r in 0..p {
            for c in 0..p {
                xtx[r * p + c] += xt[r] * xt[c];
            }
            xtd[r] += xt[r] * d;
        }
    }
    for r in 0..p {
        xtx[r * p + r] += 1e-10;
    }
    cholesky_solve(xtx, p, &xtd)
}

/// Fits a projected-normal regression by maximum likelihood with default
/// optimizer settings.
pub fn fit_projected_normal(x: &Matrix, y: &[Angle]) -> Result<ProjectedNormalModel> {
    fit_projected_normal_with(x, y, &OptimOptions::default())
}

/// Fits a projected-normal regression with explicit optimizer options.
///
/// Requires `n > 2(d + 1)` observations so the likelihood has more data
/// points than free parameters.  Failure to converge is reported through the
/// model's `converged` flag (and a warning), not as an error.
pub fn fit_projected_normal_with(
    x: &Matrix,
    y: &[Angle],
    opts: &OptimOptions,
) -> Result<ProjectedNormalModel> {
    let n = x.n_rows();
    let d = x.n_cols();
    let p = d + 1;
    if n != y.len() {
        return Err(Error::Config(format!(
            "design matrix has {n} rows but {} responses were given",
            y.len()
        )));
    }
    if !x.is_finite() {
        return Err(Error::Data(
            "projected-normal fit requires finite covariates".to_string(),
        ));
    }
    if n <= 2 * p {
        return Err(Error::Data(format!(
            "projected-normal fit needs more than {} observations for {d} features; got {n}",
            2 * p
        )));
    }

    // canonical row order: sort by response, then covariates
    // lexicographically, so permuted inputs produce bitwise-identical fits
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        y[a].radians()
            .total_cmp(&y[b].radians())
            .then_with(|| lex_cmp(x.row(a), x.row(b)))
    });
    let xs = x.select_rows(&idx);
    let trig: Vec<(f64, f64)> = idx.iter().map(|&i| (y[i].cos(), y[i].sin())).collect();

    let (init_c, init_s) = least_squares_init(&xs, &trig, p)?;
    let mut params0 = init_c;
    params0.extend_from_slice(&init_s);

    let objective = |params: &[f64]| -log_likelihood_packed(params, p, &xs, &trig);
    let out = minimize(objective, &params0, opts);
    if !out.converged {
        log::warn!(
            "projected-normal likelihood optimizer stopped after {} iterations without converging",
            out.iterations
        );
    }

    let beta_cos = out.x[..p].to_vec();
    let beta_sin = out.x[p..].to_vec();
    Ok(ProjectedNormalModel {
        beta_cos,
        beta_sin,
        converged: out.converged,
        log_likelihood: -out.value,
        iterations: out.iterations,
    })
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (u, v) in a.iter().zip(b) {
        match u.total_cmp(v) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}
