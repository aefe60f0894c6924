//! Idealized out-of-bag conformity scores under the *exhaustive* bootstrap.
//!
//! Instead of sampling `B` bootstrap rows, this oracle enumerates all
//! `(n+1)^(n+1)` possible rows over an extended sample of `n+1` units and
//! trains one regression stump per row.  Unit `i`'s idealized out-of-bag
//! set `Õ_i` consists of every row that does not mention `i` — exactly
//! `n^(n+1)` of them — and its score is `R̃_i = |y_i − mean of the Õ_i
//! predictions|` (the response is linear here, not angular).
//!
//! Two details make the construction exchangeable, which is what the
//! finite-sample guarantee rests on:
//!
//! * each row's tree draws its feature stream from a hash of the row's
//!   *multiset* of units, so relabeling units relabels trees;
//! * per-unit prediction sums are accumulated in sorted order, so the
//!   scores are invariant (bit-for-bit) under unit relabeling.
//!
//! The row count grows as `(n+1)^(n+1)`; inputs with more than 6 units
//! (`n > 5`) are refused.

use crate::error::{Error, Result};
use crate::forest::ForestConfig;
use crate::forest::{grow_tree, presort_columns, GrowParams};
use crate::matrix::Matrix;
use crate::seeding::multiset_hash;

/// Scores and bookkeeping from the exhaustive-bootstrap oracle.
#[derive(Clone, Debug)]
pub struct IdealizedOob {
    /// Idealized conformity score of every unit, in input order.
    pub scores: Vec<f64>,
    /// `|Õ_i|` for every unit (all equal to `n^(n+1)`).
    pub oob_counts: Vec<u64>,
    /// Total number of enumerated rows, `(n+1)^(n+1)`.
    pub total_rows: u64,
}

/// Runs the exhaustive-bootstrap oracle on an extended sample of `n+1`
/// units (the last unit plays the role of the held-out point, but all
/// units are treated symmetrically).
///
/// `config.min_node_size`, `config.mtry` and `config.max_depth` control
/// the per-row trees; the defaults of a regression stump are
/// `min_node_size = 1`, `mtry = 1`, `max_depth = 1`.  `config.seed` is
/// ignored: tree randomness is a function of the row multiset.
pub fn idealized_oob_scores(x: &Matrix, y: &[f64], config: &ForestConfig) -> Result<IdealizedOob> {
    let m = x.n_rows(); // m = n + 1 units
    if m != y.len() {
        return Err(Error::Data(format!(
            "covariates ({} rows) and responses ({}) differ in length",
            m,
            y.len()
        )));
    }
    if m < 2 {
        return Err(Error::Data(
            "the exhaustive bootstrap needs at least two units".into(),
        ));
    }
    if m > 6 {
        return Err(Error::Config(format!(
            "the exhaustive bootstrap enumerates (n+1)^(n+1) rows; refusing n+1 = {m} > 6 units"
        )));
    }
    if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("idealized scores require finite inputs".into()));
    }
    let d = x.n_cols();
    let mtry = config.resolve_mtry(d);
    if mtry == 0 || mtry > d {
        return Err(Error::Config(format!("mtry must be in 1..={d}, got {mtry}")));
    }
    let params = GrowParams {
        mtry,
        min_node_size: config.min_node_size as f64,
        max_depth: config.max_depth,
    };

    let columns = x.columns();
    let order = presort_columns(&columns);

    let total_rows = (m as u64).pow(m as u32);
    // per-unit out-of-bag predictions, summed in sorted order at the end
    let mut oob_preds: Vec<Vec<f64>> = vec![Vec::new(); m];

    // enumerate rows in lexicographic order via an odometer over base-m
    // digits (rightmost digit fastest)
    let mut digits = vec![0usize; m];
    let mut counts = vec![0u32; m];
    loop {
        counts.iter_mut().for_each(|c| *c = 0);
        for &u in &digits {
            counts[u] += 1;
        }
        let seed = multiset_hash(&counts);
        let tree = grow_tree(&columns, y, &counts, &order, &params, seed);
        for (u, &c) in counts.iter().enumerate() {
            if c == 0 {
                oob_preds[u].push(tree.predict(x.row(u)));
            }
        }

        // advance the odometer
        let mut pos = m;
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < m {
                break;
            }
            digits[pos] = 0;
        }
        if digits.iter().all(|&dg| dg == 0) {
            break;
        }
    }

    let mut scores = Vec::with_capacity(m);
    let mut oob_counts = Vec::with_capacity(m);
    for (u, preds) in oob_preds.iter_mut().enumerate() {
        // sorted summation makes the mean independent of enumeration order,
        // hence exactly symmetric under unit relabeling
        preds.sort_unstable_by(f64::total_cmp);
        let mean = preds.iter().sum::<f64>() / preds.len() as f64;
        scores.push((y[u] - mean).abs());
        oob_counts.push(preds.len() as u64);
    }

    Ok(IdealizedOob {
        scores,
        oob_counts,
        total_rows,
    })
}

/// Stump defaults used by the idealized oracle experiments.
pub fn stump_config() -> ForestConfig {
    ForestConfig {
        mtry: Some(1),
        min_node_size: 1,
        max_depth: Some(1),
        seed: 0,
    }
}
