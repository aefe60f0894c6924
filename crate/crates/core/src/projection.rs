//! Projected forests: angular prediction via a pair of linear-response
//! forests.
//!
//! A circular response `y` is lifted to the plane as `(cos y, sin y)`; two
//! forests are trained on the component responses under one shared bootstrap
//! plan, and predictions are projected back to the circle with
//! [`atan_project`].  Aggregation over trees happens *after* projection:
//! each tree contributes its own projected angle and the angles are averaged
//! arithmetically.  (Averaging the plane components first and projecting
//! once is available as an opt-in alternative, but all defaults and reported
//! results use the arithmetic mean.)

use crate::circular::{atan_project, Angle};
use crate::error::{Error, Result};
use crate::forest::{BootstrapPlan, Forest, ForestConfig, OobIndex};
use crate::matrix::Matrix;
use serde::{Deserialize, Serialize};

/// How per-tree component predictions are combined into one angle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum AngleAggregation {
    /// Project each tree's `(cos, sin)` pair to an angle in `[0, 2π)`, then
    /// take the arithmetic mean of the angles.
    #[default]
    ArithmeticMean,
    /// Average the `cos` and `sin` component predictions across trees, then
    /// project the mean vector once (the circular mean).
    ComponentMean,
}

impl std::str::FromStr for AngleAggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "arithmetic" | "arithmetic-mean" => Ok(AngleAggregation::ArithmeticMean),
            "component" | "component-mean" => Ok(AngleAggregation::ComponentMean),
            other => Err(Error::Config(format!(
                "unknown aggregation `{other}`; expected `arithmetic` or `component`"
            ))),
        }
    }
}

/// Projects a `(cos, sin)` pair, substituting a fixed direction when both
/// components vanish exactly.
///
/// An all-zero pair can only arise from degenerate leaf configurations; the
/// event has measure zero under continuous responses, so it is logged and
/// perturbed to the positive x-axis rather than propagated as an error.
pub(crate) fn project_or_perturb(c: f64, s: f64) -> f64 {
    match atan_project(c, s) {
        Ok(a) => a.radians(),
        Err(_) => {
            log::warn!("zero (cos, sin) pair perturbed to ({}, 0)", f64::EPSILON);
            0.0
        }
    }
}

/// A pair of component forests predicting a circular response.
#[derive(Clone, Debug)]
pub struct ProjectedForest {
    cos_model: Forest,
    sin_model: Forest,
    aggregation: AngleAggregation,
}

impl ProjectedForest {
    /// Trains the cosine and sine forests on one shared bootstrap plan.
    ///
    /// `cos_seed` and `sin_seed` are the feature-sampling seeds of the two
    /// component forests; everything else comes from `config`.
    pub fn train(
        x: &Matrix,
        y: &[Angle],
        plan: std::sync::Arc<BootstrapPlan>,
        oob: std::sync::Arc<OobIndex>,
        config: &ForestConfig,
        cos_seed: u64,
        sin_seed: u64,
        aggregation: AngleAggregation,
    ) -> Result<Self> {
        let cos_y: Vec<f64> = y.iter().map(|a| a.cos()).collect();
        let sin_y: Vec<f64> = y.iter().map(|a| a.sin()).collect();
        let cos_cfg = ForestConfig {
            seed: cos_seed,
            ..*config
        };
        let sin_cfg = ForestConfig {
            seed: sin_seed,
            ..*config
        };
        let cos_model =
            Forest::train_shared(x, &cos_y, std::sync::Arc::clone(&plan), std::sync::Arc::clone(&oob), &cos_cfg)?;
        let sin_model = Forest::train_shared(x, &sin_y, plan, oob, &sin_cfg)?;
        Ok(Self {
            cos_model,
            sin_model,
            aggregation,
        })
    }

    /// Predicted angle from the *forest-level* component predictions: both
    /// component forests are aggregated to plane coordinates first and the
    /// mean vector is projected once.
    ///
    /// Errors if both aggregated components are exactly zero.
    pub fn predict_angle(&self, x: &[f64]) -> Result<Angle> {
        let c = self.cos_model.predict(x);
        let s = self.sin_model.predict(x);
        atan_project(c, s)
    }

    /// Out-of-bag angular prediction for training unit `unit` at its own
    /// covariates `x`: aggregates the trees for which the unit was not
    /// resampled.  Errors if the unit has no out-of-bag trees.
    pub fn predict_angle_oob(&self, unit: usize, x: &[f64]) -> Result<Angle> {
        let subset = self.cos_model.oob_trees(unit);
        if subset.is_empty() {
            return Err(Error::Data(format!(
                "unit {unit} appears in every bootstrap row and has no out-of-bag trees"
            )));
        }
        Ok(self.aggregate_subset(subset, x))
    }

    /// Angular prediction for a new point aggregated over all trees.
    pub fn predict_angle_fullbag(&self, x: &[f64]) -> Angle {
        let all: Vec<u32> = (0..self.cos_model.n_trees() as u32).collect();
        self.aggregate_subset(&all, x)
    }

    /// Per-tree projected angles (radians in `[0, 2π)`) for a subset of
    /// trees.
    pub fn project_trees(&self, subset: &[u32], x: &[f64]) -> Vec<f64> {
        let cs = self.cos_model.predict_trees(subset, x);
        let ss = self.sin_model.predict_trees(subset, x);
        cs.into_iter()
            .zip(ss)
            .map(|(c, s)| project_or_perturb(c, s))
            .collect()
    }

    fn aggregate_subset(&self, subset: &[u32], x: &[f64]) -> Angle {
        match self.aggregation {
            AngleAggregation::ArithmeticMean => {
                let angles = self.project_trees(subset, x);
                let mean = angles.iter().sum::<f64>() / angles.len() as f64;
                Angle::new(mean)
            }
            AngleAggregation::ComponentMean => {
                let cs = self.cos_model.predict_trees(subset, x);
                let ss = self.sin_model.predict_trees(subset, x);
                let mc = cs.iter().sum::<f64>() / cs.len() as f64;
                let ms = ss.iter().sum::<f64>() / ss.len() as f64;
                Angle::new(project_or_perturb(mc, ms))
            }
        }
    }

    pub fn cos_model(&self) -> &Forest {
        &self.cos_model
    }

    pub fn sin_model(&self) -> &Forest {
        &self.sin_model
    }

    pub fn aggregation(&self) -> AngleAggregation {
        self.aggregation
    }

    pub fn n_trees(&self) -> usize {
        self.cos_model.n_trees()
    }

    /// Trees for which `unit` is out-of-bag (shared by both components).
    pub fn oob_trees(&self, unit: usize) -> &[u32] {
        self.cos_model.oob_trees(unit)
    }

    #[cfg(test)]
    pub(crate) fn from_parts(
        cos_model: Forest,
        sin_model: Forest,
        aggregation: AngleAggregation,
    ) -> Self {
        Self {
            cos_model,
            sin_model,
            aggregation,
        }
    }
}

/// Trains a projected forest; free-function form of
/// [`ProjectedForest::train`] with both component seeds derived from
/// `config.seed`.
pub fn train_projected(
    x: &Matrix,
    y: &[Angle],
    plan: std::sync::Arc<BootstrapPlan>,
    config: &ForestConfig,
    aggregation: AngleAggregation,
) -> Result<ProjectedForest> {
    use crate::seeding::{derive_seed, domain};
    let oob = std::sync::Arc::new(OobIndex::from_plan(&plan));
    let cos_seed = derive_seed(config.seed, domain::MU_COS, 0);
    let sin_seed = derive_seed(config.seed, domain::MU_SIN, 0);
    ProjectedForest::train(x, y, plan, oob, config, cos_seed, sin_seed, aggregation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circular::angular_distance;
    use crate::forest::BootstrapPlan;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};
    use std::sync::Arc;

    fn constant_pair(
        cos_values: &[f64],
        sin_values: &[f64],
        rows: Vec<Vec<u32>>,
        n: usize,
        aggregation: AngleAggregation,
    ) -> ProjectedForest {
        let plan = Arc::new(BootstrapPlan::from_rows(n, rows).unwrap());
        let cos_model = Forest::from_constant_trees(cos_values, Arc::clone(&plan), 1);
        let sin_model = Forest::from_constant_trees(sin_values, plan, 1);
        ProjectedForest::from_parts(cos_model, sin_model, aggregation)
    }

    #[test]
    fn predict_angle_composes_the_projection() {
        // constant component forests: (0, 1) → π/2
        let pf = constant_pair(&[0.0], &[1.0], vec![vec![0, 0]], 2, AngleAggregation::ArithmeticMean);
        let a = pf.predict_angle(&[0.0]).unwrap();
        assert!((a.radians() - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn predict_angle_surfaces_the_origin_error() {
        let pf = constant_pair(&[0.0], &[0.0], vec![vec![0, 0]], 2, AngleAggregation::ArithmeticMean);
        assert!(matches!(pf.predict_angle(&[0.0]), Err(Error::Numeric(_))));
        // the per-tree path perturbs instead of failing
        assert_eq!(pf.predict_angle_fullbag(&[0.0]).radians(), 0.0);
    }

    #[test]
    fn oob_arithmetic_mean_of_two_opposite_trees() {
        // unit 0 is out-of-bag for both trees; tree angles are π/2 and 3π/2,
        // whose arithmetic mean is π (the component mean would be undefined)
        let pf = constant_pair(
            &[0.0, 0.0],
            &[1.0, -1.0],
            vec![vec![1, 1], vec![1, 1]],
            2,
            AngleAggregation::ArithmeticMean,
        );
        let a = pf.predict_angle_oob(0, &[0.0]).unwrap();
        assert!((a.radians() - PI).abs() < 1e-15);
    }

    #[test]
    fn oob_with_a_single_tree_returns_that_trees_angle() {
        let pf = constant_pair(
            &[0.5, -0.25],
            &[0.5, 0.0],
            vec![vec![1, 1], vec![0, 0]],
            2,
            AngleAggregation::ArithmeticMean,
        );
        // unit 0 is OOB only for tree 0: angle = atan(0.5, 0.5) = π/4
        let a = pf.predict_angle_oob(0, &[0.0]).unwrap();
        assert!((a.radians() - PI / 4.0).abs() < 1e-15);
        // unit 1 is OOB only for tree 1: angle = atan(-0.25, 0) = π
        let b = pf.predict_angle_oob(1, &[0.0]).unwrap();
        assert!((b.radians() - PI).abs() < 1e-15);
    }

    #[test]
    fn fullbag_equals_oob_when_every_tree_is_oob() {
        let pf = constant_pair(
            &[0.3, 0.1, -0.2],
            &[0.4, 0.9, 0.5],
            vec![vec![1, 1], vec![1, 1], vec![1, 1]],
            2,
            AngleAggregation::ArithmeticMean,
        );
        let oob = pf.predict_angle_oob(0, &[0.0]).unwrap();
        let full = pf.predict_angle_fullbag(&[0.0]);
        assert_eq!(oob.radians().to_bits(), full.radians().to_bits());
    }

    #[test]
    fn empty_oob_subset_is_an_error() {
        let pf = constant_pair(&[1.0], &[0.0], vec![vec![0, 1]], 2, AngleAggregation::ArithmeticMean);
        assert!(pf.predict_angle_oob(0, &[0.0]).is_err());
        assert!(pf.predict_angle_oob(1, &[0.0]).is_err());
    }

    #[test]
    fn component_mean_projects_the_mean_vector() {
        let pf = constant_pair(
            &[1.0, 0.0],
            &[0.0, 1.0],
            vec![vec![1, 1], vec![1, 1]],
            2,
            AngleAggregation::ComponentMean,
        );
        // mean vector (0.5, 0.5) → π/4
        let a = pf.predict_angle_oob(0, &[0.0]).unwrap();
        assert!((a.radians() - PI / 4.0).abs() < 1e-15);
    }

    fn train_fixture(aggregation: AngleAggregation) -> (Matrix, Vec<Angle>, ProjectedForest) {
        let n = 300;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let x = Matrix::from_vec(
            n,
            3,
            (0..n * 3).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let y: Vec<Angle> = (0..n)
            .map(|i| Angle::new(2.0 * x.get(i, 0) + 0.2 * rng.random_range(-1.0..1.0) + 3.0))
            .collect();
        let plan = Arc::new(BootstrapPlan::new(n, 40, 5).unwrap());
        let pf = train_projected(&x, &y, plan, &ForestConfig::default(), aggregation).unwrap();
        (x, y, pf)
    }

    #[test]
    fn trained_projection_tracks_the_signal() {
        let (x, y, pf) = train_fixture(AngleAggregation::ArithmeticMean);
        let mut total = 0.0;
        for i in 0..60 {
            let pred = pf.predict_angle_fullbag(x.row(i));
            total += angular_distance(pred, y[i]);
        }
        // responses span about 4 radians; a useful fit stays well below the
        // ~π/2 error of a constant predictor
        assert!(total / 60.0 < 0.5, "mean error {}", total / 60.0);
    }

    #[test]
    fn per_tree_projections_stay_in_range() {
        let (x, _, pf) = train_fixture(AngleAggregation::ArithmeticMean);
        let all: Vec<u32> = (0..pf.n_trees() as u32).collect();
        for i in 0..10 {
            for a in pf.project_trees(&all, x.row(i)) {
                assert!((0.0..TAU).contains(&a));
            }
        }
    }

    #[test]
    fn oob_prediction_ignores_in_bag_trees() {
        let (x, _, pf) = train_fixture(AngleAggregation::ArithmeticMean);
        for unit in [0usize, 7, 19] {
            let oob = pf.oob_trees(unit);
            assert!(!oob.is_empty());
            let expected: f64 = pf
                .project_trees(oob, x.row(unit))
                .iter()
                .sum::<f64>()
                / oob.len() as f64;
            let got = pf.predict_angle_oob(unit, x.row(unit)).unwrap();
            assert_eq!(got.radians().to_bits(), Angle::new(expected).radians().to_bits());
        }
    }

    #[test]
    fn swapping_components_reflects_the_angle() {
        // atan(s, c) = π/2 − atan(c, s) mod 2π, so swapping the component
        // forests reflects predictions about the diagonal
        let (x, y, pf) = train_fixture(AngleAggregation::ComponentMean);
        let swapped = ProjectedForest::from_parts(
            pf.sin_model().clone(),
            pf.cos_model().clone(),
            AngleAggregation::ComponentMean,
        );
        let _ = y;
        for i in 0..20 {
            let a = pf.predict_angle(x.row(i)).unwrap();
            let b = swapped.predict_angle(x.row(i)).unwrap();
            let reflected = Angle::new(FRAC_PI_2 - a.radians());
            assert!(angular_distance(b, reflected) < 1e-12);
        }
    }

    #[test]
    fn both_components_share_the_bootstrap_plan() {
        let (_, _, pf) = train_fixture(AngleAggregation::ArithmeticMean);
        assert!(Arc::ptr_eq(pf.cos_model().plan(), pf.sin_model().plan()));
        for unit in 0..10 {
            assert_eq!(
                pf.cos_model().oob_trees(unit),
                pf.sin_model().oob_trees(unit)
            );
        }
    }

    #[test]
    fn constant_angular_response_is_reproduced() {
        let n = 100;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x = Matrix::from_vec(n, 2, (0..n * 2).map(|_| rng.random_range(-1.0..1.0)).collect())
            .unwrap();
        let alpha = Angle::new(2.4);
        let y = vec![alpha; n];
        let plan = Arc::new(BootstrapPlan::new(n, 30, 3).unwrap());
        let pf = train_projected(&x, &y, plan, &ForestConfig::default(), AngleAggregation::ArithmeticMean)
            .unwrap();
        for i in 0..10 {
            let full = pf.predict_angle_fullbag(x.row(i));
            assert!(angular_distance(full, alpha) < 1e-12);
            let plain = pf.predict_angle(x.row(i)).unwrap();
            assert!(angular_distance(plain, alpha) < 1e-12);
            let oob = pf.predict_angle_oob(i, x.row(i)).unwrap();
            assert!(angular_distance(oob, alpha) < 1e-12);
        }
    }
}
