//! Random forests for scalar regression, built on shared bootstrap plans.
//!
//! Training is deterministic: every tree draws its feature subsets from its
//! own seeded stream and its bootstrap row from the plan, so the trained
//! forest is bit-identical regardless of how many threads participate.

mod bootstrap;
mod tree;

pub use bootstrap::{plan_bootstrap, BootstrapPlan, OobIndex, PlanSource};
pub use tree::{Node, RegressionTree};

pub(crate) use tree::{grow_tree, presort_columns, GrowParams};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seeding::{self, domain};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;

/// Forest hyperparameters.
///
/// `mtry = None` resolves to `⌈d/3⌉` (the regression default) at training
/// time; `max_depth = None` grows unrestricted trees.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub mtry: Option<usize>,
    pub min_node_size: usize,
    pub max_depth: Option<u32>,
    /// Root seed of the per-tree feature-sampling streams.
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            mtry: None,
            min_node_size: 5,
            max_depth: None,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub(crate) fn resolve_mtry(&self, d: usize) -> usize {
        self.mtry.unwrap_or_else(|| d.div_ceil(3))
    }
}

/// A trained regression forest together with the bootstrap design it was
/// grown on.
#[derive(Clone, Debug)]
pub struct Forest {
    trees: Vec<RegressionTree>,
    plan: Arc<BootstrapPlan>,
    oob: Arc<OobIndex>,
    config: ForestConfig,
    n_features: usize,
}

impl Forest {
    /// Trains a forest of `plan.b()` trees on `(x, y)`.
    ///
    /// Builds the out-of-bag index internally; use [`Forest::train_shared`]
    /// when several forests reuse the same plan.
    pub fn train(x: &Matrix, y: &[f64], plan: Arc<BootstrapPlan>, config: &ForestConfig) -> Result<Self> {
        let oob = Arc::new(OobIndex::from_plan(&plan));
        Self::train_shared(x, y, plan, oob, config)
    }

    /// Trains a forest reusing an already-computed out-of-bag index.
    pub fn train_shared(
        x: &Matrix,
        y: &[f64],
        plan: Arc<BootstrapPlan>,
        oob: Arc<OobIndex>,
        config: &ForestConfig,
    ) -> Result<Self> {
        let n = x.n_rows();
        let d = x.n_cols();
        if n == 0 || d == 0 {
            return Err(Error::Data("forest training needs a non-empty matrix".into()));
        }
        if y.len() != n {
            return Err(Error::Data(format!(
                "response length {} does not match {} rows",
                y.len(),
                n
            )));
        }
        if plan.n() != n {
            return Err(Error::Config(format!(
                "bootstrap plan covers {} units but the data has {} rows",
                plan.n(),
                n
            )));
        }
        if oob.n_units() != n {
            return Err(Error::Config("out-of-bag index does not match the plan".into()));
        }
        if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("forest training requires finite covariates and responses".into()));
        }
        let mtry = config.resolve_mtry(d);
        if mtry == 0 || mtry > d {
            return Err(Error::Config(format!(
                "mtry must be in 1..={d}, got {mtry}"
            )));
        }
        if config.min_node_size == 0 {
            return Err(Error::Config("min_node_size must be at least 1".into()));
        }

        let columns = x.columns();
        let order = presort_columns(&columns);
        let params = GrowParams {
            mtry,
            min_node_size: config.min_node_size as f64,
            max_depth: config.max_depth,
        };

        let trees: Vec<RegressionTree> = (0..plan.b())
            .into_par_iter()
            .map(|j| {
                let mut counts = vec![0u32; n];
                for &u in plan.row(j) {
                    counts[u as usize] += 1;
                }
                let seed = seeding::derive_seed(config.seed, domain::TREE_FEATURES, j as u64);
                grow_tree(&columns, y, &counts, &order, &params, seed)
            })
            .collect();

        Ok(Self {
            trees,
            plan,
            oob,
            config: *config,
            n_features: d,
        })
    }

    /// Mean prediction over all trees.
    pub fn predict(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n_features);
        let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        sum / self.trees.len() as f64
    }

    /// Per-tree predictions for the given subset of tree indices, in the
    /// order of `subset`.
    pub fn predict_trees(&self, subset: &[u32], x: &[f64]) -> Vec<f64> {
        subset
            .iter()
            .map(|&j| self.trees[j as usize].predict(x))
            .collect()
    }

    /// Trees for which `unit` is out-of-bag.
    pub fn oob_trees(&self, unit: usize) -> &[u32] {
        self.oob.oob_trees(unit)
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    pub fn plan(&self) -> &Arc<BootstrapPlan> {
        &self.plan
    }

    pub fn oob(&self) -> &Arc<OobIndex> {
        &self.oob
    }

    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    /// Serializes the forest to versioned JSON.  Seeded plans are stored as
    /// `(n, b, seed)` and regenerated on load; explicit plans store their
    /// rows verbatim.
    pub fn to_json(&self) -> Result<String> {
        let plan_rows = match self.plan.source() {
            PlanSource::Seeded { .. } => None,
            PlanSource::Explicit => Some(self.plan.rows().to_vec()),
        };
        let seed = match self.plan.source() {
            PlanSource::Seeded { seed } => Some(*seed),
            PlanSource::Explicit => None,
        };
        let repr = SerializedForest {
            format_version: FOREST_FORMAT_VERSION,
            n_features: self.n_features,
            config: self.config,
            plan_n: self.plan.n(),
            plan_b: self.plan.b(),
            plan_seed: seed,
            plan_rows,
            trees: self.trees.clone(),
        };
        Ok(serde_json::to_string(&repr)?)
    }

    /// Restores a forest serialized by [`Forest::to_json`], rebuilding the
    /// bootstrap plan and out-of-bag index.
    pub fn from_json(text: &str) -> Result<Self> {
        let repr: SerializedForest = serde_json::from_str(text)?;
        if repr.format_version != FOREST_FORMAT_VERSION {
            return Err(Error::Data(format!(
                "unsupported forest format version {} (expected {})",
                repr.format_version, FOREST_FORMAT_VERSION
            )));
        }
        let plan = match (repr.plan_seed, repr.plan_rows) {
            (Some(seed), None) => BootstrapPlan::new(repr.plan_n, repr.plan_b, seed)?,
            (None, Some(rows)) => BootstrapPlan::from_rows(repr.plan_n, rows)?,
            _ => {
                return Err(Error::Data(
                    "forest file must store either a plan seed or explicit rows".into(),
                ))
            }
        };
        if repr.trees.len() != plan.b() {
            return Err(Error::Data(format!(
                "forest file stores {} trees but the plan has {} rows",
                repr.trees.len(),
                plan.b()
            )));
        }
        let oob = Arc::new(OobIndex::from_plan(&plan));
        Ok(Self {
            trees: repr.trees,
            plan: Arc::new(plan),
            oob,
            config: repr.config,
            n_features: repr.n_features,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Test-support constructor: a forest whose tree `j` predicts the
    /// constant `values[j]` everywhere.
    #[cfg(test)]
    pub(crate) fn from_constant_trees(
        values: &[f64],
        plan: Arc<BootstrapPlan>,
        n_features: usize,
    ) -> Self {
        assert_eq!(values.len(), plan.b());
        let trees = values
            .iter()
            .map(|&value| RegressionTree::from_nodes(vec![Node::Leaf { value }]))
            .collect();
        let oob = Arc::new(OobIndex::from_plan(&plan));
        Self {
            trees,
            plan,
            oob,
            config: ForestConfig::default(),
            n_features,
        }
    }
}

const FOREST_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct SerializedForest {
    format_version: u32,
    n_features: usize,
    config: ForestConfig,
    plan_n: usize,
    plan_b: usize,
    plan_seed: Option<u64>,
    plan_rows: Option<Vec<Vec<u32>>>,
    trees: Vec<RegressionTree>,
}

/// Trains a forest on `(x, y)` under the given plan; free-function form of
/// [`Forest::train`].
pub fn train_forest(
    x: &Matrix,
    y: &[f64],
    plan: Arc<BootstrapPlan>,
    config: &ForestConfig,
) -> Result<Forest> {
    Forest::train(x, y, plan, config)
}
