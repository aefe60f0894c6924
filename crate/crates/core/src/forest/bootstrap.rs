//! Bootstrap resampling plans and the out-of-bag index derived from them.
//!
//! A [`BootstrapPlan`] fixes, ahead of any training, which units each tree
//! resamples.  Several forests trained on the *same* plan share tree-by-tree
//! bootstrap samples, which is what couples the component forests of a
//! projected model.  Row `j` is generated from its own seeded stream, so the
//! plan for `B` trees is a prefix of the plan for `B' > B` trees with the
//! same seed.

use crate::error::{Error, Result};
use crate::seeding::{self, domain};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// How a plan's rows were obtained; used to rebuild the plan when a
/// serialized forest is loaded.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanSource {
    /// Rows generated deterministically from a seed.
    Seeded { seed: u64 },
    /// Rows supplied directly (tests, custom resampling schemes).
    Explicit,
}

/// A fixed bootstrap design: `b` rows, each a multiset of `n` unit indices
/// drawn uniformly with replacement from `{0, …, n−1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BootstrapPlan {
    n: usize,
    b: usize,
    source: PlanSource,
    rows: Vec<Vec<u32>>,
}

impl BootstrapPlan {
    /// Generates a plan of `b` bootstrap rows over `n` units from `seed`.
    pub fn new(n: usize, b: usize, seed: u64) -> Result<Self> {
        if n == 0 || n > u32::MAX as usize {
            return Err(Error::Config(format!(
                "bootstrap plan needs 1 ≤ n ≤ {}, got {n}",
                u32::MAX
            )));
        }
        if b == 0 {
            return Err(Error::Config("bootstrap plan needs at least one row".into()));
        }
        let rows = (0..b)
            .map(|j| {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(seeding::derive_seed(seed, domain::BOOTSTRAP_ROW, j as u64));
                (0..n).map(|_| rng.random_range(0..n as u32)).collect()
            })
            .collect();
        Ok(Self {
            n,
            b,
            source: PlanSource::Seeded { seed },
            rows,
        })
    }

    /// Builds a plan from explicit rows.  Every row must contain exactly
    /// `n` indices, each below `n`.  Intended for tests and for resampling
    /// schemes constructed elsewhere.
    pub fn from_rows(n: usize, rows: Vec<Vec<u32>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("bootstrap plan needs at least one unit".into()));
        }
        if rows.is_empty() {
            return Err(Error::Config("bootstrap plan needs at least one row".into()));
        }
        for (j, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Config(format!(
                    "bootstrap row {} has {} entries, expected {}",
                    j,
                    row.len(),
                    n
                )));
            }
            if let Some(&bad) = row.iter().find(|&&u| u as usize >= n) {
                return Err(Error::Config(format!(
                    "bootstrap row {j} references unit {bad}, but the plan covers {n} units"
                )));
            }
        }
        let b = rows.len();
        Ok(Self {
            n,
            b,
            source: PlanSource::Explicit,
            rows,
        })
    }

    /// Number of training units the plan covers.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of bootstrap rows (trees).
    pub fn b(&self) -> usize {
        self.b
    }

    pub fn source(&self) -> &PlanSource {
        &self.source
    }

    /// Row `j`: the multiset of unit indices tree `j` trains on.
    pub fn row(&self, j: usize) -> &[u32] {
        &self.rows[j]
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }
}

/// Generates a bootstrap plan; convenience wrapper over
/// [`BootstrapPlan::new`].
pub fn plan_bootstrap(n: usize, b: usize, seed: u64) -> Result<BootstrapPlan> {
    BootstrapPlan::new(n, b, seed)
}

/// For each training unit `i`, the list of trees whose bootstrap row does
/// *not* contain `i` — the trees for which `i` is out-of-bag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OobIndex {
    per_unit: Vec<Vec<u32>>,
}

impl OobIndex {
    /// Inverts a plan into its out-of-bag index.
    pub fn from_plan(plan: &BootstrapPlan) -> Self {
        let n = plan.n();
        let mut present = vec![false; n];
        let mut per_unit: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (j, row) in plan.rows().iter().enumerate() {
            present.iter_mut().for_each(|p| *p = false);
            for &u in row {
                present[u as usize] = true;
            }
            for (u, &p) in present.iter().enumerate() {
                if !p {
                    per_unit[u].push(j as u32);
                }
            }
        }
        Self { per_unit }
    }

    /// Trees for which `unit` is out-of-bag, in increasing tree order.
    pub fn oob_trees(&self, unit: usize) -> &[u32] {
        &self.per_unit[unit]
    }

    pub fn n_units(&self) -> usize {
        self.per_unit.len()
    }

    /// True when `unit` appears in every bootstrap row.
    pub fn is_empty(&self, unit: usize) -> bool {
        self.per_unit[unit].is_empty()
    }
}
