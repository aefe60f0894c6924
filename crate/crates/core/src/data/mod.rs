//! Datasets with angular responses: synthetic generation, splitting, and
//! plain CSV persistence.
//!
//! The synthetic generator draws ten independent U[-1, 1] covariates per
//! unit and a von Mises response centred on a nonlinear function of the
//! first three covariates (see [`synthetic_mean_angle`]); only three of the
//! ten covariates carry signal, the rest are decoys.  All draws for one
//! dataset come from a single seeded stream, so a dataset is a pure function
//! of `(n, kappa, seed)`.

pub mod wind;

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circular::{sample_von_mises_one, Angle, VonMisesParams};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seeding::{derive_seed, domain};

/// Where a dataset came from; carried along through splits and saves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    /// Drawn from the built-in simulator.
    Synthetic { kappa: f64, seed: u64 },
    /// Assembled from a canonical wind-record file.
    Wind { source: String },
    /// Loaded from a dataset CSV written by this crate (or compatible).
    File { source: String },
}

/// A design matrix paired with angular responses.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Vec<Angle>,
    pub feature_names: Vec<String>,
    pub provenance: Provenance,
}

impl Dataset {
    /// Number of observations.
    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Number of covariates.
    pub fn n_features(&self) -> usize {
        self.x.n_cols()
    }

    /// Stacks two datasets with identical feature sets; the receiver's
    /// provenance is kept.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.feature_names != other.feature_names {
            return Err(Error::Config(
                "cannot concatenate datasets with different feature sets".to_string(),
            ));
        }
        let x = self.x.vstack(&other.x)?;
        let mut y = self.y.clone();
        y.extend_from_slice(&other.y);
        Ok(Dataset {
            x,
            y,
            feature_names: self.feature_names.clone(),
            provenance: self.provenance.clone(),
        })
    }

    /// Keeps only the rows at `indices`, in that order.
    pub fn take(&self, indices: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(indices),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            feature_names: self.feature_names.clone(),
            provenance: self.provenance.clone(),
        }
    }
}

/// Conditional mean direction of the simulator:
/// `2·arctan(x₁ − 2x₂ + x₁x₂ − 2x₃²) + π`.
///
/// Only the first three covariates enter; `x` may carry extra columns.
pub fn synthetic_mean_angle(x: &[f64]) -> Angle {
    assert!(x.len() >= 3, "the synthetic mean needs at least 3 covariates");
    let (x1, x2, x3) = (x[0], x[1], x[2]);
    let link = x1 - 2.0 * x2 + x1 * x2 - 2.0 * x3 * x3;
    Angle::new(2.0 * link.atan() + std::f64::consts::PI)
}

/// Number of covariates produced by [`generate_synthetic`].
pub const SYNTHETIC_FEATURES: usize = 10;

/// Draws `n` units from the simulator with von Mises concentration `kappa`.
pub fn generate_synthetic(n: usize, kappa: f64, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Config("cannot generate an empty dataset".to_string()));
    }
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::Config(format!(
            "concentration must be finite and positive; got {kappa}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, domain::SYNTHETIC_DATA, 0));
    let mut data = Vec::with_capacity(n * SYNTHETIC_FEATURES);
    let mut y = Vec::with_capacity(n);
    let mut row = [0.0f64; SYNTHETIC_FEATURES];
    for _ in 0..n {
        for v in row.iter_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        let params = VonMisesParams::new(synthetic_mean_angle(&row), kappa)?;
        y.push(sample_von_mises_one(&params, &mut rng));
        data.extend_from_slice(&row);
    }
    Ok(Dataset {
        x: Matrix::from_vec(n, SYNTHETIC_FEATURES, data)?,
        y,
        feature_names: (1..=SYNTHETIC_FEATURES).map(|i| format!("x{i}")).collect(),
        provenance: Provenance::Synthetic { kappa, seed },
    })
}

/// Sizes of a train/calibration/test split.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub calib: usize,
    pub test: usize,
}

impl SplitSizes {
    pub fn total(&self) -> usize {
        self.train + self.calib + self.test
    }

    /// Splits `n` units into roughly equal thirds (remainders go to train).
    pub fn thirds(n: usize) -> Self {
        let calib = n / 3;
        let test = n / 3;
        SplitSizes {
            train: n - calib - test,
            calib,
            test,
        }
    }
}

/// Randomly partitions a dataset into train/calibration/test pieces.
///
/// Rows are shuffled by a seeded permutation first, so the split is
/// reproducible.  The sizes may sum to less than `n`; leftover rows are
/// dropped.
pub fn split_dataset(
    data: &Dataset,
    sizes: SplitSizes,
    seed: u64,
) -> Result<(Dataset, Dataset, Dataset)> {
    let n = data.n();
    if sizes.total() > n {
        return Err(Error::Config(format!(
            "split sizes {}+{}+{} exceed the {} available rows",
            sizes.train, sizes.calib, sizes.test, n
        )));
    }
    if sizes.train == 0 || sizes.calib == 0 || sizes.test == 0 {
        return Err(Error::Config(
            "each split part needs at least one row".to_string(),
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, domain::SPLIT_SHUFFLE, 0));
    // Fisher-Yates via rand's shuffle
    use rand::seq::SliceRandom;
    order.shuffle(&mut rng);

    let train = data.take(&order[..sizes.train]);
    let calib = data.take(&order[sizes.train..sizes.train + sizes.calib]);
    let test = data.take(&order[sizes.train + sizes.calib..sizes.total()]);
    if sizes.total() < n {
        log::debug!("split dropped {} leftover rows", n - sizes.total());
    }
    Ok((train, calib, test))
}

/// Writes a dataset as CSV with header `y,<feature names…>`.
///
/// Values are printed with Rust's shortest round-trip float formatting, so
/// a save/load cycle reproduces every bit.
pub fn save_dataset_csv<P: AsRef<Path>>(data: &Dataset, path: P) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path.as_ref())?;
    let mut header = vec!["y".to_string()];
    header.extend(data.feature_names.iter().cloned());
    wtr.write_record(&header)?;
    let mut field = String::new();
    for i in 0..data.n() {
        let mut record = Vec::with_capacity(1 + data.n_features());
        field.clear();
        write!(field, "{}", data.y[i].radians()).expect("formatting a float cannot fail");
        record.push(field.clone());
        for v in data.x.row(i) {
            field.clear();
            write!(field, "{v}").expect("formatting a float cannot fail");
            record.push(field.clone());
        }
        wtr.write_record(&record)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a dataset CSV produced by [`save_dataset_csv`] (or any file with a
/// `y` column first and numeric covariates after it).
pub fn load_dataset_csv<P: AsRef<Path>>(path: P) -> Result<Dataset> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)?;
    let header = rdr.headers()?.clone();
    if header.is_empty() || header.get(0) != Some("y") {
        return Err(Error::Data(format!(
            "dataset CSV {} must start with a `y` column",
            path.display()
        )));
    }
    let feature_names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let d = feature_names.len();
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != d + 1 {
            return Err(Error::MalformedRow {
                line,
                message: format!("expected {} fields, found {}", d + 1, record.len()),
            });
        }
        let parse = |field: &str| -> std::result::Result<f64, Error> {
            field.trim().parse::<f64>().map_err(|_| Error::MalformedRow {
                line,
                message: format!("`{field}` is not a number"),
            })
        };
        let raw_y = parse(&record[0])?;
        if !raw_y.is_finite() {
            return Err(Error::MalformedRow {
                line,
                message: format!("response {raw_y} is not finite"),
            });
        }
        y.push(Angle::new(raw_y));
        let mut row = Vec::with_capacity(d);
        for field in record.iter().skip(1) {
            let v = parse(field)?;
            if !v.is_finite() {
                return Err(Error::MalformedRow {
                    line,
                    message: format!("covariate {v} is not finite"),
                });
            }
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Data(format!(
            "dataset CSV {} contains no data rows",
            path.display()
        )));
    }
    Ok(Dataset {
        x: Matrix::from_rows(rows)?,
        y,
        feature_names,
        provenance: Provenance::File {
            source: path.display().to_string(),
        },
    })
}
