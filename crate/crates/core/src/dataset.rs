//! Labeled numeric datasets, synthetic class blobs, unit-ball normalization
//! and the four-way split used by the attack protocol.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::numkit::{l2_norm, standard_normal, Matrix, Rng};
use crate::{Error, Result};

/// Smallest dataset [`make_split`] accepts.
pub const MIN_SPLIT_ROWS: usize = 8;

/// Labeled examples with per-feature `(min, max)` bounds.
///
/// Bounds always contain every stored value. Datasets are immutable once
/// built; subsets and normalized copies are new values.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    features: Matrix,
    labels: Vec<usize>,
    class_count: usize,
    feature_bounds: Vec<(f64, f64)>,
    row_scale: f64,
}

impl Dataset {
    /// Builds a dataset whose bounds are the observed per-column range.
    pub fn new(
        name: impl Into<String>,
        features: Matrix,
        labels: Vec<usize>,
        class_count: usize,
    ) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::shape(
                "dataset",
                format!("{} feature rows but {} labels", features.rows(), labels.len()),
            ));
        }
        if class_count < 2 {
            return Err(Error::param("class_count", "need at least two classes"));
        }
        if let Some((row, &y)) = labels.iter().enumerate().find(|(_, &y)| y >= class_count) {
            return Err(Error::param(
                "labels",
                format!("row {row} has label {y}, class_count is {class_count}"),
            ));
        }
        let feature_bounds = observed_bounds(&features);
        Ok(Dataset {
            name: name.into(),
            features,
            labels,
            class_count,
            feature_bounds,
            row_scale: 1.0,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn feature_bounds(&self) -> &[(f64, f64)] {
        &self.feature_bounds
    }

    /// Product of every row-normalization factor applied so far.
    pub fn row_scale(&self) -> f64 {
        self.row_scale
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// Value range of feature `j`.
    pub fn sensitivity(&self, j: usize) -> f64 {
        let (lo, hi) = self.feature_bounds[j];
        hi - lo
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = alloc::vec![0; self.class_count];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// Rows at `indices`, in order. Bounds are recomputed from the selected
    /// rows, so a training subset never carries ranges observed elsewhere.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let features = self.features.select_rows(indices);
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        let feature_bounds = if indices.is_empty() {
            self.feature_bounds.clone()
        } else {
            observed_bounds(&features)
        };
        Dataset {
            name: self.name.clone(),
            features,
            labels,
            class_count: self.class_count,
            feature_bounds,
            row_scale: self.row_scale,
        }
    }

    /// Same labels and bounds, new feature values. Used by input perturbation,
    /// which clips to the existing bounds before calling this.
    pub(crate) fn with_features(&self, features: Matrix) -> Dataset {
        debug_assert_eq!(features.rows(), self.len());
        Dataset {
            features,
            ..self.clone()
        }
    }

    /// Largest row L2 norm.
    pub fn max_row_norm(&self) -> f64 {
        self.features.iter_rows().map(l2_norm).fold(0.0, f64::max)
    }
}

fn observed_bounds(features: &Matrix) -> Vec<(f64, f64)> {
    let mut bounds = alloc::vec![(f64::INFINITY, f64::NEG_INFINITY); features.cols()];
    for row in features.iter_rows() {
        for (b, &v) in bounds.iter_mut().zip(row) {
            b.0 = b.0.min(v);
            b.1 = b.1.max(v);
        }
    }
    if features.rows() == 0 {
        bounds.iter_mut().for_each(|b| *b = (0.0, 0.0));
    }
    bounds
}

/// Parameters for [`synthesize`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    pub class_count: usize,
    pub class_separation: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.class_count < 2 {
            return Err(Error::param("class_count", "need at least two classes"));
        }
        if self.d == 0 {
            return Err(Error::param("d", "need at least one feature"));
        }
        if !(self.class_separation >= 0.0 && self.class_separation.is_finite()) {
            return Err(Error::param("class_separation", "must be finite and non-negative"));
        }
        if self.n < 8 * self.class_count {
            return Err(Error::param(
                "n",
                format!("need at least 8 rows per class, got n={} for {} classes", self.n, self.class_count),
            ));
        }
        Ok(())
    }
}

/// Isotropic unit-variance Gaussian blobs, one per class, with balanced
/// classes (row `i` has label `i mod c`).
///
/// Class centers are `separation / sqrt(2)` times distinct basis vectors, so
/// every pair of centers is exactly `separation` apart when `d >= c`; with
/// more classes than dimensions the extra centers point in seeded random
/// directions. Centers are shifted so that their mean is the origin.
pub fn synthesize(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = Rng::derive(spec.seed, "synthesize");
    let radius = spec.class_separation / core::f64::consts::SQRT_2;
    let mut centers = Matrix::zeros(spec.class_count, spec.d);
    for k in 0..spec.class_count {
        if k < spec.d {
            centers.set(k, k, radius);
        } else {
            let mut dir: Vec<f64> = (0..spec.d).map(|_| standard_normal(&mut rng)).collect();
            let norm = l2_norm(&dir).max(f64::MIN_POSITIVE);
            dir.iter_mut().for_each(|v| *v *= radius / norm);
            centers.row_mut(k).copy_from_slice(&dir);
        }
    }
    let centroid = centers.column_means();
    for k in 0..spec.class_count {
        for (c, m) in centers.row_mut(k).iter_mut().zip(&centroid) {
            *c -= m;
        }
    }

    let mut features = Matrix::zeros(spec.n, spec.d);
    let mut labels = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let y = i % spec.class_count;
        labels.push(y);
        let center = centers.row(y);
        for (x, c) in features.row_mut(i).iter_mut().zip(center) {
            *x = c + standard_normal(&mut rng);
        }
    }
    Dataset::new(
        format!("synthetic-n{}-d{}-c{}", spec.n, spec.d, spec.class_count),
        features,
        labels,
        spec.class_count,
    )
}

/// Tolerance on `|x| <= 1` checks after normalization.
pub const UNIT_BALL_TOLERANCE: f64 = 1e-12;

/// Scales every row by `1 / max(1, max_i |x_i|)`.
///
/// Rows already inside the unit ball (up to [`UNIT_BALL_TOLERANCE`]) are left
/// untouched, which makes the operation idempotent. The factor is folded into
/// [`Dataset::row_scale`].
pub fn normalize_rows_to_unit_ball(data: &Dataset) -> Dataset {
    let max_norm = data.max_row_norm();
    if max_norm <= 1.0 + UNIT_BALL_TOLERANCE {
        return data.clone();
    }
    let factor = 1.0 / max_norm;
    let mut features = data.features.clone();
    features.as_mut_slice().iter_mut().for_each(|v| *v *= factor);
    let feature_bounds = data
        .feature_bounds
        .iter()
        .map(|&(lo, hi)| (lo * factor, hi * factor))
        .collect();
    Dataset {
        features,
        feature_bounds,
        row_scale: data.row_scale * factor,
        ..data.clone()
    }
}

/// True when every row has norm at most `1 + UNIT_BALL_TOLERANCE`.
pub fn rows_in_unit_ball(data: &Dataset) -> bool {
    data.max_row_norm() <= 1.0 + UNIT_BALL_TOLERANCE
}

/// Index sets of the target-train / target-test / shadow-pool partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub target_train: Vec<usize>,
    pub target_test: Vec<usize>,
    pub shadow_pool: Vec<usize>,
    pub seed: u64,
}

impl SplitPlan {
    /// Checks that the three sets are pairwise disjoint and cover `0..n`.
    pub fn check_partition(&self, n: usize) -> Result<()> {
        let mut owner = alloc::vec![0u8; n];
        for (tag, set) in [(1u8, &self.target_train), (2, &self.target_test), (3, &self.shadow_pool)] {
            for &i in set.iter() {
                if i >= n {
                    return Err(Error::Precondition(format!("split index {i} out of range {n}")));
                }
                if owner[i] != 0 {
                    return Err(Error::Precondition(format!(
                        "row {i} appears in split sets {} and {tag}",
                        owner[i]
                    )));
                }
                owner[i] = tag;
            }
        }
        if let Some(i) = owner.iter().position(|&o| o == 0) {
            return Err(Error::Precondition(format!("row {i} is in no split set")));
        }
        Ok(())
    }
}

/// Seeded shuffle followed by a 25/25/50 partition. Quarters are floored and
/// the remainder goes to the shadow pool.
pub fn make_split(data: &Dataset, seed: u64) -> Result<SplitPlan> {
    let n = data.len();
    if n < MIN_SPLIT_ROWS {
        return Err(Error::TooSmall {
            n,
            min: MIN_SPLIT_ROWS,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    Rng::derive(seed, "split").shuffle(&mut order);
    let quarter = n / 4;
    let shadow_pool = order.split_off(2 * quarter);
    let target_test = order.split_off(quarter);
    Ok(SplitPlan {
        target_train: order,
        target_test,
        shadow_pool,
        seed,
    })
}
