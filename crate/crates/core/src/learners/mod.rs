//! Logistic regression and a two-hidden-layer perceptron, trained with Adam
//! over shuffled mini-batches.
//!
//! Every gradient the trainer uses is assembled from per-example rows, which
//! is what lets a [`GradientTransform`] clip and noise them before the update.
//! The l2 term `lambda * theta` is added after the transform and never touches
//! bias entries.

mod adam;
mod erm;
mod logistic;
mod mlp;
mod train;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::Dataset;
use crate::numkit::Matrix;
use crate::{Error, Result};

pub use adam::{Adam, AdamConfig};
pub use erm::{logistic_erm_gradient, solve_logistic_erm, ErmSolution, ERM_GRADIENT_TOLERANCE};
pub use train::{init_params, train, GradientTransform, MeanGradient};

/// Hidden layer widths of the MLP.
pub const MLP_HIDDEN: [usize; 2] = [64, 64];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ArchKind {
    /// l2-regularized logistic regression (sigmoid for two classes, softmax otherwise).
    Lr,
    /// `d -> 64 -> 64 -> c` with ReLU hidden layers and a softmax output.
    Mlp,
}

impl ArchKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ArchKind::Lr => "lr",
            ArchKind::Mlp => "mlp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelArch {
    pub kind: ArchKind,
    pub input_dim: usize,
    pub class_count: usize,
}

impl ModelArch {
    pub fn new(kind: ArchKind, input_dim: usize, class_count: usize) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::param("input_dim", "must be positive"));
        }
        if class_count < 2 {
            return Err(Error::param("class_count", "need at least two classes"));
        }
        Ok(ModelArch {
            kind,
            input_dim,
            class_count,
        })
    }

    pub fn for_dataset(kind: ArchKind, data: &Dataset) -> Result<Self> {
        ModelArch::new(kind, data.dim(), data.class_count())
    }

    pub fn hidden(&self) -> &'static [usize] {
        match self.kind {
            ArchKind::Lr => &[],
            ArchKind::Mlp => &MLP_HIDDEN,
        }
    }

    pub fn param_count(&self) -> usize {
        match self.kind {
            ArchKind::Lr => logistic::param_count(self),
            ArchKind::Mlp => mlp::param_count(self),
        }
    }

    /// `true` at every bias position of the flat parameter vector.
    pub fn bias_mask(&self) -> Vec<bool> {
        match self.kind {
            ArchKind::Lr => logistic::bias_mask(self),
            ArchKind::Mlp => mlp::bias_mask(self),
        }
    }

    /// Loss of one example; writes its gradient into `grad` (overwriting).
    pub(crate) fn example_loss_grad(&self, params: &[f64], x: &[f64], y: usize, grad: &mut [f64]) -> f64 {
        match self.kind {
            ArchKind::Lr => logistic::loss_grad(self, params, x, y, grad),
            ArchKind::Mlp => mlp::loss_grad(self, params, x, y, grad),
        }
    }

    pub(crate) fn example_proba(&self, params: &[f64], x: &[f64], out: &mut [f64]) {
        match self.kind {
            ArchKind::Lr => logistic::proba(self, params, x, out),
            ArchKind::Mlp => mlp::proba(self, params, x, out),
        }
    }
}

/// Training hyperparameters. Defaults are the ones used throughout the sweep:
/// 100 epochs, learning rate 0.01, batch 250, lambda 1e-4, standard Adam.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Capped at the training-set size.
    pub batch_size: usize,
    pub lambda: f64,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            learning_rate: 0.01,
            batch_size: 250,
            lambda: 1e-4,
            adam: AdamConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::param("learning_rate", "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::param("batch_size", "must be positive"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::param("lambda", "must be non-negative"));
        }
        self.adam.validate()
    }

    /// Batch size actually used on `n` training rows.
    pub fn effective_batch(&self, n: usize) -> usize {
        self.batch_size.min(n).max(1)
    }

    /// Optimizer steps taken over `n` rows: `epochs * ceil(n / batch)`.
    pub fn total_steps(&self, n: usize) -> usize {
        let b = self.effective_batch(n);
        self.epochs * n.div_ceil(b)
    }

    pub fn with_seed(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            seed,
            ..self.clone()
        }
    }
}

/// Where a parameter vector came from.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Provenance {
    pub config: Option<TrainConfig>,
    pub mechanism: String,
}

/// A parameter vector bound to its architecture.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Model {
    arch: ModelArch,
    params: Vec<f64>,
    provenance: Provenance,
}

impl Model {
    pub fn new(arch: ModelArch, params: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if params.len() != arch.param_count() {
            return Err(Error::shape(
                "model",
                format!("{} parameters, architecture needs {}", params.len(), arch.param_count()),
            ));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::param("params", "all parameters must be finite"));
        }
        Ok(Model {
            arch,
            params,
            provenance,
        })
    }

    pub fn zeros(arch: ModelArch) -> Self {
        Model {
            arch,
            params: vec![0.0; arch.param_count()],
            provenance: Provenance::default(),
        }
    }

    pub fn arch(&self) -> &ModelArch {
        &self.arch
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn with_mechanism(mut self, mechanism: impl Into<String>) -> Self {
        self.provenance.mechanism = mechanism.into();
        self
    }

    /// Class probabilities, one row per input row.
    pub fn predict_proba(&self, features: &Matrix) -> Result<Matrix> {
        if features.cols() != self.arch.input_dim {
            return Err(Error::shape(
                "predict_proba",
                format!("{} features, model expects {}", features.cols(), self.arch.input_dim),
            ));
        }
        let c = self.arch.class_count;
        let mut out = Matrix::zeros(features.rows(), c);
        for (i, x) in features.iter_rows().enumerate() {
            self.arch.example_proba(&self.params, x, out.row_mut(i));
        }
        Ok(out)
    }

    /// Fraction of rows whose argmax prediction equals the label.
    pub fn evaluate(&self, data: &Dataset) -> Result<f64> {
        let proba = self.predict_proba(data.features())?;
        Ok(accuracy(&proba, data.labels()))
    }
}

/// Black-box prediction endpoint: probability vectors in, nothing else out.
///
/// The attack code only ever sees models through this trait.
pub trait PredictionApi {
    fn class_count(&self) -> usize;
    fn query(&mut self, features: &Matrix) -> Result<Matrix>;
}

impl PredictionApi for Model {
    fn class_count(&self) -> usize {
        self.arch.class_count
    }

    fn query(&mut self, features: &Matrix) -> Result<Matrix> {
        self.predict_proba(features)
    }
}

impl<T: PredictionApi + ?Sized> PredictionApi for &mut T {
    fn class_count(&self) -> usize {
        (**self).class_count()
    }

    fn query(&mut self, features: &Matrix) -> Result<Matrix> {
        (**self).query(features)
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = j;
        }
    }
    best
}

pub fn accuracy(proba: &Matrix, labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let hits = proba
        .iter_rows()
        .zip(labels)
        .filter(|(row, &y)| argmax(row) == y)
        .count();
    hits as f64 / labels.len() as f64
}

/// Accuracy of any prediction endpoint on `data`.
pub fn evaluate_api(api: &mut dyn PredictionApi, data: &Dataset) -> Result<f64> {
    let proba = api.query(data.features())?;
    Ok(accuracy(&proba, data.labels()))
}

fn check_batch(model: &Model, data: &Dataset, rows: &[usize]) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::param("batch", "batch must be nonempty"));
    }
    if data.dim() != model.arch.input_dim {
        return Err(Error::shape(
            "batch",
            format!("{} features, model expects {}", data.dim(), model.arch.input_dim),
        ));
    }
    if data.class_count() != model.arch.class_count {
        return Err(Error::shape(
            "batch",
            format!("{} classes, model expects {}", data.class_count(), model.arch.class_count),
        ));
    }
    Ok(())
}

/// Per-example data-term gradients (regularizer excluded), one row per
/// entry of `rows`.
pub fn per_example_grads(model: &Model, data: &Dataset, rows: &[usize]) -> Result<Matrix> {
    check_batch(model, data, rows)?;
    let p = model.arch.param_count();
    let mut out = Matrix::zeros(rows.len(), p);
    for (k, &i) in rows.iter().enumerate() {
        let loss = model.arch.example_loss_grad(
            &model.params,
            data.features().row(i),
            data.labels()[i],
            out.row_mut(k),
        );
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { row: i });
        }
    }
    Ok(out)
}

/// Mean loss over `rows` plus `(lambda / 2) |w|^2` on non-bias weights, and
/// its exact gradient.
pub fn loss_and_grad(model: &Model, data: &Dataset, rows: &[usize], lambda: f64) -> Result<(f64, Vec<f64>)> {
    check_batch(model, data, rows)?;
    let p = model.arch.param_count();
    let mut grad = vec![0.0; p];
    let mut scratch = vec![0.0; p];
    let mut loss = 0.0;
    for &i in rows {
        let l = model.arch.example_loss_grad(
            &model.params,
            data.features().row(i),
            data.labels()[i],
            &mut scratch,
        );
        if !l.is_finite() {
            return Err(Error::NonFiniteLoss { row: i });
        }
        loss += l;
        for (g, s) in grad.iter_mut().zip(&scratch) {
            *g += s;
        }
    }
    let inv = 1.0 / rows.len() as f64;
    loss *= inv;
    grad.iter_mut().for_each(|g| *g *= inv);
    loss += add_l2(&mut grad, &model.params, &model.arch.bias_mask(), lambda);
    Ok((loss, grad))
}

/// Adds `lambda * w` to `grad` on non-bias entries and returns `(lambda/2)|w|^2`.
pub(crate) fn add_l2(grad: &mut [f64], params: &[f64], bias: &[bool], lambda: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    let mut penalty = 0.0;
    for ((g, &w), &is_bias) in grad.iter_mut().zip(params).zip(bias) {
        if !is_bias {
            *g += lambda * w;
            penalty += w * w;
        }
    }
    0.5 * lambda * penalty
}

#[inline]
pub(crate) fn softplus(x: f64) -> f64 {
    // ln(1 + e^x) without overflow
    if x > 0.0 {
        x + libm::log1p(libm::exp(-x))
    } else {
        libm::log1p(libm::exp(x))
    }
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// In-place softmax; returns `logsumexp` of the input.
pub(crate) fn softmax_in_place(v: &mut [f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = libm::exp(*x - max);
        sum += *x;
    }
    v.iter_mut().for_each(|x| *x /= sum);
    max + libm::log(sum)
}
