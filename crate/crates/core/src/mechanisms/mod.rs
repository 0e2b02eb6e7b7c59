//! The five perturbation points of the training pipeline.
//!
//! | kind         | where noise enters                         | architectures |
//! |--------------|--------------------------------------------|---------------|
//! | `input`      | training features, before training         | LR, MLP       |
//! | `objective`  | a random linear term in the ERM objective  | LR            |
//! | `gradient`   | every update direction                     | LR, MLP       |
//! | `output`     | the trained parameter vector               | LR            |
//! | `prediction` | teacher vote counts at query time          | LR, MLP       |
//!
//! Each mechanism returns a [`PrivateModel`], which only exposes probability
//! vectors.

mod budget;
mod gradient;
mod input;
mod objective;
mod pate;

use alloc::string::String;

use crate::dataset::Dataset;
use crate::learners::{ArchKind, Model, ModelArch, PredictionApi, TrainConfig};
use crate::numkit::{Matrix, Rng};
use crate::{Error, Result};

pub use budget::{default_delta, PrivacyBudget, EPSILON_RANGE};
pub use gradient::{
    dpsgd_sigma, dpsgd_train, gradient_perturb_dpsgd, gradient_perturb_lr, gradient_perturb_lr_with,
    ConvexLaplaceHook, DpSgdHook,
};
pub use input::{input_lr_sigma, input_mlp_variance, input_perturb_lr, input_perturb_mlp, perturb_features};
pub use objective::{
    objective_noise_scale, objective_perturb, output_noise_scale, output_perturb, regularized_optimum,
};
pub use pate::{default_teacher_count, noisy_aggregate, prediction_perturb, shard_indices, TeacherEnsemble};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum MechanismKind {
    Input,
    Objective,
    Gradient,
    Output,
    Prediction,
}

impl MechanismKind {
    pub const ALL: [MechanismKind; 5] = [
        MechanismKind::Input,
        MechanismKind::Objective,
        MechanismKind::Gradient,
        MechanismKind::Output,
        MechanismKind::Prediction,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MechanismKind::Input => "input",
            MechanismKind::Objective => "objective",
            MechanismKind::Gradient => "gradient",
            MechanismKind::Output => "output",
            MechanismKind::Prediction => "prediction",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        MechanismKind::ALL.into_iter().find(|k| k.as_str() == s)
    }

    /// Objective and output perturbation are only defined for the convex learner.
    pub fn supports(self, arch: ArchKind) -> bool {
        !matches!(
            (self, arch),
            (MechanismKind::Objective | MechanismKind::Output, ArchKind::Mlp)
        )
    }
}

/// Gradient perturbation flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum GradientVariant {
    /// Per-example clipping plus Gaussian noise over mini-batches.
    #[default]
    DpSgd,
    /// Full-batch LR with Laplace(2 / (n epsilon)) on each step's gradient.
    Convex,
}

/// Noise vector used by objective and output perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ErmNoise {
    /// Density proportional to `exp(-|b| / scale)`.
    #[default]
    Sphere,
    /// Independent Laplace per coordinate at the same scale (debugging aid).
    PerCoordinate,
}

/// Noise on teacher votes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum VoteNoise {
    #[default]
    Laplace,
    /// Exact vote counts; for checking the aggregation logic only.
    Disabled,
}

/// Which mechanism to run and its constants.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MechanismSpec {
    pub kind: MechanismKind,
    pub budget: PrivacyBudget,
    /// DP-SGD clipping norm `C`.
    pub clip_norm: f64,
    /// DP-SGD noise constant `c2`.
    pub c2: f64,
    /// Teacher count; `None` picks 30 for binary tasks and 40 otherwise.
    pub teachers: Option<usize>,
    /// Lipschitz constant `G` of the MLP input-perturbation bound.
    pub lipschitz: f64,
    /// Constant `c` of the MLP input-perturbation bound.
    pub input_constant: f64,
    pub gradient_variant: GradientVariant,
    pub erm_noise: ErmNoise,
    pub vote_noise: VoteNoise,
}

impl MechanismSpec {
    pub fn new(kind: MechanismKind, budget: PrivacyBudget) -> Self {
        MechanismSpec {
            kind,
            budget,
            clip_norm: 1.0,
            c2: 1.0,
            teachers: None,
            lipschitz: 1.0,
            input_constant: 1.0,
            gradient_variant: GradientVariant::DpSgd,
            erm_noise: ErmNoise::Sphere,
            vote_noise: VoteNoise::Laplace,
        }
    }

    pub fn validate_for(&self, arch: ArchKind) -> Result<()> {
        if !self.kind.supports(arch) {
            return Err(Error::Config(alloc::format!(
                "{} perturbation is only defined for logistic regression, not {}",
                self.kind.as_str(),
                arch.as_str()
            )));
        }
        if self.kind == MechanismKind::Gradient
            && self.gradient_variant == GradientVariant::Convex
            && arch != ArchKind::Lr
        {
            return Err(Error::Config("convex gradient perturbation requires logistic regression".into()));
        }
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.clip_norm) || !positive(self.c2) || !positive(self.lipschitz) || !positive(self.input_constant) {
            return Err(Error::Config("mechanism constants must be positive".into()));
        }
        if matches!(self.teachers, Some(m) if m < 2) {
            return Err(Error::Config("need at least two teachers".into()));
        }
        Ok(())
    }

    /// Short label such as `gradient/dp-sgd`, recorded in model provenance.
    pub fn label(&self) -> String {
        match (self.kind, self.gradient_variant) {
            (MechanismKind::Gradient, GradientVariant::DpSgd) => "gradient/dp-sgd".into(),
            (MechanismKind::Gradient, GradientVariant::Convex) => "gradient/convex".into(),
            (k, _) => k.as_str().into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Underlying {
    Single(Model),
    Ensemble(TeacherEnsemble),
}

/// A trained predictor together with the mechanism that produced it.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PrivateModel {
    pub underlying: Underlying,
    pub spec: MechanismSpec,
}

impl PrivateModel {
    pub fn class_count(&self) -> usize {
        match &self.underlying {
            Underlying::Single(m) => m.arch().class_count,
            Underlying::Ensemble(e) => e.class_count(),
        }
    }

    /// Probability rows. `rng` drives the vote noise of teacher ensembles and
    /// is left untouched for single models.
    pub fn predict_proba(&self, features: &Matrix, rng: &mut Rng) -> Result<Matrix> {
        match &self.underlying {
            Underlying::Single(m) => m.predict_proba(features),
            Underlying::Ensemble(e) => e.predict_proba(features, rng),
        }
    }

    /// A prediction endpoint owning its own noise stream.
    pub fn oracle(&self, rng: Rng) -> PrivateOracle<'_> {
        PrivateOracle { model: self, rng }
    }
}

/// Black-box view of a [`PrivateModel`].
pub struct PrivateOracle<'a> {
    model: &'a PrivateModel,
    rng: Rng,
}

impl PredictionApi for PrivateOracle<'_> {
    fn class_count(&self) -> usize {
        self.model.class_count()
    }

    fn query(&mut self, features: &Matrix) -> Result<Matrix> {
        self.model.predict_proba(features, &mut self.rng)
    }
}

/// Trains `arch` on `train` under `spec`. `config` supplies the shared
/// training hyperparameters; `rng` supplies all mechanism noise.
pub fn fit_private(
    arch: &ModelArch,
    train: &Dataset,
    config: &TrainConfig,
    spec: &MechanismSpec,
    rng: &mut Rng,
) -> Result<PrivateModel> {
    spec.validate_for(arch.kind)?;
    let budget = &spec.budget;
    let mut fitted = match (spec.kind, arch.kind) {
        (MechanismKind::Input, ArchKind::Lr) => input_perturb_lr(train, budget, config, rng)?,
        (MechanismKind::Input, ArchKind::Mlp) => {
            input_perturb_mlp(train, budget, spec.lipschitz, spec.input_constant, config, rng)?
        }
        (MechanismKind::Objective, _) => objective_perturb(train, budget, config.lambda, spec.erm_noise, rng)?,
        (MechanismKind::Output, _) => output_perturb(train, budget, config.lambda, spec.erm_noise, rng)?,
        (MechanismKind::Gradient, _) => match spec.gradient_variant {
            GradientVariant::DpSgd => gradient_perturb_dpsgd(arch, train, budget, spec.clip_norm, spec.c2, config, rng)?,
            GradientVariant::Convex => gradient_perturb_lr(train, budget, config, rng)?,
        },
        (MechanismKind::Prediction, _) => {
            let teachers = spec.teachers.unwrap_or_else(|| default_teacher_count(train.class_count()));
            prediction_perturb(arch, train, budget, teachers, config, spec.vote_noise)?
        }
    };
    fitted.spec = spec.clone();
    Ok(fitted)
}

pub(crate) fn single(model: Model, spec: MechanismSpec) -> PrivateModel {
    let label = spec.label();
    PrivateModel {
        underlying: Underlying::Single(model.with_mechanism(label)),
        spec,
    }
}
