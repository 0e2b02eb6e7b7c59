//! Prediction perturbation: a teacher ensemble answering through noisy votes.

use alloc::vec::Vec;

use crate::dataset::Dataset;
use crate::learners::{argmax, train, Model, ModelArch, TrainConfig};
use crate::numkit::noise::laplace_one;
use crate::numkit::{Matrix, Rng};
use crate::{Error, Result};

use super::{MechanismKind, MechanismSpec, PrivacyBudget, PrivateModel, Underlying, VoteNoise};

/// 30 teachers for binary tasks, 40 otherwise.
pub fn default_teacher_count(class_count: usize) -> usize {
    if class_count <= 2 {
        30
    } else {
        40
    }
}

/// Splits rows `0..labels.len()` into `m` disjoint shards. Each class is dealt
/// round-robin, continuing where the previous class stopped, so class and
/// shard sizes differ by at most one.
pub fn shard_indices(labels: &[usize], class_count: usize, m: usize) -> Result<Vec<Vec<usize>>> {
    if m < 2 {
        return Err(Error::param("teachers", "need at least two teachers"));
    }
    let mut shards = alloc::vec![Vec::new(); m];
    let mut next = 0;
    for class in 0..class_count {
        for (i, _) in labels.iter().enumerate().filter(|(_, &y)| y == class) {
            shards[next].push(i);
            next = (next + 1) % m;
        }
    }
    for shard in &mut shards {
        shard.sort_unstable();
    }
    Ok(shards)
}

/// Adds `Laplace(1 / epsilon)` to each count (unless disabled) and returns
/// the winning class, ties to the lowest index, together with the exposed
/// probability vector: noisy counts floored at 0 and normalized, or one-hot
/// on the winner when every noisy count is non-positive.
pub fn noisy_aggregate(votes: &[f64], epsilon: f64, noise: VoteNoise, rng: &mut Rng) -> (usize, Vec<f64>) {
    let noisy: Vec<f64> = match noise {
        VoteNoise::Laplace => votes.iter().map(|&v| v + laplace_one(rng, 1.0 / epsilon)).collect(),
        VoteNoise::Disabled => votes.to_vec(),
    };
    let winner = argmax(&noisy);
    let mut proba: Vec<f64> = noisy.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = proba.iter().sum();
    if total > 0.0 {
        proba.iter_mut().for_each(|p| *p /= total);
    } else {
        proba.iter_mut().for_each(|p| *p = 0.0);
        proba[winner] = 1.0;
    }
    (winner, proba)
}

/// Teachers trained on disjoint shards.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TeacherEnsemble {
    teachers: Vec<Model>,
    class_count: usize,
    epsilon: f64,
    noise: VoteNoise,
}

impl TeacherEnsemble {
    pub fn new(teachers: Vec<Model>, epsilon: f64, noise: VoteNoise) -> Result<Self> {
        let Some(first) = teachers.first() else {
            return Err(Error::param("teachers", "ensemble is empty"));
        };
        let class_count = first.arch().class_count;
        if teachers.iter().any(|t| t.arch() != first.arch()) {
            return Err(Error::param("teachers", "teachers must share one architecture"));
        }
        if !(epsilon > 0.0) {
            return Err(Error::param("epsilon", "must be positive"));
        }
        Ok(TeacherEnsemble {
            teachers,
            class_count,
            epsilon,
            noise,
        })
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn teachers(&self) -> &[Model] {
        &self.teachers
    }

    /// Exact vote counts, one row per query; each row sums to the teacher count.
    pub fn votes(&self, features: &Matrix) -> Result<Matrix> {
        let mut counts = Matrix::zeros(features.rows(), self.class_count);
        for teacher in &self.teachers {
            let proba = teacher.predict_proba(features)?;
            for (r, row) in proba.iter_rows().enumerate() {
                let j = argmax(row);
                counts.set(r, j, counts.get(r, j) + 1.0);
            }
        }
        Ok(counts)
    }

    pub fn predict_proba(&self, features: &Matrix, rng: &mut Rng) -> Result<Matrix> {
        let votes = self.votes(features)?;
        let mut out = Matrix::zeros(features.rows(), self.class_count);
        for (r, row) in votes.iter_rows().enumerate() {
            let (_, proba) = noisy_aggregate(row, self.epsilon, self.noise, rng);
            out.row_mut(r).copy_from_slice(&proba);
        }
        Ok(out)
    }
}

/// Trains `teachers` copies of `arch` with the same config on disjoint shards.
pub fn prediction_perturb(
    arch: &ModelArch,
    data: &Dataset,
    budget: &PrivacyBudget,
    teachers: usize,
    config: &TrainConfig,
    noise: VoteNoise,
) -> Result<PrivateModel> {
    let shards = shard_indices(data.labels(), data.class_count(), teachers)?;
    if let Some(small) = shards.iter().map(Vec::len).min().filter(|&s| s < 2) {
        return Err(Error::Config(alloc::format!(
            "{} rows cannot feed {teachers} teachers (smallest shard has {small})",
            data.len()
        )));
    }
    let models = shards
        .iter()
        .map(|rows| train(arch, &data.subset(rows), config, None))
        .collect::<Result<Vec<_>>>()?;
    let mut spec = MechanismSpec::new(MechanismKind::Prediction, *budget);
    spec.teachers = Some(teachers);
    spec.vote_noise = noise;
    Ok(PrivateModel {
        underlying: Underlying::Ensemble(TeacherEnsemble::new(models, budget.epsilon, noise)?),
        spec,
    })
}
