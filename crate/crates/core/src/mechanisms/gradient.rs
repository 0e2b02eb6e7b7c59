//! Gradient perturbation: noise on every update direction.

use alloc::vec::Vec;

use crate::dataset::{rows_in_unit_ball, Dataset};
use crate::learners::{train, ArchKind, GradientTransform, Model, ModelArch, TrainConfig};
use crate::numkit::{sample_gaussian, sample_laplace, Matrix, Rng};
use crate::{Error, Result};

use super::{single, GradientVariant, MechanismKind, MechanismSpec, PrivacyBudget, PrivateModel};

/// Full-batch hook adding `Laplace(scale)` to each coordinate of the mean
/// gradient. With `scale = None` it is the plain mean.
pub struct ConvexLaplaceHook<'a> {
    scale: Option<f64>,
    rng: &'a mut Rng,
}

impl<'a> ConvexLaplaceHook<'a> {
    /// Per-step scale `2 / (n epsilon)`.
    pub fn new(n: usize, epsilon: f64, rng: &'a mut Rng) -> Self {
        ConvexLaplaceHook {
            scale: Some(Self::scale(n, epsilon)),
            rng,
        }
    }

    pub fn noise_free(rng: &'a mut Rng) -> Self {
        ConvexLaplaceHook { scale: None, rng }
    }

    pub fn scale(n: usize, epsilon: f64) -> f64 {
        2.0 / (n as f64 * epsilon)
    }
}

impl GradientTransform for ConvexLaplaceHook<'_> {
    fn transform(&mut self, per_example: &Matrix, _batch: &[usize], _step: usize) -> Result<Vec<f64>> {
        let mut g = per_example.column_means();
        if let Some(scale) = self.scale {
            let noise = sample_laplace(self.rng, scale, g.len())?;
            g.iter_mut().zip(&noise).for_each(|(v, z)| *v += z);
        }
        Ok(g)
    }
}

/// `sigma = c2 q sqrt(T ln(1/delta)) / epsilon` with `q = L / n`.
pub fn dpsgd_sigma(batch: usize, n: usize, steps: usize, delta: f64, epsilon: f64, c2: f64) -> Result<f64> {
    if n == 0 || batch == 0 {
        return Err(Error::param("n", "needs a non-empty training set and batch"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param("delta", "DP-SGD needs 0 < delta < 1"));
    }
    let q = batch as f64 / n as f64;
    Ok(c2 * q * libm::sqrt(steps as f64 * libm::log(1.0 / delta)) / epsilon)
}

/// Clips each per-example gradient to `clip`, sums, adds `N(0, sigma^2 clip^2)`
/// per coordinate and divides by the nominal batch size. Records the largest
/// clipped norm of every step.
pub struct DpSgdHook<'a> {
    clip: f64,
    sigma: f64,
    nominal_batch: usize,
    rng: &'a mut Rng,
    clipped_max: Vec<f64>,
}

impl<'a> DpSgdHook<'a> {
    pub fn new(clip: f64, sigma: f64, nominal_batch: usize, rng: &'a mut Rng) -> Result<Self> {
        if !(clip > 0.0 && clip.is_finite()) {
            return Err(Error::param("clip_norm", "must be positive"));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::param("sigma", "must be finite and non-negative"));
        }
        if nominal_batch == 0 {
            return Err(Error::param("batch_size", "must be positive"));
        }
        Ok(DpSgdHook {
            clip,
            sigma,
            nominal_batch,
            rng,
            clipped_max: Vec::new(),
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Largest clipped per-example norm at each step so far.
    pub fn clipped_norms(&self) -> &[f64] {
        &self.clipped_max
    }

    pub fn into_trace(self) -> Vec<f64> {
        self.clipped_max
    }
}

impl GradientTransform for DpSgdHook<'_> {
    fn transform(&mut self, per_example: &Matrix, _batch: &[usize], _step: usize) -> Result<Vec<f64>> {
        let mut clipped = per_example.clone();
        clipped.clip_rows_in_place(self.clip)?;
        let max = clipped.row_norms().into_iter().fold(0.0, f64::max);
        self.clipped_max.push(max);

        let mut sum = alloc::vec![0.0; clipped.cols()];
        for row in clipped.iter_rows() {
            sum.iter_mut().zip(row).for_each(|(s, v)| *s += v);
        }
        if self.sigma > 0.0 {
            let noise = sample_gaussian(self.rng, self.sigma * self.clip, sum.len())?;
            sum.iter_mut().zip(&noise).for_each(|(s, z)| *s += z);
        }
        let l = self.nominal_batch as f64;
        sum.iter_mut().for_each(|s| *s /= l);
        Ok(sum)
    }
}

/// DP-SGD training returning the model and the per-step clipped-norm trace.
pub fn dpsgd_train(
    arch: &ModelArch,
    data: &Dataset,
    budget: &PrivacyBudget,
    clip: f64,
    c2: f64,
    config: &TrainConfig,
    rng: &mut Rng,
) -> Result<(Model, Vec<f64>)> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::param("data", "training slice is empty"));
    }
    let n = data.len();
    let batch = config.effective_batch(n);
    let steps = config.total_steps(n);
    let sigma = dpsgd_sigma(batch, n, steps, budget.require_delta()?, budget.epsilon, c2)?;
    let mut hook = DpSgdHook::new(clip, sigma, batch, rng)?;
    let model = train(arch, data, config, Some(&mut hook))?;
    Ok((model, hook.into_trace()))
}

pub fn gradient_perturb_dpsgd(
    arch: &ModelArch,
    data: &Dataset,
    budget: &PrivacyBudget,
    clip: f64,
    c2: f64,
    config: &TrainConfig,
    rng: &mut Rng,
) -> Result<PrivateModel> {
    let (model, _) = dpsgd_train(arch, data, budget, clip, c2, config, rng)?;
    let mut spec = MechanismSpec::new(MechanismKind::Gradient, *budget);
    spec.clip_norm = clip;
    spec.c2 = c2;
    Ok(single(model, spec))
}

/// Full-batch convex variant with per-step `Laplace(2 / (n epsilon))`.
pub fn gradient_perturb_lr(
    data: &Dataset,
    budget: &PrivacyBudget,
    config: &TrainConfig,
    rng: &mut Rng,
) -> Result<PrivateModel> {
    gradient_perturb_lr_with(data, budget, config, rng, true)
}

/// As [`gradient_perturb_lr`]; `noisy = false` runs the identical loop with
/// the noise switched off.
pub fn gradient_perturb_lr_with(
    data: &Dataset,
    budget: &PrivacyBudget,
    config: &TrainConfig,
    rng: &mut Rng,
    noisy: bool,
) -> Result<PrivateModel> {
    if data.is_empty() {
        return Err(Error::param("data", "training slice is empty"));
    }
    if !rows_in_unit_ball(data) {
        return Err(Error::Precondition(alloc::format!(
            "rows must satisfy |x| <= 1, largest norm is {}",
            data.max_row_norm()
        )));
    }
    let arch = ModelArch::for_dataset(ArchKind::Lr, data)?;
    let full = TrainConfig {
        batch_size: data.len(),
        ..config.clone()
    };
    let mut hook = if noisy {
        ConvexLaplaceHook::new(data.len(), budget.epsilon, rng)
    } else {
        ConvexLaplaceHook::noise_free(rng)
    };
    let model = train(&arch, data, &full, Some(&mut hook))?;
    let mut spec = MechanismSpec::new(MechanismKind::Gradient, *budget);
    spec.gradient_variant = GradientVariant::Convex;
    Ok(single(model, spec))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_arithmetic() {
        let s = dpsgd_sigma(250, 25_000, 10_000, 1e-5, 1.0, 1.0).unwrap();
        assert!((s - 3.393).abs() < 1e-3, "{s}");
        assert_eq!(ConvexLaplaceHook::scale(25_000, 1.0), 8e-5);
    }
}
