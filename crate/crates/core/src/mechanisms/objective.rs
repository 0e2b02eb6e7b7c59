//! Objective and output perturbation for l2-regularized logistic regression.
//!
//! Both need rows inside the unit ball and labels in {-1, +1}. More than two
//! classes are handled one-vs-rest: one binary problem per class, each with
//! its own noise at the full budget. The resulting score rows are stored in
//! the softmax layout of the LR architecture.

use alloc::vec::Vec;

use crate::dataset::{rows_in_unit_ball, Dataset};
use crate::learners::{solve_logistic_erm, ArchKind, Model, ModelArch, Provenance};
use crate::numkit::{sample_laplace, sample_sphere_laplace, Rng};
use crate::{Error, Result};

use super::{single, ErmNoise, MechanismKind, MechanismSpec, PrivacyBudget, PrivateModel};

/// Scale of the objective's linear noise term `<b, theta> / n`: `2 / (n epsilon)`.
pub fn objective_noise_scale(n: usize, epsilon: f64) -> f64 {
    2.0 / (n as f64 * epsilon)
}

/// Scale of the parameter noise: `2 / (n lambda epsilon)`.
pub fn output_noise_scale(n: usize, lambda: f64, epsilon: f64) -> f64 {
    2.0 / (n as f64 * lambda * epsilon)
}

fn draw(rng: &mut Rng, dim: usize, scale: f64, shape: ErmNoise) -> Result<Vec<f64>> {
    match shape {
        ErmNoise::Sphere => sample_sphere_laplace(rng, dim, scale),
        ErmNoise::PerCoordinate => sample_laplace(rng, scale, dim),
    }
}

fn check_inputs(data: &Dataset, lambda: f64) -> Result<()> {
    if data.is_empty() {
        return Err(Error::param("data", "training slice is empty"));
    }
    if !rows_in_unit_ball(data) {
        return Err(Error::Precondition(alloc::format!(
            "rows must satisfy |x| <= 1, largest norm is {}",
            data.max_row_norm()
        )));
    }
    if !(lambda > 0.0) {
        return Err(Error::param("lambda", "needs lambda > 0"));
    }
    Ok(())
}

/// One-vs-rest sign vectors; a single vector for two classes.
fn sign_problems(data: &Dataset) -> Vec<Vec<f64>> {
    let positives: Vec<usize> = if data.class_count() == 2 {
        alloc::vec![1]
    } else {
        (0..data.class_count()).collect()
    };
    positives
        .into_iter()
        .map(|k| data.labels().iter().map(|&y| if y == k { 1.0 } else { -1.0 }).collect())
        .collect()
}

/// Solves every sign problem, letting `before`/`after` inject noise into the
/// objective and the solution.
fn fit_erm(
    data: &Dataset,
    lambda: f64,
    mut linear: impl FnMut() -> Result<Option<Vec<f64>>>,
    mut after: impl FnMut(&mut [f64]) -> Result<()>,
) -> Result<Model> {
    let arch = ModelArch::for_dataset(ArchKind::Lr, data)?;
    let mut params = Vec::with_capacity(arch.param_count());
    for signs in sign_problems(data) {
        let b = linear()?;
        let mut sol = solve_logistic_erm(data.features(), &signs, lambda, b.as_deref())?;
        after(&mut sol.params)?;
        params.extend_from_slice(&sol.params);
    }
    Model::new(arch, params, Provenance::default())
}

/// The exact non-private regularized optimum (bias regularized too), which
/// objective and output perturbation perturb.
pub fn regularized_optimum(data: &Dataset, lambda: f64) -> Result<Model> {
    check_inputs(data, lambda)?;
    fit_erm(data, lambda, || Ok(None), |_| Ok(()))
}

/// Minimizes `J(theta) + <b, theta> / n` with `b` drawn at scale `2 / epsilon`,
/// so that the added term has scale `2 / (n epsilon)`.
pub fn objective_perturb(
    data: &Dataset,
    budget: &PrivacyBudget,
    lambda: f64,
    noise: ErmNoise,
    rng: &mut Rng,
) -> Result<PrivateModel> {
    check_inputs(data, lambda)?;
    let dim = data.dim() + 1;
    let scale = 2.0 / budget.epsilon;
    let model = fit_erm(data, lambda, || draw(rng, dim, scale, noise).map(Some), |_| Ok(()))?;
    let mut spec = MechanismSpec::new(MechanismKind::Objective, *budget);
    spec.erm_noise = noise;
    Ok(single(model, spec))
}

/// Adds noise at scale `2 / (n lambda epsilon)` to the regularized optimum.
pub fn output_perturb(
    data: &Dataset,
    budget: &PrivacyBudget,
    lambda: f64,
    noise: ErmNoise,
    rng: &mut Rng,
) -> Result<PrivateModel> {
    check_inputs(data, lambda)?;
    let dim = data.dim() + 1;
    let scale = output_noise_scale(data.len(), lambda, budget.epsilon);
    let model = fit_erm(
        data,
        lambda,
        || Ok(None),
        |theta| {
            let b = draw(rng, dim, scale, noise)?;
            theta.iter_mut().zip(&b).for_each(|(t, n)| *t += n);
            Ok(())
        },
    )?;
    let mut spec = MechanismSpec::new(MechanismKind::Output, *budget);
    spec.erm_noise = noise;
    Ok(single(model, spec))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scale_arithmetic() {
        assert!((objective_noise_scale(5000, 0.1) - 0.004).abs() < 1e-15);
        assert!((output_noise_scale(25_000, 1e-4, 1.0) - 0.8).abs() < 1e-12);
    }
}
