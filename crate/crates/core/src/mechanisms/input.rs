//! Input perturbation: Gaussian noise on every training feature, clipped back
//! into the recorded feature bounds, followed by ordinary training.

use crate::dataset::Dataset;
use crate::learners::{train, ArchKind, ModelArch, TrainConfig};
use crate::numkit::{standard_normal, Rng};
use crate::{Error, Result};

use super::{single, MechanismKind, MechanismSpec, PrivacyBudget, PrivateModel};

/// Noise parameter `sigma` for logistic regression; per-feature noise is
/// `N(0, sigma^2 / n)`.
///
/// With `a = sqrt((4 / delta) / n)`:
/// `sigma = (sqrt(2d) a lambda + sqrt(2d a^2 lambda^2 + 2 lambda (1 - 2a) / epsilon)) / (1 - 2a)`.
/// The bound needs `a < 1/2`, i.e. `n > 16 / delta`; anything else is an
/// [`Error::Infeasible`].
pub fn input_lr_sigma(n: usize, d: usize, lambda: f64, epsilon: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::param("delta", "input perturbation needs delta > 0"));
    }
    if n == 0 {
        return Err(Error::param("n", "empty training set"));
    }
    let a = libm::sqrt((4.0 / delta) / n as f64);
    if a >= 0.5 {
        return Err(Error::Infeasible { n, delta, a });
    }
    let two_d = 2.0 * d as f64;
    let lead = libm::sqrt(two_d) * a * lambda;
    let root = libm::sqrt(two_d * a * a * lambda * lambda + 2.0 * lambda * (1.0 - 2.0 * a) / epsilon);
    Ok((lead + root) / (1.0 - 2.0 * a))
}

/// Noise variance for the MLP: `c G^2 T ln(1/delta) / (n (n - 1) epsilon^2)`.
pub fn input_mlp_variance(n: usize, g: f64, t: usize, c: f64, epsilon: f64, delta: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::param("n", "input perturbation for the MLP needs at least two rows"));
    }
    if !(delta > 0.0) {
        return Err(Error::param("delta", "input perturbation needs delta > 0"));
    }
    let n = n as f64;
    Ok(c * g * g * t as f64 * libm::log(1.0 / delta) / (n * (n - 1.0) * epsilon * epsilon))
}

/// Adds `N(0, std^2)` to every feature and clamps each value into the
/// dataset's feature bounds.
pub fn perturb_features(data: &Dataset, std: f64, rng: &mut Rng) -> Dataset {
    let mut features = data.features().clone();
    let bounds = data.feature_bounds();
    let d = data.dim();
    if std > 0.0 {
        for (k, v) in features.as_mut_slice().iter_mut().enumerate() {
            let (lo, hi) = bounds[k % d];
            *v = (*v + std * standard_normal(rng)).clamp(lo, hi);
        }
    }
    data.with_features(features)
}

pub fn input_perturb_lr(
    train_data: &Dataset,
    budget: &PrivacyBudget,
    config: &TrainConfig,
    rng: &mut Rng,
) -> Result<PrivateModel> {
    let n = train_data.len();
    let sigma = input_lr_sigma(n, train_data.dim(), config.lambda, budget.epsilon, budget.require_delta()?)?;
    let noisy = perturb_features(train_data, sigma / libm::sqrt(n as f64), rng);
    let arch = ModelArch::for_dataset(ArchKind::Lr, train_data)?;
    let model = train(&arch, &noisy, config, None)?;
    Ok(single(model, MechanismSpec::new(MechanismKind::Input, *budget)))
}

pub fn input_perturb_mlp(
    train_data: &Dataset,
    budget: &PrivacyBudget,
    lipschitz: f64,
    constant: f64,
    config: &TrainConfig,
    rng: &mut Rng,
) -> Result<PrivateModel> {
    let n = train_data.len();
    let t = config.total_steps(n);
    let var = input_mlp_variance(n, lipschitz, t, constant, budget.epsilon, budget.require_delta()?)?;
    let noisy = perturb_features(train_data, libm::sqrt(var), rng);
    let arch = ModelArch::for_dataset(ArchKind::Mlp, train_data)?;
    let model = train(&arch, &noisy, config, None)?;
    Ok(single(model, MechanismSpec::new(MechanismKind::Input, *budget)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a_for_ten_thousand_rows() {
        // a = sqrt(400 / 10000) = 0.2; with lambda = 0 only the epsilon term is left
        let s = input_lr_sigma(10_000, 3, 0.0, 1.0, 0.01).unwrap();
        assert_eq!(s, 0.0);
        let lambda = 1e-4;
        let a: f64 = 0.2;
        let two_d = 6.0f64;
        let expect = ((two_d).sqrt() * a * lambda
            + (two_d * a * a * lambda * lambda + 2.0 * lambda * (1.0 - 2.0 * a) / 1.0).sqrt())
            / (1.0 - 2.0 * a);
        let got = input_lr_sigma(10_000, 3, lambda, 1.0, 0.01).unwrap();
        assert!((got - expect).abs() < 1e-15);
    }

    #[test]
    fn infeasible_when_a_reaches_half() {
        match input_lr_sigma(500, 3, 1e-4, 1.0, 1e-4) {
            Err(Error::Infeasible { n, delta, .. }) => {
                assert_eq!(n, 500);
                assert_eq!(delta, 1e-4);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn large_epsilon_limit() {
        let lambda = 1e-4;
        let a: f64 = 0.2;
        // Both square-root terms tend to sqrt(2d) a lambda.
        let limit = 2.0 * (20.0f64).sqrt() * a * lambda / (1.0 - 2.0 * a);
        let s = input_lr_sigma(10_000, 10, lambda, 1e12, 0.01).unwrap();
        assert!((s - limit).abs() / limit < 1e-3, "{s} vs {limit}");
    }

    #[test]
    fn mlp_variance_arithmetic() {
        let v = input_mlp_variance(1000, 1.0, 400, 1.0, 1.0, 1e-3).unwrap();
        let expect = 400.0 * (1000.0f64).ln() / (1000.0 * 999.0);
        assert!((v - expect).abs() < 1e-15);
        assert!((v - 2.766e-3).abs() < 1e-6);
        let v4 = input_mlp_variance(1000, 1.0, 400, 1.0, 1e4, 1e-3).unwrap();
        assert!((v / v4 - 1e8).abs() < 1e-3);
        assert!(input_mlp_variance(1, 1.0, 400, 1.0, 1.0, 1e-3).is_err());
    }
}
