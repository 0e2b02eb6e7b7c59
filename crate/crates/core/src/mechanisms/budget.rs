use alloc::format;

use crate::{Error, Result};

/// Range of privacy budgets an experiment grid may span.
pub const EPSILON_RANGE: (f64, f64) = (1e-2, 1e4);

/// `(epsilon, delta)`. Only `epsilon > 0` and `0 <= delta < 1` are enforced
/// here; limit studies deliberately go beyond [`EPSILON_RANGE`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub delta: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0) || epsilon.is_nan() {
            return Err(Error::param("epsilon", format!("must be positive, got {epsilon}")));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::param("delta", format!("must lie in [0, 1), got {delta}")));
        }
        Ok(PrivacyBudget { epsilon, delta })
    }

    /// Budget with the default delta for `n_train` training rows.
    pub fn for_training_set(epsilon: f64, n_train: usize) -> Result<Self> {
        PrivacyBudget::new(epsilon, default_delta(n_train))
    }

    pub(crate) fn require_delta(&self) -> Result<f64> {
        if self.delta > 0.0 {
            Ok(self.delta)
        } else {
            Err(Error::param("delta", "this mechanism needs delta > 0"))
        }
    }
}

/// `1 / (10 n)` rounded down to a power of ten, which keeps delta below
/// `1 / n`.
pub fn default_delta(n_train: usize) -> f64 {
    let raw = 0.1 / n_train.max(1) as f64;
    libm::pow(10.0, libm::floor(libm::log10(raw)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_delta_is_power_of_ten_below_inverse_n() {
        assert_eq!(default_delta(500), 1e-4);
        assert_eq!(default_delta(25_000), 1e-6);
        for n in [1usize, 7, 100, 999, 1000, 12345] {
            let d = default_delta(n);
            assert!(d < 1.0 / n as f64);
            let e = libm::log10(d);
            assert!((e - libm::round(e)).abs() < 1e-12);
        }
    }

    #[test]
    fn validation() {
        assert!(PrivacyBudget::new(0.0, 0.0).is_err());
        assert!(PrivacyBudget::new(-1.0, 0.0).is_err());
        assert!(PrivacyBudget::new(1.0, 1.0).is_err());
        assert!(PrivacyBudget::new(1e6, 0.0).is_ok());
    }
}
