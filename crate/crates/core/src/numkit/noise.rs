//! Laplace, Gaussian and Gamma samplers.
//!
//! Laplace draws use the inverse CDF on one open-interval uniform. Gaussian
//! draws use the Box-Muller transform, consuming two uniforms per pair of
//! outputs. Both choices are part of the reproducibility contract: changing
//! them changes every results file.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{l2_norm, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum NoiseDistribution {
    Laplace,
    Gaussian,
}

/// A request for `len` i.i.d. zero-mean draws. `scale` is the Laplace `b` or
/// the Gaussian standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    distribution: NoiseDistribution,
    scale: f64,
    len: usize,
}

impl NoiseSpec {
    pub fn new(distribution: NoiseDistribution, scale: f64, len: usize) -> Result<Self> {
        check_scale("scale", scale)?;
        if len == 0 {
            return Err(Error::param("len", "noise shape must be nonempty"));
        }
        Ok(NoiseSpec {
            distribution,
            scale,
            len,
        })
    }

    pub fn distribution(&self) -> NoiseDistribution {
        self.distribution
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sample(&self, rng: &mut Rng) -> Vec<f64> {
        match self.distribution {
            NoiseDistribution::Laplace => laplace_unchecked(rng, self.scale, self.len),
            NoiseDistribution::Gaussian => gaussian_unchecked(rng, self.scale, self.len),
        }
    }
}

fn check_scale(name: &'static str, scale: f64) -> Result<()> {
    if scale.is_finite() && scale > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive and finite, got {scale}")))
    }
}

fn check_len(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::param("n", "must draw at least one value"))
    } else {
        Ok(())
    }
}

/// `n` draws from Laplace(0, `scale`).
pub fn sample_laplace(rng: &mut Rng, scale: f64, n: usize) -> Result<Vec<f64>> {
    check_scale("scale", scale)?;
    check_len(n)?;
    Ok(laplace_unchecked(rng, scale, n))
}

/// `n` draws from N(0, `sigma`^2).
pub fn sample_gaussian(rng: &mut Rng, sigma: f64, n: usize) -> Result<Vec<f64>> {
    check_scale("sigma", sigma)?;
    check_len(n)?;
    Ok(gaussian_unchecked(rng, sigma, n))
}

fn laplace_unchecked(rng: &mut Rng, scale: f64, n: usize) -> Vec<f64> {
    (0..n).map(|_| laplace_one(rng, scale)).collect()
}

#[inline]
pub(crate) fn laplace_one(rng: &mut Rng, scale: f64) -> f64 {
    let u = rng.uniform_open() - 0.5;
    let mag = libm::log(1.0 - 2.0 * u.abs());
    if u < 0.0 {
        scale * mag
    } else {
        -scale * mag
    }
}

fn gaussian_unchecked(rng: &mut Rng, sigma: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    while out.len() < n {
        let (a, b) = box_muller(rng);
        out.push(sigma * a);
        out.push(sigma * b);
    }
    out.truncate(n);
    out
}

#[inline]
fn box_muller(rng: &mut Rng) -> (f64, f64) {
    let u1 = rng.uniform_open();
    let u2 = rng.uniform();
    let r = libm::sqrt(-2.0 * libm::log(u1));
    let t = 2.0 * PI * u2;
    (r * libm::cos(t), r * libm::sin(t))
}

/// One standard normal draw (the first half of a Box-Muller pair).
pub fn standard_normal(rng: &mut Rng) -> f64 {
    box_muller(rng).0
}

/// Gamma(`shape`, `scale`) for integer shape, as a sum of `shape` exponentials.
pub fn sample_gamma(rng: &mut Rng, shape: usize, scale: f64) -> Result<f64> {
    check_scale("scale", scale)?;
    if shape == 0 {
        return Err(Error::param("shape", "gamma shape must be at least 1"));
    }
    let s: f64 = (0..shape).map(|_| -libm::log(rng.uniform_open())).sum();
    Ok(scale * s)
}

/// A `dim`-vector with density proportional to `exp(-|b| / scale)`: uniform
/// direction on the sphere, Gamma(`dim`, `scale`) magnitude.
pub fn sample_sphere_laplace(rng: &mut Rng, dim: usize, scale: f64) -> Result<Vec<f64>> {
    check_scale("scale", scale)?;
    check_len(dim)?;
    let mut dir = gaussian_unchecked(rng, 1.0, dim);
    let mut norm = l2_norm(&dir);
    while norm == 0.0 {
        dir = gaussian_unchecked(rng, 1.0, dim);
        norm = l2_norm(&dir);
    }
    let magnitude = sample_gamma(rng, dim, scale)?;
    Ok(dir.into_iter().map(|v| v / norm * magnitude).collect())
}
