//! Dense linear algebra, the seeded generator, and noise samplers.
//!
//! All arithmetic is `f64`. Noise scales in the privacy sweep span roughly
//! 1e-6 to 1e3, which rules out narrower types.

mod matrix;
pub(crate) mod noise;
mod rng;

pub use matrix::{axpy, clip_to_norm, dot, l2_norm, Matrix};
pub use noise::{
    sample_gamma, sample_gaussian, sample_laplace, sample_sphere_laplace, standard_normal,
    NoiseDistribution, NoiseSpec,
};
pub use rng::{stream_seed, Rng, GENERATOR_NAME};
