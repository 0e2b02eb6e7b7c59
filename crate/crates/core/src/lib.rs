//! Differential-privacy perturbation mechanisms for classifier training,
//! together with the learners they wrap and a shadow-model membership
//! inference attack used to measure what the mechanisms actually hide.
//!
//! The crate is `no_std` and only needs `alloc`. Everything is pure given its
//! inputs and an explicit [`Rng`](numkit::Rng); file formats, configuration and
//! the command line live in the companion `dputil` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod attack;
pub mod dataset;
mod error;
pub mod learners;
pub mod mechanisms;
pub mod metrics;
pub mod numkit;

pub use error::{Error, Result};
