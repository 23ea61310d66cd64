//! Randomized approximate matrix multiplication by sampling outer products.
//!
//! Given paired matrices `A` and `B` with shared column count `n`, the
//! estimator draws column indices i.i.d. from a distribution over `[n]` and
//! averages the reweighted outer products `(1/p_i) a_i b_i^T`, approximating
//! `A B^T` in spectral norm. The crate provides:
//!
//! - [`matrix`]: dense matrices, norms, stable rank, exact products;
//! - [`synth`]: seeded synthetic instances with a prescribed spectrum;
//! - [`sampler`]: the sampling distributions (mixed column norms, norm
//!   products, uniform), index drawing, and the estimator itself;
//! - [`bounds`]: the concentration certificate `(b_bar, sigma2_bar, k_bar)`,
//!   exact verification of the inequalities behind it, deviation/failure
//!   tail evaluation, and a sample-size planner;
//! - [`harness`]: a deterministic Monte Carlo runner that measures empirical
//!   error quantiles against the theoretical curves and serializes reports.

pub mod bounds;
pub mod error;
pub mod harness;
pub mod matrix;
mod prng;
pub mod sampler;
pub mod synth;

pub use error::{Error, Result};
pub use matrix::{DenseMatrix, PairedMatrices, SpectralStats};
pub use sampler::{SamplingDistribution, SamplingScheme, SketchEstimate};
