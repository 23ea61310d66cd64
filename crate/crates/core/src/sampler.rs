//! Sampling distributions over column indices and the outer-product
//! estimator built from them.
//!
//! Three schemes are supported:
//!
//! - `Proposed`: `p_i = (||a_i||^2 / ||A||_F^2 + ||b_i||^2 / ||B||_F^2) / 2`,
//!   the mixed column-norm distribution whose tail certificate this crate
//!   verifies;
//! - `Dkm`: `p_i` proportional to `||a_i|| * ||b_i||`, the classical
//!   norm-product distribution, kept for comparison;
//! - `Uniform`: equal probability over the columns whose outer product is
//!   nonzero, the naive baseline.
//!
//! Indices with zero probability are excluded from the support. Under the
//! proposed scheme that only happens when both factor columns are zero, so
//! every nonzero outer product always remains reachable and the estimator
//! stays unbiased under all three schemes.

use std::str::FromStr;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, PairedMatrices, MEASURE_MAX_ITER, MEASURE_TOL};
use crate::prng::unit_f64;

/// How column-sampling probabilities are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingScheme {
    /// Half the sum of the two normalized squared column norms.
    Proposed,
    /// Proportional to the product of the column norms.
    Dkm,
    /// Equal weight on every column with a nonzero outer product.
    Uniform,
}

impl SamplingScheme {
    pub const ALL: [SamplingScheme; 3] =
        [SamplingScheme::Proposed, SamplingScheme::Dkm, SamplingScheme::Uniform];

    pub fn name(self) -> &'static str {
        match self {
            SamplingScheme::Proposed => "proposed",
            SamplingScheme::Dkm => "dkm",
            SamplingScheme::Uniform => "uniform",
        }
    }
}

impl FromStr for SamplingScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "proposed" => Ok(SamplingScheme::Proposed),
            "dkm" => Ok(SamplingScheme::Dkm),
            "uniform" => Ok(SamplingScheme::Uniform),
            other => Err(Error::Parse(format!(
                "unknown scheme '{other}' (expected proposed, dkm, or uniform)"
            ))),
        }
    }
}

impl std::fmt::Display for SamplingScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A normalized probability vector over column indices together with its
/// support and cumulative table for inverse-CDF sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingDistribution {
    scheme: SamplingScheme,
    probabilities: Vec<f64>,
    support: Vec<usize>,
    cumulative: Vec<f64>,
}

impl SamplingDistribution {
    pub fn scheme(&self) -> SamplingScheme {
        self.scheme
    }

    /// Number of columns (including any excluded from the support).
    pub fn n(&self) -> usize {
        self.probabilities.len()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, index: usize) -> f64 {
        self.probabilities[index]
    }

    /// Column indices with positive probability, ascending.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// Partial sums of the support probabilities; the final entry is exactly 1.
    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// Inverse-CDF lookup: smallest support position whose cumulative weight
    /// exceeds `u`, mapped back to a column index. `u` must lie in [0, 1).
    pub fn index_for_uniform(&self, u: f64) -> usize {
        debug_assert!((0.0..1.0).contains(&u));
        let pos = self.cumulative.partition_point(|&c| c <= u);
        self.support[pos.min(self.support.len() - 1)]
    }

    /// Assemble from raw per-column weights (any nonnegative numbers; they
    /// are normalized once to absorb floating-point drift).
    fn from_weights(scheme: SamplingScheme, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !total.is_finite() || total <= 0.0 {
            return Err(Error::DegenerateWeights);
        }
        let probabilities: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let support: Vec<usize> = probabilities
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, _)| i)
            .collect();
        let mut cumulative = Vec::with_capacity(support.len());
        let mut acc = 0.0;
        for &i in &support {
            acc += probabilities[i];
            cumulative.push(acc);
        }
        debug_assert!((acc - 1.0).abs() <= 1e-12);
        *cumulative.last_mut().expect("nonempty support") = 1.0;
        Ok(Self { scheme, probabilities, support, cumulative })
    }
}

/// Build the sampling distribution of the given scheme for a matrix pair.
pub fn build_distribution(
    pair: &PairedMatrices,
    scheme: SamplingScheme,
) -> Result<SamplingDistribution> {
    let n = pair.n();
    let a_fro_sq: f64 = (0..n).map(|i| pair.a().column_norm_sq(i)).sum();
    let b_fro_sq: f64 = (0..n).map(|i| pair.b().column_norm_sq(i)).sum();
    let weights: Vec<f64> = match scheme {
        SamplingScheme::Proposed => (0..n)
            .map(|i| {
                0.5 * (pair.a().column_norm_sq(i) / a_fro_sq
                    + pair.b().column_norm_sq(i) / b_fro_sq)
            })
            .collect(),
        SamplingScheme::Dkm => (0..n)
            .map(|i| (pair.a().column_norm_sq(i) * pair.b().column_norm_sq(i)).sqrt())
            .collect(),
        SamplingScheme::Uniform => (0..n)
            .map(|i| {
                let nonzero = pair.a().column_norm_sq(i) > 0.0
                    && pair.b().column_norm_sq(i) > 0.0;
                if nonzero {
                    1.0
                } else {
                    0.0
                }
            })
            .collect(),
    };
    SamplingDistribution::from_weights(scheme, weights)
}

/// Draw `m` column indices i.i.d. from the distribution, deterministically
/// in `(dist, m, seed)`. The seed fixes the uniform draws, so two schemes
/// sampled with the same seed share their randomness (common random
/// numbers) and coincide whenever their probabilities coincide.
pub fn sample_indices(dist: &SamplingDistribution, m: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m).map(|_| dist.index_for_uniform(unit_f64(&mut rng))).collect()
}

/// The estimator `(1/m) sum_j (1/p_{i_j}) a_{i_j} b_{i_j}^T` together with
/// the indices it was built from.
#[derive(Debug, Clone)]
pub struct SketchEstimate {
    estimate: DenseMatrix,
    indices: Vec<usize>,
    seed: Option<u64>,
}

impl SketchEstimate {
    pub fn estimate(&self) -> &DenseMatrix {
        &self.estimate
    }

    /// Number of sampled outer products.
    pub fn m(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// The sampling seed, when the estimate was drawn via [`sketch_product`];
    /// `None` when built from externally supplied indices.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
}

/// Average the reweighted outer products selected by `indices`.
///
/// Every index must lie in the support of `dist`. Repeated indices are
/// accumulated by count, which is algebraically identical to the per-draw
/// average and deterministic in the inputs.
pub fn estimate_product(
    pair: &PairedMatrices,
    dist: &SamplingDistribution,
    indices: &[usize],
) -> Result<SketchEstimate> {
    if dist.n() != pair.n() {
        return Err(Error::SupportMismatch(format!(
            "distribution over {} columns used with a {}-column pair",
            dist.n(),
            pair.n()
        )));
    }
    let m = indices.len();
    if m == 0 {
        return Err(Error::OutOfRange("need at least one sample index".into()));
    }
    let n = pair.n();
    let mut counts = vec![0u64; n];
    for &idx in indices {
        if idx >= n || dist.probability(idx) <= 0.0 {
            return Err(Error::IndexOutOfSupport { index: idx });
        }
        counts[idx] += 1;
    }
    let (d_a, d_b) = (pair.a().rows(), pair.b().rows());
    let mut estimate = DenseMatrix::zeros(d_a, d_b);
    for (idx, &count) in counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let weight = count as f64 / (m as f64 * dist.probability(idx));
        accumulate_outer(&mut estimate, pair, idx, weight);
    }
    Ok(SketchEstimate { estimate, indices: indices.to_vec(), seed: None })
}

/// Sample `m` indices from `seed` and form the estimate in one step.
pub fn sketch_product(
    pair: &PairedMatrices,
    dist: &SamplingDistribution,
    m: usize,
    seed: u64,
) -> Result<SketchEstimate> {
    let indices = sample_indices(dist, m, seed);
    let mut est = estimate_product(pair, dist, &indices)?;
    est.seed = Some(seed);
    Ok(est)
}

/// `sum_i p_i * (1/p_i) a_i b_i^T` over the support: the estimator's exact
/// expectation, evaluated through the same atom construction the sampler
/// uses. Equals `A B^T` whenever the support covers every nonzero outer
/// product, which all three schemes guarantee.
pub fn expected_estimate(pair: &PairedMatrices, dist: &SamplingDistribution) -> Result<DenseMatrix> {
    if dist.n() != pair.n() {
        return Err(Error::SupportMismatch(format!(
            "distribution over {} columns used with a {}-column pair",
            dist.n(),
            pair.n()
        )));
    }
    let mut acc = DenseMatrix::zeros(pair.a().rows(), pair.b().rows());
    for &i in dist.support() {
        let p = dist.probability(i);
        accumulate_outer(&mut acc, pair, i, p * (1.0 / p));
    }
    Ok(acc)
}

/// Spectral-norm error of the estimate relative to the scale `||A|| * ||B||`.
pub fn relative_spectral_error(est: &SketchEstimate, pair: &PairedMatrices) -> Result<f64> {
    let norm_a = pair.a().spectral_norm(MEASURE_TOL, MEASURE_MAX_ITER)?;
    let norm_b = pair.b().spectral_norm(MEASURE_TOL, MEASURE_MAX_ITER)?;
    if norm_a == 0.0 || norm_b == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let diff = est.estimate().sub(&pair.exact_product())?;
    Ok(diff.spectral_norm(MEASURE_TOL, MEASURE_MAX_ITER)? / (norm_a * norm_b))
}

/// `target += weight * a_i b_i^T` for column `i` of the pair.
pub(crate) fn accumulate_outer(
    target: &mut DenseMatrix,
    pair: &PairedMatrices,
    i: usize,
    weight: f64,
) {
    let col_a = pair.a().column(i);
    let col_b = pair.b().column(i);
    let d_b = col_b.len();
    let entries = target.entries_mut();
    for (r, &ar) in col_a.iter().enumerate() {
        if ar == 0.0 {
            continue;
        }
        let scaled = weight * ar;
        let row = &mut entries[r * d_b..(r + 1) * d_b];
        for (cell, &bc) in row.iter_mut().zip(&col_b) {
            *cell += scaled * bc;
        }
    }
}
