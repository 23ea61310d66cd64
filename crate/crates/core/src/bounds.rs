//! The concentration certificate behind the sampled estimator, exact
//! verification of the inequalities that produce it, tail-bound evaluation,
//! and a sample-size planner.
//!
//! For the dilation of a single reweighted outer product under the proposed
//! distribution, three quantities control the matrix Bernstein tail:
//!
//! - `b_bar = ||A||_F ||B||_F + ||A|| ||B||`, an almost-sure bound on each
//!   centered atom;
//! - `sigma2_bar = 2 (sr(A) max sr(B)) ||A||^2 ||B||^2`, a bound on the
//!   operator norm of the exact second moment;
//! - `k_bar = 2 (sr(A) min sr(B))`, the intrinsic-dimension factor, equal to
//!   the trace bound divided by `sigma2_bar`.
//!
//! All three are checkable without sampling: the second moment of the
//! dilation is an exact sum over the support, and the per-atom bound is a
//! finite maximum. [`verify_estimator`] runs those checks; [`tail_bound`]
//! and [`proof_form_tail`] evaluate the resulting deviation and failure
//! probability at given `(m, t)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{
    symmetric_eigenvalues, DenseMatrix, PairedMatrices, MEASURE_MAX_ITER, MEASURE_TOL,
};
use crate::sampler::{
    accumulate_outer, build_distribution, expected_estimate, SamplingDistribution, SamplingScheme,
};

/// Relative slack applied to every certificate inequality, covering
/// double-precision accumulation over desk-scale supports.
pub const CLAIM_RELATIVE_SLACK: f64 = 1e-8;

/// Relative Frobenius tolerance for the unbiasedness identity.
pub const UNBIASEDNESS_TOL: f64 = 1e-10;

/// Default planner constant for [`required_samples`].
pub const DEFAULT_PLANNER_C: f64 = 4.0;

/// The proof-level quantities controlling the estimator's tail, plus the
/// norms and stable ranks they were derived from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernsteinCertificate {
    pub b_bar: f64,
    pub sigma2_bar: f64,
    pub k_bar: f64,
    pub sr_a: f64,
    pub sr_b: f64,
    pub norm_a: f64,
    pub norm_b: f64,
}

impl BernsteinCertificate {
    /// Certificate for hypothetical unit-spectral-norm matrices with the
    /// given stable ranks; used when only the ranks are known.
    pub fn from_stable_ranks(sr_a: f64, sr_b: f64) -> Result<Self> {
        if !(sr_a >= 1.0 && sr_b >= 1.0) {
            return Err(Error::OutOfRange(format!(
                "stable ranks must be at least 1, got {sr_a} and {sr_b}"
            )));
        }
        Ok(Self {
            b_bar: (sr_a * sr_b).sqrt() + 1.0,
            sigma2_bar: 2.0 * sr_a.max(sr_b),
            k_bar: 2.0 * sr_a.min(sr_b),
            sr_a,
            sr_b,
            norm_a: 1.0,
            norm_b: 1.0,
        })
    }
}

/// Compute the certificate from the matrix pair itself.
pub fn certificate(pair: &PairedMatrices) -> Result<BernsteinCertificate> {
    let stats_a = pair.a().spectral_stats(MEASURE_TOL, MEASURE_MAX_ITER)?;
    let stats_b = pair.b().spectral_stats(MEASURE_TOL, MEASURE_MAX_ITER)?;
    if stats_a.spectral_norm == 0.0 || stats_b.spectral_norm == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let norm_prod = stats_a.spectral_norm * stats_b.spectral_norm;
    Ok(BernsteinCertificate {
        b_bar: stats_a.frobenius_norm * stats_b.frobenius_norm + norm_prod,
        sigma2_bar: 2.0 * stats_a.stable_rank.max(stats_b.stable_rank) * norm_prod * norm_prod,
        k_bar: 2.0 * stats_a.stable_rank.min(stats_b.stable_rank),
        sr_a: stats_a.stable_rank,
        sr_b: stats_b.stable_rank,
        norm_a: stats_a.spectral_norm,
        norm_b: stats_b.spectral_norm,
    })
}

/// The two diagonal blocks of the exact second moment of the centered,
/// dilated atom: `sum_i (1/p_i) ||b_i||^2 a_i a_i^T - (AB^T)(AB^T)^T` on top,
/// the mirrored expression on the bottom. Both are symmetric and positive
/// semidefinite up to round-off.
#[derive(Debug, Clone, PartialEq)]
pub struct DilationSecondMoment {
    pub top_block: DenseMatrix,
    pub bottom_block: DenseMatrix,
}

impl DilationSecondMoment {
    /// Smallest eigenvalue of each block.
    pub fn min_eigenvalues(&self) -> Result<(f64, f64)> {
        let top = symmetric_eigenvalues(&self.top_block)?;
        let bottom = symmetric_eigenvalues(&self.bottom_block)?;
        Ok((
            top.last().copied().unwrap_or(0.0),
            bottom.last().copied().unwrap_or(0.0),
        ))
    }

    /// Operator norm of the block-diagonal second moment: the larger of the
    /// two blocks' largest absolute eigenvalues.
    pub fn operator_norm(&self) -> Result<f64> {
        let mut norm: f64 = 0.0;
        for block in [&self.top_block, &self.bottom_block] {
            for eig in symmetric_eigenvalues(block)? {
                norm = norm.max(eig.abs());
            }
        }
        Ok(norm)
    }

    /// Trace of the full block-diagonal matrix.
    pub fn trace_total(&self) -> f64 {
        self.top_block.trace() + self.bottom_block.trace()
    }
}

/// Evaluate both second-moment blocks by exact summation over the support
/// (no sampling). Fails with `SupportMismatch` when the distribution does
/// not cover every column with a nonzero outer product.
pub fn exact_second_moment(
    pair: &PairedMatrices,
    dist: &SamplingDistribution,
) -> Result<DilationSecondMoment> {
    let n = pair.n();
    if dist.n() != n {
        return Err(Error::SupportMismatch(format!(
            "distribution over {} columns used with a {n}-column pair",
            dist.n()
        )));
    }
    for i in 0..n {
        let nonzero_atom =
            pair.a().column_norm_sq(i) > 0.0 && pair.b().column_norm_sq(i) > 0.0;
        if nonzero_atom && dist.probability(i) <= 0.0 {
            return Err(Error::SupportMismatch(format!(
                "column {i} has a nonzero outer product but zero probability"
            )));
        }
    }
    let (d_a, d_b) = (pair.a().rows(), pair.b().rows());
    let mut top = DenseMatrix::zeros(d_a, d_a);
    let mut bottom = DenseMatrix::zeros(d_b, d_b);
    for &i in dist.support() {
        let inv_p = 1.0 / dist.probability(i);
        let col_a = pair.a().column(i);
        let col_b = pair.b().column(i);
        let a_sq: f64 = col_a.iter().map(|x| x * x).sum();
        let b_sq: f64 = col_b.iter().map(|x| x * x).sum();
        accumulate_symmetric_outer(&mut top, &col_a, inv_p * b_sq);
        accumulate_symmetric_outer(&mut bottom, &col_b, inv_p * a_sq);
    }
    let product = pair.exact_product();
    let top_correction = product.mul_transpose(&product)?;
    let product_t = product.transpose();
    let bottom_correction = product_t.mul_transpose(&product_t)?;
    Ok(DilationSecondMoment {
        top_block: top.sub(&top_correction)?,
        bottom_block: bottom.sub(&bottom_correction)?,
    })
}

/// Deviation of one reweighted atom from the exact product, next to the
/// almost-sure bound it must respect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomMargin {
    pub index: usize,
    /// `|| (1/p_i) a_i b_i^T - A B^T ||`.
    pub deviation_norm: f64,
    /// `b_bar`, the certified almost-sure bound.
    pub bound: f64,
}

impl AtomMargin {
    pub fn within_bound(&self) -> bool {
        self.deviation_norm <= self.bound * (1.0 + CLAIM_RELATIVE_SLACK)
    }

    /// Slack remaining before the bound is violated (negative on violation).
    pub fn margin(&self) -> f64 {
        self.bound - self.deviation_norm
    }
}

/// Per-atom margins for the almost-sure bound, over the whole support.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomBoundReport {
    pub b_bar: f64,
    pub margins: Vec<AtomMargin>,
}

impl AtomBoundReport {
    pub fn violations(&self) -> impl Iterator<Item = &AtomMargin> {
        self.margins.iter().filter(|m| !m.within_bound())
    }

    pub fn all_within(&self) -> bool {
        self.margins.iter().all(AtomMargin::within_bound)
    }

    pub fn worst_margin(&self) -> Option<f64> {
        self.margins
            .iter()
            .map(AtomMargin::margin)
            .min_by(|a, b| a.partial_cmp(b).expect("finite margins"))
    }
}

/// Check `|| (1/p_i) a_i b_i^T - A B^T || <= b_bar` for every support atom
/// of a proposed-scheme distribution. Violations are reported, not thrown.
pub fn verify_atom_bound(
    pair: &PairedMatrices,
    dist: &SamplingDistribution,
) -> Result<AtomBoundReport> {
    if dist.scheme() != SamplingScheme::Proposed {
        return Err(Error::OutOfRange(
            "the almost-sure atom bound is certified for the proposed scheme".into(),
        ));
    }
    if dist.n() != pair.n() {
        return Err(Error::SupportMismatch(format!(
            "distribution over {} columns used with a {}-column pair",
            dist.n(),
            pair.n()
        )));
    }
    let cert = certificate(pair)?;
    let exact = pair.exact_product();
    let mut margins = Vec::with_capacity(dist.support().len());
    for &i in dist.support() {
        let mut deviation = exact.scale(-1.0);
        accumulate_outer(&mut deviation, pair, i, 1.0 / dist.probability(i));
        let norm = deviation.spectral_norm(MEASURE_TOL, MEASURE_MAX_ITER)?;
        margins.push(AtomMargin { index: i, deviation_norm: norm, bound: cert.b_bar });
    }
    Ok(AtomBoundReport { b_bar: cert.b_bar, margins })
}

/// Which written form of the tail bound to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundForm {
    /// Headline form: `sqrt(4 (sr_a max sr_b) t / m) + (sqrt(sr_a sr_b) + 1) t / m`.
    Theorem,
    /// Sharper form from the underlying inequality, with the linear term
    /// divided by three.
    Proof,
}

impl std::fmt::Display for BoundForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BoundForm::Theorem => "theorem",
            BoundForm::Proof => "proof",
        })
    }
}

/// A `(deviation, failure probability)` pair at given `(m, t)`. The
/// deviation is relative: it multiplies `||A|| * ||B||`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEvaluation {
    pub t: f64,
    pub m: usize,
    pub deviation: f64,
    pub failure_prob: f64,
}

impl TailEvaluation {
    /// A failure probability of one or more certifies nothing.
    pub fn is_vacuous(&self) -> bool {
        self.failure_prob >= 1.0
    }
}

/// Evaluate the headline deviation/failure expressions at `(m, t)`.
pub fn tail_bound(cert: &BernsteinCertificate, m: usize, t: f64) -> Result<TailEvaluation> {
    check_tail_args(m, t)?;
    let sr_max = cert.sr_a.max(cert.sr_b);
    let sr_min = cert.sr_a.min(cert.sr_b);
    let mf = m as f64;
    let deviation = (4.0 * sr_max * t / mf).sqrt() + ((cert.sr_a * cert.sr_b).sqrt() + 1.0) * t / mf;
    let failure_prob = 4.0 * sr_min * t / exp_t_minus_t_minus_one(t);
    Ok(TailEvaluation { t, m, deviation, failure_prob })
}

/// Evaluate the sharper underlying form at `(m, t)`: same square-root term,
/// linear term `b_bar t / (3m)` (normalized by `||A|| ||B||`), identical
/// failure probability. Never exceeds [`tail_bound`].
pub fn proof_form_tail(cert: &BernsteinCertificate, m: usize, t: f64) -> Result<TailEvaluation> {
    check_tail_args(m, t)?;
    let norm_prod = cert.norm_a * cert.norm_b;
    let sigma2_rel = cert.sigma2_bar / (norm_prod * norm_prod);
    let b_rel = cert.b_bar / norm_prod;
    let mf = m as f64;
    let deviation = (2.0 * sigma2_rel * t / mf).sqrt() + b_rel * t / (3.0 * mf);
    let failure_prob = 2.0 * cert.k_bar * t / exp_t_minus_t_minus_one(t);
    Ok(TailEvaluation { t, m, deviation, failure_prob })
}

/// Dispatch on [`BoundForm`].
pub fn tail_for(
    form: BoundForm,
    cert: &BernsteinCertificate,
    m: usize,
    t: f64,
) -> Result<TailEvaluation> {
    match form {
        BoundForm::Theorem => tail_bound(cert, m, t),
        BoundForm::Proof => proof_form_tail(cert, m, t),
    }
}

fn check_tail_args(m: usize, t: f64) -> Result<()> {
    if m == 0 {
        return Err(Error::OutOfRange("sample count m must be at least 1".into()));
    }
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::OutOfRange(format!("t must be positive and finite, got {t}")));
    }
    Ok(())
}

/// `e^t - t - 1`, series-expanded near zero to avoid cancellation. Positive
/// for every `t > 0`, so failure probabilities stay finite down to
/// vanishing `t` (where they grow like `2/t` and become vacuous).
fn exp_t_minus_t_minus_one(t: f64) -> f64 {
    if t < 1e-3 {
        t * t * (0.5 + t / 6.0 + t * t / 24.0 + t * t * t / 120.0)
    } else {
        t.exp_m1() - t
    }
}

/// A sample-size recommendation for target relative accuracy `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSizePlan {
    pub epsilon: f64,
    pub c: f64,
    pub m_required: usize,
}

/// `m >= c * ((sr_a max sr_b) / eps^2 + sqrt(sr_a sr_b) / eps) * log(sr_a min sr_b)`,
/// rounded up, with the log factor clamped below at one so the plan never
/// degenerates to zero samples when the smaller stable rank is one.
pub fn required_samples(sr_a: f64, sr_b: f64, epsilon: f64, c: f64) -> Result<SampleSizePlan> {
    if !(sr_a >= 1.0 && sr_b >= 1.0) {
        return Err(Error::OutOfRange(format!(
            "stable ranks must be at least 1, got {sr_a} and {sr_b}"
        )));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::OutOfRange(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if c.is_nan() || c <= 0.0 {
        return Err(Error::OutOfRange(format!("planner constant must be positive, got {c}")));
    }
    let log_factor = clamped_log(sr_a.min(sr_b));
    let rhs = c * (sr_a.max(sr_b) / (epsilon * epsilon) + (sr_a * sr_b).sqrt() / epsilon) * log_factor;
    Ok(SampleSizePlan { epsilon, c, m_required: (rhs.ceil() as usize).max(1) })
}

/// Leading-order sample-complexity expressions of the three schemes,
/// evaluated with unit constants for side-by-side comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompetingBounds {
    /// `(sr_a max sr_b) log(sr_a min sr_b) / eps^2`.
    pub proposed: f64,
    /// `sr_a sr_b log(sr_a sr_b) / eps^2`.
    pub dkm: f64,
    /// `((sr_a max sr_b) + log n) log(sr_a max sr_b) / eps^2`.
    pub rotation: f64,
}

/// Evaluate all three right-hand sides (constants taken as one, logs clamped
/// below at one).
pub fn competing_bounds(sr_a: f64, sr_b: f64, epsilon: f64, n: usize) -> Result<CompetingBounds> {
    if !(sr_a >= 1.0 && sr_b >= 1.0) {
        return Err(Error::OutOfRange(format!(
            "stable ranks must be at least 1, got {sr_a} and {sr_b}"
        )));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::OutOfRange(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if n == 0 {
        return Err(Error::OutOfRange("column count n must be positive".into()));
    }
    let eps_sq = epsilon * epsilon;
    let sr_max = sr_a.max(sr_b);
    Ok(CompetingBounds {
        proposed: sr_max * clamped_log(sr_a.min(sr_b)) / eps_sq,
        dkm: sr_a * sr_b * clamped_log(sr_a * sr_b) / eps_sq,
        rotation: (sr_max + (n as f64).ln()) * clamped_log(sr_max) / eps_sq,
    })
}

fn clamped_log(x: f64) -> f64 {
    x.ln().max(1.0)
}

/// Definiteness, operator-norm and trace checks on the exact second moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondMomentChecks {
    pub min_eig_top: f64,
    pub min_eig_bottom: f64,
    pub block_norm_top: f64,
    pub block_norm_bottom: f64,
    pub operator_norm: f64,
    pub variance_bound: f64,
    pub trace_total: f64,
    pub trace_bound: f64,
}

impl SecondMomentChecks {
    pub fn psd_ok(&self) -> bool {
        self.min_eig_top >= -CLAIM_RELATIVE_SLACK * self.block_norm_top
            && self.min_eig_bottom >= -CLAIM_RELATIVE_SLACK * self.block_norm_bottom
    }

    pub fn variance_ok(&self) -> bool {
        self.operator_norm <= self.variance_bound * (1.0 + CLAIM_RELATIVE_SLACK)
    }

    pub fn trace_ok(&self) -> bool {
        self.trace_total <= self.trace_bound * (1.0 + CLAIM_RELATIVE_SLACK)
    }
}

/// Everything [`verify_estimator`] measures for one matrix pair.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub certificate: BernsteinCertificate,
    pub atom_bound: AtomBoundReport,
    pub second_moment: SecondMomentChecks,
    /// Relative Frobenius distance between the estimator's exact expectation
    /// and `A B^T`, per scheme.
    pub unbiasedness: Vec<(SamplingScheme, f64)>,
}

impl VerificationReport {
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for v in self.atom_bound.violations() {
            out.push(format!(
                "atom {} deviates by {:.6e}, above the almost-sure bound {:.6e}",
                v.index, v.deviation_norm, v.bound
            ));
        }
        if !self.second_moment.psd_ok() {
            out.push(format!(
                "second moment not PSD: min eigenvalues {:.6e} / {:.6e}",
                self.second_moment.min_eig_top, self.second_moment.min_eig_bottom
            ));
        }
        if !self.second_moment.variance_ok() {
            out.push(format!(
                "second moment norm {:.6e} exceeds variance bound {:.6e}",
                self.second_moment.operator_norm, self.second_moment.variance_bound
            ));
        }
        if !self.second_moment.trace_ok() {
            out.push(format!(
                "second moment trace {:.6e} exceeds trace bound {:.6e}",
                self.second_moment.trace_total, self.second_moment.trace_bound
            ));
        }
        for &(scheme, err) in &self.unbiasedness {
            if err > UNBIASEDNESS_TOL {
                out.push(format!(
                    "{scheme} scheme expectation differs from the exact product by {err:.6e}"
                ));
            }
        }
        out
    }

    pub fn passes(&self) -> bool {
        self.failures().is_empty()
    }
}

/// Run every certificate check against a matrix pair: the per-atom
/// almost-sure bound and the second-moment inequalities under the proposed
/// scheme, plus the unbiasedness identity under all three schemes.
pub fn verify_estimator(pair: &PairedMatrices) -> Result<VerificationReport> {
    let cert = certificate(pair)?;
    let proposed = build_distribution(pair, SamplingScheme::Proposed)?;
    let atom_bound = verify_atom_bound(pair, &proposed)?;

    let moment = exact_second_moment(pair, &proposed)?;
    let (min_top, min_bottom) = moment.min_eigenvalues()?;
    let norm_top = symmetric_eigenvalues(&moment.top_block)?
        .iter()
        .fold(0.0f64, |acc, e| acc.max(e.abs()));
    let norm_bottom = symmetric_eigenvalues(&moment.bottom_block)?
        .iter()
        .fold(0.0f64, |acc, e| acc.max(e.abs()));
    let norm_prod = cert.norm_a * cert.norm_b;
    let second_moment = SecondMomentChecks {
        min_eig_top: min_top,
        min_eig_bottom: min_bottom,
        block_norm_top: norm_top,
        block_norm_bottom: norm_bottom,
        operator_norm: norm_top.max(norm_bottom),
        variance_bound: cert.sigma2_bar,
        trace_total: moment.trace_total(),
        trace_bound: 4.0 * cert.sr_a * cert.sr_b * norm_prod * norm_prod,
    };

    let exact = pair.exact_product();
    let exact_fro = exact.frobenius_norm();
    let scale = if exact_fro > 0.0 {
        exact_fro
    } else {
        pair.a().frobenius_norm() * pair.b().frobenius_norm()
    };
    let mut unbiasedness = Vec::new();
    for scheme in SamplingScheme::ALL {
        let dist = build_distribution(pair, scheme)?;
        let expectation = expected_estimate(pair, &dist)?;
        let err = expectation.sub(&exact)?.frobenius_norm() / scale;
        unbiasedness.push((scheme, err));
    }

    Ok(VerificationReport { certificate: cert, atom_bound, second_moment, unbiasedness })
}

/// `target += weight * v v^T`.
fn accumulate_symmetric_outer(target: &mut DenseMatrix, v: &[f64], weight: f64) {
    let n = v.len();
    let entries = target.entries_mut();
    for (r, &vr) in v.iter().enumerate() {
        if vr == 0.0 {
            continue;
        }
        let scaled = weight * vr;
        let row = &mut entries[r * n..(r + 1) * n];
        for (cell, &vc) in row.iter_mut().zip(v) {
            *cell += scaled * vc;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_matrix, spectrum_for_target_sr};

    fn identity_pair(n: usize) -> PairedMatrices {
        PairedMatrices::new(DenseMatrix::identity(n), DenseMatrix::identity(n)).unwrap()
    }

    fn generated_pair(d: usize, n: usize, sr: f64, seed: u64) -> PairedMatrices {
        let spectrum = spectrum_for_target_sr(sr, d).unwrap();
        let a = generate_matrix(d, n, &spectrum, seed).unwrap();
        let b = generate_matrix(d, n, &spectrum, seed.wrapping_add(1)).unwrap();
        PairedMatrices::new(a, b).unwrap()
    }

    #[test]
    fn certificate_of_identity_pair() {
        let cert = certificate(&identity_pair(2)).unwrap();
        assert!((cert.b_bar - 3.0).abs() < 1e-9);
        assert!((cert.sigma2_bar - 4.0).abs() < 1e-9);
        assert!((cert.k_bar - 4.0).abs() < 1e-9);
        assert!((cert.sr_a - 2.0).abs() < 1e-9);
    }

    #[test]
    fn certificate_of_rank_one_pair() {
        let m = DenseMatrix::new(2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let pair = PairedMatrices::new(m.clone(), m).unwrap();
        let cert = certificate(&pair).unwrap();
        assert!((cert.b_bar - 2.0).abs() < 1e-9);
        assert!((cert.sigma2_bar - 2.0).abs() < 1e-9);
        assert!((cert.k_bar - 2.0).abs() < 1e-9);
    }

    #[test]
    fn k_bar_identity_holds_on_random_instances() {
        for seed in 0..5 {
            let pair = generated_pair(6, 40, 3.0, 100 + seed);
            let cert = certificate(&pair).unwrap();
            let np = cert.norm_a * cert.norm_b;
            let recomputed = 4.0 * cert.sr_a * cert.sr_b * np * np / cert.sigma2_bar;
            assert!(
                (cert.k_bar - recomputed).abs() <= 1e-10 * recomputed,
                "{} vs {recomputed}",
                cert.k_bar
            );
        }
    }

    #[test]
    fn tail_bound_matches_hand_evaluation() {
        let cert = BernsteinCertificate::from_stable_ranks(1.0, 1.0).unwrap();
        let tail = tail_bound(&cert, 100, 5.0).unwrap();
        let expected_dev = 0.2f64.sqrt() + 0.1;
        assert!((tail.deviation - expected_dev).abs() < 1e-12);
        let expected_fail = 20.0 / (5f64.exp() - 6.0);
        assert!((tail.failure_prob - expected_fail).abs() < 1e-12);
        assert!((expected_fail - 0.140436).abs() < 1e-6);
        assert!(!tail.is_vacuous());
    }

    #[test]
    fn proof_form_matches_hand_evaluation_and_shares_failure() {
        let cert = BernsteinCertificate::from_stable_ranks(1.0, 1.0).unwrap();
        let tail = proof_form_tail(&cert, 100, 5.0).unwrap();
        let expected_dev = 0.2f64.sqrt() + 2.0 * 5.0 / 300.0;
        assert!((tail.deviation - expected_dev).abs() < 1e-12);
        let theorem = tail_bound(&cert, 100, 5.0).unwrap();
        assert_eq!(tail.failure_prob, theorem.failure_prob);
    }

    #[test]
    fn proof_form_never_exceeds_theorem_form() {
        for seed in 0..4u64 {
            let sr_a = 1.0 + (seed as f64) * 2.7;
            let sr_b = 1.0 + ((seed * 7 + 3) % 11) as f64;
            let cert = BernsteinCertificate::from_stable_ranks(sr_a, sr_b).unwrap();
            for t in [1.0, 2.0, 5.0, 10.0] {
                for m in [10, 100, 1000] {
                    let proof = proof_form_tail(&cert, m, t).unwrap();
                    let theorem = tail_bound(&cert, m, t).unwrap();
                    assert!(
                        proof.deviation <= theorem.deviation + 1e-15,
                        "sr ({sr_a},{sr_b}) t {t} m {m}"
                    );
                }
            }
        }
    }

    #[test]
    fn tiny_t_is_finite_and_vacuous() {
        let cert = BernsteinCertificate::from_stable_ranks(2.0, 2.0).unwrap();
        let tail = tail_bound(&cert, 100, 1e-12).unwrap();
        assert!(tail.failure_prob.is_finite());
        assert!(tail.is_vacuous());
        // near zero the denominator behaves like t^2/2, so failure ~ 16/t
        assert!((tail.failure_prob - 8.0 * 2.0 / 1e-12).abs() / tail.failure_prob < 1e-3);
        assert!(tail_bound(&cert, 100, 0.0).is_err());
        assert!(tail_bound(&cert, 0, 1.0).is_err());
    }

    #[test]
    fn failure_decreases_in_t_and_deviation_decreases_in_m() {
        let cert = BernsteinCertificate::from_stable_ranks(4.0, 7.0).unwrap();
        let mut prev = f64::INFINITY;
        for t in [3.0, 4.0, 5.0, 7.0, 10.0, 20.0] {
            let tail = tail_bound(&cert, 50, t).unwrap();
            assert!(tail.failure_prob < prev, "t {t}");
            prev = tail.failure_prob;
        }
        let mut prev = f64::INFINITY;
        for m in [10, 40, 160, 640] {
            let tail = tail_bound(&cert, m, 5.0).unwrap();
            assert!(tail.deviation < prev, "m {m}");
            prev = tail.deviation;
        }
    }

    #[test]
    fn planner_matches_hand_evaluation() {
        let plan = required_samples(16.0, 16.0, 0.5, 1.0).unwrap();
        assert_eq!(plan.m_required, 267);
        // log(1) clamps to 1
        let plan = required_samples(1.0, 1.0, 0.5, 1.0).unwrap();
        assert_eq!(plan.m_required, (1.0f64 / 0.25 + 1.0 / 0.5).ceil() as usize);
        assert!(required_samples(16.0, 16.0, 1.5, 1.0).is_err());
        assert!(required_samples(0.5, 16.0, 0.5, 1.0).is_err());
        assert!(required_samples(16.0, 16.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn planner_is_monotone() {
        let base = required_samples(4.0, 4.0, 0.25, 2.0).unwrap().m_required;
        for sr in [4.0, 6.0, 9.0, 16.0] {
            for eps in [0.25, 0.2, 0.1] {
                let m = required_samples(sr, 4.0, eps, 2.0).unwrap().m_required;
                assert!(m >= base);
                let m_tight = required_samples(sr, 4.0, eps / 2.0, 2.0).unwrap().m_required;
                assert!(m_tight >= m);
            }
        }
    }

    #[test]
    fn competing_bounds_match_hand_evaluation() {
        let b = competing_bounds(1.0, 1.0, 0.5, 64).unwrap();
        assert!((b.proposed - 4.0).abs() < 1e-12);
        assert!((b.dkm - 4.0).abs() < 1e-12);
        assert!((b.rotation - (1.0 + 64f64.ln()) * 4.0).abs() < 1e-12);

        let b = competing_bounds(16.0, 16.0, 0.5, 64).unwrap();
        assert!((b.proposed * 0.25 - 16.0 * 16f64.ln()).abs() < 1e-9);
        assert!((b.dkm * 0.25 - 256.0 * 256f64.ln()).abs() < 1e-9);
        assert!((b.dkm / b.proposed - 32.0).abs() < 0.1);

        let b = competing_bounds(100.0, 2.0, 0.5, 64).unwrap();
        assert!((b.proposed * 0.25 - 100.0 * 1.0).abs() < 1e-9); // log(2) clamps to 1
        assert!((b.dkm * 0.25 - 200.0 * 200f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn second_moment_vanishes_for_single_column() {
        let a = DenseMatrix::new(2, 1, vec![1.0, 2.0]).unwrap();
        let b = DenseMatrix::new(3, 1, vec![3.0, 4.0, 5.0]).unwrap();
        let pair = PairedMatrices::new(a, b).unwrap();
        let dist = build_distribution(&pair, SamplingScheme::Proposed).unwrap();
        let moment = exact_second_moment(&pair, &dist).unwrap();
        assert!(moment.top_block.frobenius_norm() < 1e-12);
        assert!(moment.bottom_block.frobenius_norm() < 1e-12);
    }

    #[test]
    fn second_moment_of_scaled_identity_matches_hand_value() {
        // A = B = 2I_3: both blocks equal 32 I
        let m = DenseMatrix::identity(3).scale(2.0);
        let pair = PairedMatrices::new(m.clone(), m).unwrap();
        let dist = build_distribution(&pair, SamplingScheme::Proposed).unwrap();
        let moment = exact_second_moment(&pair, &dist).unwrap();
        let expected = DenseMatrix::identity(3).scale(32.0);
        assert!(moment.top_block.sub(&expected).unwrap().frobenius_norm() < 1e-10);
        assert!(moment.bottom_block.sub(&expected).unwrap().frobenius_norm() < 1e-10);
        let (lo_top, lo_bottom) = moment.min_eigenvalues().unwrap();
        assert!(lo_top > 0.0 && lo_bottom > 0.0);
    }

    #[test]
    fn second_moment_respects_certificate_on_random_instances() {
        for seed in 0..6u64 {
            let pair = generated_pair(5, 30, 2.5, 500 + seed);
            let cert = certificate(&pair).unwrap();
            let dist = build_distribution(&pair, SamplingScheme::Proposed).unwrap();
            let moment = exact_second_moment(&pair, &dist).unwrap();
            let op = moment.operator_norm().unwrap();
            assert!(op <= cert.sigma2_bar * (1.0 + 1e-8), "seed {seed}");
            let np = cert.norm_a * cert.norm_b;
            let trace_bound = 4.0 * cert.sr_a * cert.sr_b * np * np;
            assert!(moment.trace_total() <= trace_bound * (1.0 + 1e-8), "seed {seed}");
            let (lo_t, lo_b) = moment.min_eigenvalues().unwrap();
            assert!(lo_t >= -1e-8 * op && lo_b >= -1e-8 * op, "seed {seed}");
        }
    }

    #[test]
    fn second_moment_rejects_uncovering_distribution() {
        // distribution built from a pair whose second column is dead, applied
        // to a pair where that column matters
        let live = PairedMatrices::new(
            DenseMatrix::new(1, 2, vec![1.0, 1.0]).unwrap(),
            DenseMatrix::new(1, 2, vec![1.0, 1.0]).unwrap(),
        )
        .unwrap();
        let dead = PairedMatrices::new(
            DenseMatrix::new(1, 2, vec![1.0, 0.0]).unwrap(),
            DenseMatrix::new(1, 2, vec![1.0, 0.0]).unwrap(),
        )
        .unwrap();
        let narrow = build_distribution(&dead, SamplingScheme::Dkm).unwrap();
        assert!(matches!(
            exact_second_moment(&live, &narrow),
            Err(Error::SupportMismatch(_))
        ));
    }

    #[test]
    fn atom_bound_on_identity_pair() {
        let pair = identity_pair(2);
        let dist = build_distribution(&pair, SamplingScheme::Proposed).unwrap();
        let report = verify_atom_bound(&pair, &dist).unwrap();
        assert_eq!(report.margins.len(), 2);
        // each atom is 2 e_i e_i^T - I with eigenvalues +-1
        for margin in &report.margins {
            assert!((margin.deviation_norm - 1.0).abs() < 1e-9);
            assert!((margin.bound - 3.0).abs() < 1e-9);
        }
        assert!(report.all_within());
    }

    #[test]
    fn atom_bound_trivial_for_single_column() {
        let a = DenseMatrix::new(2, 1, vec![1.0, 2.0]).unwrap();
        let pair = PairedMatrices::new(a.clone(), a).unwrap();
        let dist = build_distribution(&pair, SamplingScheme::Proposed).unwrap();
        let report = verify_atom_bound(&pair, &dist).unwrap();
        assert_eq!(report.margins.len(), 1);
        assert!(report.margins[0].deviation_norm < 1e-12);
    }

    #[test]
    fn atom_bound_requires_proposed_scheme() {
        let pair = identity_pair(2);
        let dist = build_distribution(&pair, SamplingScheme::Dkm).unwrap();
        assert!(verify_atom_bound(&pair, &dist).is_err());
    }

    #[test]
    fn full_verification_passes_on_random_instances() {
        for seed in 0..4u64 {
            let pair = generated_pair(6, 48, 3.0, 900 + seed);
            let report = verify_estimator(&pair).unwrap();
            assert!(report.passes(), "seed {seed}: {:?}", report.failures());
        }
    }
}
