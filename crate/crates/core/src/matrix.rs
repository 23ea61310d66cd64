//! Dense row-major matrices and the spectral quantities the rest of the
//! crate is built on: Frobenius norm, spectral norm via power iteration,
//! stable rank, exact products of paired matrices, and a small symmetric
//! eigensolver for definiteness checks.
//!
//! Everything here is a pure function of its inputs; matrices are immutable
//! after construction and all entries are validated to be finite.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::prng::mix64;

/// Default relative tolerance for the power-iteration spectral norm.
pub const DEFAULT_SPECTRAL_TOL: f64 = 1e-10;
/// Default iteration budget for the power-iteration spectral norm.
pub const DEFAULT_SPECTRAL_MAX_ITER: usize = 10_000;

/// Settings used when a spectral norm feeds an error measurement or a
/// certificate rather than being reported directly: slightly looser
/// tolerance, much larger budget, so clustered singular values on random
/// error matrices cannot stall a long Monte Carlo run.
pub(crate) const MEASURE_TOL: f64 = 1e-9;
pub(crate) const MEASURE_MAX_ITER: usize = 400_000;

/// Dense real matrix in row-major order. Construction validates that the
/// entry count matches `rows * cols` and that every entry is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if let Some(pos) = entries.iter().position(|e| !e.is_finite()) {
            return Err(Error::NonFinite(format!(
                "entry {pos} is {}",
                entries[pos]
            )));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.entries[i * n + i] = 1.0;
        }
        m
    }

    /// Square diagonal matrix from the given values.
    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.entries[i * n + i] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        debug_assert!(row < self.rows && col < self.cols);
        self.entries[row * self.cols + col]
    }

    pub(crate) fn entries_mut(&mut self) -> &mut [f64] {
        &mut self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&e| e == 0.0)
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        debug_assert!(col < self.cols);
        (0..self.rows).map(|r| self.entries[r * self.cols + col]).collect()
    }

    pub fn column_norm_sq(&self, col: usize) -> f64 {
        debug_assert!(col < self.cols);
        (0..self.rows)
            .map(|r| {
                let e = self.entries[r * self.cols + col];
                e * e
            })
            .sum()
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.entries[c * self.rows + r] = self.entries[r * self.cols + c];
            }
        }
        out
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| alpha * e).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "cannot subtract {}x{} from {}x{}",
                other.rows, other.cols, self.rows, self.cols
            )));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self { rows: self.rows, cols: self.cols, entries })
    }

    /// `self * other^T`; both matrices must share their column count.
    pub fn mul_transpose(&self, other: &Self) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "inner dimensions differ: {} vs {}",
                self.cols, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let a_row = &self.entries[i * self.cols..(i + 1) * self.cols];
            for j in 0..other.rows {
                let b_row = &other.entries[j * other.cols..(j + 1) * other.cols];
                out.entries[i * other.rows + j] =
                    a_row.iter().zip(b_row).map(|(x, y)| x * y).sum();
            }
        }
        Ok(out)
    }

    /// Matrix-vector product; `v.len()` must equal `self.cols`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "vector length must match column count");
        (0..self.rows)
            .map(|r| {
                let row = &self.entries[r * self.cols..(r + 1) * self.cols];
                row.iter().zip(v).map(|(a, x)| a * x).sum()
            })
            .collect()
    }

    pub fn trace(&self) -> f64 {
        debug_assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self.entries[i * self.cols + i]).sum()
    }

    /// Square root of the sum of squared entries.
    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|e| e * e).sum::<f64>().sqrt()
    }

    /// Largest singular value via power iteration on the smaller Gram matrix.
    ///
    /// Starts from the normalized all-ones vector and stops once the relative
    /// Rayleigh-quotient residual drops below `tol`. A perturbed restart
    /// confirms the result, which escapes the one failure mode of the fixed
    /// start vector: being exactly orthogonal to the dominant eigenvector.
    pub fn spectral_norm(&self, tol: f64, max_iter: usize) -> Result<f64> {
        if tol.is_nan() || tol <= 0.0 {
            return Err(Error::OutOfRange(format!("tol must be positive, got {tol}")));
        }
        if self.is_zero() {
            return Ok(0.0);
        }
        let gram = self.smaller_gram();
        Ok(dominant_eigenvalue(&gram, tol, max_iter)?.max(0.0).sqrt())
    }

    /// [`spectral_norm`](Self::spectral_norm) with the crate defaults.
    pub fn spectral_norm_default(&self) -> Result<f64> {
        self.spectral_norm(DEFAULT_SPECTRAL_TOL, DEFAULT_SPECTRAL_MAX_ITER)
    }

    /// `||M||_F^2 / ||M||^2`, in `[1, min(rows, cols)]` for nonzero matrices.
    pub fn stable_rank(&self) -> Result<f64> {
        if self.is_zero() {
            return Err(Error::ZeroMatrix);
        }
        let fro = self.frobenius_norm();
        let spec = self.spectral_norm_default()?;
        Ok((fro / spec) * (fro / spec))
    }

    /// Spectral norm, Frobenius norm and stable rank in one pass. The zero
    /// matrix reports all three as zero.
    pub fn spectral_stats(&self, tol: f64, max_iter: usize) -> Result<SpectralStats> {
        if self.is_zero() {
            return Ok(SpectralStats { spectral_norm: 0.0, frobenius_norm: 0.0, stable_rank: 0.0 });
        }
        let frobenius_norm = self.frobenius_norm();
        let spectral_norm = self.spectral_norm(tol, max_iter)?;
        let ratio = frobenius_norm / spectral_norm;
        Ok(SpectralStats { spectral_norm, frobenius_norm, stable_rank: ratio * ratio })
    }

    /// The smaller of `M M^T` and `M^T M`, always symmetric PSD.
    fn smaller_gram(&self) -> DenseMatrix {
        if self.rows <= self.cols {
            self.mul_transpose(self).expect("shared column count")
        } else {
            let t = self.transpose();
            t.mul_transpose(&t).expect("shared column count")
        }
    }

    /// Serialize as CSV: a `# rows cols` header line, then one matrix row per
    /// line with entries in shortest round-trippable decimal form.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {} {}", self.rows, self.cols);
        for r in 0..self.rows {
            let row = &self.entries[r * self.cols..(r + 1) * self.cols];
            for (c, e) in row.iter().enumerate() {
                if c > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{e}");
            }
            out.push('\n');
        }
        out
    }

    /// Parse the CSV form accepted by [`to_csv`](Self::to_csv). The header is
    /// optional; when present it must agree with the body.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut declared: Option<(usize, usize)> = None;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(header) = line.strip_prefix('#') {
                if declared.is_some() || !rows.is_empty() {
                    return Err(Error::Parse(format!(
                        "line {}: unexpected header line", lineno + 1
                    )));
                }
                let mut parts = header.split_whitespace();
                let r = parts.next().and_then(|s| s.parse::<usize>().ok());
                let c = parts.next().and_then(|s| s.parse::<usize>().ok());
                match (r, c, parts.next()) {
                    (Some(r), Some(c), None) => declared = Some((r, c)),
                    _ => {
                        return Err(Error::Parse(format!(
                            "line {}: header must be '# rows cols'", lineno + 1
                        )))
                    }
                }
                continue;
            }
            let row = line
                .split(',')
                .map(|cell| {
                    cell.trim().parse::<f64>().map_err(|_| {
                        Error::Parse(format!("line {}: bad scalar '{}'", lineno + 1, cell.trim()))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            if let Some(first) = rows.first() {
                if row.len() != first.len() {
                    return Err(Error::Parse(format!(
                        "line {}: expected {} columns, got {}",
                        lineno + 1,
                        first.len(),
                        row.len()
                    )));
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Parse("no matrix rows found".into()));
        }
        let (nrows, ncols) = (rows.len(), rows[0].len());
        if let Some((dr, dc)) = declared {
            if (dr, dc) != (nrows, ncols) {
                return Err(Error::Parse(format!(
                    "header declares {dr}x{dc} but body is {nrows}x{ncols}"
                )));
            }
        }
        DenseMatrix::new(nrows, ncols, rows.into_iter().flatten().collect())
    }
}

/// Norm summary of a single matrix.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SpectralStats {
    pub spectral_norm: f64,
    pub frobenius_norm: f64,
    pub stable_rank: f64,
}

/// The input pair `(A, B)` sharing a column count `n`; the target of every
/// estimate is `A B^T`.
///
/// Construction requires at least one column index where both factors are
/// nonzero, so the product is a nontrivial sum of outer products and every
/// sampling scheme has nonempty support.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedMatrices {
    a: DenseMatrix,
    b: DenseMatrix,
}

impl PairedMatrices {
    pub fn new(a: DenseMatrix, b: DenseMatrix) -> Result<Self> {
        if a.cols() != b.cols() {
            return Err(Error::DimensionMismatch(format!(
                "column counts differ: {} vs {}",
                a.cols(),
                b.cols()
            )));
        }
        let paired_nonzero = (0..a.cols())
            .any(|i| a.column_norm_sq(i) > 0.0 && b.column_norm_sq(i) > 0.0);
        if !paired_nonzero {
            return Err(Error::DegenerateWeights);
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn b(&self) -> &DenseMatrix {
        &self.b
    }

    /// Shared column count.
    pub fn n(&self) -> usize {
        self.a.cols()
    }

    /// The exact product `A B^T`, the ground truth for every error
    /// measurement.
    pub fn exact_product(&self) -> DenseMatrix {
        self.a.mul_transpose(&self.b).expect("validated column counts")
    }
}

/// All eigenvalues of a symmetric matrix by cyclic Jacobi rotations, sorted
/// in nonincreasing order. Used for the definiteness and operator-norm
/// checks on the symmetric blocks of exact second moments, where the bottom
/// of the spectrum matters and power iteration does not reach it.
pub fn symmetric_eigenvalues(m: &DenseMatrix) -> Result<Vec<f64>> {
    if m.rows() != m.cols() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    let fro = m.frobenius_norm();
    if fro == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut a = m.entries().to_vec();
    for _sweep in 0..64 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if (2.0 * off).sqrt() <= 1e-13 * fro {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[r * n + p];
                    let arq = a[r * n + q];
                    let new_p = c * arp - s * arq;
                    let new_q = s * arp + c * arq;
                    a[r * n + p] = new_p;
                    a[p * n + r] = new_p;
                    a[r * n + q] = new_q;
                    a[q * n + r] = new_q;
                }
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eigs.sort_by(|x, y| y.partial_cmp(x).expect("finite eigenvalues"));
    Ok(eigs)
}

struct PowerOutcome {
    theta: f64,
    vector: Vec<f64>,
    residual: f64,
    converged: bool,
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration with a
/// Rayleigh-quotient residual stop. `budget` counts matrix-vector products
/// and is shared between the main run and the confirmation run.
fn dominant_eigenvalue(gram: &DenseMatrix, tol: f64, max_iter: usize) -> Result<f64> {
    let k = gram.rows();
    let mut budget = max_iter;
    let ones = vec![1.0 / (k as f64).sqrt(); k];
    let first = power_converge(gram, ones, tol, &mut budget);
    if !first.converged {
        return Err(Error::NonConvergence {
            iterations: max_iter,
            residual: first.residual / first.theta.max(f64::MIN_POSITIVE),
        });
    }
    // Restart from a perturbed copy of the converged vector. If the fixed
    // start was trapped in a lower eigenspace, the perturbation's component
    // along the dominant eigenvector gets amplified and theta rises.
    let noise = unit_noise_vector(k);
    let mut perturbed: Vec<f64> = first
        .vector
        .iter()
        .zip(&noise)
        .map(|(v, z)| v + 1e-3 * z)
        .collect();
    normalize(&mut perturbed);
    let second = power_converge(gram, perturbed, tol, &mut budget);
    if second.theta > first.theta * (1.0 + 4.0 * tol) {
        if !second.converged {
            return Err(Error::NonConvergence {
                iterations: max_iter,
                residual: second.residual / second.theta.max(f64::MIN_POSITIVE),
            });
        }
        return Ok(second.theta);
    }
    Ok(first.theta)
}

fn power_converge(gram: &DenseMatrix, start: Vec<f64>, tol: f64, budget: &mut usize) -> PowerOutcome {
    let k = gram.rows();
    let gram_fro = gram.frobenius_norm();
    let mut v = start;
    let mut theta = 0.0;
    let mut residual = f64::INFINITY;
    while *budget > 0 {
        *budget -= 1;
        let gv = gram.apply(&v);
        let gv_norm = gv.iter().map(|x| x * x).sum::<f64>().sqrt();
        if gv_norm <= 1e-18 * gram_fro {
            // start vector is (numerically) in the null space; switch to the
            // seeded noise vector, which has mass on the range generically
            v = unit_noise_vector(k);
            continue;
        }
        theta = v.iter().zip(&gv).map(|(a, b)| a * b).sum();
        residual = v
            .iter()
            .zip(&gv)
            .map(|(vi, gvi)| {
                let d = gvi - theta * vi;
                d * d
            })
            .sum::<f64>()
            .sqrt();
        if theta > 0.0 && residual <= tol * theta {
            return PowerOutcome { theta, vector: v, residual, converged: true };
        }
        for (vi, gvi) in v.iter_mut().zip(&gv) {
            *vi = gvi / gv_norm;
        }
    }
    PowerOutcome { theta, vector: v, residual, converged: false }
}

/// Deterministic unit pseudo-noise vector used for restarts.
fn unit_noise_vector(k: usize) -> Vec<f64> {
    let mut state = 0x5bd1_e995_u64 ^ (k as u64);
    let mut v: Vec<f64> = (0..k)
        .map(|_| {
            state = mix64(state);
            (state >> 11) as f64 * (1.0 / (1u64 << 53) as f64) - 0.5
        })
        .collect();
    normalize(&mut v);
    v
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    } else if let Some(first) = v.first_mut() {
        *first = 1.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: usize, cols: usize, entries: &[f64]) -> DenseMatrix {
        DenseMatrix::new(rows, cols, entries.to_vec()).unwrap()
    }

    #[test]
    fn construction_validates_shape_and_finiteness() {
        assert!(matches!(
            DenseMatrix::new(2, 2, vec![1.0; 3]),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            DenseMatrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(
            DenseMatrix::new(0, 2, vec![]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn frobenius_norm_known_values() {
        assert!((DenseMatrix::identity(2).frobenius_norm() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(DenseMatrix::diagonal(&[3.0, 4.0]).frobenius_norm(), 5.0);
    }

    #[test]
    fn frobenius_norm_matches_entrywise_accumulation() {
        // independent oracle: plain running sum over entries
        let mut state = 42u64;
        let entries: Vec<f64> = (0..64)
            .map(|_| {
                state = crate::prng::mix64(state);
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect();
        let m = mat(8, 8, &entries);
        let mut acc = 0.0;
        for &e in &entries {
            acc += e * e;
        }
        let oracle = acc.sqrt();
        assert!((m.frobenius_norm() - oracle).abs() <= 1e-12 * oracle);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let m = DenseMatrix::diagonal(&[3.0, 4.0]);
        let s = m.spectral_norm_default().unwrap();
        assert!((s - 4.0).abs() < 1e-9, "{s}");
    }

    #[test]
    fn spectral_norm_of_rank_one_outer_product() {
        // a = (1,2), b = (3,0): ||a b^T|| = ||a|| * ||b|| = 3 sqrt(5)
        let m = mat(2, 2, &[3.0, 0.0, 6.0, 0.0]);
        let s = m.spectral_norm_default().unwrap();
        let expected = 3.0 * 5f64.sqrt();
        assert!((s - expected).abs() < 1e-9 * expected, "{s} vs {expected}");
    }

    #[test]
    fn spectral_norm_handles_start_vector_in_null_space() {
        // rows sum to zero, so the all-ones start maps to zero exactly
        let m = mat(2, 2, &[1.0, -1.0, 1.0, -1.0]);
        let s = m.spectral_norm_default().unwrap();
        assert!((s - 2.0).abs() < 1e-9, "{s}");
    }

    #[test]
    fn spectral_norm_escapes_start_orthogonal_to_dominant_eigenvector() {
        // gram of this matrix is [[10,-6],[-6,10]]: eigenvector (1,1) has
        // eigenvalue 4 while the dominant pair is ((1,-1), 16)
        let m = mat(2, 2, &[1.0, -3.0, -3.0, 1.0]);
        let s = m.spectral_norm_default().unwrap();
        assert!((s - 4.0).abs() < 1e-9, "{s}");
    }

    #[test]
    fn spectral_norm_rejects_bad_tolerance() {
        let m = DenseMatrix::identity(2);
        assert!(matches!(m.spectral_norm(0.0, 10), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn spectral_norm_reports_non_convergence() {
        // top eigenvalues 1e-5 apart: far more than 50 products needed at 1e-10
        let m = DenseMatrix::diagonal(&[1.0, 1.0 - 5e-6]);
        assert!(matches!(
            m.spectral_norm(1e-10, 50),
            Err(Error::NonConvergence { .. })
        ));
    }

    #[test]
    fn spectral_norm_is_transpose_invariant() {
        // tall and wide orientations pick different Gram sides
        let m = mat(2, 4, &[1.0, -2.0, 0.5, 3.0, 0.0, 1.5, -1.0, 2.5]);
        let wide = m.spectral_norm_default().unwrap();
        let tall = m.transpose().spectral_norm_default().unwrap();
        assert!((wide - tall).abs() <= 1e-9 * wide);
    }

    #[test]
    fn stable_rank_known_values() {
        assert!((DenseMatrix::identity(5).stable_rank().unwrap() - 5.0).abs() < 1e-9);
        let d = DenseMatrix::diagonal(&[2.0, 1.0, 1.0]);
        assert!((d.stable_rank().unwrap() - 1.5).abs() < 1e-9);
        // any rank-1 matrix has stable rank 1
        let r1 = mat(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert!((r1.stable_rank().unwrap() - 1.0).abs() < 1e-8);
        assert!(matches!(DenseMatrix::zeros(2, 2).stable_rank(), Err(Error::ZeroMatrix)));
    }

    #[test]
    fn spectral_stats_of_zero_matrix() {
        let stats = DenseMatrix::zeros(3, 2).spectral_stats(1e-10, 100).unwrap();
        assert_eq!(stats.spectral_norm, 0.0);
        assert_eq!(stats.frobenius_norm, 0.0);
        assert_eq!(stats.stable_rank, 0.0);
    }

    #[test]
    fn exact_product_of_identities() {
        let p = PairedMatrices::new(DenseMatrix::identity(2), DenseMatrix::identity(2)).unwrap();
        assert_eq!(p.exact_product(), DenseMatrix::identity(2));
    }

    #[test]
    fn exact_product_single_column_outer() {
        let a = mat(2, 1, &[1.0, 2.0]);
        let b = mat(2, 1, &[3.0, 4.0]);
        let p = PairedMatrices::new(a, b).unwrap();
        assert_eq!(p.exact_product(), mat(2, 2, &[3.0, 4.0, 6.0, 8.0]));
    }

    #[test]
    fn exact_product_matches_outer_sum_oracle() {
        let mut state = 9u64;
        let mut draw = || {
            state = crate::prng::mix64(state);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let a = DenseMatrix::new(3, 5, (0..15).map(|_| draw()).collect()).unwrap();
        let b = DenseMatrix::new(4, 5, (0..20).map(|_| draw()).collect()).unwrap();
        let p = PairedMatrices::new(a.clone(), b.clone()).unwrap();
        let product = p.exact_product();

        // oracle: accumulate outer products column by column
        let mut acc = DenseMatrix::zeros(3, 4);
        for i in 0..5 {
            let ca = a.column(i);
            let cb = b.column(i);
            for (r, &ar) in ca.iter().enumerate() {
                for (c, &bc) in cb.iter().enumerate() {
                    acc.entries_mut()[r * 4 + c] += ar * bc;
                }
            }
        }
        let diff = product.sub(&acc).unwrap().frobenius_norm();
        assert!(diff <= 1e-12 * acc.frobenius_norm().max(1.0));
    }

    #[test]
    fn paired_matrices_require_matching_columns_and_a_nonzero_pair() {
        let a = DenseMatrix::identity(2);
        let b = DenseMatrix::zeros(2, 3);
        assert!(matches!(
            PairedMatrices::new(a.clone(), b),
            Err(Error::DimensionMismatch(_))
        ));
        // columns never simultaneously nonzero
        let a2 = mat(1, 2, &[1.0, 0.0]);
        let b2 = mat(1, 2, &[0.0, 1.0]);
        assert!(matches!(PairedMatrices::new(a2, b2), Err(Error::DegenerateWeights)));
        assert!(matches!(
            PairedMatrices::new(a.clone(), DenseMatrix::zeros(2, 2)),
            Err(Error::DegenerateWeights)
        ));
    }

    #[test]
    fn symmetric_eigenvalues_of_diagonal_and_known_matrix() {
        let eigs = symmetric_eigenvalues(&DenseMatrix::diagonal(&[1.0, -2.0, 3.0])).unwrap();
        assert_eq!(eigs.len(), 3);
        assert!((eigs[0] - 3.0).abs() < 1e-12);
        assert!((eigs[1] - 1.0).abs() < 1e-12);
        assert!((eigs[2] + 2.0).abs() < 1e-12);

        // [[10,-6],[-6,10]] has eigenvalues 16 and 4
        let m = mat(2, 2, &[10.0, -6.0, -6.0, 10.0]);
        let eigs = symmetric_eigenvalues(&m).unwrap();
        assert!((eigs[0] - 16.0).abs() < 1e-10);
        assert!((eigs[1] - 4.0).abs() < 1e-10);
    }

    #[test]
    fn csv_round_trip_preserves_entries_exactly() {
        let m = mat(2, 3, &[0.1, -2.5e-17, 3.0, 1.0 / 3.0, 5e300, -0.0]);
        let text = m.to_csv();
        let back = DenseMatrix::from_csv(&text).unwrap();
        assert_eq!(m.entries(), back.entries());
        assert_eq!(back.rows(), 2);
        assert_eq!(back.cols(), 3);
    }

    #[test]
    fn csv_rejects_header_body_mismatch_and_bad_cells() {
        assert!(matches!(
            DenseMatrix::from_csv("# 2 2\n1,2\n"),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            DenseMatrix::from_csv("1,2\n3\n"),
            Err(Error::Parse(_))
        ));
        assert!(matches!(DenseMatrix::from_csv("1,x\n"), Err(Error::Parse(_))));
        assert!(matches!(DenseMatrix::from_csv(""), Err(Error::Parse(_))));
    }

    #[test]
    fn csv_without_header_infers_shape() {
        let m = DenseMatrix::from_csv("1,2,3\n4,5,6\n").unwrap();
        assert_eq!((m.rows(), m.cols()), (2, 3));
        assert_eq!(m.entry(1, 2), 6.0);
    }
}
