//! Synthetic matrix generation with a controlled singular spectrum, used to
//! build test instances whose stable rank is known in advance.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::prng::unit_gaussian;

/// Singular values whose squares sum to `target_sr` with a leading value of
/// one: `sigma_1 = 1` and a flat tail of `sqrt((target_sr - 1) / (count - 1))`.
pub fn spectrum_for_target_sr(target_sr: f64, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::OutOfRange("count must be positive".into()));
    }
    if !(1.0..=count as f64).contains(&target_sr) {
        return Err(Error::OutOfRange(format!(
            "target stable rank {target_sr} outside [1, {count}]"
        )));
    }
    let mut spectrum = vec![1.0];
    if count > 1 {
        let tail = ((target_sr - 1.0) / (count as f64 - 1.0)).sqrt();
        spectrum.extend(std::iter::repeat_n(tail, count - 1));
    }
    Ok(spectrum)
}

/// `U diag(singular_values) V^T` with seeded Gaussian orthonormal factors.
///
/// `singular_values` must be nonincreasing, nonnegative, and no longer than
/// `min(rows, cols)`. Output is byte-identical for identical arguments, and
/// its stable rank equals `sum(s_i^2) / s_1^2` up to orthonormalization
/// round-off (well below 1e-8).
pub fn generate_matrix(
    rows: usize,
    cols: usize,
    singular_values: &[f64],
    seed: u64,
) -> Result<DenseMatrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::DimensionMismatch(format!(
            "matrix dimensions must be positive, got {rows}x{cols}"
        )));
    }
    let k = singular_values.len();
    if k == 0 || k > rows.min(cols) {
        return Err(Error::DimensionMismatch(format!(
            "need between 1 and {} singular values, got {k}",
            rows.min(cols)
        )));
    }
    for (i, &s) in singular_values.iter().enumerate() {
        if !s.is_finite() || s < 0.0 {
            return Err(Error::OutOfRange(format!("singular value {i} is {s}")));
        }
        if i > 0 && s > singular_values[i - 1] {
            return Err(Error::OutOfRange(
                "singular values must be nonincreasing".into(),
            ));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = orthonormal_columns(rows, k, &mut rng);
    let v = orthonormal_columns(cols, k, &mut rng);
    let mut entries = vec![0.0; rows * cols];
    for (l, &s) in singular_values.iter().enumerate() {
        if s == 0.0 {
            continue;
        }
        for r in 0..rows {
            let us = s * u[l][r];
            let row = &mut entries[r * cols..(r + 1) * cols];
            for (c, cell) in row.iter_mut().enumerate() {
                *cell += us * v[l][c];
            }
        }
    }
    DenseMatrix::new(rows, cols, entries)
}

/// `k` orthonormal vectors of dimension `dim` from Gaussian draws and
/// modified Gram-Schmidt with one re-orthogonalization pass.
fn orthonormal_columns(dim: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    debug_assert!(k <= dim);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    while basis.len() < k {
        let mut v: Vec<f64> = (0..dim).map(|_| unit_gaussian(rng)).collect();
        for _ in 0..2 {
            for q in &basis {
                let dot: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= dot * qi;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue; // essentially dependent draw, take a fresh one
        }
        for x in v.iter_mut() {
            *x /= norm;
        }
        basis.push(v);
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_examples() {
        assert_eq!(spectrum_for_target_sr(1.0, 5).unwrap(), vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(spectrum_for_target_sr(5.0, 5).unwrap(), vec![1.0; 5]);
        let s = spectrum_for_target_sr(3.0, 5).unwrap();
        assert!((s[1] - 0.5f64.sqrt()).abs() < 1e-15);
        let sum_sq: f64 = s.iter().map(|x| x * x).sum();
        assert!((sum_sq - 3.0).abs() < 1e-12);
    }

    #[test]
    fn spectrum_rejects_out_of_range_targets() {
        assert!(spectrum_for_target_sr(0.5, 5).is_err());
        assert!(spectrum_for_target_sr(6.0, 5).is_err());
        assert!(spectrum_for_target_sr(1.0, 0).is_err());
    }

    #[test]
    fn generated_stable_rank_matches_spectrum() {
        for (target, count) in [(1.0, 6), (4.0, 6), (1.3125, 3)] {
            let spectrum = if count == 3 {
                vec![1.0, 0.5, 0.25]
            } else {
                spectrum_for_target_sr(target, count).unwrap()
            };
            let m = generate_matrix(12, 16, &spectrum, 99).unwrap();
            let expected: f64 =
                spectrum.iter().map(|s| s * s).sum::<f64>() / (spectrum[0] * spectrum[0]);
            let sr = m.stable_rank().unwrap();
            assert!(
                (sr - expected).abs() <= 1e-8 * expected,
                "target {expected}, measured {sr}"
            );
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let s = spectrum_for_target_sr(3.0, 8).unwrap();
        let m1 = generate_matrix(10, 20, &s, 1234).unwrap();
        let m2 = generate_matrix(10, 20, &s, 1234).unwrap();
        assert_eq!(m1.entries(), m2.entries());
        let m3 = generate_matrix(10, 20, &s, 1235).unwrap();
        assert_ne!(m1.entries(), m3.entries());
    }

    #[test]
    fn generation_validates_arguments() {
        assert!(generate_matrix(2, 2, &[1.0, 0.5, 0.1], 0).is_err());
        assert!(generate_matrix(2, 2, &[0.5, 1.0], 0).is_err());
        assert!(generate_matrix(2, 2, &[-1.0], 0).is_err());
        assert!(generate_matrix(2, 2, &[], 0).is_err());
    }

    #[test]
    fn frobenius_norm_matches_spectrum_energy() {
        let spectrum = [2.0, 1.0, 0.5];
        let m = generate_matrix(8, 8, &spectrum, 5).unwrap();
        let energy: f64 = spectrum.iter().map(|s| s * s).sum();
        let fro2 = m.frobenius_norm().powi(2);
        assert!((fro2 - energy).abs() < 1e-10 * energy);
    }
}
