//! Spectral factorizations: cyclic Jacobi for Hermitian matrices and
//! one-sided Jacobi SVD for general rectangular matrices.
//!
//! Dimensions in this crate stay small (<= ~64), so Jacobi's robustness and
//! high relative accuracy win over faster reductions.

use num_complex::Complex64;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

/// Relative off-diagonal convergence threshold, scaled by the Frobenius norm.
const CONVERGENCE_RTOL: f64 = 1e-13;
/// Maximum number of full sweeps before reporting non-convergence.
const MAX_SWEEPS: usize = 64;
/// Hermiticity tolerance, relative to the largest entry modulus.
const HERMITIAN_RTOL: f64 = 1e-10;

/// Eigensystem of a Hermitian matrix: `m = vectors * diag(values) * vectors^dagger`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Real eigenvalues, descending.
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are the corresponding eigenvectors.
    pub vectors: ComplexMatrix,
}

/// Thin singular value decomposition: `m = u * diag(values) * v^dagger`
/// with `u` of shape rows x k and `v` of shape cols x k, k = min(rows, cols).
#[derive(Debug, Clone)]
pub struct Svd {
    /// Nonnegative singular values, descending.
    pub values: Vec<f64>,
    pub u: ComplexMatrix,
    pub v: ComplexMatrix,
}

/// Which factorization `spectral_factor` performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorMode {
    /// Eigendecomposition; input must be Hermitian within tolerance.
    Hermitian,
    /// Singular value decomposition of an arbitrary rectangular matrix.
    General,
}

/// Result of `spectral_factor`.
#[derive(Debug, Clone)]
pub enum SpectralFactor {
    Eigen(HermitianEigen),
    Singular(Svd),
}

/// Factor `m` according to `mode`.
pub fn spectral_factor(m: &ComplexMatrix, mode: FactorMode) -> Result<SpectralFactor> {
    match mode {
        FactorMode::Hermitian => hermitian_eigen(m).map(SpectralFactor::Eigen),
        FactorMode::General => svd(m).map(SpectralFactor::Singular),
    }
}

/// The complex Jacobi rotation zeroing the (p,q) entry of a Hermitian pair.
///
/// Given the 2x2 Hermitian submatrix [[app, apq], [conj(apq), aqq]] returns
/// (c, w) with c real, such that the unitary U = [[c, w], [-conj(w), c]]
/// produces a diagonal U^dagger H U.
fn jacobi_rotation(app: f64, aqq: f64, apq: Complex64) -> (f64, Complex64) {
    let g = apq.norm();
    let phase = apq / g;
    let tau = (aqq - app) / (2.0 * g);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = c * t;
    (c, phase * s)
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[(i, j)].norm_sqr();
            }
        }
    }
    sum.sqrt()
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi sweeps.
///
/// Eigenvalues are returned in descending order. Fails if `m` is not square,
/// deviates from Hermitian symmetry by more than 1e-10 relative to its
/// largest entry, or the sweep budget is exhausted.
pub fn hermitian_eigen(m: &ComplexMatrix) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(Error::NonSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let dev = m.hermitian_deviation();
    if dev > HERMITIAN_RTOL * m.max_abs().max(1.0) {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let n = m.rows();
    // Work on the exactly Hermitian part; the deviation is within tolerance.
    let mut a = ComplexMatrix::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
    let mut vecs = ComplexMatrix::identity(n);

    if n == 1 {
        return Ok(HermitianEigen {
            values: vec![a[(0, 0)].re],
            vectors: vecs,
        });
    }

    let threshold = CONVERGENCE_RTOL * a.frobenius();
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.norm() == 0.0 {
                    continue;
                }
                let (c, w) = jacobi_rotation(a[(p, p)].re, a[(q, q)].re, apq);
                let wc = w.conj();
                // A <- U^dagger A U, applied as row then column updates.
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c - akq * wc;
                    a[(k, q)] = akp * w + akq * c;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c - aqk * w;
                    a[(q, k)] = apk * wc + aqk * c;
                }
                // Rounding can leave a tiny imaginary residue on the diagonal.
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    let vkp = vecs[(k, p)];
                    let vkq = vecs[(k, q)];
                    vecs[(k, p)] = vkp * c - vkq * wc;
                    vecs[(k, q)] = vkp * w + vkq * c;
                }
            }
        }
    }
    if !converged && off_diagonal_norm(&a) > threshold {
        return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.partial_cmp(&a[(i, i)].re).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| vecs[(i, order[j])]);
    Ok(HermitianEigen { values, vectors })
}

/// One-sided Jacobi SVD.
///
/// Orthogonalizes the columns of the working matrix by plane rotations; the
/// column norms converge to the singular values. For rows < cols the adjoint
/// is factored and the factors are swapped back.
pub fn svd(m: &ComplexMatrix) -> Result<Svd> {
    let transposed = m.rows() < m.cols();
    let mut w = if transposed { m.adjoint() } else { m.clone() };
    let (rows, cols) = (w.rows(), w.cols());
    let mut v = ComplexMatrix::identity(cols);

    // Converged when every column pair satisfies |<w_i, w_j>| <= tol * |w_i||w_j|.
    let tol = 1e-14;
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..cols {
            for j in (i + 1)..cols {
                let mut g = Complex64::new(0.0, 0.0);
                let mut aii = 0.0;
                let mut ajj = 0.0;
                for k in 0..rows {
                    let wi = w[(k, i)];
                    let wj = w[(k, j)];
                    g += wi.conj() * wj;
                    aii += wi.norm_sqr();
                    ajj += wj.norm_sqr();
                }
                if g.norm() <= tol * (aii * ajj).sqrt() || aii == 0.0 || ajj == 0.0 {
                    continue;
                }
                rotated = true;
                let (c, wrot) = jacobi_rotation(aii, ajj, g);
                let wc = wrot.conj();
                for k in 0..rows {
                    let wi = w[(k, i)];
                    let wj = w[(k, j)];
                    w[(k, i)] = wi * c - wj * wc;
                    w[(k, j)] = wi * wrot + wj * c;
                }
                for k in 0..cols {
                    let vi = v[(k, i)];
                    let vj = v[(k, j)];
                    v[(k, i)] = vi * c - vj * wc;
                    v[(k, j)] = vi * wrot + vj * c;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let mut sigma: Vec<f64> = (0..cols)
        .map(|i| {
            (0..rows)
                .map(|k| w[(k, i)].norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap());
    sigma = order.iter().map(|&i| sigma[i]).collect();
    let v_sorted = ComplexMatrix::from_fn(cols, cols, |i, j| v[(i, order[j])]);
    let mut u = ComplexMatrix::from_fn(rows, cols, |i, j| w[(i, order[j])]);

    // Normalize columns; complete near-zero ones to an orthonormal set.
    let smax = sigma.first().copied().unwrap_or(0.0);
    let rank_cut = smax * 1e-250;
    for j in 0..cols {
        if sigma[j] > rank_cut && sigma[j] > 0.0 {
            for i in 0..rows {
                u[(i, j)] = u[(i, j)] / sigma[j];
            }
        } else {
            complete_column(&mut u, j);
        }
    }

    let (u, v) = if transposed { (v_sorted, u) } else { (u, v_sorted) };
    Ok(Svd {
        values: sigma,
        u,
        v,
    })
}

/// Replace column `j` of `u` by a unit vector orthogonal to columns 0..j.
fn complete_column(u: &mut ComplexMatrix, j: usize) {
    let rows = u.rows();
    let mut best: Option<(f64, Vec<Complex64>)> = None;
    for cand in 0..rows {
        let mut col = vec![Complex64::new(0.0, 0.0); rows];
        col[cand] = Complex64::new(1.0, 0.0);
        for prev in 0..j {
            let mut inner = Complex64::new(0.0, 0.0);
            for k in 0..rows {
                inner += u[(k, prev)].conj() * col[k];
            }
            for k in 0..rows {
                let correction = u[(k, prev)] * inner;
                col[k] -= correction;
            }
        }
        let nrm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if best.as_ref().map_or(true, |(n, _)| nrm > *n) {
            best = Some((nrm, col));
        }
    }
    let (nrm, col) = best.unwrap();
    for k in 0..rows {
        u[(k, j)] = col[k] / nrm;
    }
}

impl HermitianEigen {
    /// vectors * diag(values) * vectors^dagger.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = ComplexMatrix::diag_real(&self.values);
        &(&self.vectors * &d) * &self.vectors.adjoint()
    }
}

impl Svd {
    /// u * diag(values) * v^dagger.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = ComplexMatrix::diag_real(&self.values);
        &(&self.u * &d) * &self.v.adjoint()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::matrix::pauli_matrices;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(rows, cols, |_, _| {
            Complex64::new(rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0)
        })
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
        let m = random_matrix(rng, n, n);
        (&m + &m.adjoint()).scale_re(0.5)
    }

    #[test]
    fn identity_eigen() {
        let e = hermitian_eigen(&ComplexMatrix::identity(2)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0]);
    }

    #[test]
    fn pauli_x_eigen() {
        let [sx, sy, _] = pauli_matrices();
        for m in [sx, sy] {
            let e = hermitian_eigen(&m).unwrap();
            assert!((e.values[0] - 1.0).abs() < 1e-12);
            assert!((e.values[1] + 1.0).abs() < 1e-12);
            assert!(e.reconstruct().max_abs_diff(&m) < 1e-12);
        }
    }

    #[test]
    fn general_mode_diagonal_singular_values() {
        let m = ComplexMatrix::diag_real(&[3.0, -4.0]);
        let s = svd(&m).unwrap();
        assert!((s.values[0] - 4.0).abs() < 1e-12);
        assert!((s.values[1] - 3.0).abs() < 1e-12);
        assert!(s.reconstruct().max_abs_diff(&m) < 1e-12);
    }

    #[test]
    fn hermitian_mode_rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(
            hermitian_eigen(&m),
            Err(Error::NotHermitian { .. })
        ));
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0], &[0.0, 0.0]]);
        assert!(matches!(hermitian_eigen(&m), Err(Error::NonSquare { .. })));
    }

    #[test]
    fn spectral_factor_dispatches_by_mode() {
        let [sx, _, _] = pauli_matrices();
        match spectral_factor(&sx, FactorMode::Hermitian).unwrap() {
            SpectralFactor::Eigen(e) => {
                assert!((e.values[0] - 1.0).abs() < 1e-12);
                assert!((e.values[1] + 1.0).abs() < 1e-12);
            }
            SpectralFactor::Singular(_) => panic!("expected eigendecomposition"),
        }
        let m = ComplexMatrix::diag_real(&[3.0, -4.0]);
        match spectral_factor(&m, FactorMode::General).unwrap() {
            SpectralFactor::Singular(s) => {
                assert!((s.values[0] - 4.0).abs() < 1e-12);
                assert!((s.values[1] - 3.0).abs() < 1e-12);
            }
            SpectralFactor::Eigen(_) => panic!("expected SVD"),
        }
    }

    #[test]
    fn random_eigen_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1usize, 2, 3, 5, 8, 16, 33] {
            let m = random_hermitian(&mut rng, n);
            let e = hermitian_eigen(&m).unwrap();
            let scale = m.max_abs().max(1e-300) * n as f64;
            assert!(e.reconstruct().max_abs_diff(&m) <= 1e-10 * scale);
            // Unitarity of the eigenvector matrix.
            let vtv = &e.vectors.adjoint() * &e.vectors;
            assert!(vtv.max_abs_diff(&ComplexMatrix::identity(n)) < 1e-12);
            for w in e.values.windows(2) {
                assert!(w[0] >= w[1]);
            }
        }
    }

    #[test]
    fn random_svd_reconstruction_including_rectangular() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (r, c) in [(1, 1), (2, 2), (3, 5), (5, 3), (8, 8), (16, 4), (24, 24)] {
            let m = random_matrix(&mut rng, r, c);
            let s = svd(&m).unwrap();
            let scale = m.max_abs().max(1e-300) * r.max(c) as f64;
            assert!(s.reconstruct().max_abs_diff(&m) <= 1e-10 * scale);
            let k = r.min(c);
            let utu = &s.u.adjoint() * &s.u;
            let vtv = &s.v.adjoint() * &s.v;
            assert!(utu.max_abs_diff(&ComplexMatrix::identity(k)) < 1e-12);
            assert!(vtv.max_abs_diff(&ComplexMatrix::identity(k)) < 1e-12);
        }
    }

    #[test]
    fn rank_deficient_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let a = random_matrix(&mut rng, 4, 2);
        let b = random_matrix(&mut rng, 2, 4);
        let m = &a * &b; // rank <= 2
        let s = svd(&m).unwrap();
        assert!(s.values[2] < 1e-12 * s.values[0]);
        let scale = m.max_abs().max(1e-300) * 4.0;
        assert!(s.reconstruct().max_abs_diff(&m) <= 1e-10 * scale);
        let utu = &s.u.adjoint() * &s.u;
        assert!(utu.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-11);
    }

    #[test]
    fn svd_eigen_consistency_on_gram_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let m = random_matrix(&mut rng, 6, 6);
        let s = svd(&m).unwrap();
        let gram = &m.adjoint() * &m;
        let e = hermitian_eigen(&gram).unwrap();
        for (sv, ev) in s.values.iter().zip(&e.values) {
            assert!((sv - ev.max(0.0).sqrt()).abs() <= 1e-10 * s.values[0].max(1.0));
        }
    }
}
