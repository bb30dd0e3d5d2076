//! Linear maps on matrix algebras: superoperator, Kraus and Choi forms,
//! the affine Bloch representation of qubit maps, canonicalization, and the
//! closed-form qubit maximal p-norm.

mod affine;
mod constructors;

pub use affine::{
    affine_from_map, bloch_from_density, density_from_bloch, diagonal_form, h_p, map_from_affine,
    max_image_norm, nu_p_qubit, pure_state_from_bloch, rotation_from_unitary, rotation_lift,
    AffineQubitMap, BlochVector, DiagonalForm,
};
pub use constructors::{
    amplitude_damping, depolarizing, identity_map, random_cp, random_pp_tp_qubit, transpose_map,
    werner_holevo,
};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matcore::{hermitian_eigen, partial_trace, ComplexMatrix, TraceSide};

/// Tolerance for the completely-positive test: min Choi eigenvalue above
/// -1e-9 counts as CP (the Jacobi eigenvalue noise floor).
pub const CP_EIG_TOL: f64 = 1e-9;
/// Tolerance on the trace-preservation check via the Choi partial trace.
pub const TP_TOL: f64 = 1e-10;

/// Storage form of a linear map on matrices.
#[derive(Debug, Clone, PartialEq)]
pub enum MapForm {
    /// d_out^2 x d_in^2 matrix acting on column-stacked matrices.
    Superop(ComplexMatrix),
    /// Kraus operator list; implies complete positivity by construction.
    Kraus(Vec<ComplexMatrix>),
    /// Choi matrix of dimension d_out * d_in, unnormalized (trace = d_in
    /// for trace-preserving maps), output factor first.
    Choi(ComplexMatrix),
}

/// A linear map from d_in x d_in to d_out x d_out complex matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumMap {
    d_in: usize,
    d_out: usize,
    form: MapForm,
}

/// Column-stacking vectorization: vec(m)[c * rows + r] = m[r][c].
pub fn vec_stack(m: &ComplexMatrix) -> Vec<Complex64> {
    let (rows, cols) = (m.rows(), m.cols());
    let mut out = Vec::with_capacity(rows * cols);
    for c in 0..cols {
        for r in 0..rows {
            out.push(m[(r, c)]);
        }
    }
    out
}

/// Inverse of `vec_stack`.
pub fn unvec_stack(v: &[Complex64], rows: usize) -> ComplexMatrix {
    let cols = v.len() / rows;
    ComplexMatrix::from_fn(rows, cols, |r, c| v[c * rows + r])
}

impl QuantumMap {
    pub fn from_superop(d_in: usize, d_out: usize, matrix: ComplexMatrix) -> Result<Self> {
        if matrix.rows() != d_out * d_out || matrix.cols() != d_in * d_in {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{} superoperator", d_out * d_out, d_in * d_in),
                found: format!("{}x{}", matrix.rows(), matrix.cols()),
            });
        }
        Ok(Self {
            d_in,
            d_out,
            form: MapForm::Superop(matrix),
        })
    }

    pub fn from_kraus(ops: Vec<ComplexMatrix>) -> Result<Self> {
        let first = ops.first().ok_or_else(|| Error::DimensionMismatch {
            expected: "at least one Kraus operator".into(),
            found: "empty list".into(),
        })?;
        let (d_out, d_in) = (first.rows(), first.cols());
        if ops.iter().any(|k| k.rows() != d_out || k.cols() != d_in) {
            return Err(Error::DimensionMismatch {
                expected: format!("uniform {d_out}x{d_in} Kraus operators"),
                found: "mixed shapes".into(),
            });
        }
        Ok(Self {
            d_in,
            d_out,
            form: MapForm::Kraus(ops),
        })
    }

    pub fn from_choi(d_in: usize, d_out: usize, choi: ComplexMatrix) -> Result<Self> {
        let dim = d_in * d_out;
        if !choi.is_square() || choi.rows() != dim {
            return Err(Error::DimensionMismatch {
                expected: format!("{dim}x{dim} Choi matrix"),
                found: format!("{}x{}", choi.rows(), choi.cols()),
            });
        }
        Ok(Self {
            d_in,
            d_out,
            form: MapForm::Choi(choi),
        })
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn form(&self) -> &MapForm {
        &self.form
    }

    pub fn is_kraus(&self) -> bool {
        matches!(self.form, MapForm::Kraus(_))
    }

    /// Apply the map to a d_in x d_in matrix.
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if !rho.is_square() || rho.rows() != self.d_in {
            return Err(Error::DimensionMismatch {
                expected: format!("{0}x{0} input", self.d_in),
                found: format!("{}x{}", rho.rows(), rho.cols()),
            });
        }
        Ok(match &self.form {
            MapForm::Superop(s) => unvec_stack(&s.apply_vec(&vec_stack(rho)), self.d_out),
            MapForm::Kraus(ops) => {
                let mut out = ComplexMatrix::zeros(self.d_out, self.d_out);
                for k in ops {
                    out = &out + &(&(k * rho) * &k.adjoint());
                }
                out
            }
            MapForm::Choi(c) => {
                let d_in = self.d_in;
                ComplexMatrix::from_fn(self.d_out, self.d_out, |a, b| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for i in 0..d_in {
                        for j in 0..d_in {
                            acc += c[(a * d_in + i, b * d_in + j)] * rho[(i, j)];
                        }
                    }
                    acc
                })
            }
        })
    }

    /// Apply the Hilbert-Schmidt adjoint map to a d_out x d_out matrix.
    pub fn apply_adjoint(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if !x.is_square() || x.rows() != self.d_out {
            return Err(Error::DimensionMismatch {
                expected: format!("{0}x{0} input", self.d_out),
                found: format!("{}x{}", x.rows(), x.cols()),
            });
        }
        Ok(match &self.form {
            MapForm::Kraus(ops) => {
                let mut out = ComplexMatrix::zeros(self.d_in, self.d_in);
                for k in ops {
                    out = &out + &(&(&k.adjoint() * x) * k);
                }
                out
            }
            _ => {
                let s_adj = self.superop_matrix().adjoint();
                unvec_stack(&s_adj.apply_vec(&vec_stack(x)), self.d_in)
            }
        })
    }

    /// The superoperator matrix of this map (computed if stored otherwise).
    pub fn superop_matrix(&self) -> ComplexMatrix {
        match &self.form {
            MapForm::Superop(s) => s.clone(),
            MapForm::Kraus(ops) => {
                let mut s = ComplexMatrix::zeros(self.d_out * self.d_out, self.d_in * self.d_in);
                for k in ops {
                    s = &s + &k.conj().kron(k);
                }
                s
            }
            MapForm::Choi(c) => {
                let (d_in, d_out) = (self.d_in, self.d_out);
                ComplexMatrix::from_fn(d_out * d_out, d_in * d_in, |ro, ci| {
                    // superop[(b*d_out + a), (j*d_in + i)] = choi[(a*d_in + i), (b*d_in + j)]
                    let (b, a) = (ro / d_out, ro % d_out);
                    let (j, i) = (ci / d_in, ci % d_in);
                    c[(a * d_in + i, b * d_in + j)]
                })
            }
        }
    }

    /// The unnormalized Choi matrix, output factor first: the map applied to
    /// one leg of sum_ij |ii><jj|.
    pub fn choi_matrix(&self) -> ComplexMatrix {
        match &self.form {
            MapForm::Choi(c) => c.clone(),
            _ => {
                let s = self.superop_matrix();
                let (d_in, d_out) = (self.d_in, self.d_out);
                ComplexMatrix::from_fn(d_in * d_out, d_in * d_out, |r, c| {
                    let (a, i) = (r / d_in, r % d_in);
                    let (b, j) = (c / d_in, c % d_in);
                    s[(b * d_out + a, j * d_in + i)]
                })
            }
        }
    }

    /// Re-expressed in superoperator form.
    pub fn to_superop(&self) -> Self {
        Self {
            d_in: self.d_in,
            d_out: self.d_out,
            form: MapForm::Superop(self.superop_matrix()),
        }
    }

    /// Re-expressed in Choi form.
    pub fn to_choi(&self) -> Self {
        Self {
            d_in: self.d_in,
            d_out: self.d_out,
            form: MapForm::Choi(self.choi_matrix()),
        }
    }

    /// Kraus operators recovered from the Choi eigendecomposition.
    ///
    /// Fails when the map is not completely positive within tolerance;
    /// eigenvalues below the noise floor are dropped.
    pub fn to_kraus(&self) -> Result<Self> {
        if let MapForm::Kraus(_) = self.form {
            return Ok(self.clone());
        }
        let choi = self.choi_matrix();
        let eig = hermitian_eigen(&choi)?;
        let scale = eig.values.first().map(|v| v.abs()).unwrap_or(0.0);
        let mut ops = Vec::new();
        for (idx, &ev) in eig.values.iter().enumerate() {
            if ev < -CP_EIG_TOL * scale.max(1.0) {
                return Err(Error::NotCompletelyPositive { min_eigenvalue: ev });
            }
            if ev <= 1e-12 * scale.max(1.0) {
                continue;
            }
            let col: Vec<Complex64> = (0..choi.rows()).map(|r| eig.vectors[(r, idx)]).collect();
            // column index r = a * d_in + i encodes K[a][i]
            let k = ComplexMatrix::from_fn(self.d_out, self.d_in, |a, i| {
                col[a * self.d_in + i] * ev.sqrt()
            });
            ops.push(k);
        }
        if ops.is_empty() {
            ops.push(ComplexMatrix::zeros(self.d_out, self.d_in));
        }
        Self::from_kraus(ops)
    }

    /// Deviation of the Choi partial trace over the output from the identity;
    /// zero for exactly trace-preserving maps.
    pub fn trace_preservation_deviation(&self) -> f64 {
        let choi = self.choi_matrix();
        let reduced = partial_trace(&choi, (self.d_out, self.d_in), TraceSide::First)
            .expect("choi dims are consistent by construction");
        reduced.max_abs_diff(&ComplexMatrix::identity(self.d_in))
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        self.trace_preservation_deviation() <= tol
    }

    /// Tensor product map; Kraus x Kraus stays Kraus (so CP by construction),
    /// anything else goes through the superoperator form.
    pub fn tensor(&self, other: &QuantumMap) -> QuantumMap {
        if let (MapForm::Kraus(a), MapForm::Kraus(b)) = (&self.form, &other.form) {
            let ops: Vec<ComplexMatrix> = a
                .iter()
                .flat_map(|ka| b.iter().map(move |kb| ka.kron(kb)))
                .collect();
            return QuantumMap::from_kraus(ops).expect("tensor Kraus shapes are uniform");
        }
        let (d1i, d2i) = (self.d_in, other.d_in);
        let (d1o, d2o) = (self.d_out, other.d_out);
        let basis_images = |map: &QuantumMap, d: usize| -> Vec<ComplexMatrix> {
            let mut images = Vec::with_capacity(d * d);
            for r in 0..d {
                for c in 0..d {
                    let e = ComplexMatrix::from_fn(d, d, |i, j| {
                        if i == r && j == c {
                            Complex64::new(1.0, 0.0)
                        } else {
                            Complex64::new(0.0, 0.0)
                        }
                    });
                    images.push(map.apply(&e).expect("basis dims match"));
                }
            }
            images
        };
        let phi_images = basis_images(self, d1i);
        let omega_images = basis_images(other, d2i);
        let din = d1i * d2i;
        let dout = d1o * d2o;
        let mut s = ComplexMatrix::zeros(dout * dout, din * din);
        for r1 in 0..d1i {
            for r2 in 0..d2i {
                for c1 in 0..d1i {
                    for c2 in 0..d2i {
                        let out = phi_images[r1 * d1i + c1].kron(&omega_images[r2 * d2i + c2]);
                        let col_vec = vec_stack(&out);
                        let col = (c1 * d2i + c2) * din + (r1 * d2i + r2);
                        for (row, z) in col_vec.iter().enumerate() {
                            s[(row, col)] = *z;
                        }
                    }
                }
            }
        }
        QuantumMap::from_superop(din, dout, s).expect("tensor superop shape is consistent")
    }
}

/// The Choi matrix, the CP verdict, and the minimum Choi eigenvalue.
///
/// Kraus-form maps report CP unconditionally (true by construction); the
/// eigenvalue is still computed and reported.
pub fn choi_and_cp_test(m: &QuantumMap) -> Result<(ComplexMatrix, bool, f64)> {
    let choi = m.choi_matrix();
    let eig = hermitian_eigen(&choi)?;
    let min_eig = eig.values.last().copied().unwrap_or(0.0);
    let is_cp = m.is_kraus() || min_eig >= -CP_EIG_TOL;
    Ok((choi, is_cp, min_eig))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::pauli_matrices;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ket(amplitudes: &[(f64, f64)]) -> Vec<Complex64> {
        amplitudes.iter().map(|&(r, i)| Complex64::new(r, i)).collect()
    }

    fn random_state(rng: &mut ChaCha8Rng, d: usize) -> ComplexMatrix {
        let g = ComplexMatrix::from_fn(d, d, |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let p = &g * &g.adjoint();
        p.scale_re(1.0 / p.trace().re)
    }

    #[test]
    fn identity_choi_is_projector() {
        let id = identity_map(2);
        let (choi, is_cp, min_eig) = choi_and_cp_test(&id).unwrap();
        assert!(is_cp);
        assert!(min_eig.abs() < 1e-12);
        let eig = hermitian_eigen(&choi).unwrap();
        assert!((eig.values[0] - 2.0).abs() < 1e-12);
        for &v in &eig.values[1..] {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn transpose_choi_is_swap_with_negative_eigenvalue() {
        let t = transpose_map(2);
        let (choi, is_cp, min_eig) = choi_and_cp_test(&t).unwrap();
        assert!(!is_cp);
        assert!((min_eig + 1.0).abs() < 1e-12);
        for a in 0..2 {
            for i in 0..2 {
                for b in 0..2 {
                    for j in 0..2 {
                        let expected = if a == j && i == b { 1.0 } else { 0.0 };
                        let z = choi[(a * 2 + i, b * 2 + j)];
                        assert!((z.re - expected).abs() < 1e-12 && z.im.abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn depolarizing_is_cp_and_tp() {
        let d = depolarizing(0.9).unwrap();
        let (_, is_cp, min_eig) = choi_and_cp_test(&d).unwrap();
        assert!(is_cp);
        // Choi eigenvalues of the Pauli twirl are 2*q_k with q_k >= (1-lambda)/4
        assert!(min_eig >= 2.0 * 0.025 - 1e-10);
        assert!(d.is_trace_preserving(1e-12));
    }

    #[test]
    fn form_conversions_commute_with_apply() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_cp(3, 4, &mut rng);
        let rho = random_state(&mut rng, 3);
        let out = m.apply(&rho).unwrap();
        for variant in [m.to_superop(), m.to_choi(), m.to_choi().to_kraus().unwrap()] {
            let out2 = variant.apply(&rho).unwrap();
            assert!(out.max_abs_diff(&out2) < 1e-10);
        }
    }

    #[test]
    fn adjoint_satisfies_hs_pairing() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let maps = [random_cp(2, 3, &mut rng), transpose_map(2)];
        for m in &maps {
            for _ in 0..10 {
                let a = ComplexMatrix::from_fn(2, 2, |_, _| {
                    Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
                });
                let b = ComplexMatrix::from_fn(2, 2, |_, _| {
                    Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
                });
                let lhs = (&a.adjoint() * &m.apply(&b).unwrap()).trace();
                let rhs = (&m.apply_adjoint(&a).unwrap().adjoint() * &b).trace();
                assert!((lhs - rhs).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn apply_identity_on_basis_state() {
        let id = identity_map(2);
        let psi = ket(&[(1.0, 0.0), (0.0, 0.0)]);
        let rho = ComplexMatrix::outer(&psi, &psi);
        assert!(id.apply(&rho).unwrap().max_abs_diff(&rho) < 1e-15);
    }

    #[test]
    fn transpose_flips_sigma_y_component() {
        let [_, sy, _] = pauli_matrices();
        let rho = (&ComplexMatrix::identity(2) + &sy.scale_re(0.3)).scale_re(0.5);
        let t = transpose_map(2);
        let out = t.apply(&rho).unwrap();
        let expected = (&ComplexMatrix::identity(2) - &sy.scale_re(0.3)).scale_re(0.5);
        assert!(out.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn tensor_of_kraus_maps_agrees_with_superop_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_cp(2, 2, &mut rng);
        let b = random_cp(2, 3, &mut rng);
        let kraus_tensor = a.tensor(&b);
        assert!(kraus_tensor.is_kraus());
        let superop_tensor = a.to_superop().tensor(&b.to_superop());
        let rho = random_state(&mut rng, 4);
        let x = kraus_tensor.apply(&rho).unwrap();
        let y = superop_tensor.apply(&rho).unwrap();
        assert!(x.max_abs_diff(&y) < 1e-10);
    }

    #[test]
    fn tensor_applies_factorwise_on_product_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_cp(2, 2, &mut rng).to_superop();
        let b = random_cp(3, 2, &mut rng).to_superop();
        let rho1 = random_state(&mut rng, 2);
        let rho2 = random_state(&mut rng, 3);
        let joint = a.tensor(&b).apply(&rho1.kron(&rho2)).unwrap();
        let split = a.apply(&rho1).unwrap().kron(&b.apply(&rho2).unwrap());
        assert!(joint.max_abs_diff(&split) < 1e-12);
    }

    #[test]
    fn werner_holevo_on_basis_state() {
        let w = werner_holevo(3).unwrap();
        let psi = ket(&[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0)]);
        let rho = ComplexMatrix::outer(&psi, &psi);
        let out = w.apply(&rho).unwrap();
        let expected = (&ComplexMatrix::identity(3) - &rho).scale_re(0.5);
        assert!(out.max_abs_diff(&expected) < 1e-14);
        let eig = hermitian_eigen(&out).unwrap();
        assert!((eig.values[0] - 0.5).abs() < 1e-12);
        assert!((eig.values[1] - 0.5).abs() < 1e-12);
        assert!(eig.values[2].abs() < 1e-12);
    }
}
