//! Named map builders: identity, transpose, Werner-Holevo, depolarizing,
//! amplitude damping, and seeded random families.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::affine::AffineQubitMap;
use super::QuantumMap;
use crate::error::{Error, Result};
use crate::matcore::{hermitian_eigen, ComplexMatrix};

/// The identity channel in Kraus form.
pub fn identity_map(d: usize) -> QuantumMap {
    QuantumMap::from_kraus(vec![ComplexMatrix::identity(d)]).expect("identity Kraus op")
}

/// The transpose map rho -> rho^T as a superoperator.
pub fn transpose_map(d: usize) -> QuantumMap {
    // vec index (c*d + r) maps to (r*d + c)
    let dim = d * d;
    let s = ComplexMatrix::from_fn(dim, dim, |row, col| {
        let (c_out, r_out) = (row / d, row % d);
        if col == r_out * d + c_out {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    QuantumMap::from_superop(d, d, s).expect("square superop")
}

/// The Werner-Holevo channel rho -> (Tr(rho) I - rho^T) / (d - 1).
pub fn werner_holevo(d: usize) -> Result<QuantumMap> {
    if d < 2 {
        return Err(Error::OutOfRange {
            name: "d",
            value: d as f64,
            range: "d >= 2",
        });
    }
    let t = transpose_map(d).superop_matrix();
    // Tr(rho) I has superoperator |vec I><vec I| laid out over the basis.
    let dim = d * d;
    let trace_part = ComplexMatrix::from_fn(dim, dim, |row, col| {
        let (c_out, r_out) = (row / d, row % d);
        let (c_in, r_in) = (col / d, col % d);
        if c_out == r_out && c_in == r_in {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let s = (&trace_part - &t).scale_re(1.0 / (d as f64 - 1.0));
    QuantumMap::from_superop(d, d, s)
}

/// The depolarizing channel rho -> lambda rho + (1 - lambda) Tr(rho) I/2 in
/// Kraus (Pauli twirl) form; CP exactly for lambda in [-1/3, 1].
pub fn depolarizing(lambda: f64) -> Result<QuantumMap> {
    if !(-1.0 / 3.0..=1.0).contains(&lambda) {
        return Err(Error::OutOfRange {
            name: "lambda",
            value: lambda,
            range: "[-1/3, 1]",
        });
    }
    let q0 = (1.0 + 3.0 * lambda) / 4.0;
    let q = (1.0 - lambda) / 4.0;
    let mut ops = Vec::new();
    if q0 > 0.0 {
        ops.push(ComplexMatrix::identity(2).scale_re(q0.sqrt()));
    }
    if q > 0.0 {
        for p in crate::matcore::pauli_matrices() {
            ops.push(p.scale_re(q.sqrt()));
        }
    }
    QuantumMap::from_kraus(ops)
}

/// Amplitude damping with decay probability gamma, in Kraus form.
pub fn amplitude_damping(gamma: f64) -> Result<QuantumMap> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::OutOfRange {
            name: "gamma",
            value: gamma,
            range: "[0, 1]",
        });
    }
    let z = Complex64::new(0.0, 0.0);
    let k0 = ComplexMatrix::new(
        2,
        2,
        vec![
            Complex64::new(1.0, 0.0),
            z,
            z,
            Complex64::new((1.0 - gamma).sqrt(), 0.0),
        ],
    )
    .unwrap();
    let k1 = ComplexMatrix::new(
        2,
        2,
        vec![z, Complex64::new(gamma.sqrt(), 0.0), z, z],
    )
    .unwrap();
    QuantumMap::from_kraus(vec![k0, k1])
}

/// Random channel: `rank` Gaussian Kraus operators renormalized to exact
/// trace preservation via T^{-1/2} with T = sum K^dagger K.
pub fn random_cp(d: usize, rank: usize, rng: &mut ChaCha8Rng) -> QuantumMap {
    assert!(d >= 1 && rank >= 1);
    let mut ops: Vec<ComplexMatrix> = (0..rank)
        .map(|_| {
            ComplexMatrix::from_fn(d, d, |_, _| {
                Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            })
        })
        .collect();
    let mut t = ComplexMatrix::zeros(d, d);
    for k in &ops {
        t = &t + &(&k.adjoint() * k);
    }
    // T is positive definite almost surely; build T^{-1/2}
    let eig = hermitian_eigen(&t).expect("Gram matrix is Hermitian");
    let inv_sqrt: Vec<f64> = eig.values.iter().map(|&v| 1.0 / v.max(1e-300).sqrt()).collect();
    let d_half = ComplexMatrix::diag_real(&inv_sqrt);
    let t_inv_sqrt = &(&eig.vectors * &d_half) * &eig.vectors.adjoint();
    for k in ops.iter_mut() {
        *k = &*k * &t_inv_sqrt;
    }
    QuantumMap::from_kraus(ops).expect("uniform Kraus shapes")
}

/// Random positivity-preserving trace-preserving qubit map with the given
/// image radius: uniform (A, v) entries, rescaled so the radius is exactly r.
///
/// Rejection plus rescaling puts the maps in general position rather than on
/// the extreme-point family.
pub fn random_pp_tp_qubit(r: f64, rng: &mut ChaCha8Rng) -> Result<AffineQubitMap> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::OutOfRange {
            name: "r",
            value: r,
            range: "[0, 1]",
        });
    }
    loop {
        let mut a = [[0.0; 3]; 3];
        for row in a.iter_mut() {
            for x in row.iter_mut() {
                *x = rng.gen::<f64>() * 2.0 - 1.0;
            }
        }
        let v = [
            rng.gen::<f64>() * 2.0 - 1.0,
            rng.gen::<f64>() * 2.0 - 1.0,
            rng.gen::<f64>() * 2.0 - 1.0,
        ];
        let cand = AffineQubitMap::new(a, v);
        let (radius, _) = cand.image_radius();
        if radius < 1e-6 {
            continue;
        }
        let s = r / radius;
        let mut a2 = a;
        for row in a2.iter_mut() {
            for x in row.iter_mut() {
                *x *= s;
            }
        }
        return Ok(AffineQubitMap::new(a2, [v[0] * s, v[1] * s, v[2] * s]));
    }
}
