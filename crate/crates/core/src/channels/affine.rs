//! Affine Bloch representation of trace-preserving qubit maps.
//!
//! A trace-preserving qubit map acts on Bloch vectors as x -> A x + v with a
//! real 3x3 matrix A and translation v. Everything qubit-specific lives here:
//! extraction of (A, v) from an arbitrary map form, the exact image-radius
//! solver, canonicalization to diagonal form, the SU(2) lift of rotations,
//! and the closed-form maximal output p-norm.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::QuantumMap;
use crate::error::{Error, Result};
use crate::matcore::{pauli_matrices, ComplexMatrix, NormOrder};
use crate::pnorm::PureState;
use crate::real3::{
    self, diag3, mat_mul, mat_vec, quaternion_from_rotation, sym_eig3, svd3, transpose3, Mat3,
    Vec3,
};

/// Positivity-preservation tolerance on the image radius.
pub const PP_RADIUS_TOL: f64 = 1e-10;

/// A point of Bloch space; represents a qubit state when its norm is <= 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector(pub Vec3);

impl BlochVector {
    pub fn norm(&self) -> f64 {
        real3::norm(&self.0)
    }

    /// Whether the vector lies in the closed unit ball (within 1e-12).
    pub fn is_state(&self) -> bool {
        self.norm() <= 1.0 + 1e-12
    }
}

/// The density matrix (1/2)(I + x . sigma).
pub fn density_from_bloch(x: &Vec3) -> ComplexMatrix {
    let [sx, sy, sz] = pauli_matrices();
    let mut m = ComplexMatrix::identity(2);
    m = &m + &sx.scale_re(x[0]);
    m = &m + &sy.scale_re(x[1]);
    m = &m + &sz.scale_re(x[2]);
    m.scale_re(0.5)
}

/// Bloch vector and trace of a 2x2 matrix: rho = (t I + x . sigma)/2.
pub fn bloch_from_density(rho: &ComplexMatrix) -> Result<(Vec3, f64)> {
    if rho.rows() != 2 || rho.cols() != 2 {
        return Err(Error::DimensionMismatch {
            expected: "2x2".into(),
            found: format!("{}x{}", rho.rows(), rho.cols()),
        });
    }
    let [sx, sy, sz] = pauli_matrices();
    let coeff = |s: &ComplexMatrix| (s * rho).trace().re;
    Ok(([coeff(&sx), coeff(&sy), coeff(&sz)], rho.trace().re))
}

/// The pure state whose Bloch vector is the given unit vector.
pub fn pure_state_from_bloch(x: &Vec3) -> Result<PureState> {
    let n = real3::norm(x);
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized { norm: n });
    }
    let theta = (x[2] / n).clamp(-1.0, 1.0).acos();
    let phi = x[1].atan2(x[0]);
    let half = theta / 2.0;
    PureState::new(vec![
        Complex64::new(half.cos(), 0.0),
        Complex64::from_polar(half.sin(), phi),
    ])
}

/// Trace-preserving qubit map in Bloch form: x -> A x + v.
///
/// Trace preservation is structural; the map is positivity-preserving
/// exactly when its image radius is at most 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineQubitMap {
    pub a: Mat3,
    pub v: Vec3,
}

impl AffineQubitMap {
    pub fn new(a: Mat3, v: Vec3) -> Self {
        Self { a, v }
    }

    pub fn identity() -> Self {
        Self {
            a: real3::identity3(),
            v: real3::ZERO3,
        }
    }

    pub fn apply_bloch(&self, x: &Vec3) -> Vec3 {
        real3::add_vec(&mat_vec(&self.a, x), &self.v)
    }

    /// Apply to any 2x2 matrix by linear extension over the complex Pauli
    /// expansion: the identity coefficient (the trace) is preserved and also
    /// feeds the translation, the Pauli coefficients transform by A.
    pub fn apply_density(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.rows() != 2 || rho.cols() != 2 {
            return Err(Error::DimensionMismatch {
                expected: "2x2".into(),
                found: format!("{}x{}", rho.rows(), rho.cols()),
            });
        }
        let (t, x) = pauli_coefficients(rho);
        let mut y = [Complex64::new(0.0, 0.0); 3];
        for i in 0..3 {
            y[i] = x[0] * self.a[i][0] + x[1] * self.a[i][1] + x[2] * self.a[i][2]
                + t * self.v[i];
        }
        let mut out = ComplexMatrix::identity(2).scale(t);
        for (p, yi) in pauli_matrices().iter().zip(y) {
            out = &out + &p.scale(yi);
        }
        Ok(out.scale_re(0.5))
    }

    /// Farthest image point of the unit sphere and where it is attained.
    pub fn image_radius(&self) -> (f64, BlochVector) {
        let (r, x) = max_image_norm(&self.a, &self.v);
        (r, BlochVector(x))
    }

    pub fn is_positivity_preserving(&self) -> bool {
        self.image_radius().0 <= 1.0 + PP_RADIUS_TOL
    }

    /// Convex mixture with another map.
    pub fn mix(&self, other: &Self, alpha: f64) -> Self {
        let mut a = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] = alpha * self.a[i][j] + (1.0 - alpha) * other.a[i][j];
            }
        }
        let v = real3::add_vec(
            &real3::scale_vec(&self.v, alpha),
            &real3::scale_vec(&other.v, 1.0 - alpha),
        );
        Self { a, v }
    }
}

/// Complex Pauli expansion rho = (c0 I + sum ck sigma_k)/2 of any 2x2 matrix.
fn pauli_coefficients(rho: &ComplexMatrix) -> (Complex64, [Complex64; 3]) {
    let [sx, sy, sz] = pauli_matrices();
    let c = |s: &ComplexMatrix| (s * rho).trace();
    (rho.trace(), [c(&sx), c(&sy), c(&sz)])
}

/// Bloch representation of a trace-preserving qubit map:
/// A_ij = Tr(sigma_i m(sigma_j))/2, v_i = Tr(sigma_i m(I))/2.
pub fn affine_from_map(m: &QuantumMap) -> Result<AffineQubitMap> {
    if m.d_in() != 2 || m.d_out() != 2 {
        return Err(Error::DimensionMismatch {
            expected: "qubit map (d_in = d_out = 2)".into(),
            found: format!("d_in = {}, d_out = {}", m.d_in(), m.d_out()),
        });
    }
    let deviation = m.trace_preservation_deviation();
    if deviation > super::TP_TOL {
        return Err(Error::NotTracePreserving { deviation });
    }
    let paulis = pauli_matrices();
    let mut a = [[0.0; 3]; 3];
    for j in 0..3 {
        let image = m.apply(&paulis[j])?;
        for i in 0..3 {
            a[i][j] = 0.5 * (&paulis[i] * &image).trace().re;
        }
    }
    let id_image = m.apply(&ComplexMatrix::identity(2))?;
    let mut v = [0.0; 3];
    for i in 0..3 {
        v[i] = 0.5 * (&paulis[i] * &id_image).trace().re;
    }
    Ok(AffineQubitMap { a, v })
}

/// Superoperator form of an affine qubit map.
pub fn map_from_affine(m: &AffineQubitMap) -> QuantumMap {
    let mut s = ComplexMatrix::zeros(4, 4);
    for r in 0..2 {
        for c in 0..2 {
            let e = ComplexMatrix::from_fn(2, 2, |i, j| {
                if i == r && j == c {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            let out = m.apply_density(&e).expect("2x2 by construction");
            for i in 0..2 {
                for j in 0..2 {
                    s[(j * 2 + i, c * 2 + r)] = out[(i, j)];
                }
            }
        }
    }
    QuantumMap::from_superop(2, 2, s).expect("4x4 superop")
}

/// Exact maximum of ||A x + v|| over the unit sphere, with an attaining x.
///
/// Solved as a trust-region-style subproblem: in the eigenbasis of A^T A the
/// stationarity condition (mu I - H) x = A^T v reduces to the secular
/// equation sum_i beta_i^2 / (mu - lambda_i)^2 = 1 on mu > lambda_max, found
/// by safeguarded Newton. When A^T v has no component in the top eigenspace
/// the multiplier sticks at lambda_max and the missing norm is made up
/// inside that eigenspace.
pub fn max_image_norm(a: &Mat3, v: &Vec3) -> (f64, Vec3) {
    let h = mat_mul(&transpose3(a), a);
    let b = mat_vec(&transpose3(a), v);
    let (mut lam, q) = sym_eig3(&h).expect("A^T A is symmetric");
    for l in lam.iter_mut() {
        *l = l.max(0.0);
    }
    let beta = mat_vec(&transpose3(&q), &b);
    let bnorm = real3::norm(&beta);

    // Work in the shifted variable nu = mu - lambda_max with gaps
    // g_i = lambda_max - lambda_i, so the root stays fully resolvable even
    // one ulp away from the hard case. Gaps inside the top cluster are
    // treated as exactly zero.
    let gap_tol = 1e-12 * lam[0].max(1.0);
    let gaps: Vec3 = [
        0.0,
        if lam[0] - lam[1] <= gap_tol { 0.0 } else { lam[0] - lam[1] },
        if lam[0] - lam[2] <= gap_tol { 0.0 } else { lam[0] - lam[2] },
    ];
    let beta_top: f64 = (0..3)
        .filter(|&i| gaps[i] == 0.0)
        .map(|i| beta[i] * beta[i])
        .sum::<f64>()
        .sqrt();

    let s_shift = |nu: f64| -> f64 {
        (0..3)
            .map(|i| {
                let d = nu + gaps[i];
                beta[i] * beta[i] / (d * d)
            })
            .sum()
    };
    let s_shift_deriv = |nu: f64| -> f64 {
        (0..3)
            .map(|i| {
                let d = nu + gaps[i];
                -2.0 * beta[i] * beta[i] / (d * d * d)
            })
            .sum()
    };

    let y_from_nu = |nu: f64| -> Vec3 {
        [
            beta[0] / (nu + gaps[0]),
            beta[1] / (nu + gaps[1]),
            beta[2] / (nu + gaps[2]),
        ]
    };

    let y = if beta_top > 1e-150 {
        // generic case: s(nu) -> infinity as nu -> 0+, so a root exists
        let lo = 0.5 * beta_top; // s(lo) >= beta_top^2 / lo^2 = 4
        let mut hi = 2.0 * bnorm + 1e-30;
        while s_shift(hi) >= 1.0 {
            hi *= 2.0;
        }
        let nu = newton_bisect(s_shift, s_shift_deriv, lo, hi);
        y_from_nu(nu)
    } else {
        // hard case: no component in the top eigenspace
        let mut y = [0.0; 3];
        for i in 0..3 {
            if gaps[i] > 0.0 {
                y[i] = beta[i] / gaps[i];
            }
        }
        let n2: f64 = y.iter().map(|c| c * c).sum();
        if n2 <= 1.0 {
            // fill the missing norm inside the top eigenspace
            let t0 = (0..3).find(|&i| gaps[i] == 0.0).unwrap_or(0);
            y[t0] = (1.0 - n2).sqrt();
            y
        } else {
            // pseudo-solution exceeds the sphere; root beyond the cluster
            let mut hi = 2.0 * bnorm + 1e-30;
            while s_shift(hi) >= 1.0 {
                hi *= 2.0;
            }
            let nu = newton_bisect(s_shift, s_shift_deriv, 1e-150, hi);
            y_from_nu(nu)
        }
    };

    let mut x = mat_vec(&q, &y);
    let xn = real3::norm(&x);
    if xn > 0.0 {
        x = real3::scale_vec(&x, 1.0 / xn);
    } else {
        x = [1.0, 0.0, 0.0];
    }
    let image = real3::add_vec(&mat_vec(a, &x), v);
    (real3::norm(&image), x)
}

/// Safeguarded Newton for the secular equation s(mu) = 1 on a bracket with
/// s(lo) > 1 > s(hi); s is decreasing and convex there, so Newton from the
/// left never overshoots.
fn newton_bisect(s: impl Fn(f64) -> f64, ds: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut mu = lo;
    for _ in 0..200 {
        let g = s(mu) - 1.0;
        if g.abs() <= 1e-15 || (hi - lo) <= 1e-16 * hi.abs().max(1.0) {
            break;
        }
        if g > 0.0 {
            lo = mu;
        } else {
            hi = mu;
        }
        let d = ds(mu);
        let newton = if d != 0.0 { mu - g / d } else { mu };
        mu = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    mu
}

/// Canonical diagonal form of an affine qubit map together with the
/// conjugation witnesses.
#[derive(Debug, Clone)]
pub struct DiagonalForm {
    /// Diagonal of the canonical A; the first two entries are nonnegative.
    pub lambdas: Vec3,
    /// Canonical translation.
    pub v: Vec3,
    /// SU(2) conjugation applied on the domain.
    pub u_domain: ComplexMatrix,
    /// SU(2) conjugation applied on the range.
    pub u_range: ComplexMatrix,
}

impl DiagonalForm {
    /// The canonical map itself.
    pub fn canonical_map(&self) -> AffineQubitMap {
        AffineQubitMap {
            a: diag3(&self.lambdas),
            v: self.v,
        }
    }

    /// Undo the conjugations: rebuilds the original affine map.
    pub fn reconstruct(&self) -> Result<AffineQubitMap> {
        let r_dom = rotation_from_unitary(&self.u_domain)?;
        let r_ran = rotation_from_unitary(&self.u_range)?;
        let a = mat_mul(
            &mat_mul(&transpose3(&r_ran), &diag3(&self.lambdas)),
            &transpose3(&r_dom),
        );
        let v = mat_vec(&transpose3(&r_ran), &self.v);
        Ok(AffineQubitMap { a, v })
    }
}

/// Canonicalize to diagonal form.
///
/// The SVD factors of A are forced into SO(3) by absorbing a determinant
/// flip into the third singular value; Pauli conjugations on the domain then
/// make the first two diagonal entries nonnegative (flipping the pair
/// (1,2) via sigma_3, then (2,3) via sigma_1), leaving v untouched.
pub fn diagonal_form(m: &AffineQubitMap) -> Result<DiagonalForm> {
    let (mut u, mut s, mut vfac) = svd3(&m.a)?;
    if real3::det3(&u) < 0.0 {
        for row in u.iter_mut() {
            row[2] = -row[2];
        }
        s[2] = -s[2];
    }
    if real3::det3(&vfac) < 0.0 {
        for row in vfac.iter_mut() {
            row[2] = -row[2];
        }
        s[2] = -s[2];
    }
    let mut lambdas = s;
    let mut r_domain = vfac;
    if lambdas[0] < 0.0 {
        // domain conjugation by sigma_3 flips the first two
        lambdas[0] = -lambdas[0];
        lambdas[1] = -lambdas[1];
        r_domain = mat_mul(&r_domain, &diag3(&[-1.0, -1.0, 1.0]));
    }
    if lambdas[1] < 0.0 {
        // domain conjugation by sigma_1 flips the last two
        lambdas[1] = -lambdas[1];
        lambdas[2] = -lambdas[2];
        r_domain = mat_mul(&r_domain, &diag3(&[1.0, -1.0, -1.0]));
    }
    let r_range = transpose3(&u);
    let v_c = mat_vec(&r_range, &m.v);
    Ok(DiagonalForm {
        lambdas,
        v: v_c,
        u_domain: rotation_lift(&r_domain)?,
        u_range: rotation_lift(&r_range)?,
    })
}

/// The SO(3) action of conjugation by a 2x2 unitary:
/// R(U)_ij = Tr(sigma_i U sigma_j U^dagger)/2.
pub fn rotation_from_unitary(u: &ComplexMatrix) -> Result<Mat3> {
    if u.rows() != 2 || u.cols() != 2 {
        return Err(Error::DimensionMismatch {
            expected: "2x2".into(),
            found: format!("{}x{}", u.rows(), u.cols()),
        });
    }
    let paulis = pauli_matrices();
    let udag = u.adjoint();
    let mut r = [[0.0; 3]; 3];
    for j in 0..3 {
        let conj = &(u * &paulis[j]) * &udag;
        for i in 0..3 {
            r[i][j] = 0.5 * (&paulis[i] * &conj).trace().re;
        }
    }
    Ok(r)
}

/// SU(2) element implementing a rotation: U (sigma . x) U^dagger = sigma . (R x).
///
/// Defined up to global sign; extracted through the unit quaternion of R.
pub fn rotation_lift(r: &Mat3) -> Result<ComplexMatrix> {
    let dev = real3::orthogonality_deviation(r);
    if dev > 1e-10 {
        return Err(Error::NotRotation {
            reason: format!("not orthogonal (deviation {dev:.3e})"),
        });
    }
    let det = real3::det3(r);
    if (det - 1.0).abs() > 1e-10 {
        return Err(Error::NotRotation {
            reason: format!("determinant {det} != 1"),
        });
    }
    let [w, x, y, z] = quaternion_from_rotation(r);
    Ok(ComplexMatrix::new(
        2,
        2,
        vec![
            Complex64::new(w, -z),
            Complex64::new(-y, -x),
            Complex64::new(y, -x),
            Complex64::new(w, z),
        ],
    )
    .expect("entries are finite"))
}

/// h_p(r): the Schatten p-norm of a qubit state with Bloch length r,
/// spectrum {(1 + r)/2, (1 - r)/2}.
pub fn h_p(r: f64, p: NormOrder) -> Result<f64> {
    if !(0.0..=1.0 + 1e-9).contains(&r) {
        return Err(Error::OutOfRange {
            name: "r",
            value: r,
            range: "[0, 1]",
        });
    }
    let r = r.min(1.0);
    let hi = (1.0 + r) / 2.0;
    let lo = (1.0 - r) / 2.0;
    Ok(match p {
        NormOrder::Infinity => hi,
        NormOrder::Finite(p) => {
            if p < 1.0 {
                return Err(Error::InvalidNormOrder(p));
            }
            (hi.powf(p) + lo.powf(p)).powf(1.0 / p)
        }
    })
}

/// Closed-form maximal output p-norm of a positivity-preserving
/// trace-preserving qubit map, with the attaining pure input state.
///
/// The output spectrum of the best pure state is {(1 +- r)/2} at the image
/// radius r, and one input state attains the maximum for every p at once.
pub fn nu_p_qubit(m: &AffineQubitMap, p: NormOrder) -> Result<(f64, PureState)> {
    let (radius, argmax) = m.image_radius();
    if radius > 1.0 + PP_RADIUS_TOL {
        return Err(Error::NotPositivityPreserving { radius });
    }
    let value = h_p(radius.min(1.0), p)?;
    Ok((value, pure_state_from_bloch(&argmax.0)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{depolarizing, random_cp, transpose_map};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_affine(rng: &mut ChaCha8Rng) -> AffineQubitMap {
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
        AffineQubitMap::new(a, v)
    }

    /// Derivative-free sphere-grid oracle with local zoom refinement.
    fn grid_image_max(m: &AffineQubitMap, coarse: usize) -> f64 {
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        let mut best = (f64::MIN, [0.0, 0.0, 1.0]);
        for k in 0..coarse {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / coarse as f64;
            let rad = (1.0 - z * z).max(0.0).sqrt();
            let th = golden * k as f64;
            let x = [rad * th.cos(), rad * th.sin(), z];
            let val = real3::norm(&m.apply_bloch(&x));
            if val > best.0 {
                best = (val, x);
            }
        }
        // zoom: shrink a local tangent grid around the best point
        let mut center = best.1;
        let mut radius = 0.1;
        for _ in 0..40 {
            let (t1, t2) = tangent_frame(&center);
            for i in -2i32..=2 {
                for j in -2i32..=2 {
                    let mut cand = center;
                    for k in 0..3 {
                        cand[k] += radius * (i as f64 / 2.0) * t1[k]
                            + radius * (j as f64 / 2.0) * t2[k];
                    }
                    let n = real3::norm(&cand);
                    let cand = real3::scale_vec(&cand, 1.0 / n);
                    let val = real3::norm(&m.apply_bloch(&cand));
                    if val > best.0 {
                        best = (val, cand);
                    }
                }
            }
            center = best.1;
            radius *= 0.6;
        }
        best.0
    }

    fn tangent_frame(x: &Vec3) -> (Vec3, Vec3) {
        let pick = if x[0].abs() < 0.9 {
            [1.0, 0.0, 0.0]
        } else {
            [0.0, 1.0, 0.0]
        };
        let mut t1 = [
            x[1] * pick[2] - x[2] * pick[1],
            x[2] * pick[0] - x[0] * pick[2],
            x[0] * pick[1] - x[1] * pick[0],
        ];
        let n1 = real3::norm(&t1);
        t1 = real3::scale_vec(&t1, 1.0 / n1);
        let t2 = [
            x[1] * t1[2] - x[2] * t1[1],
            x[2] * t1[0] - x[0] * t1[2],
            x[0] * t1[1] - x[1] * t1[0],
        ];
        (t1, t2)
    }

    #[test]
    fn identity_channel_affine() {
        let id = crate::channels::identity_map(2);
        let aff = affine_from_map(&id).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((aff.a[i][j] - want).abs() < 1e-12);
            }
            assert!(aff.v[i].abs() < 1e-12);
        }
    }

    #[test]
    fn transpose_affine_flips_y() {
        let aff = affine_from_map(&transpose_map(2)).unwrap();
        let expected = diag3(&[1.0, -1.0, 1.0]);
        for i in 0..3 {
            for j in 0..3 {
                assert!((aff.a[i][j] - expected[i][j]).abs() < 1e-12);
            }
            assert!(aff.v[i].abs() < 1e-12);
        }
    }

    #[test]
    fn depolarizing_affine_is_scaled_identity() {
        let aff = affine_from_map(&depolarizing(0.3).unwrap()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 0.3 } else { 0.0 };
                assert!((aff.a[i][j] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn affine_roundtrip_on_random_maps() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..30 {
            let aff = random_affine(&mut rng);
            let map = map_from_affine(&aff);
            assert!(map.is_trace_preserving(1e-12));
            let back = affine_from_map(&map).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    assert!((aff.a[i][j] - back.a[i][j]).abs() < 1e-10);
                }
                assert!((aff.v[i] - back.v[i]).abs() < 1e-10);
            }
            let again = map_from_affine(&back);
            assert!(map.superop_matrix().max_abs_diff(&again.superop_matrix()) < 1e-10);
        }
    }

    #[test]
    fn affine_rejects_non_trace_preserving() {
        let k = ComplexMatrix::identity(2).scale_re(0.5);
        let m = QuantumMap::from_kraus(vec![k]).unwrap();
        assert!(matches!(
            affine_from_map(&m),
            Err(Error::NotTracePreserving { .. })
        ));
    }

    #[test]
    fn apply_density_matches_superop_apply() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let aff = random_affine(&mut rng);
        let map = map_from_affine(&aff);
        for _ in 0..10 {
            let g = ComplexMatrix::from_fn(2, 2, |_, _| {
                Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
            });
            let via_affine = aff.apply_density(&g).unwrap();
            let via_map = map.apply(&g).unwrap();
            assert!(via_affine.max_abs_diff(&via_map) < 1e-12);
        }
    }

    #[test]
    fn image_radius_isotropic() {
        let m = AffineQubitMap::new(diag3(&[0.4, 0.4, 0.4]), real3::ZERO3);
        let (r, x) = m.image_radius();
        assert!((r - 0.4).abs() < 1e-12);
        assert!((x.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn image_radius_hard_case_example() {
        // A = diag(0.5, 0, 0), v = (0, 0, 0.5): best at x = (+-1, 0, 0)
        let m = AffineQubitMap::new(diag3(&[0.5, 0.0, 0.0]), [0.0, 0.0, 0.5]);
        let (r, x) = m.image_radius();
        assert!((r - 0.5f64.sqrt()).abs() < 1e-10);
        assert!((x.0[0].abs() - 1.0).abs() < 1e-9);
        let oracle = grid_image_max(&m, 20_000);
        assert!((r - oracle).abs() < 1e-7);
    }

    #[test]
    fn image_radius_amplitude_damping_touches_pole() {
        let gamma: f64 = 0.37;
        let s = (1.0 - gamma).sqrt();
        let m = AffineQubitMap::new(diag3(&[s, s, 1.0 - gamma]), [0.0, 0.0, gamma]);
        let (r, x) = m.image_radius();
        assert!((r - 1.0).abs() < 1e-10);
        assert!((x.0[2] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn image_radius_agrees_with_grid_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let m = random_affine(&mut rng);
            let (r, x) = m.image_radius();
            assert!((x.norm() - 1.0).abs() < 1e-12);
            assert!((real3::norm(&m.apply_bloch(&x.0)) - r).abs() < 1e-10);
            let oracle = grid_image_max(&m, 10_000);
            assert!(
                (r - oracle).abs() < 1e-6,
                "solver {r} vs grid {oracle}"
            );
            assert!(r >= oracle - 1e-9, "solver must dominate the grid");
        }
    }

    #[test]
    fn rotation_lift_identity() {
        let u = rotation_lift(&real3::identity3()).unwrap();
        let id = ComplexMatrix::identity(2);
        let diff_plus = u.max_abs_diff(&id);
        let diff_minus = u.max_abs_diff(&id.scale_re(-1.0));
        assert!(diff_plus < 1e-12 || diff_minus < 1e-12);
    }

    #[test]
    fn rotation_lift_pi_about_z_and_x() {
        let [sx, _, sz] = pauli_matrices();
        let rz = diag3(&[-1.0, -1.0, 1.0]);
        let u = rotation_lift(&rz).unwrap();
        let target = sz.scale(Complex64::new(0.0, -1.0));
        assert!(
            u.max_abs_diff(&target) < 1e-12 || u.max_abs_diff(&target.scale_re(-1.0)) < 1e-12
        );
        let rx = diag3(&[1.0, -1.0, -1.0]);
        let u = rotation_lift(&rx).unwrap();
        let target = sx.scale(Complex64::new(0.0, -1.0));
        assert!(
            u.max_abs_diff(&target) < 1e-12 || u.max_abs_diff(&target.scale_re(-1.0)) < 1e-12
        );
    }

    #[test]
    fn rotation_lift_conjugation_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..200 {
            let omega = [
                rng.gen::<f64>() * 6.0 - 3.0,
                rng.gen::<f64>() * 6.0 - 3.0,
                rng.gen::<f64>() * 6.0 - 3.0,
            ];
            let r = real3::rotation_from_axis_angle(&omega);
            let u = rotation_lift(&r).unwrap();
            let back = rotation_from_unitary(&u).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    assert!((back[i][j] - r[i][j]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn rotation_lift_rejects_reflections() {
        assert!(rotation_lift(&diag3(&[1.0, 1.0, -1.0])).is_err());
        let not_orth = [[1.0, 0.1, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(rotation_lift(&not_orth).is_err());
    }

    #[test]
    fn diagonal_form_of_transpose() {
        let aff = affine_from_map(&transpose_map(2)).unwrap();
        let df = diagonal_form(&aff).unwrap();
        assert!(df.lambdas[0] >= 0.0 && df.lambdas[1] >= 0.0);
        let mut mags = df.lambdas.map(f64::abs);
        mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for m in mags {
            assert!((m - 1.0).abs() < 1e-10);
        }
        // one negative sign remains: the transpose is not a rotation
        assert!(df.lambdas[2] < 0.0);
        let back = df.reconstruct().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((back.a[i][j] - aff.a[i][j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn diagonal_form_fixes_already_diagonal_map() {
        let m = AffineQubitMap::new(diag3(&[0.5, 0.3, 0.2]), [0.0, 0.0, 0.1]);
        let df = diagonal_form(&m).unwrap();
        assert!((df.lambdas[0] - 0.5).abs() < 1e-12);
        assert!((df.lambdas[1] - 0.3).abs() < 1e-12);
        assert!((df.lambdas[2] - 0.2).abs() < 1e-12);
        assert!((df.v[2] - 0.1).abs() < 1e-12);
        assert!(df.v[0].abs() < 1e-12 && df.v[1].abs() < 1e-12);
    }

    #[test]
    fn diagonal_form_recovers_singular_values_of_rotated_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let omega = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
        let rot = real3::rotation_from_axis_angle(&omega);
        let a = mat_mul(&rot, &diag3(&[0.6, 0.5, 0.4]));
        let m = AffineQubitMap::new(a, real3::ZERO3);
        let df = diagonal_form(&m).unwrap();
        let mut mags = df.lambdas.map(f64::abs);
        mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!((mags[0] - 0.6).abs() < 1e-10);
        assert!((mags[1] - 0.5).abs() < 1e-10);
        assert!((mags[2] - 0.4).abs() < 1e-10);
        assert!(df.lambdas[0] >= 0.0 && df.lambdas[1] >= 0.0);
    }

    #[test]
    fn diagonal_form_preserves_image_radius_and_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        for _ in 0..50 {
            let m = random_affine(&mut rng);
            let df = diagonal_form(&m).unwrap();
            assert!(df.lambdas[0] >= 0.0 && df.lambdas[1] >= 0.0);
            let canon = df.canonical_map();
            let (r0, _) = m.image_radius();
            let (r1, _) = canon.image_radius();
            assert!((r0 - r1).abs() < 1e-10);
            let back = df.reconstruct().unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    assert!((back.a[i][j] - m.a[i][j]).abs() < 1e-10);
                }
                assert!((back.v[i] - m.v[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn h_p_special_values() {
        for p in [1.0, 1.5, 2.0, 4.0, 7.0] {
            let p = NormOrder::new(p).unwrap();
            assert!((h_p(1.0, p).unwrap() - 1.0).abs() < 1e-14);
        }
        let p4 = NormOrder::new(4.0).unwrap();
        assert!((h_p(0.0, p4).unwrap() - 2f64.powf((1.0 - 4.0) / 4.0)).abs() < 1e-14);
        let p2 = NormOrder::new(2.0).unwrap();
        assert!((h_p(0.6, p2).unwrap() - 0.68f64.sqrt()).abs() < 1e-12);
        assert!((h_p(0.5, NormOrder::infinity()).unwrap() - 0.75).abs() < 1e-14);
        assert!(h_p(1.5, p2).is_err());
    }

    #[test]
    fn nu_p_qubit_depolarizing_matches_sampled_maximum() {
        let aff = affine_from_map(&depolarizing(0.5).unwrap()).unwrap();
        let p = NormOrder::new(4.0).unwrap();
        let (value, state) = nu_p_qubit(&aff, p).unwrap();
        assert!((value - h_p(0.5, p).unwrap()).abs() < 1e-12);
        // brute-force over sampled pure states never beats the closed form
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        let mut best = f64::MIN;
        for k in 0..4000 {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / 4000.0;
            let rad = (1.0 - z * z).max(0.0).sqrt();
            let th = golden * k as f64;
            let x = [rad * th.cos(), rad * th.sin(), z];
            let rho = density_from_bloch(&x);
            let out = aff.apply_density(&rho).unwrap();
            let n = crate::matcore::schatten_norm(&out, p).unwrap();
            best = best.max(n);
        }
        assert!(best <= value + 1e-9);
        assert!(value - best < 1e-5);
        // returned argmax reproduces the value
        let rho = state.density();
        let out = aff.apply_density(&rho).unwrap();
        assert!((crate::matcore::schatten_norm(&out, p).unwrap() - value).abs() < 1e-10);
    }

    #[test]
    fn same_state_maximizes_every_order_simultaneously() {
        // the returned argmax dominates a 10^4-point sphere sample for
        // p = 1.5, 2 and 4 at once
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        let orders = [
            NormOrder::new(1.5).unwrap(),
            NormOrder::new(2.0).unwrap(),
            NormOrder::new(4.0).unwrap(),
        ];
        for _ in 0..5 {
            let m = crate::channels::random_pp_tp_qubit(0.2 + 0.75 * rng.gen::<f64>(), &mut rng)
                .unwrap();
            let values: Vec<f64> = orders
                .iter()
                .map(|&p| nu_p_qubit(&m, p).unwrap().0)
                .collect();
            let mut sampled = [f64::MIN; 3];
            for k in 0..10_000 {
                let z = 1.0 - 2.0 * (k as f64 + 0.5) / 10_000.0;
                let rad = (1.0 - z * z).max(0.0).sqrt();
                let th = golden * k as f64;
                let x = [rad * th.cos(), rad * th.sin(), z];
                let rho = density_from_bloch(&x);
                let out = m.apply_density(&rho).unwrap();
                for (i, &p) in orders.iter().enumerate() {
                    sampled[i] = sampled[i].max(crate::matcore::schatten_norm(&out, p).unwrap());
                }
            }
            for i in 0..3 {
                assert!(
                    sampled[i] <= values[i] + 1e-8,
                    "sampled {} exceeds closed form {}",
                    sampled[i],
                    values[i]
                );
            }
        }
    }

    #[test]
    fn nu_p_qubit_rejects_expanding_maps() {
        let m = AffineQubitMap::new(diag3(&[1.2, 0.0, 0.0]), real3::ZERO3);
        assert!(matches!(
            nu_p_qubit(&m, NormOrder::new(2.0).unwrap()),
            Err(Error::NotPositivityPreserving { .. })
        ));
    }

    #[test]
    fn cp_qubit_maps_are_positivity_preserving() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        for _ in 0..40 {
            let rank = 1 + (rng.gen::<u32>() % 4) as usize;
            let m = random_cp(2, rank, &mut rng);
            let aff = affine_from_map(&m).unwrap();
            assert!(aff.image_radius().0 <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn pure_state_from_bloch_poles_and_equator() {
        let north = pure_state_from_bloch(&[0.0, 0.0, 1.0]).unwrap();
        let rho = north.density();
        assert!((rho[(0, 0)].re - 1.0).abs() < 1e-14);
        let east = pure_state_from_bloch(&[1.0, 0.0, 0.0]).unwrap();
        let (x, _) = bloch_from_density(&east.density()).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!(pure_state_from_bloch(&[0.0, 0.0, 0.5]).is_err());
    }
}
