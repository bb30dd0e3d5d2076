//! Small real linear-algebra helpers for Bloch-space work: 3-vectors,
//! 3x3 matrices, rotations, and a dense solver for tiny systems.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matcore::{hermitian_eigen, svd, ComplexMatrix};

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

pub const ZERO3: Vec3 = [0.0, 0.0, 0.0];

pub fn identity3() -> Mat3 {
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
}

pub fn mat_vec(m: &Mat3, v: &Vec3) -> Vec3 {
    let mut out = ZERO3;
    for i in 0..3 {
        out[i] = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2];
    }
    out
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn transpose3(m: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = m[j][i];
        }
    }
    out
}

pub fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub fn scale3(m: &Mat3, s: f64) -> Mat3 {
    let mut out = *m;
    for row in out.iter_mut() {
        for x in row.iter_mut() {
            *x *= s;
        }
    }
    out
}

pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(v: &Vec3) -> f64 {
    dot(v, v).sqrt()
}

pub fn scale_vec(v: &Vec3, s: f64) -> Vec3 {
    [v[0] * s, v[1] * s, v[2] * s]
}

pub fn add_vec(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub_vec(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn diag3(d: &Vec3) -> Mat3 {
    [[d[0], 0.0, 0.0], [0.0, d[1], 0.0], [0.0, 0.0, d[2]]]
}

/// Max deviation of Q^T Q from the identity.
pub fn orthogonality_deviation(q: &Mat3) -> f64 {
    let qtq = mat_mul(&transpose3(q), q);
    let mut dev: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((qtq[i][j] - target).abs());
        }
    }
    dev
}

/// Rotation matrix from an axis-angle vector (angle = length, axis = direction).
pub fn rotation_from_axis_angle(omega: &Vec3) -> Mat3 {
    let angle = norm(omega);
    if angle < 1e-300 {
        return identity3();
    }
    let [x, y, z] = scale_vec(omega, 1.0 / angle);
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    [
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ]
}

/// Unit quaternion (w, x, y, z) of a rotation matrix, w >= 0.
///
/// Shepperd's branch selection keeps the extraction accurate for angles
/// near pi, where trace-based formulas lose half the digits.
pub fn quaternion_from_rotation(r: &Mat3) -> [f64; 4] {
    let t = r[0][0] + r[1][1] + r[2][2];
    let mut q = if t > 0.0 {
        let s = (t + 1.0).sqrt() * 2.0;
        [
            0.25 * s,
            (r[2][1] - r[1][2]) / s,
            (r[0][2] - r[2][0]) / s,
            (r[1][0] - r[0][1]) / s,
        ]
    } else if r[0][0] >= r[1][1] && r[0][0] >= r[2][2] {
        let s = (1.0 + r[0][0] - r[1][1] - r[2][2]).sqrt() * 2.0;
        [
            (r[2][1] - r[1][2]) / s,
            0.25 * s,
            (r[0][1] + r[1][0]) / s,
            (r[0][2] + r[2][0]) / s,
        ]
    } else if r[1][1] >= r[2][2] {
        let s = (1.0 + r[1][1] - r[0][0] - r[2][2]).sqrt() * 2.0;
        [
            (r[0][2] - r[2][0]) / s,
            (r[0][1] + r[1][0]) / s,
            0.25 * s,
            (r[1][2] + r[2][1]) / s,
        ]
    } else {
        let s = (1.0 + r[2][2] - r[0][0] - r[1][1]).sqrt() * 2.0;
        [
            (r[1][0] - r[0][1]) / s,
            (r[0][2] + r[2][0]) / s,
            (r[1][2] + r[2][1]) / s,
            0.25 * s,
        ]
    };
    let qn = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    for c in q.iter_mut() {
        *c /= qn;
    }
    if q[0] < 0.0 {
        for c in q.iter_mut() {
            *c = -*c;
        }
    }
    q
}

/// Axis-angle vector of a rotation matrix (inverse of `rotation_from_axis_angle`).
pub fn axis_angle_from_rotation(r: &Mat3) -> Vec3 {
    let [w, x, y, z] = quaternion_from_rotation(r);
    let vnorm = (x * x + y * y + z * z).sqrt();
    if vnorm < 1e-300 {
        return ZERO3;
    }
    let angle = 2.0 * vnorm.atan2(w);
    scale_vec(&[x, y, z], angle / vnorm)
}

fn embed(m: &Mat3) -> ComplexMatrix {
    ComplexMatrix::from_fn(3, 3, |i, j| Complex64::new(m[i][j], 0.0))
}

fn extract_real(m: &ComplexMatrix) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            debug_assert!(m[(i, j)].im.abs() < 1e-9);
            out[i][j] = m[(i, j)].re;
        }
    }
    out
}

/// Eigendecomposition of a symmetric 3x3: values descending, columns of the
/// returned matrix are eigenvectors.
pub fn sym_eig3(m: &Mat3) -> Result<(Vec3, Mat3)> {
    let e = hermitian_eigen(&embed(m))?;
    Ok((
        [e.values[0], e.values[1], e.values[2]],
        extract_real(&e.vectors),
    ))
}

/// SVD of a real 3x3: `m = u * diag(s) * v^T`, singular values descending.
///
/// Real input keeps every Jacobi rotation real, so the factors are real.
pub fn svd3(m: &Mat3) -> Result<(Mat3, Vec3, Mat3)> {
    let s = svd(&embed(m))?;
    Ok((
        extract_real(&s.u),
        [s.values[0], s.values[1], s.values[2]],
        extract_real(&s.v),
    ))
}

/// Solve a small dense linear system in place (Gaussian elimination with
/// partial pivoting). `a` is n x n row-major, `b` length n.
pub fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::DimensionMismatch {
                expected: "nonsingular system".into(),
                found: "singular pivot".into(),
            });
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in (row + 1)..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Ok(x)
}
