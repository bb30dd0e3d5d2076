//! Gorini-Sudarshan extreme affine maps of the unit ball, membership in the
//! radius classes C_r, and Caratheodory decomposition by column generation.
//!
//! An extreme point (B, w) of the unit-ball affine maps is parameterized by
//! kappa in [0,1], delta in (0,1] and orthogonal Q1, Q2:
//! Q1 w = (0, 0, delta (1 - kappa^2)), Q1 B Q2 = Diag(m, m, kappa m) with
//! m = sqrt(1 + kappa^2 delta^2 - delta^2).

mod decompose;

pub use decompose::{decompose_into_extremes, Decomposition, GsAtom};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{diagonal_form, max_image_norm, AffineQubitMap};
use crate::error::{Error, Result};
use crate::real3::{
    self, diag3, mat_mul, mat_vec, orthogonality_deviation, rotation_from_axis_angle, transpose3,
    Mat3, Vec3,
};

/// Extreme affine map of the closed unit ball in Bloch space.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GSExtreme {
    pub kappa: f64,
    pub delta: f64,
    pub q1: Mat3,
    pub q2: Mat3,
    /// m = sqrt(1 + kappa^2 delta^2 - delta^2), in [0, 1].
    pub m_scalar: f64,
    /// The linear part B = Q1^T Diag(m, m, kappa m) Q2^T.
    pub b: Mat3,
    /// The translation w = Q1^T (0, 0, delta (1 - kappa^2)).
    pub w: Vec3,
}

impl GSExtreme {
    /// The affine map scaled by r, an element of C_r.
    pub fn scaled(&self, r: f64) -> AffineQubitMap {
        AffineQubitMap::new(real3::scale3(&self.b, r), real3::scale_vec(&self.w, r))
    }
}

/// Membership verdict of an affine map in C_r, the positivity-preserving
/// trace-preserving qubit maps whose image ellipsoid fits in the radius-r
/// sphere.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrMembership {
    pub r: f64,
    pub map: AffineQubitMap,
    pub radius: f64,
    pub member: bool,
}

pub(crate) fn build_unchecked(kappa: f64, delta: f64, q1: Mat3, q2: Mat3) -> GSExtreme {
    let m = (1.0 + kappa * kappa * delta * delta - delta * delta)
        .max(0.0)
        .sqrt();
    let b = mat_mul(
        &mat_mul(&transpose3(&q1), &diag3(&[m, m, kappa * m])),
        &transpose3(&q2),
    );
    let w = mat_vec(&transpose3(&q1), &[0.0, 0.0, delta * (1.0 - kappa * kappa)]);
    GSExtreme {
        kappa,
        delta,
        q1,
        q2,
        m_scalar: m,
        b,
        w,
    }
}

/// Build an extreme map from its parameters, validating ranges,
/// orthogonality, and unit-ball containment.
pub fn gs_build(kappa: f64, delta: f64, q1: Mat3, q2: Mat3) -> Result<GSExtreme> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::OutOfRange {
            name: "kappa",
            value: kappa,
            range: "[0, 1]",
        });
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::OutOfRange {
            name: "delta",
            value: delta,
            range: "(0, 1]",
        });
    }
    for (name, q) in [("q1", &q1), ("q2", &q2)] {
        let dev = orthogonality_deviation(q);
        if dev > 1e-10 {
            return Err(Error::NotRotation {
                reason: format!("{name} is not orthogonal (deviation {dev:.3e})"),
            });
        }
    }
    let e = build_unchecked(kappa, delta, q1, q2);
    let (sup, _) = max_image_norm(&e.b, &e.w);
    debug_assert!(sup <= 1.0 + 1e-8, "extreme map must fit the unit ball");
    if sup > 1.0 + 1e-8 {
        return Err(Error::NotPositivityPreserving { radius: sup });
    }
    Ok(e)
}

/// Random extreme map: uniform kappa and delta, Haar-ish rotations from
/// axis-angle with an independent reflection sign on each factor.
pub fn random_gs(rng: &mut ChaCha8Rng) -> GSExtreme {
    let kappa: f64 = rng.gen();
    let delta: f64 = 1.0 - rng.gen::<f64>() * (1.0 - 1e-12); // (0, 1]
    let mut q = || {
        let axis = [
            rng.gen::<f64>() * 2.0 - 1.0,
            rng.gen::<f64>() * 2.0 - 1.0,
            rng.gen::<f64>() * 2.0 - 1.0,
        ];
        let angle = rng.gen::<f64>() * std::f64::consts::PI;
        let n = real3::norm(&axis).max(1e-12);
        let mut r = rotation_from_axis_angle(&real3::scale_vec(&axis, angle / n));
        if rng.gen::<bool>() {
            r = real3::scale3(&r, -1.0); // the other O(3) component
        }
        r
    };
    let (q1, q2) = (q(), q());
    build_unchecked(kappa, delta, q1, q2)
}

/// Check that the scaled extreme map canonicalizes to the expected shape:
/// at most one nonzero translation component, and |lambdas| equal to
/// (r m, r m, r kappa m) up to permutation.
pub fn lemma2_check(e: &GSExtreme, r: f64) -> bool {
    let scaled = e.scaled(r);
    let df = match diagonal_form(&scaled) {
        Ok(df) => df,
        Err(_) => return false,
    };
    let nonzero_translations = df.v.iter().filter(|c| c.abs() >= 1e-9).count();
    if nonzero_translations > 1 {
        return false;
    }
    let mut mags = df.lambdas.map(f64::abs);
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut expected = [r * e.m_scalar, r * e.m_scalar, r * e.kappa * e.m_scalar];
    expected.sort_by(|a, b| b.partial_cmp(a).unwrap());
    mags.iter()
        .zip(&expected)
        .all(|(got, want)| (got - want).abs() < 1e-9)
}

/// Is the map inside C_r? Decided by the exact image-radius solver; C_r is
/// the set of r-scaled unit-ball affine maps.
pub fn cr_membership(map: &AffineQubitMap, r: f64) -> Result<CrMembership> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::OutOfRange {
            name: "r",
            value: r,
            range: "[0, 1]",
        });
    }
    let (radius, _) = map.image_radius();
    Ok(CrMembership {
        r,
        map: *map,
        radius,
        member: radius <= r + 1e-9,
    })
}
