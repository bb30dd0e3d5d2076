//! Convex decomposition of a C_r member into at most 13 scaled extreme maps.
//!
//! Column generation over the smooth 8-parameter extreme family: a master
//! problem (least squares over the weight simplex, solved by a small dense
//! active-set method) alternates with a pricing search (multi-start
//! Nelder-Mead over kappa, delta and two axis-angle rotations, with both
//! O(3) components swept via reflection signs). Atom parameters are then
//! polished jointly against the residual, and an oversized support is
//! reduced by Caratheodory elimination.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{build_unchecked, cr_membership, GSExtreme};
use crate::channels::AffineQubitMap;
use crate::error::{Error, Result};
use crate::real3::{
    self, axis_angle_from_rotation, det3, rotation_from_axis_angle, solve_dense, svd3, Vec3,
};

/// Column budget for the generation loop.
const MAX_COLUMNS: usize = 200;
/// Atoms with delta below this are closure (boundary) atoms, not extreme
/// points proper; they are admitted because decomposition targets the closed
/// convex hull, and flagged in the output.
const DELTA_BOUNDARY: f64 = 1e-9;

/// One scaled atom of a decomposition.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(into = "GsAtomRecord", try_from = "GsAtomRecord")]
pub struct GsAtom {
    pub extreme: GSExtreme,
    pub scale: f64,
}

impl GsAtom {
    pub fn to_affine(&self) -> AffineQubitMap {
        self.extreme.scaled(self.scale)
    }

    /// Whether this atom used the delta = 0 closure boundary.
    pub fn is_boundary(&self) -> bool {
        self.extreme.delta < DELTA_BOUNDARY
    }

    fn to_vec12(&self) -> [f64; 12] {
        let m = self.to_affine();
        let mut out = [0.0; 12];
        for i in 0..3 {
            for j in 0..3 {
                out[3 * i + j] = m.a[i][j];
            }
            out[9 + i] = m.v[i];
        }
        out
    }
}

/// Compact serialized form: rotation parts as axis-angle plus a reflection
/// sign for each O(3) factor.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct GsAtomRecord {
    kappa: f64,
    delta: f64,
    q1_axis_angle: Vec3,
    q1_sign: i8,
    q2_axis_angle: Vec3,
    q2_sign: i8,
    scale: f64,
    boundary: bool,
}

impl From<GsAtom> for GsAtomRecord {
    fn from(atom: GsAtom) -> Self {
        let e = &atom.extreme;
        let s1 = if det3(&e.q1) < 0.0 { -1.0 } else { 1.0 };
        let s2 = if det3(&e.q2) < 0.0 { -1.0 } else { 1.0 };
        GsAtomRecord {
            kappa: e.kappa,
            delta: e.delta,
            q1_axis_angle: axis_angle_from_rotation(&real3::scale3(&e.q1, s1)),
            q1_sign: s1 as i8,
            q2_axis_angle: axis_angle_from_rotation(&real3::scale3(&e.q2, s2)),
            q2_sign: s2 as i8,
            scale: atom.scale,
            boundary: e.delta < DELTA_BOUNDARY,
        }
    }
}

impl TryFrom<GsAtomRecord> for GsAtom {
    type Error = Error;
    fn try_from(r: GsAtomRecord) -> Result<Self> {
        let q1 = real3::scale3(
            &rotation_from_axis_angle(&r.q1_axis_angle),
            r.q1_sign as f64,
        );
        let q2 = real3::scale3(
            &rotation_from_axis_angle(&r.q2_axis_angle),
            r.q2_sign as f64,
        );
        Ok(GsAtom {
            extreme: build_unchecked(r.kappa, r.delta, q1, q2),
            scale: r.scale,
        })
    }
}

/// A convex combination of scaled extreme maps reproducing a target.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Decomposition {
    pub atoms: Vec<GsAtom>,
    pub weights: Vec<f64>,
    /// Entrywise max deviation of the recombination from the target.
    pub residual: f64,
}

impl Decomposition {
    /// Weighted sum of the atoms.
    pub fn recombine(&self) -> AffineQubitMap {
        let mut a = [[0.0; 3]; 3];
        let mut v = [0.0; 3];
        for (atom, &w) in self.atoms.iter().zip(&self.weights) {
            let m = atom.to_affine();
            for i in 0..3 {
                for j in 0..3 {
                    a[i][j] += w * m.a[i][j];
                }
                v[i] += w * m.v[i];
            }
        }
        AffineQubitMap::new(a, v)
    }
}

fn target_vec(m: &AffineQubitMap) -> [f64; 12] {
    let mut out = [0.0; 12];
    for i in 0..3 {
        for j in 0..3 {
            out[3 * i + j] = m.a[i][j];
        }
        out[9 + i] = m.v[i];
    }
    out
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Atom parameterization used by pricing: [kappa, delta, omega1, omega2]
/// plus the two reflection signs.
fn atom_from_params(params: &[f64], s1: f64, s2: f64, scale: f64) -> GsAtom {
    let kappa = params[0].clamp(0.0, 1.0);
    let delta = params[1].clamp(0.0, 1.0);
    let q1 = real3::scale3(
        &rotation_from_axis_angle(&[params[2], params[3], params[4]]),
        s1,
    );
    let q2 = real3::scale3(
        &rotation_from_axis_angle(&[params[5], params[6], params[7]]),
        s2,
    );
    GsAtom {
        extreme: build_unchecked(kappa, delta, q1, q2),
        scale,
    }
}

fn params_from_atom(atom: &GsAtom) -> ([f64; 8], f64, f64) {
    let e = &atom.extreme;
    let s1 = if det3(&e.q1) < 0.0 { -1.0 } else { 1.0 };
    let s2 = if det3(&e.q2) < 0.0 { -1.0 } else { 1.0 };
    let w1 = axis_angle_from_rotation(&real3::scale3(&e.q1, s1));
    let w2 = axis_angle_from_rotation(&real3::scale3(&e.q2, s2));
    (
        [e.kappa, e.delta, w1[0], w1[1], w1[2], w2[0], w2[1], w2[2]],
        s1,
        s2,
    )
}

/// Plain Nelder-Mead minimization; small dimensions only.
fn nelder_mead(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    steps: &[f64],
    max_iters: usize,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += steps[i];
        let v = f(&p);
        simplex.push((p, v));
    }
    for _ in 0..max_iters {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        if simplex[n].1 - simplex[0].1 < 1e-16 * (1.0 + simplex[0].1.abs()) {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(p, _)| p[j]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let reflect: Vec<f64> = (0..n)
            .map(|j| centroid[j] + (centroid[j] - worst.0[j]))
            .collect();
        let fr = f(&reflect);
        if fr < simplex[0].1 {
            let expand: Vec<f64> = (0..n)
                .map(|j| centroid[j] + 2.0 * (centroid[j] - worst.0[j]))
                .collect();
            let fe = f(&expand);
            simplex[n] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflect, fr);
        } else {
            let contract: Vec<f64> = (0..n)
                .map(|j| centroid[j] + 0.5 * (worst.0[j] - centroid[j]))
                .collect();
            let fc = f(&contract);
            if fc < worst.1 {
                simplex[n] = (contract, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let shrunk: Vec<f64> = (0..n)
                        .map(|j| best[j] + 0.5 * (entry.0[j] - best[j]))
                        .collect();
                    entry.1 = f(&shrunk);
                    entry.0 = shrunk;
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    simplex.swap_remove(0)
}

/// Least squares over the weight simplex: min ||E a - t||^2, a >= 0,
/// sum a = 1. Dense active-set with equality handled in the KKT system.
fn solve_simplex_ls(cols: &[[f64; 12]], t: &[f64; 12]) -> Vec<f64> {
    let k = cols.len();
    if k == 1 {
        return vec![1.0];
    }
    let gram = |i: usize, j: usize| -> f64 { (0..12).map(|r| cols[i][r] * cols[j][r]).sum() };
    let proj: Vec<f64> = (0..k)
        .map(|i| (0..12).map(|r| cols[i][r] * t[r]).sum())
        .collect();

    let mut active: Vec<usize> = (0..k).collect();
    let mut weights = vec![1.0 / k as f64; k];
    for _outer in 0..4 * k + 24 {
        // equality-constrained LS on the active set
        let m = active.len();
        let mut kkt: Vec<Vec<f64>> = vec![vec![0.0; m + 1]; m + 1];
        let mut rhs = vec![0.0; m + 1];
        for (ai, &i) in active.iter().enumerate() {
            for (aj, &j) in active.iter().enumerate() {
                kkt[ai][aj] = 2.0 * gram(i, j);
            }
            kkt[ai][ai] += 1e-12; // ridge against collinear atoms
            kkt[ai][m] = -1.0;
            kkt[m][ai] = 1.0;
            rhs[ai] = 2.0 * proj[i];
        }
        rhs[m] = 1.0;
        let solution = match solve_dense(&mut kkt, &mut rhs) {
            Ok(s) => s,
            Err(_) => break,
        };
        let trial: Vec<f64> = solution[..m].to_vec();

        if trial.iter().all(|&w| w >= -1e-12) {
            let mut next = vec![0.0; k];
            for (ai, &i) in active.iter().enumerate() {
                next[i] = trial[ai].max(0.0);
            }
            weights = next;
            // optimality over the inactive set: grad_i >= mu - tol
            let grad = |i: usize| -> f64 {
                2.0 * ((0..k).map(|j| gram(i, j) * weights[j]).sum::<f64>() - proj[i])
            };
            let mu = solution[m];
            let mut entering: Option<(usize, f64)> = None;
            for i in 0..k {
                if active.contains(&i) {
                    continue;
                }
                let slack = grad(i) - mu;
                if slack < -1e-10 && entering.map_or(true, |(_, s)| slack < s) {
                    entering = Some((i, slack));
                }
            }
            match entering {
                Some((i, _)) => active.push(i),
                None => break,
            }
        } else {
            // move from the previous feasible point toward the trial until a
            // weight hits zero, then drop that atom from the support
            let mut gamma = 1.0f64;
            let mut blocker = None;
            for (ai, &i) in active.iter().enumerate() {
                if trial[ai] < weights[i] {
                    let g = weights[i] / (weights[i] - trial[ai]);
                    if g < gamma {
                        gamma = g;
                        blocker = Some(i);
                    }
                }
            }
            for (ai, &i) in active.iter().enumerate() {
                weights[i] += gamma * (trial[ai] - weights[i]);
            }
            if let Some(b) = blocker {
                weights[b] = 0.0;
                active.retain(|&i| i != b);
                if active.is_empty() {
                    active.push(0);
                    weights[0] = 1.0;
                }
            } else {
                break;
            }
        }
    }
    // exact renormalization
    let s: f64 = weights.iter().sum();
    if s > 0.0 {
        for w in weights.iter_mut() {
            *w /= s;
        }
    }
    weights
}

/// Reduce the support to at most `max_atoms` without changing the
/// recombination: repeatedly shift weight along a null direction of the
/// moment matrix until one weight hits zero.
fn caratheodory_reduce(cols: &mut Vec<[f64; 12]>, weights: &mut Vec<f64>, max_atoms: usize) {
    while cols.len() > max_atoms {
        let k = cols.len();
        // rows: 12 matching equations + the weight-sum equation
        let mut m: Vec<Vec<f64>> = (0..13)
            .map(|r| {
                (0..k)
                    .map(|i| if r < 12 { cols[i][r] } else { 1.0 })
                    .collect()
            })
            .collect();
        let z = match null_vector(&mut m, k) {
            Some(z) => z,
            None => break,
        };
        // choose tau so that weights - tau z stays nonnegative and one hits 0
        let mut tau = f64::INFINITY;
        let mut drop_idx = None;
        for i in 0..k {
            if z[i] > 1e-14 {
                let limit = weights[i] / z[i];
                if limit < tau {
                    tau = limit;
                    drop_idx = Some(i);
                }
            }
        }
        let (tau, drop_idx) = match drop_idx {
            Some(i) => (tau, i),
            None => {
                // all z <= 0: use the negated direction
                let mut tau = f64::INFINITY;
                let mut idx = None;
                for i in 0..k {
                    if z[i] < -1e-14 {
                        let limit = -weights[i] / z[i];
                        if limit < tau {
                            tau = limit;
                            idx = Some(i);
                        }
                    }
                }
                match idx {
                    Some(i) => (-tau, i),
                    None => break,
                }
            }
        };
        for i in 0..k {
            weights[i] -= tau * z[i];
            weights[i] = weights[i].max(0.0);
        }
        weights[drop_idx] = 0.0;
        // compact
        let mut keep_cols = Vec::with_capacity(k - 1);
        let mut keep_w = Vec::with_capacity(k - 1);
        for i in 0..k {
            if i != drop_idx && weights[i] > 0.0 {
                keep_cols.push(cols[i]);
                keep_w.push(weights[i]);
            }
        }
        *cols = keep_cols;
        *weights = keep_w;
        let s: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= s;
        }
    }
}

/// A nonzero null vector of a rows x k matrix with rows < k, by Gaussian
/// elimination; returns None if the numerical rank is full.
fn null_vector(m: &mut [Vec<f64>], k: usize) -> Option<Vec<f64>> {
    let rows = m.len();
    let mut pivot_cols = Vec::new();
    let mut row = 0;
    for col in 0..k {
        if row >= rows {
            break;
        }
        let best = (row..rows).max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap())?;
        if m[best][col].abs() < 1e-11 {
            continue;
        }
        m.swap(row, best);
        let piv = m[row][col];
        for r in 0..rows {
            if r != row {
                let f = m[r][col] / piv;
                if f != 0.0 {
                    for c in col..k {
                        m[r][c] -= f * m[row][c];
                    }
                }
            }
        }
        pivot_cols.push(col);
        row += 1;
    }
    let free_col = (0..k).find(|c| !pivot_cols.contains(c))?;
    let mut z = vec![0.0; k];
    z[free_col] = 1.0;
    for (r, &pc) in pivot_cols.iter().enumerate() {
        z[pc] = -m[r][free_col] / m[r][pc];
    }
    Some(z)
}

/// Analytic projection of an arbitrary (A, v) point onto the extreme
/// family: the singular values of A/r give m and kappa, the translation
/// direction pins the third column of Q1, and delta comes from |w|.
/// Exact when the point is a scaled extreme map; a strong seed otherwise.
fn fit_atom(point: &[f64; 12], scale: f64) -> Option<GsAtom> {
    let mut b = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            b[i][j] = point[3 * i + j] / scale;
        }
    }
    let w = [
        point[9] / scale,
        point[10] / scale,
        point[11] / scale,
    ];
    let (mut u, s, mut v) = svd3(&b).ok()?;
    let m = ((s[0] + s[1]) / 2.0).clamp(0.0, 1.0);
    let kappa = if m > 1e-9 {
        (s[2] / m).clamp(0.0, 1.0)
    } else {
        0.0
    };
    // align the kappa-direction (third left singular vector) with w
    let align: f64 = (0..3).map(|i| u[i][2] * w[i]).sum();
    if align < 0.0 {
        for i in 0..3 {
            u[i][2] = -u[i][2];
            v[i][2] = -v[i][2];
        }
    }
    let delta = if kappa < 1.0 - 1e-9 {
        (real3::norm(&w) / (1.0 - kappa * kappa)).clamp(0.0, 1.0)
    } else {
        0.5
    };
    let q1 = real3::transpose3(&u);
    let q2 = v;
    Some(GsAtom {
        extreme: build_unchecked(kappa, delta, q1, q2),
        scale,
    })
}

struct Pricing<'a> {
    target: &'a [f64; 12],
    scale: f64,
}

impl Pricing<'_> {
    /// Residual-after-mixing objective: the best convex step from x toward
    /// the candidate atom.
    fn objective(&self, params: &[f64], s1: f64, s2: f64, x: Option<&[f64; 12]>) -> f64 {
        let phi = atom_from_params(params, s1, s2, self.scale).to_vec12();
        match x {
            None => (0..12).map(|r| (phi[r] - self.target[r]).powi(2)).sum(),
            Some(x) => {
                let mut num = 0.0;
                let mut den = 0.0;
                for r in 0..12 {
                    let dphi = phi[r] - x[r];
                    num += (self.target[r] - x[r]) * dphi;
                    den += dphi * dphi;
                }
                let beta = if den > 1e-300 {
                    (num / den).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                (0..12)
                    .map(|r| {
                        let y = x[r] + beta * (phi[r] - x[r]);
                        (y - self.target[r]).powi(2)
                    })
                    .sum()
            }
        }
    }

    /// Multi-start search for a new atom. Seeds include the polar factor of
    /// the residual's linear part (the best kappa = 1 rotation) in both O(3)
    /// components, plus random starts over the full parameter box.
    fn search(&self, x: Option<&[f64; 12]>, rng: &mut ChaCha8Rng) -> GsAtom {
        let mut best: Option<(f64, GsAtom)> = None;
        let consider = |params: &[f64], s1: f64, s2: f64, this: &Pricing, x: Option<&[f64; 12]>| {
            let mut f = |p: &[f64]| this.objective(p, s1, s2, x);
            let steps = [0.15, 0.15, 0.35, 0.35, 0.35, 0.35, 0.35, 0.35];
            let (p_opt, val) = nelder_mead(&mut f, params, &steps, 260);
            let atom = atom_from_params(&p_opt, s1, s2, this.scale);
            (val, atom)
        };

        // analytic-fit seeds: project Frank-Wolfe extrapolations of the
        // target onto the extreme family and polish from there
        for gamma in [0.0, 1.0, 3.0] {
            let point: [f64; 12] = match x {
                None => *self.target,
                Some(x) => {
                    let mut p = [0.0; 12];
                    for r in 0..12 {
                        p[r] = self.target[r] + gamma * (self.target[r] - x[r]);
                    }
                    p
                }
            };
            if let Some(atom) = fit_atom(&point, self.scale) {
                let (params, s1, s2) = params_from_atom(&atom);
                let (val, atom) = consider(&params, s1, s2, self, x);
                if best.as_ref().map_or(true, |(b, _)| val < *b) {
                    best = Some((val, atom));
                }
            }
            if x.is_none() {
                break; // the extrapolations coincide with the target itself
            }
        }

        // polar seeds from the direction the combination must move in
        let dir: [f64; 12] = match x {
            None => *self.target,
            Some(x) => {
                let mut d = [0.0; 12];
                for r in 0..12 {
                    d[r] = self.target[r] - x[r];
                }
                d
            }
        };
        let mut lin = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                lin[i][j] = dir[3 * i + j];
            }
        }
        if let Ok((u, _, v)) = svd3(&lin) {
            // best rotation aligned with the linear part: R = U V^T
            let polar = real3::mat_mul(&u, &real3::transpose3(&v));
            for (s1, s2) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                // kappa = 1 atom with B = Q1^T Q2^T = s1 s2 R(w1)^T R(w2)^T
                let aim = real3::scale3(&polar, s1 * s2);
                if det3(&aim) > 0.0 {
                    let w2 = axis_angle_from_rotation(&real3::transpose3(&aim));
                    let params = [1.0, 0.5, 0.0, 0.0, 0.0, w2[0], w2[1], w2[2]];
                    let (val, atom) = consider(&params, s1, s2, self, x);
                    if best.as_ref().map_or(true, |(b, _)| val < *b) {
                        best = Some((val, atom));
                    }
                }
            }
        }

        // random starts over the parameter box and both sign components
        for _ in 0..28 {
            let params: Vec<f64> = vec![
                rng.gen::<f64>(),
                rng.gen::<f64>(),
                rng.gen::<f64>() * 6.0 - 3.0,
                rng.gen::<f64>() * 6.0 - 3.0,
                rng.gen::<f64>() * 6.0 - 3.0,
                rng.gen::<f64>() * 6.0 - 3.0,
                rng.gen::<f64>() * 6.0 - 3.0,
                rng.gen::<f64>() * 6.0 - 3.0,
            ];
            let s1 = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let s2 = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let (val, atom) = consider(&params, s1, s2, self, x);
            if best.as_ref().map_or(true, |(b, _)| val < *b) {
                best = Some((val, atom));
            }
        }
        best.expect("at least one pricing start").1
    }
}

/// Decompose a member of C_r into a convex combination of at most 13 scaled
/// extreme maps with entrywise recombination residual at most `tol`.
///
/// Fails with the best residual if the column budget is exhausted; the
/// result is never silently wrong.
pub fn decompose_into_extremes(
    target: &AffineQubitMap,
    r: f64,
    tol: f64,
) -> Result<Decomposition> {
    let membership = cr_membership(target, r)?;
    if !membership.member {
        return Err(Error::NotInRadiusClass {
            radius: membership.radius,
            r,
        });
    }
    let t = target_vec(target);
    let mut rng = ChaCha8Rng::seed_from_u64(0x6e5);
    let pricing = Pricing {
        target: &t,
        scale: r,
    };

    let mut atoms: Vec<GsAtom> = Vec::new();
    let mut cols: Vec<[f64; 12]> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let mut best: Option<(f64, Vec<GsAtom>, Vec<f64>)> = None;
    let mut stall = 0usize;

    for _round in 0..MAX_COLUMNS {
        let x_current: Option<[f64; 12]> = if atoms.is_empty() {
            None
        } else {
            let mut x = [0.0; 12];
            for (c, &w) in cols.iter().zip(&weights) {
                for r in 0..12 {
                    x[r] += w * c[r];
                }
            }
            Some(x)
        };

        if let Some(x) = &x_current {
            let res: Vec<f64> = (0..12).map(|r| t[r] - x[r]).collect();
            let res_inf = inf_norm(&res);
            let improved = best.as_ref().map_or(true, |(b, _, _)| res_inf < *b * 0.999);
            if best.as_ref().map_or(true, |(b, _, _)| res_inf < *b) {
                best = Some((res_inf, atoms.clone(), weights.clone()));
            }
            if res_inf <= tol * 0.5 {
                break;
            }
            stall = if improved { 0 } else { stall + 1 };
            if stall >= 6 {
                // polish every atom against the full residual before giving up
                polish_atoms(&mut atoms, &mut cols, &mut weights, &t, r, 0.05);
                let mut x = [0.0; 12];
                for (c, &w) in cols.iter().zip(&weights) {
                    for rr in 0..12 {
                        x[rr] += w * c[rr];
                    }
                }
                let res_inf = inf_norm(&(0..12).map(|rr| t[rr] - x[rr]).collect::<Vec<_>>());
                if best.as_ref().map_or(true, |(b, _, _)| res_inf < *b) {
                    best = Some((res_inf, atoms.clone(), weights.clone()));
                }
                if res_inf <= tol * 0.5 {
                    break;
                }
                stall = 0;
            }
        }

        let new_atom = pricing.search(x_current.as_ref(), &mut rng);
        cols.push(new_atom.to_vec12());
        atoms.push(new_atom);
        weights = solve_simplex_ls(&cols, &t);

        // drop numerically dead atoms to keep the master small
        let mut keep_atoms = Vec::with_capacity(atoms.len());
        let mut keep_cols = Vec::with_capacity(atoms.len());
        let mut keep_w = Vec::with_capacity(atoms.len());
        for ((atom, col), &w) in atoms.iter().zip(&cols).zip(&weights) {
            if w > 1e-14 {
                keep_atoms.push(atom.clone());
                keep_cols.push(*col);
                keep_w.push(w);
            }
        }
        if !keep_atoms.is_empty() {
            atoms = keep_atoms;
            cols = keep_cols;
            weights = keep_w;
            let s: f64 = weights.iter().sum();
            for w in weights.iter_mut() {
                *w /= s;
            }
        }
    }

    let (_, mut atoms, mut weights) = best.ok_or(Error::DecompositionBudget {
        residual: f64::INFINITY,
        target: tol,
    })?;

    // final polish ladder with shrinking simplex scales, then reduction
    let mut cols: Vec<[f64; 12]> = atoms.iter().map(|a| a.to_vec12()).collect();
    for step_scale in [0.08, 0.02, 0.005, 0.001, 0.0002] {
        let current = {
            let mut x = [0.0; 12];
            for (c, &w) in cols.iter().zip(&weights) {
                for rr in 0..12 {
                    x[rr] += w * c[rr];
                }
            }
            inf_norm(&(0..12).map(|rr| t[rr] - x[rr]).collect::<Vec<_>>())
        };
        if current <= tol * 0.3 {
            break;
        }
        polish_atoms(&mut atoms, &mut cols, &mut weights, &t, r, step_scale);
    }
    if cols.len() > 13 {
        // the reduction operates on columns; mirror removals onto atoms
        let paired: Vec<(GsAtom, [f64; 12], f64)> = atoms
            .iter()
            .cloned()
            .zip(cols.iter().cloned())
            .zip(weights.iter().cloned())
            .map(|((a, c), w)| (a, c, w))
            .collect();
        let mut c2: Vec<[f64; 12]> = paired.iter().map(|(_, c, _)| *c).collect();
        let mut w2: Vec<f64> = paired.iter().map(|(_, _, w)| *w).collect();
        caratheodory_reduce(&mut c2, &mut w2, 13);
        // match reduced columns back to atoms by identity of the vectors
        let mut new_atoms = Vec::with_capacity(c2.len());
        for c in &c2 {
            let idx = paired
                .iter()
                .position(|(_, pc, _)| pc == c)
                .expect("reduced column came from the original set");
            new_atoms.push(paired[idx].0.clone());
        }
        atoms = new_atoms;
        cols = c2;
        weights = w2;
    }

    let _ = &cols;
    let mut decomposition = Decomposition {
        atoms,
        weights,
        residual: 0.0,
    };
    // exact weight cleanup and final residual
    let s: f64 = decomposition.weights.iter().sum();
    for w in decomposition.weights.iter_mut() {
        *w /= s;
    }
    let rec = decomposition.recombine();
    let mut res: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            res = res.max((rec.a[i][j] - target.a[i][j]).abs());
        }
        res = res.max((rec.v[i] - target.v[i]).abs());
    }
    decomposition.residual = res;
    if res > tol {
        return Err(Error::DecompositionBudget {
            residual: res,
            target: tol,
        });
    }
    Ok(decomposition)
}

/// Re-fit each atom's parameters against the full residual, re-solving the
/// master after every candidate move. `step_scale` sets the Nelder-Mead
/// simplex size; a ladder of shrinking scales refines a near-solution.
fn polish_atoms(
    atoms: &mut [GsAtom],
    cols: &mut [[f64; 12]],
    weights: &mut Vec<f64>,
    t: &[f64; 12],
    scale: f64,
    step_scale: f64,
) {
    for _pass in 0..2 {
        for i in 0..atoms.len() {
            let (params, s1, s2) = params_from_atom(&atoms[i]);
            let mut f = |p: &[f64]| -> f64 {
                let cand = atom_from_params(p, s1, s2, scale);
                let mut all: Vec<[f64; 12]> = cols.to_vec();
                all[i] = cand.to_vec12();
                let w = solve_simplex_ls(&all, t);
                let mut err = 0.0;
                for r in 0..12 {
                    let y: f64 = all.iter().zip(&w).map(|(c, &wi)| wi * c[r]).sum();
                    err += (y - t[r]).powi(2);
                }
                err
            };
            let steps = [step_scale; 8];
            let (p_opt, _) = nelder_mead(&mut f, &params, &steps, 220);
            atoms[i] = atom_from_params(&p_opt, s1, s2, scale);
            cols[i] = atoms[i].to_vec12();
        }
        *weights = solve_simplex_ls(cols, t);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extremes::random_gs;

    #[test]
    fn single_extreme_decomposes_to_itself() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let e = random_gs(&mut rng);
        let target = e.scaled(0.7);
        let d = decompose_into_extremes(&target, 0.7, 1e-6).unwrap();
        assert!(d.residual <= 1e-6);
        assert!(d.atoms.len() <= 13);
        let wsum: f64 = d.weights.iter().sum();
        assert!((wsum - 1.0).abs() < 1e-10);
    }

    #[test]
    fn two_atom_mixture_recombines() {
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        let e1 = random_gs(&mut rng);
        let e2 = random_gs(&mut rng);
        let target = e1.scaled(0.8).mix(&e2.scaled(0.8), 0.5);
        let d = decompose_into_extremes(&target, 0.8, 1e-6).unwrap();
        assert!(d.residual <= 1e-6, "residual {}", d.residual);
        assert!(d.atoms.len() <= 13);
        for &w in &d.weights {
            assert!((-1e-12..=1.0 + 1e-12).contains(&w));
        }
    }

    #[test]
    fn fully_mixing_map_decomposes() {
        let target = AffineQubitMap::new([[0.0; 3]; 3], [0.0; 3]);
        let d = decompose_into_extremes(&target, 1.0, 1e-6).unwrap();
        assert!(d.residual <= 1e-6, "residual {}", d.residual);
        let rec = d.recombine();
        for i in 0..3 {
            for j in 0..3 {
                assert!(rec.a[i][j].abs() < 1e-6);
            }
            assert!(rec.v[i].abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_targets_outside_the_class() {
        let target = AffineQubitMap::identity();
        assert!(matches!(
            decompose_into_extremes(&target, 0.5, 1e-6),
            Err(Error::NotInRadiusClass { .. })
        ));
    }

    #[test]
    fn atom_serialization_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let atom = GsAtom {
            extreme: random_gs(&mut rng),
            scale: 0.9,
        };
        let json = serde_json::to_string(&atom).unwrap();
        let back: GsAtom = serde_json::from_str(&json).unwrap();
        let a = atom.to_vec12();
        let b = back.to_vec12();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn simplex_ls_recovers_known_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(74);
        let a1 = GsAtom {
            extreme: random_gs(&mut rng),
            scale: 0.6,
        };
        let a2 = GsAtom {
            extreme: random_gs(&mut rng),
            scale: 0.6,
        };
        let a3 = GsAtom {
            extreme: random_gs(&mut rng),
            scale: 0.6,
        };
        let cols = vec![a1.to_vec12(), a2.to_vec12(), a3.to_vec12()];
        let true_w = [0.2, 0.5, 0.3];
        let mut t = [0.0; 12];
        for (c, w) in cols.iter().zip(true_w) {
            for r in 0..12 {
                t[r] += w * c[r];
            }
        }
        let w = solve_simplex_ls(&cols, &t);
        for (got, want) in w.iter().zip(true_w) {
            assert!((got - want).abs() < 1e-6, "weights {w:?}");
        }
    }

    #[test]
    fn caratheodory_reduction_preserves_the_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(75);
        let atoms: Vec<GsAtom> = (0..18)
            .map(|_| GsAtom {
                extreme: random_gs(&mut rng),
                scale: 0.8,
            })
            .collect();
        let mut cols: Vec<[f64; 12]> = atoms.iter().map(|a| a.to_vec12()).collect();
        let mut weights = vec![1.0 / 18.0; 18];
        let mut before = [0.0; 12];
        for (c, &w) in cols.iter().zip(&weights) {
            for r in 0..12 {
                before[r] += w * c[r];
            }
        }
        caratheodory_reduce(&mut cols, &mut weights, 13);
        assert!(cols.len() <= 13);
        let mut after = [0.0; 12];
        for (c, &w) in cols.iter().zip(&weights) {
            for r in 0..12 {
                after[r] += w * c[r];
            }
        }
        for (x, y) in before.iter().zip(&after) {
            assert!((x - y).abs() < 1e-9);
        }
        let s: f64 = weights.iter().sum();
        assert!((s - 1.0).abs() < 1e-10);
        assert!(weights.iter().all(|&w| w >= 0.0));
    }
}
