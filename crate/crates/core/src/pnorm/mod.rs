//! Numerical estimation of maximal output p-norms by multi-start Riemannian
//! gradient ascent over pure states.
//!
//! Estimates are certified lower bounds: the reported value is always the
//! exact objective evaluated at the returned state. Global optimality is not
//! claimed; restart consensus is reported so rugged landscapes are visible.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{unvec_stack, vec_stack, QuantumMap};
use crate::error::{Error, Result};
use crate::matcore::{schatten_from_singular_values, svd, ComplexMatrix, NormOrder};

/// Normalized vector in C^d.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Validated constructor: the norm must be 1 within 1e-12.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let n = vec_norm(&amplitudes);
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized { norm: n });
        }
        Ok(Self { amplitudes })
    }

    /// Normalize and wrap; fails only on the zero vector.
    pub fn normalized(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let n = vec_norm(&amplitudes);
        if n < 1e-300 {
            return Err(Error::NotNormalized { norm: n });
        }
        for a in amplitudes.iter_mut() {
            *a /= n;
        }
        Ok(Self { amplitudes })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// The projector |psi><psi|.
    pub fn density(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amplitudes, &self.amplitudes)
    }

    /// Tensor product state.
    pub fn tensor(&self, other: &PureState) -> PureState {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amps.push(a * b);
            }
        }
        PureState { amplitudes: amps }
    }
}

/// (1/sqrt(d)) sum_i |ii>, the maximally entangled state on C^d (x) C^d.
pub fn max_entangled(d: usize) -> Result<PureState> {
    if d < 2 {
        return Err(Error::OutOfRange {
            name: "d",
            value: d as f64,
            range: "d >= 2",
        });
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); d * d];
    let w = 1.0 / (d as f64).sqrt();
    for i in 0..d {
        amps[i * d + i] = Complex64::new(w, 0.0);
    }
    PureState::new(amps)
}

/// Multi-start ascent settings. Defaults: 64 restarts, 500 iterations,
/// step tolerance 1e-10, value tolerance 1e-9.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub step_tol: f64,
    pub value_tol: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 64,
            max_iters: 500,
            step_tol: 1e-10,
            value_tol: 1e-9,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_iters == 0 || self.step_tol <= 0.0 || self.value_tol <= 0.0
        {
            return Err(Error::OutOfRange {
                name: "optimizer config",
                value: 0.0,
                range: "restarts, max_iters >= 1 and positive tolerances",
            });
        }
        Ok(())
    }
}

/// Result of a multi-start estimate. `value` is a certified lower bound on
/// the maximal p-norm: it is the exact objective at `argmax`.
#[derive(Debug, Clone)]
pub struct NuPEstimate {
    pub value: f64,
    pub argmax: PureState,
    /// Restarts whose final value lies within the value tolerance of the best.
    pub restarts_agreeing: usize,
    /// Restarts that hit the iteration budget without meeting the
    /// convergence tolerances (excluded from the best-value selection).
    pub restarts_dropped: usize,
}

fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(v: &mut [Complex64]) {
    let n = vec_norm(v);
    for z in v.iter_mut() {
        *z /= n;
    }
}

fn re_inner(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Map compiled to superoperator form for repeated fast application.
struct Applier {
    d_in: usize,
    d_out: usize,
    s: ComplexMatrix,
    s_adj: ComplexMatrix,
}

impl Applier {
    fn new(m: &QuantumMap) -> Self {
        let s = m.superop_matrix();
        let s_adj = s.adjoint();
        Self {
            d_in: m.d_in(),
            d_out: m.d_out(),
            s,
            s_adj,
        }
    }

    fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        unvec_stack(&self.s.apply_vec(&vec_stack(rho)), self.d_out)
    }

    fn apply_adjoint(&self, x: &ComplexMatrix) -> ComplexMatrix {
        unvec_stack(&self.s_adj.apply_vec(&vec_stack(x)), self.d_in)
    }
}

/// Objective profile: exact p >= 2, a smoothed surrogate for p < 2 (the
/// exact objective is non-smooth at rank-deficient outputs), or a finite
/// surrogate for p = infinity.
#[derive(Clone, Copy)]
struct Profile {
    /// Order used for gradients.
    p_eff: f64,
    /// Smoothing of sigma^2 inside the surrogate.
    eps: f64,
    /// Order of the reported exact objective.
    exact: NormOrder,
}

impl Profile {
    fn for_order(p: NormOrder) -> Profile {
        match p {
            NormOrder::Finite(v) if v >= 2.0 => Profile {
                p_eff: v,
                eps: 0.0,
                exact: p,
            },
            NormOrder::Finite(v) => Profile {
                p_eff: v,
                eps: 1e-10,
                exact: p,
            },
            NormOrder::Infinity => Profile {
                p_eff: 64.0,
                eps: 0.0,
                exact: p,
            },
        }
    }

    fn needs_polish(&self) -> bool {
        self.eps > 0.0 || matches!(self.exact, NormOrder::Infinity)
    }
}

/// Surrogate value and Euclidean gradient at (possibly unnormalized) psi.
fn surrogate_value_grad(applier: &Applier, psi: &[Complex64], prof: &Profile) -> (f64, Vec<Complex64>) {
    let rho = ComplexMatrix::outer(psi, psi);
    let x = applier.apply(&rho);
    let decomposition = svd(&x).expect("svd of output");
    let p = prof.p_eff;
    let g: f64 = decomposition
        .values
        .iter()
        .map(|&s| (s * s + prof.eps).powf(p / 2.0))
        .sum();
    let f = g.powf(1.0 / p);
    if g <= 0.0 {
        return (0.0, vec![Complex64::new(0.0, 0.0); psi.len()]);
    }
    // W = U diag(sigma (sigma^2 + eps)^{p/2 - 1}) V^dagger is the gradient of
    // g with respect to the output, up to the factor p.
    let weights: Vec<f64> = decomposition
        .values
        .iter()
        .map(|&s| s * (s * s + prof.eps).powf(p / 2.0 - 1.0))
        .collect();
    let w = &(&decomposition.u * &ComplexMatrix::diag_real(&weights)) * &decomposition.v.adjoint();
    let y = applier.apply_adjoint(&w);
    let y_sym = &y + &y.adjoint();
    // grad f = g^{1/p - 1} (Y + Y^dagger) psi
    let scale = g.powf(1.0 / p - 1.0);
    let grad: Vec<Complex64> = y_sym
        .apply_vec(psi)
        .into_iter()
        .map(|z| z * scale)
        .collect();
    (f, grad)
}

fn exact_value(applier: &Applier, psi: &[Complex64], p: NormOrder) -> f64 {
    let rho = ComplexMatrix::outer(psi, psi);
    let x = applier.apply(&rho);
    let s = svd(&x).expect("svd of output");
    schatten_from_singular_values(&s.values, p)
}

/// Objective ||Phi(psi psi^dagger)||_p for arbitrary (even unnormalized)
/// amplitude vectors; the extension finite-difference tests differentiate.
pub fn objective_unnormalized(m: &QuantumMap, amplitudes: &[Complex64], p: NormOrder) -> Result<f64> {
    if amplitudes.len() != m.d_in() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} amplitudes", m.d_in()),
            found: format!("{}", amplitudes.len()),
        });
    }
    let rho = ComplexMatrix::outer(amplitudes, amplitudes);
    let x = m.apply(&rho)?;
    crate::matcore::schatten_norm(&x, p)
}

/// Objective value at a pure state.
pub fn objective(m: &QuantumMap, psi: &PureState, p: NormOrder) -> Result<f64> {
    objective_unnormalized(m, psi.amplitudes(), p)
}

/// Value and Euclidean gradient of f(psi) = ||Phi(psi psi^dagger)||_p.
///
/// The gradient route: the derivative with respect to the output X is
/// p (X X^dagger)^{p/2 - 1} X; pulling back through the adjoint map and the
/// outer product gives grad = g^{1/p-1} (Y + Y^dagger) psi with
/// Y = Phi^*((X X^dagger)^{p/2-1} X). Requires finite p >= 2, where the
/// objective is smooth; the directional derivative along e is Re<grad, e>.
pub fn objective_and_gradient(
    m: &QuantumMap,
    psi: &PureState,
    p: NormOrder,
) -> Result<(f64, Vec<Complex64>)> {
    let pv = match p {
        NormOrder::Finite(v) if v >= 2.0 => v,
        other => {
            return Err(Error::UnsupportedNormOrder {
                what: "analytic gradient",
                requirement: ">= 2 and finite",
                p: other.value(),
            })
        }
    };
    if psi.dim() != m.d_in() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} amplitudes", m.d_in()),
            found: format!("{}", psi.dim()),
        });
    }
    let applier = Applier::new(m);
    let prof = Profile {
        p_eff: pv,
        eps: 0.0,
        exact: p,
    };
    Ok(surrogate_value_grad(&applier, psi.amplitudes(), &prof))
}

struct RestartOutcome {
    value: f64,
    psi: Vec<Complex64>,
    converged: bool,
}

fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..d)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    normalize(&mut v);
    v
}

/// Projected gradient ascent with a Barzilai-Borwein step seed and Armijo
/// backtracking; retraction is plain renormalization. The BB step adapts to
/// the local curvature, which kills the zigzag crawl in the ill-conditioned
/// valleys that flat maximizer manifolds produce. Returns the final point
/// and whether the run converged.
fn ascend(
    applier: &Applier,
    prof: &Profile,
    mut psi: Vec<Complex64>,
    cfg: &OptimizerConfig,
) -> (Vec<Complex64>, bool) {
    let (mut f, mut grad) = surrogate_value_grad(applier, &psi, prof);
    let mut alpha_seed = 1.0f64;
    // previous ambient step and gradient difference for the BB quotient
    let mut prev: Option<(Vec<Complex64>, Vec<Complex64>)> = None;
    let mut converged = false;
    for _ in 0..cfg.max_iters {
        // tangent projection: remove the radial component
        let radial = re_inner(&psi, &grad);
        let tangent: Vec<Complex64> = grad
            .iter()
            .zip(&psi)
            .map(|(g, x)| g - x * radial)
            .collect();
        let gnorm = vec_norm(&tangent);
        if gnorm <= 1e-9 * f.abs().max(1.0) {
            converged = true;
            break;
        }
        let mut alpha = match &prev {
            Some((s, y)) => {
                let ss: f64 = s.iter().map(|z| z.norm_sqr()).sum();
                let sy = re_inner(s, y).abs();
                if sy > 1e-300 {
                    (ss / sy).clamp(1e-12, 1e10)
                } else {
                    alpha_seed * 4.0
                }
            }
            None => alpha_seed,
        };
        let mut accepted = false;
        for _ in 0..60 {
            let mut cand: Vec<Complex64> = psi
                .iter()
                .zip(&tangent)
                .map(|(x, t)| x + t * alpha)
                .collect();
            normalize(&mut cand);
            let (mut fc, mut gc) = surrogate_value_grad(applier, &cand, prof);
            if fc >= f + 1e-4 * alpha * gnorm * gnorm {
                // greedy expansion: near-linear stretches want much longer
                // steps than the BB quotient suggests
                for _ in 0..50 {
                    let wider = alpha * 2.0;
                    let mut cand2: Vec<Complex64> = psi
                        .iter()
                        .zip(&tangent)
                        .map(|(x, t)| x + t * wider)
                        .collect();
                    normalize(&mut cand2);
                    let (fc2, gc2) = surrogate_value_grad(applier, &cand2, prof);
                    if fc2 > fc {
                        alpha = wider;
                        cand = cand2;
                        fc = fc2;
                        gc = gc2;
                    } else {
                        break;
                    }
                }
                prev = Some((
                    cand.iter().zip(&psi).map(|(a, b)| a - b).collect(),
                    gc.iter().zip(&grad).map(|(a, b)| a - b).collect(),
                ));
                psi = cand;
                f = fc;
                grad = gc;
                accepted = true;
                alpha_seed = alpha;
                break;
            }
            alpha *= 0.5;
            if alpha * gnorm < cfg.step_tol {
                break;
            }
        }
        if !accepted {
            // step collapsed below the step tolerance: stationary enough
            converged = alpha * gnorm < cfg.step_tol || gnorm <= 1e-7 * f.abs().max(1.0);
            break;
        }
    }
    (psi, converged)
}

/// Derivative-free polish of the exact objective by shrinking random
/// tangent steps; used where the exact objective is non-smooth.
fn polish(
    applier: &Applier,
    p: NormOrder,
    mut psi: Vec<Complex64>,
    rng: &mut ChaCha8Rng,
) -> (Vec<Complex64>, f64) {
    let d = psi.len();
    let mut best = exact_value(applier, &psi, p);
    let mut sigma = 0.02f64;
    for _ in 0..400 {
        let mut dir: Vec<Complex64> = (0..d)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let radial = re_inner(&psi, &dir);
        for (z, x) in dir.iter_mut().zip(&psi) {
            *z -= x * radial;
        }
        let n = vec_norm(&dir);
        if n < 1e-300 {
            continue;
        }
        for z in dir.iter_mut() {
            *z /= n;
        }
        let mut improved = false;
        for step in [sigma, sigma / 4.0] {
            let mut cand: Vec<Complex64> =
                psi.iter().zip(&dir).map(|(x, t)| x + t * step).collect();
            normalize(&mut cand);
            let fc = exact_value(applier, &cand, p);
            if fc > best {
                best = fc;
                psi = cand;
                improved = true;
                break;
            }
        }
        sigma *= if improved { 1.4 } else { 0.92 };
        if sigma < 1e-9 {
            break;
        }
        sigma = sigma.min(0.1);
    }
    (psi, best)
}

/// Multi-start estimate of the maximal output p-norm.
///
/// Each restart derives its RNG stream from (seed, restart index); restarts
/// run in parallel and the merge is deterministic, so identical configs give
/// bit-identical results.
pub fn nu_p_estimate(m: &QuantumMap, p: NormOrder, cfg: &OptimizerConfig) -> Result<NuPEstimate> {
    if let NormOrder::Finite(v) = p {
        if v < 1.0 {
            return Err(Error::InvalidNormOrder(v));
        }
    }
    cfg.validate()?;
    let applier = Applier::new(m);
    let prof = Profile::for_order(p);
    let d = m.d_in();

    let outcomes: Vec<RestartOutcome> = (0..cfg.restarts)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(k as u64 + 1);
            let start = random_unit(&mut rng, d);
            let (psi, converged) = ascend(&applier, &prof, start, cfg);
            let (psi, value) = if prof.needs_polish() {
                polish(&applier, p, psi, &mut rng)
            } else {
                let v = exact_value(&applier, &psi, p);
                (psi, v)
            };
            RestartOutcome {
                value,
                psi,
                converged,
            }
        })
        .collect();

    let pick = |want_converged: bool| -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, o) in outcomes.iter().enumerate() {
            if want_converged && !o.converged {
                continue;
            }
            if best.map_or(true, |b| o.value > outcomes[b].value) {
                best = Some(i);
            }
        }
        best
    };
    let best_idx = pick(true).or_else(|| pick(false)).expect("restarts >= 1");
    let best = &outcomes[best_idx];
    let restarts_agreeing = outcomes
        .iter()
        .filter(|o| o.value >= best.value - cfg.value_tol)
        .count();
    let restarts_dropped = outcomes.iter().filter(|o| !o.converged).count();
    Ok(NuPEstimate {
        value: best.value,
        argmax: PureState::new(best.psi.clone()).expect("ascent preserves normalization"),
        restarts_agreeing,
        restarts_dropped,
    })
}

/// Product-state lower bound on the tensor map: the product of the two
/// single-map estimates, with the two attaining states.
pub fn product_lower_bound(
    m1: &QuantumMap,
    m2: &QuantumMap,
    p: NormOrder,
    cfg: &OptimizerConfig,
) -> Result<(f64, (PureState, PureState))> {
    let e1 = nu_p_estimate(m1, p, cfg)?;
    let e2 = nu_p_estimate(m2, p, cfg)?;
    Ok((e1.value * e2.value, (e1.argmax, e2.argmax)))
}
