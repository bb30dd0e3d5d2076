//! End-to-end reproductions: multiplicativity checks for product maps, the
//! step-by-step product-norm bound chain for special-form qubit maps, the
//! transpose counterexample below p = 2, and the Werner-Holevo crossing.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::blockineq::ChainStep;
use crate::channels::{
    choi_and_cp_test, map_from_affine, nu_p_qubit, transpose_map, werner_holevo, AffineQubitMap,
    QuantumMap,
};
use crate::error::{Error, Result};
use crate::matcore::{hermitian_eigen, schatten_norm, Block2x2, ComplexMatrix, NormOrder};
use crate::pnorm::{max_entangled, nu_p_estimate, OptimizerConfig};
use crate::real3::diag3;

/// Ratios above 1 + 1e-6 count as multiplicativity violations.
pub const RATIO_TOL: f64 = 1e-6;

/// Diagonal-form qubit map whose translation has at most one nonzero
/// component (along the third axis), the hypothesis class of the
/// product-norm bound chain.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SpecialFormMap {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub v3: f64,
}

impl SpecialFormMap {
    pub fn new(lambda1: f64, lambda2: f64, lambda3: f64, v3: f64) -> Result<Self> {
        if lambda1 < 0.0 || lambda2 < 0.0 {
            return Err(Error::OutOfRange {
                name: "lambda1/lambda2",
                value: lambda1.min(lambda2),
                range: ">= 0 (sign freedom is exhausted by Pauli conjugation)",
            });
        }
        Ok(Self {
            lambda1,
            lambda2,
            lambda3,
            v3,
        })
    }

    /// The four output coefficients (1 +- v3 +- lambda3)/2 of the basis
    /// projectors; all nonnegative exactly when the map is
    /// positivity-preserving on the poles.
    pub fn coefficients(&self) -> [f64; 4] {
        [
            (1.0 + self.v3 + self.lambda3) / 2.0, // c_pp
            (1.0 + self.v3 - self.lambda3) / 2.0, // c_pm
            (1.0 - self.v3 + self.lambda3) / 2.0, // c_mp
            (1.0 - self.v3 - self.lambda3) / 2.0, // c_mm
        ]
    }

    /// The dominant contraction coefficient max(lambda1, lambda2).
    pub fn lambda(&self) -> f64 {
        self.lambda1.max(self.lambda2)
    }

    /// The phase carrying the dominant coefficient: 1 if lambda = lambda1,
    /// i otherwise.
    pub fn z(&self) -> Complex64 {
        if self.lambda1 >= self.lambda2 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 1.0)
        }
    }

    pub fn to_affine(&self) -> AffineQubitMap {
        AffineQubitMap::new(
            diag3(&[self.lambda1, self.lambda2, self.lambda3]),
            [0.0, 0.0, self.v3],
        )
    }

    pub fn is_positivity_preserving(&self) -> bool {
        self.to_affine().is_positivity_preserving()
    }
}

/// Sample a random positivity-preserving special-form map: (lambda3, v3)
/// uniform in the |v3| + |lambda3| <= 1 diamond, lambda1/lambda2 bounded by
/// the equator constraint, rejection on the exact image radius.
pub fn random_special_form(rng: &mut ChaCha8Rng) -> SpecialFormMap {
    loop {
        let lambda3 = rng.gen::<f64>() * 2.0 - 1.0;
        let v3 = rng.gen::<f64>() * 2.0 - 1.0;
        if lambda3.abs() + v3.abs() > 1.0 {
            continue;
        }
        let cap = (1.0 - v3 * v3).sqrt();
        let lambda1 = rng.gen::<f64>() * cap;
        let lambda2 = rng.gen::<f64>() * cap;
        let m = SpecialFormMap {
            lambda1,
            lambda2,
            lambda3,
            v3,
        };
        if m.is_positivity_preserving() {
            return m;
        }
    }
}

/// Random density matrix on C^n: a normalized Gaussian Gram matrix, or a
/// pure projector when `rank_one` is set.
pub fn random_density(rng: &mut ChaCha8Rng, n: usize, rank_one: bool) -> ComplexMatrix {
    if rank_one {
        let psi: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        return ComplexMatrix::outer(&psi, &psi).scale_re(1.0 / norm2);
    }
    let g = ComplexMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let p = &g * &g.adjoint();
    let tr = p.trace().re;
    p.scale_re(1.0 / tr)
}

/// Verdict of a multiplicativity comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Violation,
}

/// Whether preconditions are enforced (the proved regime) or the run is
/// exploratory cartography.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckMode {
    Assert,
    Explore,
}

/// Tensor-vs-product comparison for one (qubit map, CP map, p) triple.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiplicativityReport {
    pub p: NormOrder,
    pub nu_phi: f64,
    pub nu_omega: f64,
    pub product: f64,
    pub tensor_estimate: f64,
    pub ratio: f64,
    pub verdict: Verdict,
}

/// Compare the estimated maximal p-norm of phi (x) omega against the product
/// of the factor norms. The qubit factor uses the closed form; the tensor
/// estimate doubles the restart budget (entangled landscapes are more
/// rugged).
///
/// In assert mode omega must be completely positive and p must lie in
/// {2} in [4, inf]; exploratory mode accepts anything with p >= 1.
pub fn multiplicativity_gap(
    phi: &AffineQubitMap,
    omega: &QuantumMap,
    p: NormOrder,
    cfg: &OptimizerConfig,
    mode: CheckMode,
) -> Result<MultiplicativityReport> {
    if mode == CheckMode::Assert {
        let (_, is_cp, min_eig) = choi_and_cp_test(omega)?;
        if !is_cp {
            return Err(Error::NotCompletelyPositive {
                min_eigenvalue: min_eig,
            });
        }
        let ok = match p {
            NormOrder::Infinity => true,
            NormOrder::Finite(v) => v == 2.0 || v >= 4.0,
        };
        if !ok {
            return Err(Error::UnsupportedNormOrder {
                what: "assertion-mode multiplicativity",
                requirement: "in {2} or >= 4",
                p: p.value(),
            });
        }
    }
    let (nu_phi, _) = nu_p_qubit(phi, p)?;
    let nu_omega = nu_p_estimate(omega, p, cfg)?.value;
    let tensor = map_from_affine(phi).tensor(omega);
    let tensor_cfg = OptimizerConfig {
        restarts: cfg.restarts * 2,
        ..*cfg
    };
    let tensor_estimate = nu_p_estimate(&tensor, p, &tensor_cfg)?.value;
    let product = nu_phi * nu_omega;
    let ratio = tensor_estimate / product;
    Ok(MultiplicativityReport {
        p,
        nu_phi,
        nu_omega,
        product,
        tensor_estimate,
        ratio,
        verdict: if ratio > 1.0 + RATIO_TOL {
            Verdict::Violation
        } else {
            Verdict::Consistent
        },
    })
}

fn hermitian_parts(b: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let b1 = (b + &b.adjoint()).scale_re(0.5);
    let b2 = (b - &b.adjoint()).scale(Complex64::new(0.0, 0.5));
    (b1, b2)
}

/// The phase-dressed 2x2 matrix [[||A||, z ||B||], [conj(z) ||B||, ||C||]].
fn dressed_matrix(na: f64, nb: f64, nc: f64, z: Complex64) -> ComplexMatrix {
    ComplexMatrix::new(
        2,
        2,
        vec![
            Complex64::new(na, 0.0),
            z * nb,
            z.conj() * nb,
            Complex64::new(nc, 0.0),
        ],
    )
    .expect("finite entries")
}

fn validate_chain_inputs(
    phi: &SpecialFormMap,
    omega: &QuantumMap,
    rho12: &ComplexMatrix,
) -> Result<usize> {
    let d = omega.d_in();
    if omega.d_out() != d {
        return Err(Error::DimensionMismatch {
            expected: "square CP factor (d_in = d_out)".into(),
            found: format!("{}x{}", omega.d_in(), omega.d_out()),
        });
    }
    if rho12.rows() != 2 * d || rho12.cols() != 2 * d {
        return Err(Error::DimensionMismatch {
            expected: format!("{0}x{0} bipartite state", 2 * d),
            found: format!("{}x{}", rho12.rows(), rho12.cols()),
        });
    }
    let eig = hermitian_eigen(rho12)?;
    let min_eig = eig.values.last().copied().unwrap_or(0.0);
    if min_eig < -1e-9 {
        return Err(Error::NotPositiveSemidefinite {
            min_eigenvalue: min_eig,
        });
    }
    let tr = rho12.trace().re;
    if (tr - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized { norm: tr });
    }
    let radius = phi.to_affine().image_radius().0;
    if radius > 1.0 + 1e-10 {
        return Err(Error::NotPositivityPreserving { radius });
    }
    Ok(d)
}

/// The ordered inequality chain bounding ||(Phi (x) Omega)(rho)||_p by
/// nu_p(Phi) nu_p(Omega) for a special-form qubit factor, p >= 4.
///
/// Steps, each with its slack: the block-norm bound on the tensor output;
/// the diagonal coefficient bounds; the off-diagonal contraction
/// ||l1 B1 - i l2 B2||_p <= max(l1,l2) ||B||_p; the entrywise substitution;
/// the phase transfer onto a qubit input; and the output-norm bounds that
/// close the product.
pub fn lemma1_chain(
    phi: &SpecialFormMap,
    omega: &QuantumMap,
    rho12: &ComplexMatrix,
    p: NormOrder,
    cfg: &OptimizerConfig,
) -> Result<Vec<ChainStep>> {
    if let NormOrder::Finite(v) = p {
        if v < 4.0 {
            return Err(Error::UnsupportedNormOrder {
                what: "product-norm chain",
                requirement: ">= 4",
                p: v,
            });
        }
    }
    let d = validate_chain_inputs(phi, omega, rho12)?;
    let blocks = Block2x2::extract(rho12, d)?;
    let (x, y, z_block) = (&blocks.a, &blocks.b, &blocks.d);
    let a = omega.apply(x)?;
    let b = omega.apply(y)?;
    let c = omega.apply(z_block)?;
    let (b1, b2) = hermitian_parts(&b);
    let [c_pp, c_pm, c_mp, c_mm] = phi.coefficients();

    let diag_top = &a.scale_re(c_pp) + &c.scale_re(c_pm);
    let diag_bot = &a.scale_re(c_mm) + &c.scale_re(c_mp);
    let off_minus = &b1.scale_re(phi.lambda1) - &b2.scale(Complex64::new(0.0, phi.lambda2));
    let off_plus = &b1.scale_re(phi.lambda1) + &b2.scale(Complex64::new(0.0, phi.lambda2));

    let affine = phi.to_affine();
    let tensor = map_from_affine(&affine).tensor(omega);
    let total = schatten_norm(&tensor.apply(rho12)?, p)?;

    let n_top = schatten_norm(&diag_top, p)?;
    let n_bot = schatten_norm(&diag_bot, p)?;
    let n_off_m = schatten_norm(&off_minus, p)?;
    let n_off_p = schatten_norm(&off_plus, p)?;
    let block_norms = crate::blockineq::NormMatrix {
        entries: [[n_top, n_off_m], [n_off_p, n_bot]],
    };
    let m_norm = block_norms.pnorm(p);

    let na = schatten_norm(&a, p)?;
    let nb = schatten_norm(&b, p)?;
    let nc = schatten_norm(&c, p)?;
    let lambda = phi.lambda();
    let substituted = crate::blockineq::NormMatrix {
        entries: [
            [c_pp * na + c_pm * nc, lambda * nb],
            [lambda * nb, c_mm * na + c_mp * nc],
        ],
    };
    let m_hat_norm = substituted.pnorm(p);

    let dressed = dressed_matrix(na, nb, nc, phi.z());
    let phi_dressed_norm = schatten_norm(&affine.apply_density(&dressed)?, p)?;

    let (nu_phi, _) = nu_p_qubit(&affine, p)?;
    let nu_omega = nu_p_estimate(omega, p, cfg)?.value;
    let trace_sum = (x.trace() + z_block.trace()).re;

    // the binding one of the two diagonal coefficient bounds
    let (diag_lhs, diag_rhs) =
        if (c_pp * na + c_pm * nc) - n_top <= (c_mm * na + c_mp * nc) - n_bot {
            (n_top, c_pp * na + c_pm * nc)
        } else {
            (n_bot, c_mm * na + c_mp * nc)
        };

    Ok(vec![
        ChainStep::new("tensor-block-norm-bound", total, m_norm),
        ChainStep::new("diagonal-coefficient-bound", diag_lhs, diag_rhs),
        ChainStep::new("off-diagonal-contraction", n_off_m, lambda * nb),
        ChainStep::new("entrywise-substitution", m_norm, m_hat_norm),
        ChainStep::new("phase-transfer", m_hat_norm, phi_dressed_norm),
        ChainStep::new("qubit-output-bound", phi_dressed_norm, nu_phi * (na + nc)),
        ChainStep::new("factor-output-bound", na + nc, nu_omega * trace_sum),
        ChainStep::new("trace-normalization", trace_sum, 1.0),
    ])
}

/// The p = 2 variant of the chain through the quadratic expansion of the
/// squared Frobenius norm.
pub fn lemma1_chain_quadratic(
    phi: &SpecialFormMap,
    omega: &QuantumMap,
    rho12: &ComplexMatrix,
    cfg: &OptimizerConfig,
) -> Result<Vec<ChainStep>> {
    let p = NormOrder::new(2.0).expect("2 is a valid order");
    let d = validate_chain_inputs(phi, omega, rho12)?;
    let blocks = Block2x2::extract(rho12, d)?;
    let (x, y, z_block) = (&blocks.a, &blocks.b, &blocks.d);
    let a = omega.apply(x)?;
    let b = omega.apply(y)?;
    let c = omega.apply(z_block)?;
    let (b1, b2) = hermitian_parts(&b);
    let [c_pp, c_pm, c_mp, c_mm] = phi.coefficients();

    let affine = phi.to_affine();
    let tensor = map_from_affine(&affine).tensor(omega);
    let total_sq = schatten_norm(&tensor.apply(rho12)?, p)?.powi(2);

    let diag_top = &a.scale_re(c_pp) + &c.scale_re(c_pm);
    let diag_bot = &a.scale_re(c_mm) + &c.scale_re(c_mp);
    let top_sq = schatten_norm(&diag_top, p)?.powi(2);
    let bot_sq = schatten_norm(&diag_bot, p)?.powi(2);
    let b1_sq = schatten_norm(&b1, p)?.powi(2);
    let b2_sq = schatten_norm(&b2, p)?.powi(2);
    let nb_sq = schatten_norm(&b, p)?.powi(2);
    let lambda = phi.lambda();
    let hermitian_mix = phi.lambda1.powi(2) * b1_sq + phi.lambda2.powi(2) * b2_sq;

    let na = schatten_norm(&a, p)?;
    let nb = nb_sq.sqrt();
    let nc = schatten_norm(&c, p)?;
    let top_bound = c_pp * na + c_pm * nc;
    let bot_bound = c_mm * na + c_mp * nc;
    let reassembled = crate::blockineq::NormMatrix {
        entries: [[top_bound, lambda * nb], [lambda * nb, bot_bound]],
    };
    let dressed = dressed_matrix(na, nb, nc, phi.z());
    let phi_dressed_norm = schatten_norm(&affine.apply_density(&dressed)?, p)?;

    let (nu_phi, _) = nu_p_qubit(&affine, p)?;
    let nu_omega = nu_p_estimate(omega, p, cfg)?.value;
    let trace_sum = (x.trace() + z_block.trace()).re;

    Ok(vec![
        ChainStep::new(
            "quadratic-expansion",
            total_sq,
            top_sq + bot_sq + 2.0 * hermitian_mix,
        ),
        ChainStep::new(
            "diagonal-convexity",
            top_sq + bot_sq,
            top_bound.powi(2) + bot_bound.powi(2),
        ),
        ChainStep::new("hermitian-part-bound", hermitian_mix, lambda * lambda * nb_sq),
        ChainStep::new(
            "two-by-two-reassembly",
            top_bound.powi(2) + 2.0 * (lambda * nb).powi(2) + bot_bound.powi(2),
            reassembled.pnorm(p).powi(2),
        ),
        ChainStep::new("phase-transfer", reassembled.pnorm(p), phi_dressed_norm),
        ChainStep::new("qubit-output-bound", phi_dressed_norm, nu_phi * (na + nc)),
        ChainStep::new("factor-output-bound", na + nc, nu_omega * trace_sum),
        ChainStep::new("trace-normalization", trace_sum, 1.0),
    ])
}

/// Transpose counterexample summary at one order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransposeDemo {
    pub p: NormOrder,
    /// Norm of the partially transposed maximally entangled state: 2^(2/p - 1).
    pub exact: f64,
    pub tensor_estimate: f64,
    pub product: f64,
    pub ratio: f64,
}

/// The transpose map tensored with the identity: below p = 2 the maximally
/// entangled input certifies a multiplicativity violation with ratio
/// 2^(2/p - 1); at p = 2 and p >= 4 product inputs win and the ratio is 1.
pub fn transpose_demo(p: NormOrder, cfg: &OptimizerConfig) -> Result<TransposeDemo> {
    let exact = match p {
        NormOrder::Infinity => 0.5,
        NormOrder::Finite(v) => {
            if v < 1.0 {
                return Err(Error::InvalidNormOrder(v));
            }
            2f64.powf(2.0 / v - 1.0)
        }
    };
    let t = transpose_map(2);
    let id = crate::channels::identity_map(2);
    let nu_t = nu_p_estimate(&t, p, cfg)?.value;
    let nu_id = nu_p_estimate(&id, p, cfg)?.value;
    let tensor = t.tensor(&id);
    let tensor_cfg = OptimizerConfig {
        restarts: cfg.restarts * 2,
        ..*cfg
    };
    let tensor_estimate = nu_p_estimate(&tensor, p, &tensor_cfg)?.value;
    let product = nu_t * nu_id;
    Ok(TransposeDemo {
        p,
        exact,
        tensor_estimate,
        product,
        ratio: tensor_estimate / product,
    })
}

/// Werner-Holevo crossing result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WhCrossing {
    pub d: usize,
    pub p_star: f64,
    pub tol: f64,
    /// Spectrum of the tensored channel applied to the maximally entangled
    /// state; for d = 3 this is {1/3, 1/12 x 8}.
    pub witness_spectrum: Vec<f64>,
    pub g_lo: f64,
    pub g_hi: f64,
}

/// Witness gap g(p) = ||(Psi (x) Psi)(phi+)||_p - nu_p(Psi)^2 for the
/// Werner-Holevo channel, from a precomputed witness spectrum.
fn wh_gap(spectrum: &[f64], d: usize, p: f64) -> f64 {
    let entangled: f64 = spectrum
        .iter()
        .filter(|&&l| l > 1e-14)
        .map(|&l| l.powf(p))
        .sum::<f64>()
        .powf(1.0 / p);
    let product = ((d - 1) as f64).powf(2.0 * (1.0 - p) / p);
    entangled - product
}

/// Bisect for the order p where the maximally entangled witness overtakes
/// the product bound: below p_star the product of factor norms wins, above
/// it the entangled input certifies a violation.
///
/// The per-state output spectrum of the channel is flat, so
/// nu_p(Psi) = (d-1)^((1-p)/p) exactly; the entangled side is the numeric
/// spectrum of the d^2-dimensional output.
pub fn wh_crossing(d: usize, bracket: (f64, f64), tol: f64) -> Result<WhCrossing> {
    if tol <= 0.0 {
        return Err(Error::OutOfRange {
            name: "tol",
            value: tol,
            range: "> 0",
        });
    }
    let psi = werner_holevo(d)?;
    let tensor = psi.tensor(&psi);
    let witness = max_entangled(d)?;
    let output = tensor.apply(&witness.density())?;
    let eig = hermitian_eigen(&output)?;
    let spectrum: Vec<f64> = eig.values.iter().map(|&v| v.max(0.0)).collect();

    let (mut lo, mut hi) = bracket;
    let g_lo = wh_gap(&spectrum, d, lo);
    let g_hi = wh_gap(&spectrum, d, hi);
    if !(g_lo < 0.0 && g_hi > 0.0) {
        return Err(Error::BracketSignChange { lo, hi });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if wh_gap(&spectrum, d, mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(WhCrossing {
        d,
        p_star: 0.5 * (lo + hi),
        tol,
        witness_spectrum: spectrum,
        g_lo,
        g_hi,
    })
}

/// Block sampler backed by actual tensor-map outputs (Phi (x) Omega)(rho),
/// the inequality's native use case; for blockineq sweeps.
pub fn map_output_block_sampler(d: usize) -> impl Fn(&mut ChaCha8Rng) -> Block2x2 + Sync {
    move |rng: &mut ChaCha8Rng| {
        let phi = random_special_form(rng);
        let rank = 1 + (rng.gen::<u32>() % 4) as usize;
        let omega = crate::channels::random_cp(d, rank, rng);
        let rank_one = rng.gen::<bool>();
        let rho = random_density(rng, 2 * d, rank_one);
        let tensor = map_from_affine(&phi.to_affine()).tensor(&omega);
        let out = tensor.apply(&rho).expect("dims match by construction");
        Block2x2::extract(&out, d).expect("even dimension")
    }
}

/// nu_p of the Werner-Holevo channel: every pure-state output has the flat
/// spectrum {0, 1/(d-1) x (d-1)}.
pub fn wh_closed_form(d: usize, p: NormOrder) -> f64 {
    match p {
        NormOrder::Infinity => 1.0 / (d - 1) as f64,
        NormOrder::Finite(v) => ((d - 1) as f64).powf((1.0 - v) / v),
    }
}
