//! The block-matrix Schatten-norm inequality: the norm of a 2x2 block matrix
//! is bounded by the norm of the 2x2 matrix of block norms, for p = 2
//! (equality) and p >= 4. Provides single checks, the step-by-step proof
//! chain through the PSD square, and randomized p-sweeps over the
//! conjectured regions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{
    hermitian_eigen, schatten_from_singular_values, svd, Block2x2, ComplexMatrix, NormOrder,
};

/// Slack below this threshold counts as a violation: it sits above the
/// accumulated Jacobi/SVD error for the dimensions in play, so true
/// theorems never false-alarm.
pub const VIOLATION_TOL: f64 = 1e-9;

/// The 2x2 real matrix of Schatten norms of the four blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormMatrix {
    pub entries: [[f64; 2]; 2],
}

impl NormMatrix {
    /// Schatten p-norm from the closed-form singular values of a real 2x2.
    pub fn pnorm(&self, p: NormOrder) -> f64 {
        let [[a, b], [c, d]] = self.entries;
        let t1 = a * a + b * b + c * c + d * d;
        let diff = a * a + b * b - c * c - d * d;
        let cross = a * c + b * d;
        let disc = (diff * diff / 4.0 + cross * cross).sqrt();
        let s_hi = (t1 / 2.0 + disc).max(0.0).sqrt();
        let s_lo = (t1 / 2.0 - disc).max(0.0).sqrt();
        schatten_from_singular_values(&[s_hi, s_lo], p)
    }

    pub fn as_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&self.entries[0], &self.entries[1]])
    }
}

/// One checked inequality: slack = rhs - lhs, holds when slack >= -tol.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IneqReport {
    pub p: NormOrder,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
}

impl IneqReport {
    fn new(p: NormOrder, lhs: f64, rhs: f64, tol: f64) -> Self {
        let slack = rhs - lhs;
        Self {
            p,
            lhs,
            rhs,
            slack,
            holds: slack >= -tol,
        }
    }
}

/// Matrix of block norms of a Block2x2.
pub fn norm_matrix(blocks: &Block2x2, p: NormOrder) -> Result<NormMatrix> {
    let data = BlockNormData::new(blocks)?;
    Ok(data.norm_matrix(p))
}

/// Singular values of the assembled matrix and of each block, computed once
/// so many norm orders can be evaluated cheaply.
pub struct BlockNormData {
    whole: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    d: Vec<f64>,
}

impl BlockNormData {
    pub fn new(blocks: &Block2x2) -> Result<Self> {
        Ok(Self {
            whole: svd(&blocks.assemble())?.values,
            a: svd(&blocks.a)?.values,
            b: svd(&blocks.b)?.values,
            c: svd(&blocks.c)?.values,
            d: svd(&blocks.d)?.values,
        })
    }

    pub fn norm_matrix(&self, p: NormOrder) -> NormMatrix {
        NormMatrix {
            entries: [
                [
                    schatten_from_singular_values(&self.a, p),
                    schatten_from_singular_values(&self.b, p),
                ],
                [
                    schatten_from_singular_values(&self.c, p),
                    schatten_from_singular_values(&self.d, p),
                ],
            ],
        }
    }

    pub fn report(&self, p: NormOrder, tol: f64) -> IneqReport {
        let lhs = schatten_from_singular_values(&self.whole, p);
        let rhs = self.norm_matrix(p).pnorm(p);
        IneqReport::new(p, lhs, rhs, tol)
    }
}

/// Check the block-norm inequality at one order. Violations are data, not
/// errors: the report says whether the inequality held.
pub fn theorem2_check(blocks: &Block2x2, p: NormOrder, tol: f64) -> Result<IneqReport> {
    Ok(BlockNormData::new(blocks)?.report(p, tol))
}

/// Same check across several orders, factoring the five SVDs.
pub fn theorem2_check_many(blocks: &Block2x2, ps: &[NormOrder], tol: f64) -> Result<Vec<IneqReport>> {
    let data = BlockNormData::new(blocks)?;
    Ok(ps.iter().map(|&p| data.report(p, tol)).collect())
}

/// The q >= 2 bound for positive semidefinite block matrices:
/// ||P||_q <= || norm matrix of blocks ||_q.
pub fn psd_block_check(p_matrix: &ComplexMatrix, q: NormOrder, tol: f64) -> Result<IneqReport> {
    if let NormOrder::Finite(v) = q {
        if v < 2.0 {
            return Err(Error::UnsupportedNormOrder {
                what: "PSD block bound",
                requirement: ">= 2",
                p: v,
            });
        }
    }
    if !p_matrix.is_square() || p_matrix.rows() % 2 != 0 {
        return Err(Error::DimensionMismatch {
            expected: "even-dimensional square matrix".into(),
            found: format!("{}x{}", p_matrix.rows(), p_matrix.cols()),
        });
    }
    let eig = hermitian_eigen(p_matrix)?;
    let min_eig = eig.values.last().copied().unwrap_or(0.0);
    if min_eig < -1e-9 {
        return Err(Error::NotPositiveSemidefinite {
            min_eigenvalue: min_eig,
        });
    }
    let blocks = Block2x2::extract(p_matrix, p_matrix.rows() / 2)?;
    theorem2_check(&blocks, q, tol)
}

/// One verified step of the proof chain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainStep {
    pub label: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl ChainStep {
    pub(crate) fn new(label: &'static str, lhs: f64, rhs: f64) -> Self {
        Self {
            label,
            lhs,
            rhs,
            slack: rhs - lhs,
        }
    }
}

/// The p >= 4 proof route through the PSD square, step by step.
///
/// With q = p/2 and G = M*M written in blocks G_ij: the PSD block bound at
/// order q, the three block bounds ||G_11||_q <= ||A||^2 + ||C||^2,
/// ||G_12||_q <= ||A|| ||B|| + ||C|| ||D||, ||G_22||_q <= ||B||^2 + ||D||^2,
/// the entrywise monotonicity step up to m^T m, and the assembled
/// inequality ||M||_p <= ||m||_p. Each step reports its slack.
pub fn proof_chain_thm2(blocks: &Block2x2, p: NormOrder) -> Result<Vec<ChainStep>> {
    if let NormOrder::Finite(v) = p {
        if v < 4.0 {
            return Err(Error::UnsupportedNormOrder {
                what: "proof chain",
                requirement: ">= 4",
                p: v,
            });
        }
    }
    let q = p.half()?;
    let m = blocks.assemble();
    let gram = &m.adjoint() * &m;
    let g = Block2x2::extract(&gram, blocks.dim())?;
    let g11 = crate::matcore::schatten_norm(&g.a, q)?;
    let g12 = crate::matcore::schatten_norm(&g.b, q)?;
    let g21 = crate::matcore::schatten_norm(&g.c, q)?;
    let g22 = crate::matcore::schatten_norm(&g.d, q)?;
    let gram_norm = crate::matcore::schatten_norm(&gram, q)?;
    let ng = NormMatrix {
        entries: [[g11, g12], [g21, g22]],
    };

    let data = BlockNormData::new(blocks)?;
    let nm = data.norm_matrix(p);
    let [[na, nb], [nc, nd]] = nm.entries;
    let target = NormMatrix {
        entries: [
            [na * na + nc * nc, na * nb + nc * nd],
            [na * nb + nc * nd, nb * nb + nd * nd],
        ],
    };

    let whole_norm = schatten_from_singular_values(&data.whole, p);
    Ok(vec![
        ChainStep::new("psd-block-bound", gram_norm, ng.pnorm(q)),
        ChainStep::new("first-diagonal-block", g11, na * na + nc * nc),
        ChainStep::new("off-diagonal-block", g12, na * nb + nc * nd),
        ChainStep::new("second-diagonal-block", g22, nb * nb + nd * nd),
        ChainStep::new("entrywise-monotonicity", ng.pnorm(q), target.pnorm(q)),
        ChainStep::new("assembled-inequality", whole_norm, nm.pnorm(p)),
    ])
}

/// Replayable record of a sweep violation; the stored blocks are shrunk
/// toward the block-diagonal boundary of the violating region.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViolationRecord {
    pub seed: u64,
    pub trial: u64,
    pub p: NormOrder,
    pub blocks: Block2x2,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

/// Per-order statistics of a sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PSweepStat {
    pub p: NormOrder,
    pub trials: u64,
    /// slack < -1e-9: the direct inequality failed.
    pub direct_violations: u64,
    /// slack > 1e-9 where the reverse inequality is conjectured (p <= 2).
    pub reverse_violations: Option<u64>,
    pub min_slack: f64,
    pub max_slack: f64,
    pub worst_direct: Option<ViolationRecord>,
    pub worst_reverse: Option<ViolationRecord>,
}

/// Sweep outcome: one stat block per requested order. This is conjecture
/// cartography: violations are recorded, never asserted away.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub seed: u64,
    pub trials: u64,
    pub per_p: Vec<PSweepStat>,
}

/// Built-in block samplers for sweeps and fuzzing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockSampler {
    /// i.i.d. standard complex Gaussian entries in all four blocks.
    Gaussian,
    /// Blocks of a Gram matrix G*G of a Gaussian 2d x 2d matrix (PSD).
    PsdGram,
}

pub fn sample_gaussian_block(rng: &mut ChaCha8Rng, dim: usize) -> Block2x2 {
    use num_complex::Complex64;
    use rand::Rng;
    use rand_distr::StandardNormal;
    let mut block = || {
        ComplexMatrix::from_fn(dim, dim, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
    };
    let (a, b, c, d) = (block(), block(), block(), block());
    Block2x2::new(a, b, c, d).expect("uniform dims")
}

pub fn sample_psd_block(rng: &mut ChaCha8Rng, dim: usize) -> Block2x2 {
    use num_complex::Complex64;
    use rand::Rng;
    use rand_distr::StandardNormal;
    let g = ComplexMatrix::from_fn(2 * dim, 2 * dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let p = &g.adjoint() * &g;
    Block2x2::extract(&p, dim).expect("even dimension")
}

impl BlockSampler {
    pub fn sample(&self, rng: &mut ChaCha8Rng, dim: usize) -> Block2x2 {
        match self {
            BlockSampler::Gaussian => sample_gaussian_block(rng, dim),
            BlockSampler::PsdGram => sample_psd_block(rng, dim),
        }
    }
}

/// Shrink a violating instance by scaling the off-diagonal blocks toward the
/// block-diagonal case (where the slack vanishes) and bisecting on the sign
/// change; returns the boundary instance on the violating side.
pub fn shrink_violation(blocks: &Block2x2, p: NormOrder, reverse: bool) -> Result<Block2x2> {
    let slack_at = |t: f64| -> Result<f64> {
        let scaled = Block2x2::new(
            blocks.a.clone(),
            blocks.b.scale_re(t),
            blocks.c.scale_re(t),
            blocks.d.clone(),
        )?;
        Ok(theorem2_check(&scaled, p, VIOLATION_TOL)?.slack)
    };
    let violates = |s: f64| if reverse { s > VIOLATION_TOL } else { s < -VIOLATION_TOL };
    if !violates(slack_at(1.0)?) {
        return Ok(blocks.clone());
    }
    let mut bad = 1.0;
    let mut good = 0.0;
    // walk down from 1 to find the closest non-violating scale
    let mut t = 0.9;
    while t > 1e-3 {
        if violates(slack_at(t)?) {
            bad = t;
        } else {
            good = t;
            break;
        }
        t *= 0.84;
    }
    for _ in 0..40 {
        let mid = 0.5 * (good + bad);
        if violates(slack_at(mid)?) {
            bad = mid;
        } else {
            good = mid;
        }
    }
    Block2x2::new(
        blocks.a.clone(),
        blocks.b.scale_re(bad),
        blocks.c.scale_re(bad),
        blocks.d.clone(),
    )
}

/// Randomized sweep of the inequality over a p-grid.
///
/// Each trial draws from its own derived RNG stream, so the sweep is
/// deterministic and any record can be replayed from (seed, trial).
pub fn p_sweep<F>(sampler: F, p_grid: &[NormOrder], trials: u64, seed: u64) -> Result<SweepReport>
where
    F: Fn(&mut ChaCha8Rng) -> Block2x2 + Sync,
{
    struct TrialSlacks {
        trial: u64,
        blocks: Block2x2,
        slacks: Vec<f64>,
    }

    let evaluated: Vec<TrialSlacks> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial + 1);
            let blocks = sampler(&mut rng);
            let data = BlockNormData::new(&blocks).expect("sampled blocks are valid");
            let slacks = p_grid
                .iter()
                .map(|&p| data.report(p, VIOLATION_TOL).slack)
                .collect();
            TrialSlacks {
                trial,
                blocks,
                slacks,
            }
        })
        .collect();

    let mut per_p = Vec::with_capacity(p_grid.len());
    for (pi, &p) in p_grid.iter().enumerate() {
        let reverse_conjectured = matches!(p, NormOrder::Finite(v) if v <= 2.0);
        let mut stat = PSweepStat {
            p,
            trials,
            direct_violations: 0,
            reverse_violations: if reverse_conjectured { Some(0) } else { None },
            min_slack: f64::INFINITY,
            max_slack: f64::NEG_INFINITY,
            worst_direct: None,
            worst_reverse: None,
        };
        for t in &evaluated {
            let slack = t.slacks[pi];
            stat.min_slack = stat.min_slack.min(slack);
            stat.max_slack = stat.max_slack.max(slack);
            if slack < -VIOLATION_TOL {
                stat.direct_violations += 1;
                if stat.worst_direct.as_ref().map_or(true, |w| slack < w.slack) {
                    let shrunk = shrink_violation(&t.blocks, p, false)?;
                    let rep = theorem2_check(&shrunk, p, VIOLATION_TOL)?;
                    stat.worst_direct = Some(ViolationRecord {
                        seed,
                        trial: t.trial,
                        p,
                        blocks: shrunk,
                        lhs: rep.lhs,
                        rhs: rep.rhs,
                        slack,
                    });
                }
            }
            if reverse_conjectured && slack > VIOLATION_TOL {
                *stat.reverse_violations.as_mut().unwrap() += 1;
                if stat.worst_reverse.as_ref().map_or(true, |w| slack > w.slack) {
                    let shrunk = shrink_violation(&t.blocks, p, true)?;
                    let rep = theorem2_check(&shrunk, p, VIOLATION_TOL)?;
                    stat.worst_reverse = Some(ViolationRecord {
                        seed,
                        trial: t.trial,
                        p,
                        blocks: shrunk,
                        lhs: rep.lhs,
                        rhs: rep.rhs,
                        slack,
                    });
                }
            }
        }
        if stat.min_slack == f64::INFINITY {
            stat.min_slack = 0.0;
            stat.max_slack = 0.0;
        }
        per_p.push(stat);
    }
    Ok(SweepReport {
        seed,
        trials,
        per_p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn p(v: f64) -> NormOrder {
        NormOrder::new(v).unwrap()
    }

    #[test]
    fn norm_matrix_of_identity_blocks() {
        let i2 = ComplexMatrix::identity(2);
        let z = ComplexMatrix::zeros(2, 2);
        let b = Block2x2::new(i2.clone(), z.clone(), z.clone(), i2).unwrap();
        let nm = norm_matrix(&b, p(2.0)).unwrap();
        assert!((nm.entries[0][0] - 2f64.sqrt()).abs() < 1e-12);
        assert!(nm.entries[0][1].abs() < 1e-12);
        assert!(nm.entries[1][0].abs() < 1e-12);
        assert!((nm.entries[1][1] - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn norm_matrix_all_pauli_blocks() {
        let [sx, _, _] = crate::matcore::pauli_matrices();
        let b = Block2x2::new(sx.clone(), sx.clone(), sx.clone(), sx).unwrap();
        let nm = norm_matrix(&b, p(4.0)).unwrap();
        for row in nm.entries {
            for e in row {
                assert!((e - 2f64.powf(0.25)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn norm_matrix_trace_norm_entries() {
        let b = Block2x2::new(
            ComplexMatrix::diag_real(&[3.0, 4.0]),
            ComplexMatrix::zeros(2, 2),
            ComplexMatrix::zeros(2, 2),
            ComplexMatrix::diag_real(&[1.0, 0.0]),
        )
        .unwrap();
        let nm = norm_matrix(&b, p(1.0)).unwrap();
        assert!((nm.entries[0][0] - 7.0).abs() < 1e-12);
        assert!((nm.entries[1][1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_2x2_norm_matches_svd_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for _ in 0..50 {
            let nm = NormMatrix {
                entries: [
                    [rng.gen::<f64>() * 3.0, rng.gen::<f64>() * 3.0],
                    [rng.gen::<f64>() * 3.0, rng.gen::<f64>() * 3.0],
                ],
            };
            for order in [p(1.0), p(2.0), p(3.7), NormOrder::Infinity] {
                let direct = nm.pnorm(order);
                let via_svd = crate::matcore::schatten_norm(&nm.as_matrix(), order).unwrap();
                assert!((direct - via_svd).abs() <= 1e-12 * direct.max(1.0));
            }
        }
    }

    #[test]
    fn block_diagonal_case_has_zero_slack() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let g1 = sample_gaussian_block(&mut rng, 3);
        let g2 = sample_gaussian_block(&mut rng, 3);
        let b = Block2x2::new(
            g1.a,
            ComplexMatrix::zeros(3, 3),
            ComplexMatrix::zeros(3, 3),
            g2.d,
        )
        .unwrap();
        for order in [p(1.5), p(2.0), p(4.0), p(9.0), NormOrder::Infinity] {
            let r = theorem2_check(&b, order, 1e-9).unwrap();
            assert!(r.slack.abs() < 1e-10, "slack {} at {order}", r.slack);
        }
    }

    #[test]
    fn equality_at_p_two_on_random_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..50 {
            let b = sample_gaussian_block(&mut rng, 3);
            let r = theorem2_check(&b, p(2.0), 1e-10).unwrap();
            assert!(r.slack.abs() <= 1e-10, "slack {}", r.slack);
        }
    }

    #[test]
    fn inequality_holds_at_p_four_on_random_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        for trial in 0..200usize {
            let dim = 1 + trial % 5;
            let b = sample_gaussian_block(&mut rng, dim);
            let r = theorem2_check(&b, p(4.0), VIOLATION_TOL).unwrap();
            assert!(r.holds, "slack {}", r.slack);
        }
    }

    #[test]
    fn psd_block_bound_frobenius_equality_and_identity_case() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let gram = {
            let g = ComplexMatrix::from_fn(6, 6, |_, _| {
                Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            });
            &g.adjoint() * &g
        };
        let r = psd_block_check(&gram, p(2.0), 1e-10).unwrap();
        assert!(r.holds && r.slack.abs() < 1e-9);
        let r = psd_block_check(&ComplexMatrix::identity(4), p(3.0), 1e-10).unwrap();
        assert!((r.lhs - 4f64.powf(1.0 / 3.0)).abs() < 1e-12);
        assert!(r.slack.abs() < 1e-12);
    }

    #[test]
    fn psd_block_bound_random_gram_fuzz() {
        let mut rng = ChaCha8Rng::seed_from_u64(56);
        for trial in 0..150usize {
            let dim = 1 + trial % 4;
            let b = sample_psd_block(&mut rng, dim);
            for q in [p(2.0), p(2.5), p(4.0)] {
                let r = psd_block_check(&b.assemble(), q, VIOLATION_TOL).unwrap();
                assert!(r.holds, "slack {} at {q}", r.slack);
            }
        }
    }

    #[test]
    fn psd_block_bound_rejects_bad_inputs() {
        let m = ComplexMatrix::diag_real(&[1.0, -1.0]);
        assert!(matches!(
            psd_block_check(&m, p(2.0), 1e-9),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
        assert!(psd_block_check(&ComplexMatrix::identity(4), p(1.5), 1e-9).is_err());
    }

    #[test]
    fn proof_chain_on_block_diagonal_has_tight_final_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(57);
        let g = sample_gaussian_block(&mut rng, 2);
        let b = Block2x2::new(
            g.a.clone(),
            ComplexMatrix::zeros(2, 2),
            ComplexMatrix::zeros(2, 2),
            g.d.clone(),
        )
        .unwrap();
        let steps = proof_chain_thm2(&b, p(4.0)).unwrap();
        assert_eq!(steps.len(), 6);
        for s in &steps {
            assert!(s.slack >= -1e-10, "step {} slack {}", s.label, s.slack);
        }
        assert!(steps.last().unwrap().slack.abs() < 1e-9);
    }

    #[test]
    fn proof_chain_random_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(58);
        for trial in 0..60usize {
            let dim = 1 + trial % 4;
            let b = sample_gaussian_block(&mut rng, dim);
            for order in [p(4.0), p(6.0), NormOrder::Infinity] {
                let steps = proof_chain_thm2(&b, order).unwrap();
                for s in &steps {
                    assert!(
                        s.slack >= -VIOLATION_TOL,
                        "step {} slack {} at {order}",
                        s.label,
                        s.slack
                    );
                }
            }
        }
    }

    #[test]
    fn proof_chain_hermitian_structured_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        for _ in 0..20 {
            let g = sample_gaussian_block(&mut rng, 3);
            let a = (&g.a + &g.a.adjoint()).scale_re(0.5);
            let d = (&g.d + &g.d.adjoint()).scale_re(0.5);
            let b = Block2x2::new(a, g.b.clone(), g.b.adjoint(), d).unwrap();
            let steps = proof_chain_thm2(&b, p(6.0)).unwrap();
            for s in &steps {
                assert!(s.slack >= -VIOLATION_TOL);
            }
        }
    }

    #[test]
    fn proof_chain_rejects_small_p() {
        let mut rng = ChaCha8Rng::seed_from_u64(60);
        let b = sample_gaussian_block(&mut rng, 2);
        assert!(proof_chain_thm2(&b, p(3.0)).is_err());
    }

    #[test]
    fn off_diagonal_contraction_bound_on_psd_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..50 {
            let blocks = sample_psd_block(&mut rng, 3);
            for order in [p(1.0), p(2.0), p(3.0), NormOrder::Infinity] {
                let nb = crate::matcore::schatten_norm(&blocks.b, order).unwrap();
                let na = crate::matcore::schatten_norm(&blocks.a, order).unwrap();
                let nd = crate::matcore::schatten_norm(&blocks.d, order).unwrap();
                assert!(nb <= na.sqrt() * nd.sqrt() + 1e-9);
            }
        }
    }

    #[test]
    fn phase_dressed_norm_matrix_stays_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        for _ in 0..50 {
            let blocks = sample_psd_block(&mut rng, 2);
            let order = p(3.0);
            let na = crate::matcore::schatten_norm(&blocks.a, order).unwrap();
            let nb = crate::matcore::schatten_norm(&blocks.b, order).unwrap();
            let nd = crate::matcore::schatten_norm(&blocks.d, order).unwrap();
            for k in 0..8 {
                let phase = Complex64::from_polar(1.0, k as f64 * std::f64::consts::PI / 4.0);
                let m = ComplexMatrix::new(
                    2,
                    2,
                    vec![
                        Complex64::new(na, 0.0),
                        phase * nb,
                        phase.conj() * nb,
                        Complex64::new(nd, 0.0),
                    ],
                )
                .unwrap();
                let eig = hermitian_eigen(&m).unwrap();
                assert!(eig.values[1] >= -1e-9);
            }
        }
    }

    #[test]
    fn entrywise_monotonicity_for_nonnegative_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(63);
        for _ in 0..100 {
            // nonnegative-entry PSD 2x2: a, c >= 0, b^2 <= a c
            let a = rng.gen::<f64>() * 2.0;
            let c = rng.gen::<f64>() * 2.0;
            let b = (a * c).sqrt() * rng.gen::<f64>();
            let base = NormMatrix {
                entries: [[a, b], [b, c]],
            };
            // increase entries while preserving PSD
            let da = rng.gen::<f64>() * 0.5;
            let dc = rng.gen::<f64>() * 0.5;
            let bmax = ((a + da) * (c + dc)).sqrt();
            let db = (bmax - b).max(0.0) * rng.gen::<f64>();
            let bumped = NormMatrix {
                entries: [[a + da, b + db], [b + db, c + dc]],
            };
            for q in [p(1.0), p(2.0), p(3.5), NormOrder::Infinity] {
                assert!(bumped.pnorm(q) >= base.pnorm(q) - 1e-12);
            }
        }
    }

    #[test]
    fn phase_invariance_of_dressed_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        for _ in 0..20 {
            let a = rng.gen::<f64>() * 2.0;
            let b = rng.gen::<f64>() * 2.0;
            let d = rng.gen::<f64>() * 2.0;
            let order = p(5.0);
            let reference = NormMatrix {
                entries: [[a, b], [b, d]],
            }
            .pnorm(order);
            for k in 1..8 {
                let phase = Complex64::from_polar(1.0, k as f64 * 0.7);
                let m = ComplexMatrix::new(
                    2,
                    2,
                    vec![
                        Complex64::new(a, 0.0),
                        phase * b,
                        phase.conj() * b,
                        Complex64::new(d, 0.0),
                    ],
                )
                .unwrap();
                let n = crate::matcore::schatten_norm(&m, order).unwrap();
                assert!((n - reference).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sweep_equality_region_and_theorem_region() {
        let grid = [p(2.0), p(4.0), p(8.0), NormOrder::Infinity];
        let report = p_sweep(|rng| sample_gaussian_block(rng, 2), &grid, 200, 77).unwrap();
        for stat in &report.per_p {
            assert_eq!(stat.direct_violations, 0, "at {}", stat.p);
        }
        // p = 2 is an equality: both directions stay within tolerance
        let at2 = &report.per_p[0];
        assert_eq!(at2.reverse_violations, Some(0));
        assert!(at2.min_slack > -1e-10 && at2.max_slack < 1e-10);
    }

    #[test]
    fn sweep_reverse_region_collects_no_reverse_violations() {
        let grid = [p(1.0), p(1.5)];
        let report = p_sweep(|rng| sample_gaussian_block(rng, 2), &grid, 200, 78).unwrap();
        for stat in &report.per_p {
            // reverse inequality conjectured for p <= 2: slack <= 0 expected
            assert_eq!(stat.reverse_violations, Some(0), "at {}", stat.p);
            // direct violations are expected there; they are data, not failures
            assert!(stat.min_slack <= 1e-10);
        }
    }

    #[test]
    fn sweep_is_deterministic_and_replayable() {
        let grid = [p(1.5)];
        let r1 = p_sweep(|rng| sample_gaussian_block(rng, 2), &grid, 64, 5).unwrap();
        let r2 = p_sweep(|rng| sample_gaussian_block(rng, 2), &grid, 64, 5).unwrap();
        assert_eq!(
            serde_json::to_string(&r1).unwrap(),
            serde_json::to_string(&r2).unwrap()
        );
        // replay the recorded worst offender from (seed, trial)
        if let Some(w) = &r1.per_p[0].worst_direct {
            let mut rng = ChaCha8Rng::seed_from_u64(w.seed);
            rng.set_stream(w.trial + 1);
            let blocks = sample_gaussian_block(&mut rng, 2);
            let rep = theorem2_check(&blocks, w.p, VIOLATION_TOL).unwrap();
            assert!((rep.slack - w.slack).abs() < 1e-12);
        }
    }

    #[test]
    fn shrinking_keeps_a_violation_near_the_boundary() {
        let mut rng = ChaCha8Rng::seed_from_u64(79);
        // find some direct violation at p = 1.5 (the reverse regime)
        let order = p(1.5);
        let mut found = None;
        for _ in 0..500 {
            let b = sample_gaussian_block(&mut rng, 2);
            let r = theorem2_check(&b, order, VIOLATION_TOL).unwrap();
            if r.slack < -1e-6 {
                found = Some((b, r.slack));
                break;
            }
        }
        let (blocks, original_slack) = found.expect("violations are common at p = 1.5");
        let shrunk = shrink_violation(&blocks, order, false).unwrap();
        let r = theorem2_check(&shrunk, order, VIOLATION_TOL).unwrap();
        assert!(r.slack < -VIOLATION_TOL, "still violating");
        assert!(r.slack > original_slack, "closer to the boundary");
    }
}
