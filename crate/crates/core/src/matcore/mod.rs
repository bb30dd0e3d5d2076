//! Dense complex linear algebra: spectral factorizations, Schatten norms,
//! tensor products, block assembly and partial traces.
//!
//! All operations are pure functions on immutable inputs; values are freely
//! shareable across threads.

mod block;
mod matrix;
mod norm;
mod spectral;

pub use block::{partial_trace, Block2x2, TraceSide};
pub use matrix::{pauli_matrices, ComplexMatrix};
pub use norm::{schatten_from_singular_values, schatten_norm, NormOrder};
pub use spectral::{
    hermitian_eigen, spectral_factor, svd, FactorMode, HermitianEigen, SpectralFactor, Svd,
};

#[cfg(test)]
mod property_tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(rows, cols, |_, _| {
            Complex64::new(rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0)
        })
    }

    fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
        let m = random_matrix(rng, n, n);
        let h = (&m + &m.adjoint()).scale_re(0.5);
        hermitian_eigen(&h).unwrap().vectors
    }

    #[test]
    fn unitary_invariance_of_schatten_norms() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let orders = [
            NormOrder::new(1.0).unwrap(),
            NormOrder::new(2.0).unwrap(),
            NormOrder::new(3.0).unwrap(),
            NormOrder::new(4.0).unwrap(),
            NormOrder::infinity(),
        ];
        for n in [2usize, 3, 6] {
            let m = random_matrix(&mut rng, n, n);
            let u = random_unitary(&mut rng, n);
            let v = random_unitary(&mut rng, n);
            let umv = &(&u * &m) * &v;
            for p in orders {
                let a = schatten_norm(&m, p).unwrap();
                let b = schatten_norm(&umv, p).unwrap();
                assert!((a - b).abs() <= 1e-9 * a.max(1.0), "p = {p}");
            }
        }
    }

    #[test]
    fn norm_monotone_in_p() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let grid = [
            NormOrder::new(1.0).unwrap(),
            NormOrder::new(1.5).unwrap(),
            NormOrder::new(2.0).unwrap(),
            NormOrder::new(4.0).unwrap(),
            NormOrder::new(8.0).unwrap(),
            NormOrder::infinity(),
        ];
        for _ in 0..20 {
            let m = random_matrix(&mut rng, 4, 4);
            let norms: Vec<f64> = grid.iter().map(|&p| schatten_norm(&m, p).unwrap()).collect();
            for w in norms.windows(2) {
                assert!(w[0] >= w[1] - 1e-12);
            }
        }
    }

    #[test]
    fn frobenius_agrees_with_entrywise_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for _ in 0..20 {
            let m = random_matrix(&mut rng, 5, 3);
            let p2 = schatten_norm(&m, NormOrder::new(2.0).unwrap()).unwrap();
            assert!((p2 - m.frobenius()).abs() <= 1e-12 * p2.max(1.0));
        }
    }

    #[test]
    fn singular_values_match_gram_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        for _ in 0..10 {
            let m = random_matrix(&mut rng, 6, 6);
            let sv = svd(&m).unwrap().values;
            let gram = &m.adjoint() * &m;
            let ev = hermitian_eigen(&gram).unwrap().values;
            for p in [1.0, 2.0, 4.0] {
                let p = NormOrder::new(p).unwrap();
                let from_sv = schatten_from_singular_values(&sv, p);
                let roots: Vec<f64> = ev.iter().map(|&e| e.max(0.0).sqrt()).collect();
                let from_ev = schatten_from_singular_values(&roots, p);
                assert!((from_sv - from_ev).abs() <= 1e-10 * from_sv.max(1.0));
            }
        }
    }

    #[test]
    fn kron_norm_is_multiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        for p in [
            NormOrder::new(1.0).unwrap(),
            NormOrder::new(2.5).unwrap(),
            NormOrder::infinity(),
        ] {
            let a = random_matrix(&mut rng, 3, 3);
            let b = random_matrix(&mut rng, 2, 2);
            let na = schatten_norm(&a, p).unwrap();
            let nb = schatten_norm(&b, p).unwrap();
            let nk = schatten_norm(&a.kron(&b), p).unwrap();
            assert!((nk - na * nb).abs() <= 1e-10 * (na * nb).max(1.0));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn triangle_inequality(seed in 0u64..1u64 << 48, n in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_matrix(&mut rng, n, n);
            let b = random_matrix(&mut rng, n, n);
            for p in [NormOrder::new(1.0).unwrap(), NormOrder::new(3.0).unwrap(), NormOrder::infinity()] {
                let lhs = schatten_norm(&(&a + &b), p).unwrap();
                let rhs = schatten_norm(&a, p).unwrap() + schatten_norm(&b, p).unwrap();
                prop_assert!(lhs <= rhs + 1e-10);
            }
        }

        #[test]
        fn block_roundtrip(seed in 0u64..1u64 << 48, d in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_matrix(&mut rng, 2 * d, 2 * d);
            let blocks = Block2x2::extract(&m, d).unwrap();
            prop_assert_eq!(blocks.assemble(), m);
        }
    }
}
