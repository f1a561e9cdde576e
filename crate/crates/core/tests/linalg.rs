mod common;

use common::{random_cmatrix, random_cvector, random_psd};
use mimo_rab::linalg::{embed_matrix, embed_vector, hermitian_sqrt, kron, CVector, HermitianMatrix, C64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn kron_norm_is_multiplicative() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let a = random_cvector(&mut rng, 4);
        let b = random_cvector(&mut rng, 6);
        let k = kron(&a, &b);
        assert_eq!(k.len(), 24);
        assert!((k.norm() - a.norm() * b.norm()).abs() < 1e-12 * k.norm());
    }
}

#[test]
fn sqrt_reproduces_quadratic_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let m = random_cmatrix(&mut rng, 5, 5);
    let c = HermitianMatrix::symmetrize(m.adjoint() * &m);
    let l = hermitian_sqrt(&c).unwrap();
    for _ in 0..100 {
        let v = random_cvector(&mut rng, 5);
        let q = c.quadratic_form(&v);
        assert!((l.weighted_norm(&v).powi(2) - q).abs() <= 1e-9 * q);
    }
}

#[test]
fn embedded_quadratic_form_matches() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let c = random_psd(&mut rng, 4, 4, 4.0);
    let ce = embed_matrix(c.matrix());
    for _ in 0..100 {
        let v = random_cvector(&mut rng, 4);
        let ve = embed_vector(&v);
        let real = ve.dot(&(&ce * &ve));
        assert!((real - c.quadratic_form(&v)).abs() < 1e-12 * (1.0 + real.abs()));
    }
}

fn complex_vec(n: usize) -> impl Strategy<Value = CVector> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), n)
        .prop_map(|v| CVector::from_iterator(v.len(), v.into_iter().map(|(r, i)| C64::new(r, i))))
}

proptest! {
    #[test]
    fn kron_is_bilinear(a in complex_vec(3), b in complex_vec(4), re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let alpha = C64::new(re, im);
        let lhs = kron(&(&a * alpha), &b);
        let rhs = kron(&a, &b) * alpha;
        prop_assert!((lhs - &rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
        let lhs = kron(&a, &(&b * alpha));
        prop_assert!((lhs - &rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
    }

    #[test]
    fn kronecker_inner_product_factorizes(u in complex_vec(3), v in complex_vec(4), a in complex_vec(3), b in complex_vec(4)) {
        let lhs = kron(&u, &v).dotc(&kron(&a, &b));
        let rhs = u.dotc(&a) * v.dotc(&b);
        prop_assert!((lhs - rhs).norm() <= 1e-11 * (1.0 + rhs.norm()));
    }

    #[test]
    fn embedding_preserves_inner_products(a in complex_vec(5), b in complex_vec(5)) {
        let lhs = embed_vector(&a).dot(&embed_vector(&b));
        prop_assert!((lhs - a.dotc(&b).re).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn factorization_round_trip(seed in 0u64..1_000_000, n in 1usize..7, rank_drop in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rank = n.saturating_sub(rank_drop).max(1);
        let c = random_psd(&mut rng, n, rank, n as f64);
        let l = hermitian_sqrt(&c).unwrap();
        let lower = l.lower();
        for i in 0..n {
            prop_assert!(lower[(i, i)].im == 0.0 && lower[(i, i)].re >= 0.0);
            for j in i + 1..n {
                prop_assert!(lower[(i, j)] == C64::new(0.0, 0.0));
            }
        }
        let err = (l.reconstruct() - c.matrix()).norm();
        prop_assert!(err <= 1e-10 * c.matrix().norm(), "round-trip error {}", err);
    }

    #[test]
    fn embedding_of_hermitian_is_symmetric(seed in 0u64..1_000_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_psd(&mut rng, 4, 3, 1.0);
        let e = embed_matrix(c.matrix());
        prop_assert!((&e - e.transpose()).amax() <= 1e-15);
    }
}
