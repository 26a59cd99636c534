use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use projgeo::geo::{geodesic_distance, minimal_exponent, verify_geodesic};
use projgeo::jones::{expectation_projection, SubalgebraSpec};
use projgeo::numkit::{
    exp_skew, frobenius, hermitian_part, log_unitary_principal, operator_norm, polar_unitary,
    unitarity_residual,
};
use projgeo::projlat::{halmos_decompose, make_projection, principal_angles};
use projgeo::sample::{self, PairLayout};
use projgeo::ToleranceProfile;

fn tol() -> ToleranceProfile {
    ToleranceProfile::default()
}

fn layout_strategy() -> impl Strategy<Value = PairLayout> {
    (
        0usize..3,
        0usize..3,
        0usize..3,
        prop::collection::vec(0.05..1.52f64, 0..4),
    )
        .prop_filter("non-empty", |(a, b, w, g)| a + b + 2 * w + 2 * g.len() >= 1)
        .prop_map(|(both, neither, wedge, angles)| PairLayout {
            both,
            neither,
            wedge,
            angles,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn halmos_ranks_follow_layout(layout in layout_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (p, q) = layout.build_rotated(&mut rng);
        let p = make_projection(&hermitian_part(&p), &tol()).unwrap();
        let q = make_projection(&hermitian_part(&q), &tol()).unwrap();
        let r = halmos_decompose(&p, &q).unwrap().ranks();
        prop_assert_eq!(r.e11, layout.both);
        prop_assert_eq!(r.e00, layout.neither);
        prop_assert_eq!(r.e10, layout.wedge);
        prop_assert_eq!(r.e01, layout.wedge);
        prop_assert_eq!(r.e0, 2 * layout.angles.len());

        let mut expected = layout.angles.clone();
        expected.sort_by(f64::total_cmp);
        let measured = principal_angles(&p, &q).unwrap();
        for (a, b) in measured.angles.iter().zip(&expected) {
            prop_assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn exponent_contract_and_distance(layout in layout_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (p, q) = layout.build_rotated(&mut rng);
        let p = make_projection(&hermitian_part(&p), &tol()).unwrap();
        let q = make_projection(&hermitian_part(&q), &tol()).unwrap();
        let g = minimal_exponent(&p, &q, None).unwrap();
        prop_assert!(verify_geodesic(&g).max() < 1e-8);
        let back = minimal_exponent(&q, &p, None).unwrap();
        prop_assert!((g.norm() - back.norm()).abs() < 1e-8);

        // wedges contribute π/2; otherwise the largest principal angle
        let expected = if layout.wedge > 0 {
            std::f64::consts::FRAC_PI_2
        } else {
            layout.angles.iter().cloned().fold(0.0, f64::max)
        };
        prop_assert!((geodesic_distance(&p, &q).unwrap() - expected).abs() < 1e-7);
    }

    #[test]
    fn log_inverts_exp(n in 1usize..7, scale in 0.1..2.5f64, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = sample::skew(n, &mut rng);
        let z = k.scale(scale / operator_norm(&k));
        let u = exp_skew(&z, &tol()).unwrap();
        prop_assert!(unitarity_residual(&u) < 1e-12);
        let back = log_unitary_principal(&u, &tol()).unwrap();
        prop_assert!(frobenius(&(back - z)) < 1e-9);
    }

    #[test]
    fn polar_reconstructs(n in 1usize..7, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = sample::gaussian(n, &mut rng);
        let u = polar_unitary(&a, &tol()).unwrap();
        prop_assert!(unitarity_residual(&u) < 1e-10);
        let h = u.adjoint() * &a;
        prop_assert!(frobenius(&(&h - h.adjoint())) < 1e-9);
        prop_assert!(frobenius(&(&u * h - a)) < 1e-9);
    }

    #[test]
    fn block_expectation_axioms(sizes in prop::collection::vec(1usize..3, 1..4), seed in any::<u64>()) {
        let n: usize = sizes.iter().sum();
        let e = expectation_projection(&SubalgebraSpec::blocks(&sizes), n, &tol()).unwrap();
        let expected_rank: usize = sizes.iter().map(|s| s * s).sum();
        prop_assert_eq!(e.big.rank(), expected_rank);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples: Vec<_> = (0..3).map(|_| sample::gaussian(n, &mut rng)).collect();
        prop_assert!(e.axioms(&samples).max() < 1e-10);
    }
}
