use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use simplex_grasp::contact::{immobilizes, stochastic_spectrum_bound, PenetrationMatrix};
use simplex_grasp::linalg::{self, max_abs};
use simplex_grasp::oracle::{falsify, phi, psi};
use simplex_grasp::sampling::{random_barycentric, random_contacts, random_simplex, random_symmetric_contacts};
use simplex_grasp::synthesis::{
    apply_displacement, centred_contacts, centred_feasible_witness, centroid_contacts, displacement_basis,
    DisplacementCoeff,
};
use simplex_grasp::{OracleConfig, OracleVerdict, RigidMotion, SkewGenerator, Tolerances};

fn tol() -> Tolerances {
    Tolerances::default()
}

fn random_generator(rng: &mut ChaCha8Rng, n: usize, norm: f64) -> SkewGenerator {
    let g = SkewGenerator::new(n, (0..n * (n - 1) / 2).map(|_| rng.sample(StandardNormal)).collect()).unwrap();
    g.scaled(norm / g.norm())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normals_sum_to_zero_and_kappa_to_minus_n_vol(seed in any::<u64>(), n in 2usize..=6) {
        let s = random_simplex(&mut ChaCha8Rng::seed_from_u64(seed), n);
        let fan = s.normal_fan();
        let largest = (0..=n).map(|i| fan.normal(i).norm()).fold(0.0, f64::max);
        let total: DVector<f64> = (0..=n).map(|i| fan.normal(i)).sum();
        prop_assert!(total.amax() <= 1e-10 * largest);
        let n_vol = n as f64 * s.volume();
        prop_assert!((fan.kappa_sum() + n_vol).abs() <= 1e-10 * n_vol.max(largest));
    }

    #[test]
    fn normal_dotted_with_edge_is_n_vol(seed in any::<u64>(), n in 2usize..=6) {
        let s = random_simplex(&mut ChaCha8Rng::seed_from_u64(seed), n);
        let fan = s.normal_fan();
        let n_vol = n as f64 * s.volume();
        for i in 0..=n {
            for j in (0..=n).filter(|&j| j != i) {
                let d = fan.normal(i).dot(&(s.vertex(j) - s.vertex(i)));
                prop_assert!((d - n_vol).abs() <= 1e-9 * n_vol);
            }
        }
    }

    #[test]
    fn centred_sets_are_positive_definite(seed in any::<u64>(), n in 2usize..=6) {
        let s = random_simplex(&mut ChaCha8Rng::seed_from_u64(seed), n);
        let w = centred_feasible_witness(&s);
        let (c, w) = centred_contacts(&s, &DVector::from_vec(w.z), &tol()).unwrap();
        let fan = s.normal_fan();
        let a = PenetrationMatrix::assemble(&fan, &c, &tol()).unwrap();
        let expected: DMatrix<f64> = (0..=n).map(|i| fan.normal(i) * fan.normal(i).transpose() * w.t[i]).sum();
        prop_assert!(max_abs(&(a.matrix() - &expected)) <= 1e-9 * max_abs(&expected));
        prop_assert!(a.eigenvalues().unwrap()[0] > 0.0);
        for (j, p) in c.points().iter().enumerate() {
            // p_j − z is parallel to k_j
            let d = p - DVector::from_vec(w.z.clone());
            let k = fan.normal(j);
            prop_assert!((d.dot(&k).abs() - d.norm() * k.norm()).abs() <= 1e-9 * d.norm() * k.norm());
        }
    }

    #[test]
    fn displacements_keep_symmetry_and_trace(seed in any::<u64>(), n in 2usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_simplex(&mut rng, n);
        let base = random_symmetric_contacts(&mut rng, &s).unwrap();
        let fan = s.normal_fan();
        let basis = displacement_basis(&fan);
        for (i, j) in basis.pairs().collect::<Vec<_>>() {
            let mut t = 0.05 * s.volume() / basis.projected_normal(i, j).norm().powi(2);
            let moved = loop {
                match apply_displacement(&s, &base, &[DisplacementCoeff { i, j, t }], &tol()) {
                    Ok(c) => break c,
                    Err(_) => t *= 0.5,
                }
            };
            let a = PenetrationMatrix::assemble(&fan, &moved, &tol()).unwrap();
            let inf = a.matrix().row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
            prop_assert!(a.symmetric_defect() <= 1e-10 * inf);
            let n_vol = n as f64 * s.volume();
            prop_assert!((a.matrix().trace() - n_vol).abs() <= 1e-9 * n_vol);
        }
    }

    #[test]
    fn centroids_are_optimal(seed in any::<u64>(), n in 2usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_simplex(&mut rng, n);
        let c = random_symmetric_contacts(&mut rng, &s).unwrap();
        let a = PenetrationMatrix::assemble(&s.normal_fan(), &c, &tol()).unwrap();
        let centroid = centroid_contacts(&s, &tol()).unwrap();
        if max_abs(&(c.barycentric() - centroid.barycentric())) > 1e-9 {
            if n == 2 {
                // the only pair sum is the trace
                prop_assert!((a.min_pair_sum().unwrap() - 2.0 * s.volume()).abs() <= 1e-9 * s.volume());
            } else {
                prop_assert!(a.min_pair_sum().unwrap() < 2.0 * s.volume());
            }
        }
    }

    #[test]
    fn penetration_ignores_translations(seed in any::<u64>(), n in 2usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_simplex(&mut rng, n);
        let c = random_contacts(&mut rng, &s).unwrap();
        let fan = s.normal_fan();
        let g = RigidMotion::from_skew(&random_generator(&mut rng, n, 0.7)).unwrap();
        let a = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let scale = (0..=n).map(|i| fan.normal(i).norm() * c.point(i).norm().max(1.0)).sum::<f64>();
        prop_assert!((phi(&fan, &c, &g.then_translate(&a)) - phi(&fan, &c, &g)).abs() <= 1e-12 * scale);
    }

    #[test]
    fn psi_matches_phi_on_rotations(seed in any::<u64>(), n in 2usize..=5, norm in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_simplex(&mut rng, n);
        let c = random_contacts(&mut rng, &s).unwrap();
        let fan = s.normal_fan();
        let pm = PenetrationMatrix::assemble(&fan, &c, &tol()).unwrap();
        let g = random_generator(&mut rng, n, norm.max(1e-6));
        let r = RigidMotion::from_skew(&g).unwrap();
        let p = phi(&fan, &c, &r);
        prop_assert!((psi(&pm, &g) - p).abs() <= 1e-10 * (1.0 + p.abs()));
    }

    #[test]
    fn first_order_term_vanishes_for_symmetric_a(seed in any::<u64>(), n in 2usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_simplex(&mut rng, n);
        let c = random_symmetric_contacts(&mut rng, &s).unwrap();
        let a = PenetrationMatrix::assemble(&s.normal_fan(), &c, &tol()).unwrap();
        let g = random_generator(&mut rng, n, 1.0).matrix();
        let first = (a.matrix().transpose() * &g).trace();
        prop_assert!(first.abs() <= 1e-12 * a.matrix().norm() * g.norm());
    }

    #[test]
    fn rotations_stay_orthogonal(seed in any::<u64>(), n in 2usize..=8, norm in 0.0f64..20.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = RigidMotion::from_skew(&random_generator(&mut rng, n, norm.max(1e-9))).unwrap();
        prop_assert!(linalg::orthogonality_defect(r.rotation()) <= 1e-12);
        prop_assert!((linalg::det(r.rotation()) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn positive_barycentric_matrices_contract(seed in any::<u64>(), n in 2usize..=7) {
        let lambda = random_barycentric(&mut ChaCha8Rng::seed_from_u64(seed), n);
        let report = stochastic_spectrum_bound(&lambda, seed).unwrap();
        prop_assert!(report.contracts, "{:?}", report);
    }

    #[test]
    fn brute_force_agrees_in_the_plane(seed in any::<u64>(), symmetric in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_simplex(&mut rng, 2);
        let c = if symmetric { random_symmetric_contacts(&mut rng, &s) } else { random_contacts(&mut rng, &s) }.unwrap();
        let v = immobilizes(&s, &c, &tol()).unwrap();
        let config = OracleConfig { n_random: 200, ..OracleConfig::default() };
        let r = falsify(&s, &c, &config, &tol()).unwrap();
        let expected = if v.immobilizes { OracleVerdict::ConfirmImmobilizing } else { OracleVerdict::RefuteWithWitness };
        prop_assert_eq!(r.verdict, expected);
    }
}
