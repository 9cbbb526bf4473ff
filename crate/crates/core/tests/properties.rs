use nalgebra::{DVector, Matrix2};
use onehomog_core::homog::{construct_solution, Combination, PolarMap};
use onehomog_core::linalg::{cof2, frob_dot2};
use onehomog_core::quadrature::{make_bump, Layout, PolarGrid, Weight};
use onehomog_core::spectral::{build_lambda, neg_square_spectrum, solve_amplitude};
use onehomog_core::uniqueness::{det_expansion_check, radial_pairing};
use onehomog_core::weakform::{meyers_coefficients, weak_el_residual, IntegrandSpec};
use onehomog_core::{EigSelection, HomogMap, RadialProfile, SkewCoefficients};
use proptest::prelude::*;

fn skew_coeffs(m: usize) -> impl Strategy<Value = SkewCoefficients> {
    prop::collection::vec(-3.0f64..3.0, m * (m - 1) / 2).prop_map(move |vals| {
        let mut c = SkewCoefficients::new(m);
        let mut it = vals.into_iter();
        for i in 1..=m {
            for j in (i + 1)..=m {
                c.set(i, j, it.next().unwrap());
            }
        }
        c
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lambda_is_exactly_skew(c in (2usize..7).prop_flat_map(skew_coeffs)) {
        let l = build_lambda(&c).unwrap();
        prop_assert_eq!(l.skewness_defect(), 0.0);
    }

    #[test]
    fn neg_square_spectrum_is_psd_and_reconstructs(c in (2usize..7).prop_flat_map(skew_coeffs)) {
        let l = build_lambda(&c).unwrap();
        let s = neg_square_spectrum(&l).unwrap();
        let target = -(l.matrix() * l.matrix());
        let scale = l.frobenius_sq().max(1.0);
        prop_assert!(s.smallest() >= -1e-12 * scale);
        prop_assert!(s.reconstruction_error(&target) <= 1e-10 * scale);
        prop_assert!(s.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn odd_dimensions_have_a_kernel(c in prop::sample::select(vec![3usize, 5, 7]).prop_flat_map(skew_coeffs)) {
        let l = build_lambda(&c).unwrap();
        let s = neg_square_spectrum(&l).unwrap();
        prop_assert!(s.smallest().abs() <= 1e-12 * l.frobenius_sq().max(1.0));
    }

    #[test]
    fn constructed_maps_conserve_and_solve(
        c in (2usize..6).prop_flat_map(skew_coeffs),
        k in 2u32..6,
    ) {
        let l = build_lambda(&c).unwrap();
        prop_assume!(neg_square_spectrum(&l).unwrap().largest() > 1e-3);
        let u = construct_solution(&l, &RadialProfile::Quartic, k, EigSelection::Largest).unwrap();
        let c2 = u.c() * u.c();
        prop_assert!(u.conservation_residual(256) <= 1e-12 * c2.max(1.0));
        let scale = (u.c().powi(3) + l.frobenius_sq().sqrt() * u.c() * f64::from(k)).max(1.0);
        prop_assert!(u.strong_residual(&RadialProfile::Quartic, &l, 256).unwrap() <= 1e-10 * scale);
    }

    #[test]
    fn amplitude_solves_its_equation(k in 2u32..8, rho0 in 0.05f64..20.0, p in 2.2f64..6.0) {
        let prof = RadialProfile::power(p).unwrap();
        let t = solve_amplitude(&prof, k, rho0).unwrap();
        let kf = f64::from(k);
        let lhs = (kf * kf - 1.0) * prof.df(t) / (kf * t);
        prop_assert!((lhs - rho0).abs() <= 1e-10 * rho0);
    }

    #[test]
    fn determinant_expansion_is_exact(v in prop::collection::vec(-5.0f64..5.0, 8)) {
        let a = Matrix2::new(v[0], v[1], v[2], v[3]);
        let b = Matrix2::new(v[4], v[5], v[6], v[7]);
        prop_assert!(det_expansion_check(&[(a, b)]) <= 1e-12);
        prop_assert!((frob_dot2(&cof2(&a), &a) - 2.0 * a.determinant()).abs() <= 1e-12 * (1.0 + a.norm_squared()));
    }

    #[test]
    fn meyers_coefficient_identities(mu in 0.01f64..=1.0, th in 0.0f64..6.3) {
        let (a, b, c) = meyers_coefficients(mu, [th.cos(), th.sin()]);
        prop_assert!((a + c - 1.0 - mu * mu).abs() <= 1e-14);
        prop_assert!((a * c - b * b - mu * mu).abs() <= 1e-14);
    }

    #[test]
    fn rotation_of_the_angular_offset_barely_moves_integrals(off in 0.0f64..1.0) {
        let g = PolarGrid::new(1.0, 32, 64, Layout::Uniform).unwrap();
        let h = g.clone().with_theta_offset(off * g.dtheta());
        let f = |r: f64, t: f64| (r * t.cos() - 0.2).powi(2) * (1.0 + r * t.sin());
        let a = g.integrate_rt(f, Weight::Unit);
        let b = h.integrate_rt(f, Weight::Unit);
        prop_assert!((a - b).abs() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn weak_residual_is_linear_in_phi(alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        let l = build_lambda(&SkewCoefficients::planar(1.5)).unwrap();
        let u = construct_solution(&l, &RadialProfile::Quartic, 2, EigSelection::Largest).unwrap();
        let spec = IntegrandSpec::new(RadialProfile::Quartic, l);
        let g = PolarGrid::new(1.0, 32, 64, Layout::Uniform).unwrap();
        let p1 = make_bump([0.3, 0.1], 0.2, 4, 1.0).unwrap();
        let p2 = make_bump([-0.2, 0.4], 0.3, 4, 1.0).unwrap().with_direction(DVector::from_vec(vec![0.0, 1.0]));
        let r1 = weak_el_residual(&u, &spec, &p1, &g);
        let r2 = weak_el_residual(&u, &spec, &p2, &g);
        let ra = weak_el_residual(&u, &spec, &p1.clone().scaled(alpha), &g);
        let rb = weak_el_residual(&u, &spec, &p2.clone().scaled(beta), &g);
        let scale = 1e-12 * (1.0 + r1.abs() + r2.abs()) * (1.0 + alpha.abs() + beta.abs());
        prop_assert!((ra + rb - alpha * r1 - beta * r2).abs() <= scale);
    }

    #[test]
    fn radial_pairing_is_linear(alpha in -4.0f64..4.0, a in 0.1f64..2.0, k in 1u32..5) {
        let g = PolarGrid::new(1.0, 16, 32, Layout::Uniform).unwrap();
        let u = HomogMap::covering_planar(a, k);
        let su = Combination::scaled(&u as &dyn PolarMap, alpha);
        let (j, _) = radial_pairing(&u, k, a, &g).unwrap();
        let (js, _) = radial_pairing(&su, k, a, &g).unwrap();
        prop_assert!((js - alpha * j).abs() <= 1e-13 * (1.0 + j.abs()) * (1.0 + alpha.abs()));
    }
}
