use onehomog_core::homog::{construct_solution, jacobian};
use onehomog_core::planar::lift_k;
use onehomog_core::quadrature::{bump_battery, PolarGrid};
use onehomog_core::uniqueness::{log_det, log_det_ubar_oracle, radial_pairing};
use onehomog_core::variational::{circumference_bound, constrained_compare, energy_e, twist_family};
use onehomog_core::weakform::{battery_max, cof_form_residual, fs_identity_gap, weak_el_residual, Convergence, IntegrandSpec};
use onehomog_core::spectral::build_lambda;
use onehomog_core::{EigSelection, HomogMap, RadialProfile, SkewCoefficients};
use std::f64::consts::PI;

#[test]
fn flagship_end_to_end() {
    let l = build_lambda(&SkewCoefficients::planar(1.5)).unwrap();
    let u = construct_solution(&l, &RadialProfile::Quartic, 2, EigSelection::Largest).unwrap();
    assert!((u.t() - 1.0).abs() <= 1e-12);

    let spec = IntegrandSpec::new(RadialProfile::Quartic, l);
    let battery = bump_battery(1.0, 2, 20, 42);
    let fine = PolarGrid::default_for(1.0);
    let coarse = fine.refined(0.5).unwrap();
    let levels: Vec<f64> = [&coarse, &fine]
        .iter()
        .map(|g| battery_max(&battery, |phi| weak_el_residual(&u, &spec, phi, g)))
        .collect();
    assert!(Convergence::new(levels).passes(1e-6, 1.5));
    let diff = battery_max(&battery, |phi| weak_el_residual(&u, &spec, phi, &fine) - cof_form_residual(&u, &spec, phi, &fine));
    assert!(diff <= 1e-6);
    let fs = battery_max(&battery, |phi| fs_identity_gap(&u, phi, (0, 1), &fine));
    assert!(fs <= 1e-6);
}

#[test]
fn unit_covering_constants() {
    let g = PolarGrid::default_for(1.0);
    for k in [2u32, 3, 5] {
        let u = HomogMap::unit_jacobian_covering(k);
        assert!((jacobian(&u, 0.4, 1.1).unwrap() - 1.0).abs() <= 1e-12);
        let (j, slack) = radial_pairing(&u, k, u.a(), &g).unwrap();
        assert!((j - PI * u.a()).abs() <= 1e-8 * PI * u.a());
        assert!(slack.abs() <= 1e-8);
        let ld = log_det(&u, &g).unwrap();
        assert!((ld - log_det_ubar_oracle(u.a(), k, 1.0)).abs() <= 1e-7 * ld.abs());
    }
    let e = energy_e(&HomogMap::unit_jacobian_covering(2), 2, &g).unwrap();
    assert!((e.total - 4.0 * PI).abs() <= 1e-6 * 4.0 * PI);
}

#[test]
fn lifted_twists_respect_the_bounds() {
    let g = PolarGrid::new(1.0, 128, 256, onehomog_core::Layout::Uniform).unwrap();
    let fam = twist_family(&[0.1, 0.2, 0.3, 0.4, 0.5], 1.0, 2);
    for row in constrained_compare(&fam, &RadialProfile::Quartic, 2, &g).unwrap() {
        assert!(row.difference >= -1e-8);
    }
    for (_, phi) in &fam {
        assert!(circumference_bound(&lift_k(phi, 2), 2, &g).iter().all(|r| r.ratio >= 1.0 - 1e-8));
    }
}
