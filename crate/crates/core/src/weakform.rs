//! Weak Euler-Lagrange residuals of
//! `W(x, F) = f(|F|) + Σ λ_ij ln|x| det F^{(i,j)}` in the `Λ/R` form and the
//! `ln R` cofactor form, the duality identity linking them, hypothesis
//! probes, and the Meyers-type system.
//!
//! All pairings are computed in the orthonormal polar frame, where
//! `A·B = A,_R·B,_R + A,_τ·B,_τ` and 2×2 cofactor pairings are invariant.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::homog::{HomogMap, PolarJet};
use crate::profile::RadialProfile;
use crate::quadrature::{Field, GridSampled, Node, PolarGrid, TestFunction, Weight};
use crate::rng::CounterRng;
use crate::spectral::SkewMatrix;

/// The integrand data: `γ(F) = f(|F|)` and `Λ`.
#[derive(Debug, Clone)]
pub struct IntegrandSpec {
    pub profile: RadialProfile,
    pub lambda: SkewMatrix,
}

impl IntegrandSpec {
    pub fn new(profile: RadialProfile, lambda: SkewMatrix) -> Self {
        Self { profile, lambda }
    }

    pub fn dim(&self) -> usize {
        self.lambda.dim()
    }
}

/// `Dγ(∇u)·∇φ = (f'(|F|)/|F|)(u,_R·φ,_R + u,_τ·φ,_τ)`.
fn dgamma_pair(profile: &RadialProfile, u: &PolarJet, phi: &PolarJet) -> f64 {
    let norm = (u.d_r.norm_squared() + u.d_tau.norm_squared()).sqrt();
    profile.df_over_t(norm) * (u.d_r.dot(&phi.d_r) + u.d_tau.dot(&phi.d_tau))
}

/// `cof(∇u)^{(i,j)} · ∇φ^{(i,j)}`.
fn cof_pair(u: &PolarJet, phi: &PolarJet, i: usize, j: usize) -> f64 {
    u.d_r[i] * phi.d_tau[j] - u.d_tau[i] * phi.d_r[j] - u.d_r[j] * phi.d_tau[i] + u.d_tau[j] * phi.d_r[i]
}

fn jets(u: &dyn GridSampled, phi: &TestFunction, n: &Node) -> (PolarJet, PolarJet) {
    (u.jet_at(n), phi.jet(n.r, n.theta))
}

use crate::homog::PolarMap;

/// `∫ Dγ(∇u)·∇φ − Λu,_τ·φ / R dx`.
pub fn weak_el_residual(u: &dyn GridSampled, spec: &IntegrandSpec, phi: &TestFunction, grid: &PolarGrid) -> f64 {
    let bulk = grid.integrate(
        |n| {
            let (ju, jp) = jets(u, phi, n);
            dgamma_pair(&spec.profile, &ju, &jp)
        },
        Weight::Unit,
    );
    let skew = grid.integrate(
        |n| {
            let (ju, jp) = jets(u, phi, n);
            spec.lambda.apply(&ju.d_tau).dot(&jp.value)
        },
        Weight::InvR,
    );
    bulk - skew
}

/// `∫ Dγ(∇u)·∇φ + Σ λ_ij ln R cof(∇u)^{(i,j)}·∇φ^{(i,j)} dx`.
pub fn cof_form_residual(u: &dyn GridSampled, spec: &IntegrandSpec, phi: &TestFunction, grid: &PolarGrid) -> f64 {
    let entries = spec.lambda.upper_entries();
    let bulk = grid.integrate(
        |n| {
            let (ju, jp) = jets(u, phi, n);
            dgamma_pair(&spec.profile, &ju, &jp)
        },
        Weight::Unit,
    );
    let log = grid.integrate(
        |n| {
            let (ju, jp) = jets(u, phi, n);
            entries.iter().map(|&(i, j, l)| l * cof_pair(&ju, &jp, i, j)).sum::<f64>()
        },
        Weight::LogR,
    );
    bulk + log
}

/// Both sides of `∫ ln R DH_ij(∇u)·∇φ dx = ∫ (u_i,_τ φ_j − u_j,_τ φ_i) dx/R`.
pub fn fs_identity_sides(u: &dyn GridSampled, phi: &TestFunction, pair: (usize, usize), grid: &PolarGrid) -> (f64, f64) {
    let (i, j) = pair;
    let lhs = grid.integrate(
        |n| {
            let (ju, jp) = jets(u, phi, n);
            cof_pair(&ju, &jp, i, j)
        },
        Weight::LogR,
    );
    let rhs = grid.integrate(
        |n| {
            let (ju, jp) = jets(u, phi, n);
            ju.d_tau[i] * jp.value[j] - ju.d_tau[j] * jp.value[i]
        },
        Weight::InvR,
    );
    (lhs, rhs)
}

/// `|LHS − RHS|` of the duality identity for the 0-based pair `(i, j)`.
pub fn fs_identity_gap(u: &dyn GridSampled, phi: &TestFunction, pair: (usize, usize), grid: &PolarGrid) -> f64 {
    let (l, r) = fs_identity_sides(u, phi, pair, grid);
    (l - r).abs()
}

/// `∫ u,_τ·φ,_τ + k² u,_R·φ,_R dx` for closed-form `u`.
pub fn e_weak_residual(u: &dyn PolarMap, k: u32, phi: &TestFunction, grid: &PolarGrid) -> f64 {
    let k2 = f64::from(k * k);
    grid.integrate(
        |n| {
            let ju = u.jet(n.r, n.theta);
            let jp = phi.jet(n.r, n.theta);
            ju.d_tau.dot(&jp.d_tau) + k2 * ju.d_r.dot(&jp.d_r)
        },
        Weight::Unit,
    )
}

/// The discrete counterpart for a field: `B_h(u, φ_h)` with the same form
/// the minimizer differentiates, `φ_h` the nodal samples of `φ`.
pub fn e_weak_residual_field(u: &Field, k: u32, phi: &TestFunction) -> f64 {
    let phi_h = crate::variational::test_field(u.grid(), phi);
    crate::variational::bilinear_e(u, &phi_h, k)
}

/// `max_φ |residual(φ)|` over a battery, evaluated in parallel and gathered
/// in battery order.
pub fn battery_max(battery: &[TestFunction], residual: impl Fn(&TestFunction) -> f64 + Sync) -> f64 {
    let vals: Vec<f64> = battery.par_iter().map(|phi| residual(phi).abs()).collect();
    vals.into_iter().fold(0.0, f64::max)
}

/// `log₂(|coarse| / |fine|)`, the observed order under a 2× refinement.
pub fn refinement_slope(coarse: f64, fine: f64) -> f64 {
    (coarse.abs() / fine.abs()).log2()
}

/// Values on successive 2× refinements with a pass rule: the finest value
/// must be within `tol`, and either the last slope reaches `min_slope` or
/// the finest value sits below `floor` (quadrature roundoff, where slopes
/// carry no information).
#[derive(Debug, Clone, PartialEq)]
pub struct Convergence {
    pub values: Vec<f64>,
    pub slope: f64,
}

impl Convergence {
    pub const NOISE_FLOOR: f64 = 1e-11;

    pub fn new(values: Vec<f64>) -> Self {
        assert!(values.len() >= 2, "need at least two levels");
        let n = values.len();
        let slope = refinement_slope(values[n - 2], values[n - 1]);
        Self { values, slope }
    }

    pub fn finest(&self) -> f64 {
        *self.values.last().expect("non-empty")
    }

    pub fn passes(&self, tol: f64, min_slope: f64) -> bool {
        let fine = self.finest().abs();
        fine <= tol && (self.slope >= min_slope || fine <= Self::NOISE_FLOOR)
    }
}

/// Sample statistics for hypotheses (H1)–(H3).
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    /// `min D²W(x, F)[a⊗b, a⊗b] / |a⊗b|²`.
    pub h1_min_ratio: f64,
    /// `max |T(x,F) − T(x',F')| / (|x−x'| + |F−F'|)` over nearby pairs, with
    /// `T = |x| ∂ₓ D_F W`.
    pub h2_max_jump: f64,
    /// `min |R ∂ₓ D_F W(x, ∇ū)|` over samples with small `R`.
    pub h3_liminf: f64,
    pub samples: usize,
}

/// `D²γ(F)[Π, Π] = f''(|F|)(Π·F̂)² + (f'(|F|)/|F|)(|Π|² − (Π·F̂)²)`, with the
/// `F = 0` limit `f''(0)|Π|²`.
pub fn d2gamma(profile: &RadialProfile, f: &DMatrix<f64>, pi: &DMatrix<f64>) -> f64 {
    let norm = f.norm();
    let pi2 = pi.norm_squared();
    if norm == 0.0 {
        return profile.d2f(0.0) * pi2;
    }
    let along = pi.dot(f) / norm;
    profile.d2f(norm) * along * along + profile.df_over_t(norm) * (pi2 - along * along)
}

/// `R ∂ₓ D_F W(x, F)` as the list `(x_l / R) Σ λ_ij E_ij cof F^{(i,j)}`,
/// `l = 1, 2`, each an m×2 matrix.
fn radial_derivative_tensor(lambda: &SkewMatrix, x: [f64; 2], f: &DMatrix<f64>) -> [DMatrix<f64>; 2] {
    let r = x[0].hypot(x[1]);
    let m = f.nrows();
    let mut base = DMatrix::zeros(m, 2);
    for (i, j, l) in lambda.upper_entries() {
        // cof of rows (i, j): [[F_j2, −F_j1], [−F_i2, F_i1]]
        base[(i, 0)] += l * f[(j, 1)];
        base[(i, 1)] -= l * f[(j, 0)];
        base[(j, 0)] -= l * f[(i, 1)];
        base[(j, 1)] += l * f[(i, 0)];
    }
    [&base * (x[0] / r), &base * (x[1] / r)]
}

fn tensor_norm(t: &[DMatrix<f64>; 2]) -> f64 {
    (t[0].norm_squared() + t[1].norm_squared()).sqrt()
}

/// Samples (H1)–(H3) for `W` built from `spec`. `ubar` supplies the base
/// gradient for (H3); `radius` bounds the sampled points.
pub fn hypothesis_probe(spec: &IntegrandSpec, ubar: &HomogMap, radius: f64, samples: usize, seed: u64) -> HypothesisReport {
    let m = spec.dim();
    let mut rng = CounterRng::new(seed, "hypothesis-probe");
    let mut h1 = f64::INFINITY;
    let mut h2 = 0.0f64;
    let mut h3 = f64::INFINITY;
    let entries = spec.lambda.upper_entries();
    for _ in 0..samples {
        let rr = radius * rng.uniform(1e-6, 1.0);
        let th = rng.uniform(0.0, std::f64::consts::TAU);
        let f = DMatrix::from_fn(m, 2, |_, _| rng.normal());
        let a = DVector::from_vec(rng.unit_vector(m));
        let b = DVector::from_vec(rng.unit_vector(2));
        let pi = &a * b.transpose();
        let mut coupling = 0.0;
        for &(i, j, l) in &entries {
            let det = pi[(i, 0)] * pi[(j, 1)] - pi[(i, 1)] * pi[(j, 0)];
            coupling += 2.0 * l * rr.ln() * det;
        }
        let val = d2gamma(&spec.profile, &f, &pi) + coupling;
        h1 = h1.min(val / pi.norm_squared());

        let x = [rr * th.cos(), rr * th.sin()];
        let eps = 1e-6;
        let dx = [eps * rng.normal(), eps * rng.normal()];
        let df = DMatrix::from_fn(m, 2, |_, _| eps * rng.normal());
        let x2 = [x[0] + dx[0], x[1] + dx[1]];
        let f2 = &f + &df;
        let t1 = radial_derivative_tensor(&spec.lambda, x, &f);
        let t2 = radial_derivative_tensor(&spec.lambda, x2, &f2);
        let diff = [&t1[0] - &t2[0], &t1[1] - &t2[1]];
        let dist = dx[0].hypot(dx[1]) + df.norm();
        h2 = h2.max(tensor_norm(&diff) / dist);

        let rs = radius * 10f64.powf(rng.uniform(-6.0, -2.0));
        let ts = rng.uniform(0.0, std::f64::consts::TAU);
        let fbar = ubar.gradient_polar(rs, ts);
        let xs = [rs * ts.cos(), rs * ts.sin()];
        h3 = h3.min(tensor_norm(&radial_derivative_tensor(&spec.lambda, xs, &fbar)));
    }
    HypothesisReport {
        h1_min_ratio: h1,
        h2_max_jump: h2,
        h3_liminf: h3,
        samples,
    }
}

/// `|R ∂ₓ D_F W(x, F)|` at a single point.
pub fn h3_value(lambda: &SkewMatrix, x: [f64; 2], f: &DMatrix<f64>) -> f64 {
    tensor_norm(&radial_derivative_tensor(lambda, x, f))
}

/// Coefficients of `A(x) = e_R⊗e_R + μ² e_θ⊗e_θ` in Cartesian form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeyersCoefficients {
    pub mu: f64,
}

impl MeyersCoefficients {
    pub fn new(mu: f64) -> Self {
        assert!(mu > 0.0 && mu <= 1.0, "mu must lie in (0, 1]");
        Self { mu }
    }

    /// `(a, b, c)` at angle `θ`.
    pub fn at_angle(&self, theta: f64) -> (f64, f64, f64) {
        let (s, c) = theta.sin_cos();
        let mu2 = self.mu * self.mu;
        (c * c + mu2 * s * s, (1.0 - mu2) * s * c, s * s + mu2 * c * c)
    }
}

/// `(a, b, c)` at the Cartesian point `x`.
pub fn meyers_coefficients(mu: f64, x: [f64; 2]) -> (f64, f64, f64) {
    MeyersCoefficients::new(mu).at_angle(x[1].atan2(x[0]))
}

/// `∫ ∇u A·∇φ dx` for `u = R^μ e_R(θ)` and `A = diag(1, μ_A²)` in the polar
/// frame; `μ_A = μ` is the matched system.
pub fn meyers_residual(mu: f64, mu_a: f64, phi: &TestFunction, grid: &PolarGrid) -> f64 {
    let mu_a2 = mu_a * mu_a;
    grid.integrate(
        |n| {
            let jp = phi.jet(n.r, n.theta);
            let (s, c) = n.theta.sin_cos();
            let p = n.r.powf(mu - 1.0);
            // u,_R = μ R^{μ−1} e_R, u,_τ = R^{μ−1} e_θ
            let ur = mu * p * (c * jp.d_r[0] + s * jp.d_r[1]);
            let ut = p * (-s * jp.d_tau[0] + c * jp.d_tau[1]);
            ur + mu_a2 * ut
        },
        Weight::Unit,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homog::{construct_solution, ConstantMap};
    use crate::quadrature::{bump_battery, make_bump, Layout};
    use crate::spectral::{build_lambda, EigSelection, SkewCoefficients};

    fn flagship() -> (IntegrandSpec, HomogMap) {
        let l = build_lambda(&SkewCoefficients::planar(1.5)).unwrap();
        let u = construct_solution(&l, &RadialProfile::Quartic, 2, EigSelection::Largest).unwrap();
        (IntegrandSpec::new(RadialProfile::Quartic, l), u)
    }

    fn grid(n: usize) -> PolarGrid {
        PolarGrid::new(1.0, n, 2 * n, Layout::Uniform).unwrap()
    }

    #[test]
    fn flagship_is_weakly_stationary() {
        let (spec, u) = flagship();
        let g = grid(128);
        for phi in bump_battery(1.0, 2, 6, 42) {
            let w = weak_el_residual(&u, &spec, &phi, &g);
            let c = cof_form_residual(&u, &spec, &phi, &g);
            assert!(w.abs() < 1e-6, "{w}");
            assert!((w - c).abs() < 1e-6, "{w} {c}");
        }
    }

    #[test]
    fn perturbed_map_is_not_stationary() {
        let (spec, u) = flagship();
        let g = grid(96);
        let battery = bump_battery(1.0, 2, 20, 42);
        let pert = battery[3].clone();
        let scaled = crate::homog::Combination::new(vec![(1.0, &u as &dyn PolarMap), (0.1, &pert)]);
        let worst = battery_max(&battery, |phi| weak_el_residual(&scaled, &spec, phi, &g));
        assert!(worst >= 1e-3, "{worst}");
    }

    #[test]
    fn fs_identity_holds_for_flagship() {
        let (_, u) = flagship();
        let g = grid(128);
        for phi in bump_battery(1.0, 2, 4, 9) {
            let gap = fs_identity_gap(&u, &phi, (0, 1), &g);
            assert!(gap < 1e-6, "{gap}");
        }
    }

    #[test]
    fn fs_identity_trivial_for_constant_map() {
        let c = ConstantMap(DVector::from_vec(vec![0.3, -1.0]));
        let phi = make_bump([0.3, 0.2], 0.25, 4, 1.0).unwrap();
        let (l, r) = fs_identity_sides(&c, &phi, (0, 1), &grid(32));
        assert_eq!((l, r), (0.0, 0.0));
    }

    #[test]
    fn residuals_are_linear_in_phi() {
        let (spec, u) = flagship();
        let g = grid(48);
        let a = make_bump([0.3, 0.1], 0.2, 4, 1.0).unwrap();
        let ra = weak_el_residual(&u, &spec, &a, &g);
        let r10 = weak_el_residual(&u, &spec, &a.clone().scaled(10.0), &g);
        assert!((r10 - 10.0 * ra).abs() <= 1e-12 * (1.0 + ra.abs()));
        let b = make_bump([-0.4, 0.3], 0.3, 4, 1.0).unwrap();
        let rb = weak_el_residual(&u, &spec, &b, &g);
        let (la, ra_) = fs_identity_sides(&u, &a, (0, 1), &g);
        let (la10, ra10) = fs_identity_sides(&u, &a.clone().scaled(10.0), (0, 1), &g);
        assert!((la10 - 10.0 * la).abs() <= 1e-12 * (1.0 + la.abs()));
        assert!((ra10 - 10.0 * ra_).abs() <= 1e-12 * (1.0 + ra_.abs()));
        assert!(rb.is_finite());
        let (l1, r1) = fs_identity_sides(&u, &a, (0, 1), &g);
        let lambda10 = spec.lambda.scaled(10.0);
        let spec10 = IntegrandSpec::new(spec.profile.clone(), lambda10);
        let s1 = cof_form_residual(&u, &spec, &a, &g) - weak_el_residual(&u, &spec, &a, &g);
        let s10 = cof_form_residual(&u, &spec10, &a, &g) - weak_el_residual(&u, &spec10, &a, &g);
        assert!((s10 - 10.0 * s1).abs() <= 1e-10 * (1.0 + s1.abs()));
        assert!(l1.is_finite() && r1.is_finite());
    }

    #[test]
    fn identity_with_quadratic_profile_is_stationary() {
        let l = build_lambda(&SkewCoefficients::planar(0.0)).unwrap();
        let spec = IntegrandSpec::new(RadialProfile::quadratic(1.0).unwrap(), l);
        let id = HomogMap::covering_planar(1.0, 1);
        let g = PolarGrid::default_for(1.0);
        for phi in bump_battery(1.0, 2, 5, 3) {
            assert!(cof_form_residual(&id, &spec, &phi, &g).abs() <= 1e-10);
        }
    }

    #[test]
    fn e_residual_of_unit_covering_vanishes() {
        let u = HomogMap::unit_jacobian_covering(2);
        let g = grid(128);
        for phi in bump_battery(1.0, 2, 4, 5) {
            assert!(e_weak_residual(&u, 2, &phi, &g).abs() < 1e-6);
            assert_eq!(e_weak_residual(&ConstantMap(DVector::zeros(2)), 2, &phi, &g), 0.0);
        }
    }

    #[test]
    fn hypothesis_probe_quadratic() {
        let l = build_lambda(&SkewCoefficients::planar(1.5)).unwrap();
        let spec = IntegrandSpec::new(RadialProfile::quadratic(1.0).unwrap(), l.clone());
        let ubar = HomogMap::unit_jacobian_covering(2);
        let rep = hypothesis_probe(&spec, &ubar, 1.0, 2000, 42);
        assert!((rep.h1_min_ratio - 2.0).abs() < 1e-9, "{}", rep.h1_min_ratio);
        let expect = 1.5 * (0.5f64 * 5.0).sqrt();
        assert!((rep.h3_liminf - expect).abs() < 1e-9 * expect, "{}", rep.h3_liminf);
        assert!(rep.h2_max_jump.is_finite());
        assert_eq!(h3_value(&l, [0.1, 0.0], &DMatrix::zeros(2, 2)), 0.0);
    }

    #[test]
    fn d2gamma_matches_finite_differences() {
        let p = RadialProfile::Quartic;
        let f = DMatrix::from_vec(2, 2, vec![0.3, -0.7, 1.1, 0.2]);
        let pi = DMatrix::from_vec(2, 2, vec![0.5, 0.1, -0.4, 0.9]);
        let g = |t: f64| p.f((&f + &pi * t).norm());
        let h = 1e-4;
        let fd = (g(h) - 2.0 * g(0.0) + g(-h)) / (h * h);
        assert!((fd - d2gamma(&p, &f, &pi)).abs() < 1e-6);
    }

    #[test]
    fn meyers_identities() {
        let (a, b, c) = meyers_coefficients(0.5, [1.0, 0.0]);
        assert_eq!((a, b, c), (1.0, 0.0, 0.25));
        let (a, b, c) = MeyersCoefficients::new(0.5).at_angle(std::f64::consts::FRAC_PI_2);
        assert!((a - 0.25).abs() < 1e-15 && b.abs() < 1e-15 && (c - 1.0).abs() < 1e-15);
        for th in [0.1, 1.0, 2.5, 4.0] {
            let (a, b, c) = MeyersCoefficients::new(0.3).at_angle(th);
            assert!((a + c - 1.09).abs() < 1e-14);
            assert!((a * c - b * b - 0.09).abs() < 1e-14);
        }
    }

    #[test]
    fn meyers_solution_and_control() {
        let g = PolarGrid::default_for(1.0);
        let battery = bump_battery(1.0, 2, 6, 42);
        let matched = battery_max(&battery, |phi| meyers_residual(0.5, 0.5, phi, &g));
        let mismatched = battery_max(&battery, |phi| meyers_residual(0.5, 0.6, phi, &g));
        assert!(matched < 1e-5, "{matched}");
        assert!(mismatched > 10.0 * matched);
        let identity = battery_max(&battery, |phi| meyers_residual(1.0, 1.0, phi, &g));
        assert!(identity <= 1e-10, "{identity}");
    }

    #[test]
    fn convergence_rule() {
        assert!(Convergence::new(vec![4e-7, 1e-7]).passes(1e-6, 1.5));
        assert!(!Convergence::new(vec![2e-7, 1e-7]).passes(1e-6, 1.5));
        assert!(Convergence::new(vec![1e-13, 2e-13]).passes(1e-6, 1.5));
        assert!(!Convergence::new(vec![4e-5, 1e-5]).passes(1e-6, 1.5));
    }
}
