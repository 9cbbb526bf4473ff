//! Energies `G(u) = ∫ γ(∇u) + λ ln R det ∇u dx` and
//! `E(u) = ∫ k²|u,_R|² + |u,_τ|² dx`, the discrete `E` and its minimizer,
//! and the lifted-competitor comparisons.
//!
//! The discrete energy of a [`Field`] is a sum over faces:
//!
//! * radial faces between rings `i` and `i+1` (the outer ring included),
//!   `k² |Δu/ΔR|²` weighted by `R̄ ΔR Δθ`;
//! * angular faces on node rings, `|Δu/(R_i Δθ)|²` weighted by the cell
//!   area `∫_cell R dR Δθ`.
//!
//! `E_h(u) = uᵀAu` with `A` symmetric, and `B_h(u, v) = uᵀAv`.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::homog::{HomogMap, PolarMap};
use crate::linalg::pairwise_sum;
use crate::planar::{lift_k, PlanarMapExpr};
use crate::profile::RadialProfile;
use crate::quadrature::{Boundary, Field, GridSampled, PolarGrid, TestFunction, Weight};
use crate::rng::CounterRng;

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyBreakdown {
    pub total: f64,
    pub bulk: f64,
    pub coupling: f64,
    /// Per-ring contributions to `total`, innermost first.
    pub rings: Vec<f64>,
}

fn det_polar(j: &crate::homog::PolarJet) -> f64 {
    j.d_r[0] * j.d_tau[1] - j.d_r[1] * j.d_tau[0]
}

fn check_planar(dim: usize) -> Result<()> {
    if dim == 2 {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: 2,
            found: dim,
        })
    }
}

/// `G(u)` split into `∫ f(|∇u|)` and `λ ∫ ln R det ∇u`.
pub fn energy_g(u: &dyn GridSampled, profile: &RadialProfile, lambda: f64, grid: &PolarGrid) -> Result<EnergyBreakdown> {
    check_planar(u.dim())?;
    let bulk_rings = grid.ring_sums(
        |n| {
            let j = u.jet_at(n);
            profile.f((j.d_r.norm_squared() + j.d_tau.norm_squared()).sqrt())
        },
        Weight::Unit,
    );
    let coupling_rings: Vec<f64> = if lambda == 0.0 {
        vec![0.0; grid.n_r()]
    } else {
        grid.ring_sums(|n| lambda * det_polar(&u.jet_at(n)), Weight::LogR)
    };
    let bulk = pairwise_sum(&bulk_rings);
    let coupling = pairwise_sum(&coupling_rings);
    let rings = bulk_rings.iter().zip(&coupling_rings).map(|(a, b)| a + b).collect();
    Ok(EnergyBreakdown {
        total: bulk + coupling,
        bulk,
        coupling,
        rings,
    })
}

/// `E(u)` by quadrature of closed-form or stencil partials.
pub fn energy_e(u: &dyn GridSampled, k: u32, grid: &PolarGrid) -> Result<EnergyBreakdown> {
    check_planar(u.dim())?;
    let k2 = f64::from(k * k);
    let rings = grid.ring_sums(
        |n| {
            let j = u.jet_at(n);
            k2 * j.d_r.norm_squared() + j.d_tau.norm_squared()
        },
        Weight::Unit,
    );
    let total = pairwise_sum(&rings);
    Ok(EnergyBreakdown {
        total,
        bulk: total,
        coupling: 0.0,
        rings,
    })
}

/// Face weights: `radial[i]` couples rings `i` and `i+1`, `angular[i]`
/// couples neighbors on ring `i`.
struct FaceWeights {
    radial: Vec<f64>,
    angular: Vec<f64>,
}

fn face_weights(grid: &PolarGrid, k: u32) -> FaceWeights {
    let k2 = f64::from(k * k);
    let dth = grid.dtheta();
    let n_r = grid.n_r();
    let ring = |i: usize| if i == n_r { grid.radius() } else { grid.nodes()[i] };
    let radial = (0..n_r)
        .map(|i| {
            let (a, b) = (ring(i), ring(i + 1));
            k2 * 0.5 * (a + b) * dth / (b - a)
        })
        .collect();
    let unit = grid.ring_weights(Weight::Unit);
    let angular = (0..n_r)
        .map(|i| {
            let h = grid.nodes()[i] * dth;
            unit[i] / (h * h)
        })
        .collect();
    FaceWeights { radial, angular }
}

/// `A v` over all nodes (outer ring included), as a flat vector laid out
/// like [`Field::values`].
fn apply_a(values: &[f64], grid: &PolarGrid, m: usize, fw: &FaceWeights) -> Vec<f64> {
    let n_t = grid.n_theta();
    let n_r = grid.n_r();
    let ring_len = n_t * m;
    let mut out = vec![0.0; values.len()];
    out.par_chunks_mut(ring_len).enumerate().for_each(|(i, chunk)| {
        let at = |ii: usize, j: usize, c: usize| values[(ii * n_t + j) * m + c];
        for j in 0..n_t {
            let jp = (j + 1) % n_t;
            let jm = (j + n_t - 1) % n_t;
            for c in 0..m {
                let u = at(i, j, c);
                let mut acc = 0.0;
                if i > 0 {
                    acc += fw.radial[i - 1] * (u - at(i - 1, j, c));
                }
                if i < n_r {
                    acc += fw.radial[i] * (u - at(i + 1, j, c));
                    acc += fw.angular[i] * (2.0 * u - at(i, jp, c) - at(i, jm, c));
                }
                chunk[j * m + c] = acc;
            }
        }
    });
    out
}

fn diag_a(grid: &PolarGrid, m: usize, fw: &FaceWeights) -> Vec<f64> {
    let n_t = grid.n_theta();
    let n_r = grid.n_r();
    let mut out = Vec::with_capacity((n_r + 1) * n_t * m);
    for i in 0..=n_r {
        let mut d = 0.0;
        if i > 0 {
            d += fw.radial[i - 1];
        }
        if i < n_r {
            d += fw.radial[i] + 2.0 * fw.angular[i];
        }
        out.extend(std::iter::repeat_n(d, n_t * m));
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let prods: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    pairwise_sum(&prods)
}

fn check_same(u: &Field, v: &Field) {
    assert!(
        u.grid() == v.grid() && u.dim() == v.dim(),
        "fields live on different grids"
    );
}

/// `B_h(u, v) = uᵀ A v`.
pub fn bilinear_e(u: &Field, v: &Field, k: u32) -> f64 {
    check_same(u, v);
    let fw = face_weights(u.grid(), k);
    dot(u.values(), &apply_a(v.values(), v.grid(), v.dim(), &fw))
}

/// `E_h(u) = B_h(u, u)`.
pub fn energy_e_discrete(u: &Field, k: u32) -> f64 {
    bilinear_e(u, u, k)
}

/// Nodal samples of a bump with zero outer ring.
pub fn test_field(grid: &PolarGrid, phi: &TestFunction) -> Field {
    let mut f = Field::from_map(grid, phi, Boundary::Dirichlet);
    let zero = DVector::zeros(PolarMap::dim(phi));
    for j in 0..grid.n_theta() {
        f.set(grid.n_r(), j, &zero);
    }
    f
}

/// The discrete `ū = k^{-1/2} R e_R(kθ)` with Dirichlet trace.
pub fn ubar_field(grid: &PolarGrid, k: u32) -> Field {
    Field::from_map(grid, &HomogMap::unit_jacobian_covering(k), Boundary::Dirichlet)
}

/// Interior noise `amplitude · U(−1, 1)` per entry, zero on the outer ring.
pub fn random_zero_boundary(grid: &PolarGrid, m: usize, amplitude: f64, seed: u64, stream: &str) -> Field {
    let mut rng = CounterRng::new(seed, stream);
    let mut f = Field::zeros(grid, m, Boundary::Dirichlet);
    let interior = grid.n_r() * grid.n_theta() * m;
    for v in &mut f.values_mut()[..interior] {
        *v = amplitude * rng.uniform(-1.0, 1.0);
    }
    f
}

/// `a + s b`, keeping `a`'s boundary tag.
pub fn add_scaled(a: &Field, b: &Field, s: f64) -> Field {
    check_same(a, b);
    let mut out = a.clone();
    for (x, y) in out.values_mut().iter_mut().zip(b.values()) {
        *x += s * y;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeOutcome {
    pub field: Field,
    pub iterations: usize,
    pub initial_gradient_norm: f64,
    /// `‖∇E_h‖` on free nodes at exit.
    pub final_gradient_norm: f64,
    /// Discrete `L²` distance to the analytic `ū`.
    pub distance_to_ubar: f64,
    /// `E_h` after each iteration, starting with the initial value.
    pub energy_history: Vec<f64>,
}

impl MinimizeOutcome {
    pub fn relative_gradient(&self) -> f64 {
        if self.initial_gradient_norm == 0.0 {
            0.0
        } else {
            self.final_gradient_norm / self.initial_gradient_norm
        }
    }
}

/// Minimizes `E_h` over the free nodes of `init` (Dirichlet data fixed) by
/// Jacobi-preconditioned conjugate gradients, stopping once
/// `‖∇E_h‖ ≤ rel_tol · ‖∇E_h(init)‖`.
pub fn minimize_e(init: &Field, k: u32, rel_tol: f64) -> Result<MinimizeOutcome> {
    check_planar(init.dim())?;
    if init.boundary() != Boundary::Dirichlet {
        return Err(Error::InvalidArgument("minimize_e needs Dirichlet data".into()));
    }
    let grid = init.grid().clone();
    let m = init.dim();
    let fw = face_weights(&grid, k);
    let n_free = grid.n_r() * grid.n_theta() * m;
    let diag = diag_a(&grid, m, &fw);

    let mut x = init.values().to_vec();
    let mask = |v: &mut Vec<f64>| v[n_free..].iter_mut().for_each(|e| *e = 0.0);
    let ax = apply_a(&x, &grid, m, &fw);
    let mut energy = dot(&x, &ax);
    let mut r: Vec<f64> = ax.iter().map(|v| -v).collect();
    mask(&mut r);
    let r0 = dot(&r, &r).sqrt();
    let mut history = vec![energy];
    let precond = |r: &[f64]| -> Vec<f64> { r.iter().zip(&diag).map(|(a, d)| a / d).collect() };
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut rnorm = r0;
    let cap = 10 * n_free;
    let mut it = 0;
    while rnorm > rel_tol * r0 && r0 > 0.0 {
        if it >= cap {
            return Err(Error::CgNonConvergence {
                iterations: it,
                relative_residual: rnorm / r0,
            });
        }
        let mut ap = apply_a(&p, &grid, m, &fw);
        mask(&mut ap);
        let pap = dot(&p, &ap);
        let alpha = rz / pap;
        let pr = dot(&p, &r);
        for ((xi, ri), (pi, api)) in x.iter_mut().zip(r.iter_mut()).zip(p.iter().zip(&ap)) {
            *xi += alpha * pi;
            *ri -= alpha * api;
        }
        energy += -2.0 * alpha * pr + alpha * alpha * pap;
        history.push(energy);
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
        rnorm = dot(&r, &r).sqrt();
        it += 1;
    }
    let mut field = init.clone();
    field.values_mut().copy_from_slice(&x);
    let mut g = apply_a(&x, &grid, m, &fw);
    mask(&mut g);
    let final_norm = 2.0 * dot(&g, &g).sqrt();
    let distance = field.l2_distance(&ubar_field(&grid, k));
    Ok(MinimizeOutcome {
        field,
        iterations: it,
        initial_gradient_norm: 2.0 * r0,
        final_gradient_norm: final_norm,
        distance_to_ubar: distance,
        energy_history: history,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircumferenceRow {
    pub radius: f64,
    /// `∮_{C_R} |φ,_τ| dℋ¹`.
    pub length: f64,
    /// `2π k^{1/2} R`.
    pub bound: f64,
    pub ratio: f64,
}

/// Per-ring `∮ |φ,_τ|` against `2π k^{1/2} R`.
pub fn circumference_bound(phi_k: &dyn PolarMap, k: u32, grid: &PolarGrid) -> Vec<CircumferenceRow> {
    let sk = f64::from(k).sqrt();
    let dth = grid.dtheta();
    (0..grid.n_r())
        .into_par_iter()
        .map(|i| {
            let r = grid.nodes()[i];
            let vals: Vec<f64> = (0..grid.n_theta()).map(|j| phi_k.jet(r, grid.theta(j)).d_tau.norm()).collect();
            let length = pairwise_sum(&vals) * r * dth;
            let bound = std::f64::consts::TAU * sk * r;
            CircumferenceRow {
                radius: r,
                length,
                bound,
                ratio: length / bound,
            }
        })
        .collect()
}

/// The twist family `φ = R e_R(θ + s₀(ρ − R)R)` on `B_ρ`, `ρ = r k^{-1/2}`,
/// so that each lift has the trace of `ū` on `∂B_r`.
pub fn twist_family(s0s: &[f64], r: f64, k: u32) -> Vec<(f64, PlanarMapExpr)> {
    let rho = r / f64::from(k).sqrt();
    s0s.iter()
        .map(|&s| {
            let phi = if s == 0.0 {
                PlanarMapExpr::Identity
            } else {
                PlanarMapExpr::twist(s, rho)
            };
            (s, phi)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub parameter: f64,
    pub g_lifted: f64,
    pub g_ubar: f64,
    pub difference: f64,
}

/// `G(φ^(k)) − G(ū)` with `G(u) = ∫ γ(∇u) dx` for each family member.
pub fn constrained_compare(
    family: &[(f64, PlanarMapExpr)],
    profile: &RadialProfile,
    k: u32,
    grid: &PolarGrid,
) -> Result<Vec<CompareRow>> {
    let ubar = HomogMap::unit_jacobian_covering(k);
    let g_ubar = energy_g(&ubar, profile, 0.0, grid)?.total;
    family
        .iter()
        .map(|(s, phi)| {
            let lifted = lift_k(phi, k);
            let g = energy_g(&lifted, profile, 0.0, grid)?.total;
            Ok(CompareRow {
                parameter: *s,
                g_lifted: g,
                g_ubar,
                difference: g - g_ubar,
            })
        })
        .collect()
}

/// `h(s) = (s² + s^{-2})^{1/2}`.
pub fn h_norm(s: f64) -> f64 {
    (s * s + 1.0 / (s * s)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homog::{ConstantMap, Combination};
    use crate::quadrature::{bump_battery, Layout};
    use std::f64::consts::PI;

    fn grid(n: usize) -> PolarGrid {
        PolarGrid::new(1.0, n, 2 * n, Layout::Uniform).unwrap()
    }

    #[test]
    fn g_energy_closed_forms() {
        let g = PolarGrid::default_for(1.0);
        let half_sq = RadialProfile::quadratic(0.5).unwrap();
        let id = HomogMap::covering_planar(1.0, 1);
        let e = energy_g(&id, &half_sq, 1.5, &g).unwrap();
        assert!((e.bulk - PI).abs() < 1e-12);
        assert!((e.coupling + 1.5 * PI / 2.0).abs() < 1e-8);
        assert!((e.total - e.bulk - e.coupling).abs() <= 1e-12 * e.total.abs());
        assert!((pairwise_sum(&e.rings) - e.total).abs() < 1e-12);

        let k = 3;
        let u = HomogMap::unit_jacobian_covering(k);
        let r = 2.0;
        let g2 = PolarGrid::default_for(r);
        let e = energy_g(&u, &half_sq, 1.5, &g2).unwrap();
        let c2 = (1.0 + 9.0) / 3.0;
        assert!((e.bulk - PI * r * r * c2 / 2.0).abs() < 1e-10);
        let log_int = PI * (r * r * r.ln() - r * r / 2.0);
        assert!((e.coupling - 1.5 * log_int).abs() < 1e-7 * log_int.abs());

        let z = energy_g(&ConstantMap(DVector::zeros(2)), &half_sq, 1.5, &g).unwrap();
        assert_eq!(z.total, 0.0);
    }

    #[test]
    fn e_energy_of_ubar() {
        let g = PolarGrid::default_for(1.0);
        let e = energy_e(&HomogMap::unit_jacobian_covering(2), 2, &g).unwrap();
        assert!((e.total - 4.0 * PI).abs() <= 1e-6 * 4.0 * PI);
        assert_eq!(energy_e(&ConstantMap(DVector::zeros(2)), 2, &g).unwrap().total, 0.0);
    }

    #[test]
    fn analytic_orthogonal_split() {
        let g = grid(128);
        let ubar = HomogMap::unit_jacobian_covering(2);
        let bumps = bump_battery(1.0, 2, 3, 11);
        let v = Combination::new(vec![(0.4, &bumps[0] as &dyn PolarMap), (-0.7, &bumps[1]), (0.2, &bumps[2])]);
        let sum = Combination::new(vec![(1.0, &ubar as &dyn PolarMap), (1.0, &v)]);
        let e_sum = energy_e(&sum, 2, &g).unwrap().total;
        let e_u = energy_e(&ubar, 2, &g).unwrap().total;
        let e_v = energy_e(&v, 2, &g).unwrap().total;
        assert!((e_sum - e_u - e_v).abs() <= 1e-6 * (1.0 + e_v));
    }

    #[test]
    fn discrete_form_is_symmetric_and_adjoint() {
        let g = PolarGrid::new(1.0, 12, 24, Layout::Geometric { q: 0.9 }).unwrap();
        let u = random_zero_boundary(&g, 2, 1.0, 1, "a");
        let v = add_scaled(&random_zero_boundary(&g, 2, 1.0, 2, "b"), &ubar_field(&g, 2), 1.0);
        let a = bilinear_e(&u, &v, 2);
        let b = bilinear_e(&v, &u, 2);
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        assert!(energy_e_discrete(&u, 2) > 0.0);
        let phi = bump_battery(1.0, 2, 1, 4).remove(0);
        let lhs = crate::weakform::e_weak_residual_field(&v, 2, &phi);
        let rhs = bilinear_e(&test_field(&g, &phi), &v, 2);
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn discrete_energy_approximates_continuous() {
        let e32 = energy_e_discrete(&ubar_field(&grid(32), 2), 2);
        let e64 = energy_e_discrete(&ubar_field(&grid(64), 2), 2);
        let exact = 4.0 * PI;
        assert!((e64 - exact).abs() < (e32 - exact).abs());
        assert!((e64 - exact).abs() < 1e-2 * exact);
    }

    #[test]
    fn cg_converges_from_noise_and_is_unique() {
        let g = grid(24);
        let base = ubar_field(&g, 2);
        let mut finals = Vec::new();
        for s in 0..2 {
            let init = add_scaled(&base, &random_zero_boundary(&g, 2, 0.5, 42 + s, "init"), 1.0);
            let out = minimize_e(&init, 2, 1e-10).unwrap();
            assert!(out.relative_gradient() <= 1e-10);
            assert!(out.energy_history.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs()));
            assert!(out.energy_history.last().unwrap() < &out.energy_history[0]);
            assert_eq!(out.field.trace_defect(&HomogMap::unit_jacobian_covering(2)), 0.0);
            finals.push(out.field);
        }
        assert!(finals[0].l2_distance(&finals[1]) <= 1e-8);
    }

    #[test]
    fn cg_distance_to_ubar_shrinks_under_refinement() {
        let d: Vec<f64> = [16, 32]
            .iter()
            .map(|&n| minimize_e(&ubar_field(&grid(n), 2), 2, 1e-10).unwrap().distance_to_ubar)
            .collect();
        assert!(d[1] < d[0], "{d:?}");
    }

    #[test]
    fn cg_rejects_free_boundary() {
        let g = grid(16);
        let f = Field::zeros(&g, 2, Boundary::Free);
        assert!(matches!(minimize_e(&f, 2, 1e-10), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn circumference_equality_and_bound() {
        let g = grid(64);
        for row in circumference_bound(&HomogMap::unit_jacobian_covering(3), 3, &g) {
            assert!((row.ratio - 1.0).abs() < 1e-12);
        }
        for row in circumference_bound(&PlanarMapExpr::Identity, 1, &g) {
            assert!((row.length - 2.0 * PI * row.radius).abs() < 1e-12);
        }
        for (_, phi) in twist_family(&[0.1, 0.3, 0.5], 1.0, 2) {
            for row in circumference_bound(&lift_k(&phi, 2), 2, &g) {
                assert!(row.ratio >= 1.0 - 1e-8);
            }
        }
    }

    #[test]
    fn twist_competitors_cost_more() {
        let g = grid(128);
        let fam = twist_family(&[0.0, 0.1, 0.2, 0.3, 0.4, 0.5], 1.0, 2);
        let rows = constrained_compare(&fam, &RadialProfile::Quartic, 2, &g).unwrap();
        assert!(rows[0].difference.abs() < 1e-12);
        for w in rows.windows(2) {
            assert!(w[1].difference > w[0].difference);
        }
        assert!(rows[5].difference > 0.0);
    }

    #[test]
    fn gradient_norm_is_h_of_root_k() {
        for k in [2u32, 3, 5] {
            let u = HomogMap::unit_jacobian_covering(k);
            for th in [0.0, 1.0, 2.0] {
                let n = u.gradient_polar(0.5, th).norm();
                assert!((n - h_norm(f64::from(k).sqrt())).abs() < 1e-12);
            }
        }
    }
}
