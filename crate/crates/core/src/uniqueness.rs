//! Integrals behind the uniqueness criterion for planar maps: the radial
//! pairing `J(u) = ∫∫ u·e_R(kθ) dR dθ`, `∫ ln R det ∇u dx`, the cofactor
//! pairing with `ū = aR e_R(kθ)`, and the determinant expansion.
//!
//! Right-hand sides are reported twice: as printed, and as re-derived by
//! integrating the `ln R` weight exactly. For any `u`,
//!
//! `∫ ln R cof ∇u · ∇ū dx = ak r ln r ∮ u(r,θ)·e_R(kθ) dθ − ak J(u)`,
//!
//! which reduces to the printed `2πk a² r² ln r − ak J(u)` when `u = ū` on
//! `∂B_r`; and `∫ ln R det ∇ū dx = a²k π(r² ln r − r²/2)`.

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::homog::{HomogMap, PolarMap};
use crate::linalg::{cof2, e_r, frob_dot2};
use crate::quadrature::{GridSampled, PolarGrid, Weight};
use crate::rng::CounterRng;

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

/// `(J(u), πar² − J(u))` with measure `dR dθ`.
pub fn radial_pairing(u: &dyn GridSampled, k: u32, a: f64, grid: &PolarGrid) -> Result<(f64, f64)> {
    check_planar(u.dim())?;
    let kf = f64::from(k);
    let j = grid.integrate_polar(|n| {
        let v = u.jet_at(n).value;
        let e = e_r(kf * n.theta);
        v[0] * e.x + v[1] * e.y
    });
    let r = grid.radius();
    Ok((j, std::f64::consts::PI * a * r * r - j))
}

/// `∫ ln R det ∇u dx`.
pub fn log_det(u: &dyn GridSampled, grid: &PolarGrid) -> Result<f64> {
    check_planar(u.dim())?;
    Ok(grid.integrate(
        |n| {
            let j = u.jet_at(n);
            j.d_r[0] * j.d_tau[1] - j.d_r[1] * j.d_tau[0]
        },
        Weight::LogR,
    ))
}

/// `π(r² ln r − r²/2) = ∫_{B_r} ln R dx`.
pub fn log_integral(r: f64) -> f64 {
    std::f64::consts::PI * (r * r * r.ln() - 0.5 * r * r)
}

/// `∫ ln R det ∇ū dx` as printed: `πka²(2r² ln r − r²)`.
pub fn log_det_ubar_printed(a: f64, k: u32, r: f64) -> f64 {
    std::f64::consts::PI * f64::from(k) * a * a * (2.0 * r * r * r.ln() - r * r)
}

/// `∫ ln R det ∇ū dx` from `det ∇ū = a²k`: `a²k π(r² ln r − r²/2)`.
pub fn log_det_ubar_oracle(a: f64, k: u32, r: f64) -> f64 {
    a * a * f64::from(k) * log_integral(r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CofPairing {
    /// `∫ ln R cof ∇u · ∇ū dx` by quadrature.
    pub value: f64,
    pub j: f64,
    /// `ak r ln r ∮ u(r,θ)·e_R(kθ) dθ`, the boundary term.
    pub boundary_term: f64,
    /// Printed right side `2πk a² r² ln r − ak J(u)`.
    pub paper_rhs: f64,
    /// `boundary_term − ak J(u)`.
    pub oracle_rhs: f64,
    pub gap_vs_paper: f64,
    pub gap_vs_oracle: f64,
}

/// `∫ ln R cof ∇u · ∇ū dx` against both right-hand sides. `u` must be a
/// closed-form map so its trace on `∂B_r` can be evaluated.
pub fn cof_pairing(u: &dyn PolarMap, ubar: &HomogMap, grid: &PolarGrid) -> Result<CofPairing> {
    check_planar(u.dim())?;
    check_planar(ubar.dim())?;
    let value = grid.integrate(
        |n| {
            let ju = u.jet(n.r, n.theta);
            let jb = ubar.jet(n.r, n.theta);
            // cof pairing in the polar frame
            ju.d_r[0] * jb.d_tau[1] - ju.d_tau[0] * jb.d_r[1] - ju.d_r[1] * jb.d_tau[0] + ju.d_tau[1] * jb.d_r[0]
        },
        Weight::LogR,
    );
    let k = ubar.k();
    let kf = f64::from(k);
    let a = ubar.a();
    let r = grid.radius();
    let (j, _) = radial_pairing(&u, k, a, grid)?;
    let trace: Vec<f64> = (0..grid.n_theta())
        .map(|jj| {
            let th = grid.theta(jj);
            let v = u.jet(r, th).value;
            let e = e_r(kf * th);
            v[0] * e.x + v[1] * e.y
        })
        .collect();
    let boundary_term = a * kf * r * r.ln() * crate::linalg::pairwise_sum(&trace) * grid.dtheta();
    let paper_rhs = 2.0 * std::f64::consts::PI * kf * a * a * r * r * r.ln() - a * kf * j;
    let oracle_rhs = boundary_term - a * kf * j;
    Ok(CofPairing {
        value,
        j,
        boundary_term,
        paper_rhs,
        oracle_rhs,
        gap_vs_paper: (value - paper_rhs).abs(),
        gap_vs_oracle: (value - oracle_rhs).abs(),
    })
}

/// `max |det(A−B) − det A − det B + cof A·B|` over the pairs, relative to
/// `max(1, |A|²+|B|²)`.
pub fn det_expansion_check(pairs: &[(Matrix2<f64>, Matrix2<f64>)]) -> f64 {
    pairs
        .iter()
        .map(|(a, b)| {
            let lhs = (a - b).determinant();
            let rhs = a.determinant() + b.determinant() - frob_dot2(&cof2(a), b);
            let scale = (a.norm_squared() + b.norm_squared()).max(1.0);
            (lhs - rhs).abs() / scale
        })
        .fold(0.0, f64::max)
}

/// `n` pairs of matrices with standard normal entries.
pub fn random_matrix_pairs(n: usize, seed: u64) -> Vec<(Matrix2<f64>, Matrix2<f64>)> {
    let mut rng = CounterRng::new(seed, "det-expansion");
    (0..n)
        .map(|_| {
            let mut m = || Matrix2::new(rng.normal(), rng.normal(), rng.normal(), rng.normal());
            (m(), m())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpeGap {
    /// `∫ ln R det ∇(u − ū) dx`.
    pub lhs: f64,
    /// `ak(J(u) − πar²)`.
    pub rhs: f64,
    pub gap: f64,
}

/// Both sides of `∫ ln R det ∇w dx = ak(J(u) − πar²)` for `w = u − ū`.
pub fn cpe_identity_gap(u: &dyn PolarMap, ubar: &HomogMap, grid: &PolarGrid) -> Result<CpeGap> {
    let w = crate::homog::Combination::difference(u, ubar);
    let lhs = log_det(&w, grid)?;
    let a = ubar.a();
    let k = ubar.k();
    let (_, slack) = radial_pairing(&u, k, a, grid)?;
    let rhs = -a * f64::from(k) * slack;
    Ok(CpeGap {
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessReport {
    pub j: f64,
    pub bound: f64,
    pub slack: f64,
    pub log_det: f64,
    pub log_det_paper: f64,
    pub log_det_oracle: f64,
    pub cof: CofPairing,
    pub cpe: CpeGap,
}

/// Every uniqueness integral for a candidate `u` against `ū`.
pub fn uniqueness_report(u: &dyn PolarMap, ubar: &HomogMap, grid: &PolarGrid) -> Result<UniquenessReport> {
    let (a, k, r) = (ubar.a(), ubar.k(), grid.radius());
    let (j, slack) = radial_pairing(&u, k, a, grid)?;
    Ok(UniquenessReport {
        j,
        bound: std::f64::consts::PI * a * r * r,
        slack,
        log_det: log_det(&u, grid)?,
        log_det_paper: log_det_ubar_printed(a, k, r),
        log_det_oracle: log_det_ubar_oracle(a, k, r),
        cof: cof_pairing(u, ubar, grid)?,
        cpe: cpe_identity_gap(u, ubar, grid)?,
    })
}
