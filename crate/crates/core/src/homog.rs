//! One-homogeneous maps `u(R, θ) = R g(θ)` with `g(θ) = x cos kθ + y sin kθ`,
//! and the generic polar-map interface used by every integral in the crate.

use nalgebra::{DMatrix, DVector, Vector2};

use crate::error::{Error, Result};
use crate::linalg::{e_r, e_theta, polar_to_cartesian};
use crate::profile::RadialProfile;
use crate::spectral::{neg_square_spectrum, solve_amplitude, EigSelection, SkewMatrix};

/// Value and polar partials `u,_R`, `u,_τ = u,_θ / R` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarJet {
    pub value: DVector<f64>,
    pub d_r: DVector<f64>,
    pub d_tau: DVector<f64>,
}

impl PolarJet {
    pub fn zeros(m: usize) -> Self {
        Self {
            value: DVector::zeros(m),
            d_r: DVector::zeros(m),
            d_tau: DVector::zeros(m),
        }
    }

    /// Cartesian gradient `u,_R ⊗ e_R + u,_τ ⊗ e_θ` (m×2).
    pub fn cartesian(&self, theta: f64) -> DMatrix<f64> {
        polar_to_cartesian(&self.d_r, &self.d_tau, theta)
    }

    pub fn scale(mut self, s: f64) -> Self {
        self.value *= s;
        self.d_r *= s;
        self.d_tau *= s;
        self
    }

    pub fn plus(mut self, other: &PolarJet) -> Self {
        self.value += &other.value;
        self.d_r += &other.d_r;
        self.d_tau += &other.d_tau;
        self
    }
}

/// A map `B_r → R^m` with analytic polar partials.
pub trait PolarMap: Sync {
    fn dim(&self) -> usize;
    fn jet(&self, r: f64, theta: f64) -> PolarJet;

    fn cartesian_gradient(&self, r: f64, theta: f64) -> DMatrix<f64> {
        self.jet(r, theta).cartesian(theta)
    }
}

impl<T: PolarMap + ?Sized> PolarMap for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn jet(&self, r: f64, theta: f64) -> PolarJet {
        (**self).jet(r, theta)
    }
}

/// `Σ cᵢ uᵢ`.
pub struct Combination<'a> {
    terms: Vec<(f64, &'a dyn PolarMap)>,
}

impl<'a> Combination<'a> {
    pub fn new(terms: Vec<(f64, &'a dyn PolarMap)>) -> Self {
        assert!(!terms.is_empty(), "empty combination");
        let m = terms[0].1.dim();
        assert!(terms.iter().all(|(_, u)| u.dim() == m), "mixed dimensions");
        Self { terms }
    }

    pub fn difference(a: &'a dyn PolarMap, b: &'a dyn PolarMap) -> Self {
        Self::new(vec![(1.0, a), (-1.0, b)])
    }

    pub fn scaled(a: &'a dyn PolarMap, s: f64) -> Self {
        Self::new(vec![(s, a)])
    }
}

impl PolarMap for Combination<'_> {
    fn dim(&self) -> usize {
        self.terms[0].1.dim()
    }
    fn jet(&self, r: f64, theta: f64) -> PolarJet {
        let mut acc = PolarJet::zeros(self.dim());
        for (c, u) in &self.terms {
            acc = acc.plus(&u.jet(r, theta).scale(*c));
        }
        acc
    }
}

/// The constant map `u ≡ v`.
pub struct ConstantMap(pub DVector<f64>);

impl PolarMap for ConstantMap {
    fn dim(&self) -> usize {
        self.0.len()
    }
    fn jet(&self, _r: f64, _theta: f64) -> PolarJet {
        let m = self.0.len();
        PolarJet {
            value: self.0.clone(),
            d_r: DVector::zeros(m),
            d_tau: DVector::zeros(m),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `k = 1`, `x = y ∈ ker Λ`: `u` is linear.
    Linear,
    /// `k ≥ 2`: `u(B)` is a disk covered `k` times.
    Covering,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomogMap {
    k: u32,
    x: DVector<f64>,
    y: DVector<f64>,
    /// `|∇u|`, with `c² = (1 + k²)|x|²`.
    c: f64,
    /// Amplitude solving the amplitude equation (equals `c`).
    t: f64,
    /// `t (1 + k²)^{-1/2} = |x|`.
    a: f64,
    branch: Branch,
}

impl HomogMap {
    /// Builds `g = x cos kθ + y sin kθ` without checking any invariant;
    /// `c`, `t`, `a` are derived from `|x|`.
    pub fn from_parts(k: u32, x: DVector<f64>, y: DVector<f64>, branch: Branch) -> Self {
        assert_eq!(x.len(), y.len(), "x and y must share a dimension");
        let kf = f64::from(k);
        let a = x.norm();
        let c = (1.0 + kf * kf).sqrt() * a;
        Self {
            k,
            x,
            y,
            c,
            t: c,
            a,
            branch,
        }
    }

    /// The planar k-covering map `a R e_R(kθ)`.
    pub fn covering_planar(a: f64, k: u32) -> Self {
        Self::from_parts(
            k,
            DVector::from_vec(vec![a, 0.0]),
            DVector::from_vec(vec![0.0, a]),
            if k == 1 { Branch::Linear } else { Branch::Covering },
        )
    }

    /// `k^{-1/2} R e_R(kθ)`, the normalization with unit Jacobian.
    pub fn unit_jacobian_covering(k: u32) -> Self {
        Self::covering_planar(1.0 / f64::from(k).sqrt(), k)
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
    pub fn k(&self) -> u32 {
        self.k
    }
    pub fn x(&self) -> &DVector<f64> {
        &self.x
    }
    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn branch(&self) -> Branch {
        self.branch
    }

    /// `(g, g', g'')` at `θ`.
    pub fn g_eval(&self, theta: f64) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let kf = f64::from(self.k);
        let (s, c) = (kf * theta).sin_cos();
        let g = &self.x * c + &self.y * s;
        let dg = (&self.y * c - &self.x * s) * kf;
        let d2g = &g * (-kf * kf);
        (g, dg, d2g)
    }

    /// `g(θ) ⊗ e_R(θ) + g'(θ) ⊗ e_θ(θ)`, independent of `R`.
    pub fn gradient_polar(&self, _r: f64, theta: f64) -> DMatrix<f64> {
        let (g, dg, _) = self.g_eval(theta);
        polar_to_cartesian(&g, &dg, theta)
    }

    /// `sup_θ | |g|² + |g'|² − c² |` over `n_theta` uniform samples.
    pub fn conservation_residual(&self, n_theta: usize) -> f64 {
        let c2 = self.c * self.c;
        uniform_angles(n_theta)
            .map(|th| {
                let (g, dg, _) = self.g_eval(th);
                (g.norm_squared() + dg.norm_squared() - c2).abs()
            })
            .fold(0.0, f64::max)
    }

    /// `sup_θ ‖(f'(c)/c)(g'' + g) + Λ g'‖`.
    pub fn strong_residual(&self, profile: &RadialProfile, lambda: &SkewMatrix, n_theta: usize) -> Result<f64> {
        if lambda.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: lambda.dim(),
            });
        }
        if self.c == 0.0 {
            return Err(Error::ZeroGradient);
        }
        let coef = profile.df(self.c) / self.c;
        Ok(uniform_angles(n_theta)
            .map(|th| {
                let (g, dg, d2g) = self.g_eval(th);
                ((d2g + g) * coef + lambda.apply(&dg)).norm()
            })
            .fold(0.0, f64::max))
    }
}

impl PolarMap for HomogMap {
    fn dim(&self) -> usize {
        self.x.len()
    }
    fn jet(&self, r: f64, theta: f64) -> PolarJet {
        let (g, dg, _) = self.g_eval(theta);
        PolarJet {
            value: &g * r,
            d_r: g,
            d_tau: dg,
        }
    }
}

fn uniform_angles(n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(1);
    (0..n).map(move |j| std::f64::consts::TAU * j as f64 / n as f64)
}

/// Builds a one-homogeneous stationary point from `Λ`, `f` and `k`.
///
/// `k = 1` takes `x = y` as a unit-`c` kernel vector of `Λ`. `k ≥ 2` takes
/// the selected eigenpair `(ρ₀², v)` of `−Λ²`, solves the amplitude equation
/// for `t`, and sets `x = t (1+k²)^{-1/2} v`, `y = Λx / ρ` with
/// `ρ = f'(c)(1−k²)/(kc) = −ρ₀`.
pub fn construct_solution(
    lambda: &SkewMatrix,
    profile: &RadialProfile,
    k: u32,
    selection: EigSelection,
) -> Result<HomogMap> {
    let m = lambda.dim();
    let spectrum = neg_square_spectrum(lambda)?;
    match k {
        0 => Err(Error::InvalidArgument("mode k must be >= 1".into())),
        1 => {
            if spectrum.kernel_dim == 0 {
                return Err(Error::NoLinearSolution { m });
            }
            let v = spectrum.vector(spectrum.eigenvalues.len() - 1);
            let x = v * std::f64::consts::FRAC_1_SQRT_2;
            Ok(HomogMap::from_parts(1, x.clone(), x, Branch::Linear))
        }
        _ => {
            if lambda.is_zero() {
                return Err(Error::InvalidArgument(
                    "covering branch requires a nonzero Lambda".into(),
                ));
            }
            let (sigma, v) = spectrum.select(selection)?;
            if sigma <= spectrum.tol_eig {
                return Err(Error::InvalidArgument(format!(
                    "selected eigenvalue {sigma:e} of -Lambda^2 is zero"
                )));
            }
            let rho0 = sigma.sqrt();
            let t = solve_amplitude(profile, k, rho0)?;
            let kf = f64::from(k);
            let x = v * (t / (1.0 + kf * kf).sqrt());
            let y = lambda.apply(&x) / (-rho0);
            let mut map = HomogMap::from_parts(k, x, y, Branch::Covering);
            map.t = t;
            Ok(map)
        }
    }
}

/// `det ∇u` from the Cartesian 2×2 gradient.
pub fn jacobian(map: &dyn PolarMap, r: f64, theta: f64) -> Result<f64> {
    if map.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: map.dim(),
        });
    }
    let f = map.cartesian_gradient(r, theta);
    Ok(f[(0, 0)] * f[(1, 1)] - f[(0, 1)] * f[(1, 0)])
}

/// `J u,_R · u,_τ` with the displayed `J = [[0, 1], [-1, 0]]`; kept only to
/// audit its sign against [`jacobian`] (it returns `−det ∇u`).
pub fn jacobian_polar_formula(map: &dyn PolarMap, r: f64, theta: f64) -> Result<f64> {
    if map.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: map.dim(),
        });
    }
    let jet = map.jet(r, theta);
    let jr = Vector2::new(jet.d_r[1], -jet.d_r[0]);
    Ok(jr.dot(&Vector2::new(jet.d_tau[0], jet.d_tau[1])))
}

/// `u(x₁, x₂)` for a polar map evaluated at a Cartesian point.
pub fn eval_cartesian(map: &dyn PolarMap, x1: f64, x2: f64) -> DVector<f64> {
    let r = x1.hypot(x2);
    let th = x2.atan2(x1);
    map.jet(r, th).value
}

/// Central finite-difference Cartesian gradient (m×2).
pub fn fd_gradient(map: &dyn PolarMap, r: f64, theta: f64, h: f64) -> DMatrix<f64> {
    let p = e_r(theta) * r;
    let m = map.dim();
    let mut out = DMatrix::zeros(m, 2);
    for (col, d) in [Vector2::new(h, 0.0), Vector2::new(0.0, h)].iter().enumerate() {
        let fp = eval_cartesian(map, p.x + d.x, p.y + d.y);
        let fm = eval_cartesian(map, p.x - d.x, p.y - d.y);
        out.set_column(col, &((fp - fm) / (2.0 * h)));
    }
    out
}

/// Polar unit vectors, re-exported for callers building expressions.
pub fn polar_basis(theta: f64) -> (Vector2<f64>, Vector2<f64>) {
    (e_r(theta), e_theta(theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{build_lambda, SkewCoefficients};
    use std::f64::consts::PI;

    fn flagship() -> (SkewMatrix, HomogMap) {
        let l = build_lambda(&SkewCoefficients::planar(1.5)).unwrap();
        let u = construct_solution(&l, &RadialProfile::Quartic, 2, EigSelection::Largest).unwrap();
        (l, u)
    }

    #[test]
    fn flagship_construction_values() {
        let (l, u) = flagship();
        let a = 5f64.sqrt().recip();
        assert!((u.t() - 1.0).abs() < 1e-12);
        assert!((u.c() - 1.0).abs() < 1e-12);
        assert!((u.a() - a).abs() < 1e-12);
        assert!((u.x().norm() - a).abs() < 1e-12);
        assert!((u.y().norm() - a).abs() < 1e-12);
        assert!(u.x().dot(u.y()).abs() < 1e-12 * a * a);
        assert!(u.strong_residual(&RadialProfile::Quartic, &l, 720).unwrap() <= 1e-10);
        assert!(u.conservation_residual(720) <= 1e-12);
    }

    #[test]
    fn g_at_zero_and_quarter_period() {
        let (_, u) = flagship();
        let k = f64::from(u.k());
        let (g, dg, _) = u.g_eval(0.0);
        assert!((g - u.x()).norm() < 1e-15);
        assert!((dg - u.y() * k).norm() < 1e-15);
        let (g, dg, _) = u.g_eval(PI / (2.0 * k));
        assert!((g - u.y()).norm() < 1e-15);
        assert!((dg + u.x() * k).norm() < 1e-15);
    }

    #[test]
    fn pure_mode_second_derivative() {
        let (_, u) = flagship();
        let k2 = f64::from(u.k() * u.k());
        for th in [0.1, 1.3, 2.9, 5.5] {
            let (g, _, d2g) = u.g_eval(th);
            assert!((d2g + g * k2).norm() <= 1e-14);
        }
    }

    #[test]
    fn identity_gradient() {
        let id = HomogMap::covering_planar(1.0, 1);
        for th in [0.0, 0.7, 3.1] {
            let f = id.gradient_polar(0.4, th);
            assert!((f - DMatrix::<f64>::identity(2, 2)).norm() < 1e-15);
        }
    }

    #[test]
    fn linear_branch_odd_dimension() {
        let c = SkewCoefficients::new(3).with(1, 2, 1.0).with(1, 3, 2.0).with(2, 3, 3.0);
        let l = build_lambda(&c).unwrap();
        let u = construct_solution(&l, &RadialProfile::Quartic, 1, EigSelection::Largest).unwrap();
        assert_eq!(u.branch(), Branch::Linear);
        assert_eq!(u.x(), u.y());
        assert!(l.apply(u.x()).norm() < 1e-12);
        assert!(u.strong_residual(&RadialProfile::Quartic, &l, 256).unwrap() <= 1e-12);
        assert!(u.conservation_residual(256) <= 1e-12);
        assert!((u.c() * u.c() - 2.0 * u.x().norm_squared()).abs() < 1e-14);
    }

    #[test]
    fn planar_has_no_linear_branch() {
        let l = build_lambda(&SkewCoefficients::planar(1.5)).unwrap();
        assert_eq!(
            construct_solution(&l, &RadialProfile::Quartic, 1, EigSelection::Largest),
            Err(Error::NoLinearSolution { m: 2 })
        );
    }

    #[test]
    fn corrupted_amplitude_breaks_conservation() {
        let (_, u) = flagship();
        let bad = HomogMap::from_parts(2, u.x().clone(), u.y() * 1.1, Branch::Covering);
        assert!(bad.conservation_residual(360) >= 0.05 * u.x().norm_squared());
    }

    #[test]
    fn doubled_lambda_residual_is_lambda_k_x() {
        let (l, u) = flagship();
        let res = u.strong_residual(&RadialProfile::Quartic, &l.scaled(2.0), 360).unwrap();
        assert!(res >= 1.5 * 2.0 * u.x().norm() - 1e-10);
    }

    #[test]
    fn opposite_y_sign_is_not_a_solution() {
        let (l, u) = flagship();
        let flipped = HomogMap::from_parts(2, u.x().clone(), -u.y(), Branch::Covering);
        assert!(flipped.strong_residual(&RadialProfile::Quartic, &l, 64).unwrap() > 0.1);
    }

    #[test]
    fn zero_gradient_is_an_error() {
        let l = build_lambda(&SkewCoefficients::planar(1.0)).unwrap();
        let z = HomogMap::covering_planar(0.0, 2);
        assert_eq!(z.strong_residual(&RadialProfile::Quartic, &l, 16), Err(Error::ZeroGradient));
    }

    #[test]
    fn jacobian_constants() {
        let id = HomogMap::covering_planar(1.0, 1);
        assert!((jacobian(&id, 0.3, 1.0).unwrap() - 1.0).abs() < 1e-15);
        for k in [2u32, 3, 5] {
            let u = HomogMap::unit_jacobian_covering(k);
            for th in [0.0, 0.4, 2.2] {
                assert!((jacobian(&u, 0.5, th).unwrap() - 1.0).abs() < 1e-12);
                // The displayed polar formula carries the opposite sign.
                assert!((jacobian_polar_formula(&u, 0.5, th).unwrap() + 1.0).abs() < 1e-12);
            }
        }
        let u3 = HomogMap::covering_planar(0.7, 3);
        assert!(matches!(jacobian(&HomogMap::from_parts(2, DVector::zeros(3), DVector::zeros(3), Branch::Linear), 1.0, 0.0), Err(Error::DimensionMismatch { .. })));
        assert!((jacobian(&u3, 0.2, 0.9).unwrap() - 0.49 * 3.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (_, u) = flagship();
        for (r, th) in [(0.5, 0.3), (0.8, 2.0), (0.3, 4.4)] {
            let exact = u.gradient_polar(r, th);
            let e1 = (fd_gradient(&u, r, th, 1e-3) - &exact).norm();
            let e2 = (fd_gradient(&u, r, th, 5e-4) - &exact).norm();
            assert!(e1 < 1e-4, "{e1}");
            // Second order: halving h quarters the error.
            assert!(e2 < 0.3 * e1 || e2 < 1e-9, "{e1} {e2}");
        }
    }
}
