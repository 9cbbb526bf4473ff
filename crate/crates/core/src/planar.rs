//! Closed-form planar maps on a disk and the k-fold lift
//! `φ^(k)(R, θ) = φ(k^{-1/2} R, kθ)`.
//!
//! Members are evaluated through their Cartesian gradient; the polar
//! partials follow from `φ,_R = ∇φ e_R`, `φ,_τ = ∇φ e_θ`.

use nalgebra::{DVector, Matrix2, Vector2};

use crate::homog::{PolarJet, PolarMap};
use crate::linalg::{e_r, e_theta};

fn rot(angle: f64) -> Matrix2<f64> {
    let (s, c) = angle.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Quarter turn `[[0, -1], [1, 0]]`, the derivative of `rot` at zero.
fn quarter() -> Matrix2<f64> {
    Matrix2::new(0.0, -1.0, 1.0, 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanarMapExpr {
    Identity,
    /// `φ = R e_R(θ + s(R))`, `s(R) = s0 (radius − R) R`; area preserving,
    /// identity on `|x| = radius`.
    Twist { s0: f64, radius: f64 },
    /// Rotation of the disk around `center` by `amplitude (1 − ρ²/support²)^order`
    /// where `ρ = |x − center|`; area preserving, identity outside the support.
    Swirl {
        center: [f64; 2],
        support: f64,
        amplitude: f64,
        order: u32,
    },
    /// `φ^(k)`; if `inner` lives on `B_ρ` the lift lives on `B_{√k ρ}`.
    Lifted { inner: Box<PlanarMapExpr>, k: u32 },
}

impl PlanarMapExpr {
    pub fn twist(s0: f64, radius: f64) -> Self {
        Self::Twist { s0, radius }
    }

    /// Value and Cartesian gradient at a Cartesian point.
    pub fn eval_xy(&self, p: Vector2<f64>) -> (Vector2<f64>, Matrix2<f64>) {
        match self {
            Self::Identity => (p, Matrix2::identity()),
            Self::Twist { s0, radius } => {
                let r = p.norm();
                let angle = s0 * (radius - r) * r;
                let dangle = s0 * (radius - 2.0 * r);
                let grad_angle = if r > 0.0 { p * (dangle / r) } else { Vector2::zeros() };
                swirl_about(p, Vector2::zeros(), angle, grad_angle)
            }
            Self::Swirl {
                center,
                support,
                amplitude,
                order,
            } => {
                let c = Vector2::new(center[0], center[1]);
                let d = p - c;
                let rho2 = d.norm_squared();
                let s2 = support * support;
                if rho2 >= s2 {
                    return (p, Matrix2::identity());
                }
                let base = 1.0 - rho2 / s2;
                let n = *order as i32;
                let angle = amplitude * base.powi(n);
                // d/dx of base^n = n base^{n-1} (-2 d / s²)
                let grad_angle = d * (-2.0 * amplitude * f64::from(*order) * base.powi(n - 1) / s2);
                swirl_about(p, c, angle, grad_angle)
            }
            Self::Lifted { inner, k } => {
                let r = p.norm();
                let th = p.y.atan2(p.x);
                let jet = lift_jet(inner, *k, r, th);
                let grad = Matrix2::new(
                    jet.0[0] * th.cos() - jet.1[0] * th.sin(),
                    jet.0[0] * th.sin() + jet.1[0] * th.cos(),
                    jet.0[1] * th.cos() - jet.1[1] * th.sin(),
                    jet.0[1] * th.sin() + jet.1[1] * th.cos(),
                );
                (jet.2, grad)
            }
        }
    }

    /// `(φ,_R, φ,_τ, φ)` at polar `(R, θ)`.
    pub fn polar_parts(&self, r: f64, theta: f64) -> (Vector2<f64>, Vector2<f64>, Vector2<f64>) {
        if let Self::Lifted { inner, k } = self {
            return lift_jet(inner, *k, r, theta);
        }
        let (v, g) = self.eval_xy(e_r(theta) * r);
        (g * e_r(theta), g * e_theta(theta), v)
    }
}

/// `φ(x) = c + Rot(angle(x)) (x − c)` and its gradient
/// `Rot (I + (Q d) ⊗ ∇angle)`, whose determinant is `1 + Qd·∇angle = 1`
/// whenever `∇angle ∥ d`.
fn swirl_about(p: Vector2<f64>, c: Vector2<f64>, angle: f64, grad_angle: Vector2<f64>) -> (Vector2<f64>, Matrix2<f64>) {
    let d = p - c;
    let r = rot(angle);
    let qd = quarter() * d;
    let inner = Matrix2::identity() + qd * grad_angle.transpose();
    (c + r * d, r * inner)
}

fn lift_jet(inner: &PlanarMapExpr, k: u32, r: f64, theta: f64) -> (Vector2<f64>, Vector2<f64>, Vector2<f64>) {
    let sk = f64::from(k).sqrt();
    let (dr, dtau, v) = inner.polar_parts(r / sk, f64::from(k) * theta);
    // ∂_R φ(R/√k, kθ) = φ,_R / √k;  (1/R) ∂_θ = (k ρ / R) φ,_τ = √k φ,_τ.
    (dr / sk, dtau * sk, v)
}

/// `φ^(k)(R, θ) = φ(k^{-1/2} R, kθ)`.
pub fn lift_k(phi: &PlanarMapExpr, k: u32) -> PlanarMapExpr {
    PlanarMapExpr::Lifted {
        inner: Box::new(phi.clone()),
        k,
    }
}

impl PolarMap for PlanarMapExpr {
    fn dim(&self) -> usize {
        2
    }
    fn jet(&self, r: f64, theta: f64) -> PolarJet {
        let (dr, dtau, v) = self.polar_parts(r, theta);
        PolarJet {
            value: DVector::from_column_slice(v.as_slice()),
            d_r: DVector::from_column_slice(dr.as_slice()),
            d_tau: DVector::from_column_slice(dtau.as_slice()),
        }
    }
}
