//! Explicit one-homogeneous Lipschitz stationary points `u(R, θ) = R g(θ)` of
//! planar functionals whose integrand carries a `ln|x|`-weighted sum of
//! 2×2 minors, together with the numerical machinery used to verify their
//! properties: weak Euler-Lagrange residuals, hypothesis probes, uniqueness
//! integrals and the variational comparisons.
//!
//! Module map:
//!
//! * [`spectral`]: skew coefficient matrices, the spectrum of `−Λ²`, and the
//!   amplitude equation.
//! * [`profile`]: radial profiles `f` with `γ(F) = f(|F|)`.
//! * [`homog`]: one-homogeneous maps, conservation and ODE residuals.
//! * [`planar`]: closed-form planar maps and the k-fold lift.
//! * [`quadrature`]: polar grids, log-singular weights, fields, bump test
//!   functions.
//! * [`weakform`]: weak residuals, the duality identity and hypothesis probes.
//! * [`variational`]: energies, the conjugate-gradient minimizer and the
//!   competitor comparisons.
//! * [`uniqueness`]: radial pairing, log-determinant and cofactor integrals.

pub mod error;
pub mod homog;
pub mod linalg;
pub mod planar;
pub mod profile;
pub mod quadrature;
pub mod rng;
pub mod spectral;
pub mod uniqueness;
pub mod variational;
pub mod weakform;

pub use error::{Error, Result};
pub use homog::{Branch, HomogMap, PolarJet, PolarMap};
pub use planar::PlanarMapExpr;
pub use profile::RadialProfile;
pub use quadrature::{Field, Layout, PolarGrid, TestFunction, Weight};
pub use rng::CounterRng;
pub use spectral::{EigSelection, SkewCoefficients, SkewMatrix, SpectrumReport};
