//! Radial profiles `f: [0, ∞) → R` defining the isotropic part
//! `γ(F) = f(|F|)` of the integrand.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type Scalar = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// User-supplied evaluators for `f`, `f'` and `f''`.
#[derive(Clone)]
pub struct CustomProfile {
    pub name: String,
    pub f: Scalar,
    pub df: Scalar,
    pub d2f: Scalar,
    pub growth: Option<f64>,
}

impl fmt::Debug for CustomProfile {
    fn fmt(&self, fmt: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt.debug_struct("CustomProfile")
            .field("name", &self.name)
            .field("growth", &self.growth)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum RadialProfile {
    /// `f(t) = t^p / p`, `p > 1`.
    Power { p: f64 },
    /// `f(t) = ν t²`.
    Quadratic { nu: f64 },
    /// `f(t) = t⁴ / 4`.
    Quartic,
    Custom(CustomProfile),
}

impl RadialProfile {
    pub fn power(p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidProfile(format!(
                "power-law exponent must lie in (1, inf), got {p}"
            )));
        }
        Ok(Self::Power { p })
    }

    pub fn quadratic(nu: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::InvalidProfile(format!(
                "quadratic coefficient must be positive, got {nu}"
            )));
        }
        Ok(Self::Quadratic { nu })
    }

    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        growth: Option<f64>,
    ) -> Self {
        Self::Custom(CustomProfile {
            name: name.into(),
            f: Arc::new(f),
            df: Arc::new(df),
            d2f: Arc::new(d2f),
            growth,
        })
    }

    pub fn name(&self) -> String {
        match self {
            Self::Power { p } => format!("power(p={p})"),
            Self::Quadratic { nu } => format!("quadratic(nu={nu})"),
            Self::Quartic => "quartic".to_string(),
            Self::Custom(c) => c.name.clone(),
        }
    }

    pub fn growth_exponent(&self) -> Option<f64> {
        match self {
            Self::Power { p } => Some(*p),
            Self::Quadratic { .. } => Some(2.0),
            Self::Quartic => Some(4.0),
            Self::Custom(c) => c.growth,
        }
    }

    pub fn f(&self, t: f64) -> f64 {
        match self {
            Self::Power { p } => t.powf(*p) / p,
            Self::Quadratic { nu } => nu * t * t,
            Self::Quartic => 0.25 * t.powi(4),
            Self::Custom(c) => (c.f)(t),
        }
    }

    pub fn df(&self, t: f64) -> f64 {
        match self {
            Self::Power { p } => t.powf(p - 1.0),
            Self::Quadratic { nu } => 2.0 * nu * t,
            Self::Quartic => t.powi(3),
            Self::Custom(c) => (c.df)(t),
        }
    }

    pub fn d2f(&self, t: f64) -> f64 {
        match self {
            Self::Power { p } => (p - 1.0) * t.powf(p - 2.0),
            Self::Quadratic { nu } => 2.0 * nu,
            Self::Quartic => 3.0 * t * t,
            Self::Custom(c) => (c.d2f)(t),
        }
    }

    /// `f'(t) / t`, with the `t → 0` limit where it is finite.
    pub fn df_over_t(&self, t: f64) -> f64 {
        match self {
            Self::Power { p } => t.powf(p - 2.0),
            Self::Quadratic { nu } => 2.0 * nu,
            Self::Quartic => t * t,
            Self::Custom(c) => {
                if t > 0.0 {
                    (c.df)(t) / t
                } else {
                    (c.d2f)(0.0)
                }
            }
        }
    }

    /// Checks `f(0) = 0`, `f'(0+) >= 0` and `f'' > 0` on `n` samples of
    /// `[t_lo, t_hi]`.
    pub fn validate(&self, t_lo: f64, t_hi: f64, n: usize) -> Result<()> {
        let f0 = self.f(0.0);
        if f0.abs() > 1e-14 {
            return Err(Error::InvalidProfile(format!("f(0) = {f0}, expected 0")));
        }
        let df0 = self.df(1e-12);
        if df0 < 0.0 {
            return Err(Error::InvalidProfile(format!("f'(0+) = {df0} < 0")));
        }
        let n = n.max(2);
        for s in 0..n {
            let t = t_lo + (t_hi - t_lo) * s as f64 / (n - 1) as f64;
            if t <= 0.0 {
                continue;
            }
            let d2 = self.d2f(t);
            if d2.is_nan() || d2 <= 0.0 {
                return Err(Error::InvalidProfile(format!("f''({t}) = {d2} is not positive")));
            }
        }
        Ok(())
    }
}
