//! Skew coefficient matrices, the spectrum of `−Λ²` and the amplitude
//! equation `(k²−1) f'(t) / (k t) = ρ₀`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::profile::RadialProfile;

/// Sparse upper-triangular coefficients `λ_ij`, indices 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewCoefficients {
    pub m: usize,
    pub entries: BTreeMap<(usize, usize), f64>,
}

impl SkewCoefficients {
    pub fn new(m: usize) -> Self {
        Self {
            m,
            entries: BTreeMap::new(),
        }
    }

    /// Planar case: the single coefficient `λ = λ_12`.
    pub fn planar(lambda: f64) -> Self {
        Self::new(2).with(1, 2, lambda)
    }

    pub fn with(mut self, i: usize, j: usize, value: f64) -> Self {
        self.entries.insert((i, j), value);
        self
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.entries.insert((i, j), value);
    }

    /// All coefficients vanish (allowed, but no covering solution exists).
    pub fn is_zero(&self) -> bool {
        self.entries.values().all(|&v| v == 0.0)
    }
}

/// Dense antisymmetric `Λ`; skewness holds bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewMatrix {
    mat: DMatrix<f64>,
}

impl SkewMatrix {
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mat[(i, j)]
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.mat.iter().map(|x| x * x).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.mat.iter().all(|&x| x == 0.0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            mat: &self.mat * factor,
        }
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.mat * v
    }

    /// `max |Λ_ij + Λ_ji|`.
    pub fn skewness_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.mat[(i, j)] + self.mat[(j, i)]).abs());
            }
        }
        worst
    }

    /// `λ_ij` for `i < j` (0-based), nonzero entries only.
    pub fn upper_entries(&self) -> Vec<(usize, usize, f64)> {
        let n = self.dim();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = self.mat[(i, j)];
                if v != 0.0 {
                    out.push((i, j, v));
                }
            }
        }
        out
    }
}

pub fn build_lambda(coeffs: &SkewCoefficients) -> Result<SkewMatrix> {
    let m = coeffs.m;
    if m < 2 {
        return Err(Error::InvalidArgument(format!("dimension m = {m} must be >= 2")));
    }
    let mut mat = DMatrix::zeros(m, m);
    for (&(i, j), &v) in &coeffs.entries {
        if i < 1 || i >= j || j > m {
            return Err(Error::IndexOutOfRange { i, j, m });
        }
        mat[(i - 1, j - 1)] = v;
        mat[(j - 1, i - 1)] = -v;
    }
    Ok(SkewMatrix { mat })
}

#[derive(Debug, Clone)]
pub struct SpectrumReport {
    /// Eigenvalues of `−Λ²`, descending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors, column `i` pairs with `eigenvalues[i]`.
    pub eigenvectors: DMatrix<f64>,
    pub kernel_dim: usize,
    pub tol_eig: f64,
    /// `max_i ‖(−Λ²) v_i − σ_i v_i‖`.
    pub max_residual: f64,
    pub sweeps: usize,
}

impl SpectrumReport {
    pub fn largest(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn smallest(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }

    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.eigenvectors.column(i).into_owned()
    }

    /// `‖V diag(σ) Vᵀ − A‖_F`.
    pub fn reconstruction_error(&self, target: &DMatrix<f64>) -> f64 {
        let d = DMatrix::from_diagonal(&DVector::from_vec(self.eigenvalues.clone()));
        let rec = &self.eigenvectors * d * self.eigenvectors.transpose();
        (rec - target).norm()
    }

    pub fn select(&self, sel: EigSelection) -> Result<(f64, DVector<f64>)> {
        let idx = match sel {
            EigSelection::Largest => 0,
            EigSelection::SmallestNonzero => self
                .eigenvalues
                .iter()
                .rposition(|&s| s > self.tol_eig)
                .ok_or_else(|| Error::InvalidArgument("spectrum of -Lambda^2 is zero".into()))?,
            EigSelection::Index(i) => {
                if i >= self.eigenvalues.len() {
                    return Err(Error::InvalidArgument(format!(
                        "eigenvalue index {i} out of range 0..{}",
                        self.eigenvalues.len()
                    )));
                }
                i
            }
        };
        Ok((self.eigenvalues[idx], self.vector(idx)))
    }
}

/// Which eigenpair of `−Λ²` drives the covering construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigSelection {
    #[default]
    Largest,
    SmallestNonzero,
    /// Position in the descending order.
    Index(usize),
}

const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix. Returns
/// eigenvalues (unsorted), eigenvectors as columns, and the sweep count.
pub fn jacobi_eigen(sym: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>, usize)> {
    let n = sym.nrows();
    let mut a = sym.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = a.norm();
    let off = |a: &DMatrix<f64>| {
        let mut s = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                s += a[(p, q)] * a[(p, q)];
            }
        }
        s.sqrt()
    };
    if scale == 0.0 {
        return Ok((vec![0.0; n], v, 0));
    }
    let mut sweeps = 0;
    loop {
        let o = off(&a);
        if o <= f64::EPSILON * scale {
            break;
        }
        if sweeps >= MAX_SWEEPS {
            return Err(Error::NonConvergence {
                sweeps,
                off_norm: o,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
            }
        }
    }
    Ok(((0..n).map(|i| a[(i, i)]).collect(), v, sweeps))
}

/// Spectrum of the symmetric positive semi-definite matrix `−Λ² = ΛᵀΛ`.
pub fn neg_square_spectrum(lambda: &SkewMatrix) -> Result<SpectrumReport> {
    let l = lambda.matrix();
    let target = -(l * l);
    let (vals, vecs, sweeps) = jacobi_eigen(&target)?;
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&i, &j| vals[j].total_cmp(&vals[i]).then(i.cmp(&j)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let eigenvectors = DMatrix::from_fn(vecs.nrows(), vecs.ncols(), |r, c| vecs[(r, order[c])]);

    let tol_eig = 1e-12 * lambda.frobenius_sq();
    let kernel_dim = eigenvalues.iter().filter(|&&s| s <= tol_eig).count();
    let mut max_residual = 0.0f64;
    for (c, &s) in eigenvalues.iter().enumerate() {
        let v = eigenvectors.column(c);
        let res = (&target * v - v * s).norm();
        max_residual = max_residual.max(res);
    }
    Ok(SpectrumReport {
        eigenvalues,
        eigenvectors,
        kernel_dim,
        tol_eig,
        max_residual,
        sweeps,
    })
}

/// `t ↦ (k²−1) f'(t) / (k t)`.
pub fn amplitude_map(profile: &RadialProfile, k: u32, t: f64) -> f64 {
    let kf = f64::from(k);
    (kf * kf - 1.0) * profile.df_over_t(t) / kf
}

/// Largest amplitude probed when bracketing.
pub const T_MAX: f64 = 1e12;
const T_MIN: f64 = 1e-12;

/// Solves `(k²−1) f'(t) / (k t) = ρ₀` for `t > 0` by bisection on an
/// automatically expanded bracket around `t = 1`.
pub fn solve_amplitude(profile: &RadialProfile, k: u32, rho0: f64) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("mode k = {k} must be >= 2")));
    }
    if !(rho0 > 0.0 && rho0.is_finite()) {
        return Err(Error::InvalidArgument(format!("rho0 = {rho0} must be positive")));
    }
    let h = |t: f64| amplitude_map(profile, k, t) - rho0;

    let probes = [1e-3, 1e-1, 1.0, 10.0, 1e3];
    let vals: Vec<f64> = probes.iter().map(|&t| amplitude_map(profile, k, t)).collect();
    let lo_v = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi_v = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi_v - lo_v <= 1e-13 * hi_v.abs().max(lo_v.abs()) {
        return Err(Error::Degenerate { value: vals[2] });
    }

    let h1 = h(1.0);
    if h1 == 0.0 {
        return Ok(1.0);
    }
    // Expand outward from t = 1 until the sign changes.
    let (mut a, mut b) = (None, None);
    let mut up = 1.0;
    let mut down = 1.0;
    let mut prev_up = (1.0, h1);
    let mut prev_down = (1.0, h1);
    while up < T_MAX || down > T_MIN {
        if up < T_MAX {
            up = (up * 2.0).min(T_MAX);
            let hu = h(up);
            if hu.signum() != prev_up.1.signum() || hu == 0.0 {
                a = Some(prev_up);
                b = Some((up, hu));
                break;
            }
            prev_up = (up, hu);
        }
        if down > T_MIN {
            down = (down * 0.5).max(T_MIN);
            let hd = h(down);
            if hd.signum() != prev_down.1.signum() || hd == 0.0 {
                a = Some((down, hd));
                b = Some(prev_down);
                break;
            }
            prev_down = (down, hd);
        }
    }
    let (Some((mut lo, mut h_lo)), Some((mut hi, _))) = (a, b) else {
        return Err(Error::NoRoot { rho0, t_max: T_MAX });
    };
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let hm = h(mid);
        if hm == 0.0 {
            return Ok(mid);
        }
        if hm.signum() == h_lo.signum() {
            lo = mid;
            h_lo = hm;
        } else {
            hi = mid;
        }
    }
    Ok(if h(lo).abs() <= h(hi).abs() { lo } else { hi })
}
