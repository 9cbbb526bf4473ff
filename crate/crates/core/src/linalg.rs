//! Small dense helpers shared by the geometric modules.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

pub fn e_r(theta: f64) -> Vector2<f64> {
    Vector2::new(theta.cos(), theta.sin())
}

pub fn e_theta(theta: f64) -> Vector2<f64> {
    Vector2::new(-theta.sin(), theta.cos())
}

/// `cof A` for a 2×2 matrix, so that `cof A · A = 2 det A`.
pub fn cof2(a: &Matrix2<f64>) -> Matrix2<f64> {
    Matrix2::new(a[(1, 1)], -a[(1, 0)], -a[(0, 1)], a[(0, 0)])
}

/// Frobenius inner product `A · B = tr(AᵀB)`.
pub fn frob_dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn frob_dot2(a: &Matrix2<f64>, b: &Matrix2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// `∇u = d_r ⊗ e_R(θ) + d_tau ⊗ e_θ(θ)` as an m×2 Cartesian matrix.
pub fn polar_to_cartesian(d_r: &DVector<f64>, d_tau: &DVector<f64>, theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    let m = d_r.len();
    DMatrix::from_fn(m, 2, |i, j| {
        if j == 0 {
            d_r[i] * c - d_tau[i] * s
        } else {
            d_r[i] * s + d_tau[i] * c
        }
    })
}

/// Rows `i`, `j` of an m×2 matrix as a 2×2 block (`F^{(i,j)}`).
pub fn minor_rows(f: &DMatrix<f64>, i: usize, j: usize) -> Matrix2<f64> {
    Matrix2::new(f[(i, 0)], f[(i, 1)], f[(j, 0)], f[(j, 1)])
}

/// Pairwise summation with a fixed split; the result depends only on the
/// order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cofactor_pairs_to_twice_det() {
        let a = Matrix2::new(1.3, -0.2, 0.7, 2.1);
        assert!((frob_dot2(&cof2(&a), &a) - 2.0 * a.determinant()).abs() < 1e-14);
    }

    #[test]
    fn pairwise_sum_is_exact_on_integers() {
        let xs: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&xs), 500_500.0);
    }
}
