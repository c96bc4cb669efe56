//! Roots of matrix lag polynomials `det(I - C_1 z - ... - C_k z^k)`.
//!
//! The zeros are the reciprocals of the non-zero eigenvalues of the block
//! companion matrix
//!
//! ```text
//! [ C_1 C_2 ... C_k ]
//! [ I   0   ... 0   ]
//! [ 0   I   ... 0   ]
//! [ ...             ]
//! ```
//!
//! Zero eigenvalues correspond to the degree drop of the determinant when
//! the leading coefficients are singular; they carry no finite root.

use nalgebra::{Complex, DMatrix};

/// Eigenvalues whose modulus falls below this (relative to the companion
/// norm) are treated as exact zeros.
const ZERO_EIGENVALUE_TOL: f64 = 1e-12;

/// Block companion matrix of `I - sum_i C_i z^i`.
pub fn companion(coeffs: &[DMatrix<f64>]) -> DMatrix<f64> {
    let k = coeffs.len();
    if k == 0 {
        return DMatrix::zeros(0, 0);
    }
    let d = coeffs[0].nrows();
    let size = k * d;
    let mut f = DMatrix::zeros(size, size);
    for (i, c) in coeffs.iter().enumerate() {
        f.view_mut((0, i * d), (d, d)).copy_from(c);
    }
    for i in 1..k {
        for j in 0..d {
            f[(i * d + j, (i - 1) * d + j)] = 1.0;
        }
    }
    f
}

/// Non-zero eigenvalues of the block companion matrix.
pub fn companion_eigenvalues(coeffs: &[DMatrix<f64>]) -> Vec<Complex<f64>> {
    let f = companion(coeffs);
    if f.nrows() == 0 {
        return Vec::new();
    }
    let scale = f.norm().max(1.0);
    f.complex_eigenvalues()
        .iter()
        .copied()
        .filter(|z| z.norm() > ZERO_EIGENVALUE_TOL * scale)
        .collect()
}

/// Finite zeros of `det(I - sum_i C_i z^i)`.
pub fn lag_polynomial_roots(coeffs: &[DMatrix<f64>]) -> Vec<Complex<f64>> {
    companion_eigenvalues(coeffs)
        .into_iter()
        .map(|l| Complex::new(1.0, 0.0) / l)
        .collect()
}

/// Smallest modulus among the finite zeros, `+inf` when there are none.
pub fn min_root_modulus(coeffs: &[DMatrix<f64>]) -> f64 {
    let spectral_radius = companion_eigenvalues(coeffs)
        .iter()
        .map(|z| z.norm())
        .fold(0.0_f64, f64::max);
    if spectral_radius == 0.0 {
        f64::INFINITY
    } else {
        1.0 / spectral_radius
    }
}

/// Evaluates `det(I - sum_i C_i z^i)` at a complex point by complex LU.
pub fn lag_polynomial_det(coeffs: &[DMatrix<f64>], z: Complex<f64>) -> Complex<f64> {
    let d = coeffs.first().map_or(0, |c| c.nrows());
    if d == 0 {
        return Complex::new(1.0, 0.0);
    }
    let mut m: DMatrix<Complex<f64>> = DMatrix::identity(d, d);
    let mut zp = Complex::new(1.0, 0.0);
    for c in coeffs {
        zp *= z;
        m -= c.map(|v| Complex::new(v, 0.0)) * zp;
    }
    m.determinant()
}
