//! Small dense linear-algebra helpers shared by the estimation and
//! self-normalization code.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Inverse of a symmetric positive definite matrix through its
/// eigendecomposition. Returns the condition number on failure, i.e. when
/// the smallest eigenvalue is not positive or `λ_max / λ_min > max_condition`.
pub fn spd_inverse(m: &DMatrix<f64>, max_condition: f64) -> Result<DMatrix<f64>, f64> {
    let (vecs, vals) = spd_eigen(m, max_condition)?;
    let inv_vals = DVector::from_iterator(vals.len(), vals.iter().map(|v| 1.0 / v));
    Ok(&vecs * DMatrix::from_diagonal(&inv_vals) * vecs.transpose())
}

/// `x' M^{-1} x` for symmetric positive definite `M`, with the same
/// conditioning rule as [`spd_inverse`].
pub fn spd_quadratic_form(m: &DMatrix<f64>, x: &DVector<f64>, max_condition: f64) -> Result<f64, f64> {
    let (vecs, vals) = spd_eigen(m, max_condition)?;
    let proj = vecs.transpose() * x;
    Ok(proj.iter().zip(vals.iter()).map(|(p, v)| p * p / v).sum())
}

fn spd_eigen(m: &DMatrix<f64>, max_condition: f64) -> Result<(DMatrix<f64>, DVector<f64>), f64> {
    if m.nrows() == 0 {
        return Ok((DMatrix::zeros(0, 0), DVector::zeros(0)));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(min > 0.0) || !max.is_finite() {
        return Err(f64::INFINITY);
    }
    let cond = max / min;
    if cond > max_condition {
        return Err(cond);
    }
    Ok((eig.eigenvectors, eig.eigenvalues))
}

/// Serde adapter storing a matrix as a list of rows.
pub mod matrix_rows {
    use nalgebra::DMatrix;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<DMatrix<f64>, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(de)?;
        let nr = rows.len();
        let nc = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != nc) {
            return Err(D::Error::custom("ragged matrix rows"));
        }
        Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
    }
}
