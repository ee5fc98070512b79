use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenvalues below this are clamped before square roots.
const EIGEN_FLOOR: f64 = 1e-12;

/// Square matrix acting on points.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearMap {
    matrix: DMatrix<f64>,
}

impl LinearMap {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::invalid("linear map needs a non-empty square matrix"));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("linear map has non-finite entries"));
        }
        Ok(LinearMap { matrix })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::invalid("linear map rows must form a square matrix"));
        }
        LinearMap::new(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        LinearMap::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn identity(dim: usize) -> Self {
        LinearMap { matrix: DMatrix::identity(dim, dim) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.matrix.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        (0..d)
            .map(|i| (0..d).map(|j| self.matrix[(i, j)] * x[j]).sum())
            .collect()
    }

    /// Operator 2-norm, the Lipschitz constant of the map.
    pub fn operator_norm(&self) -> f64 {
        self.matrix.clone().svd(false, false).singular_values.max()
    }
}

fn check_spd(m: &DMatrix<f64>, name: &str) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::invalid(format!("{name} must be a non-empty square matrix")));
    }
    let scale = 1.0 + m.amax();
    if (m - m.transpose()).amax() > 1e-12 * scale {
        return Err(Error::invalid(format!("{name} is not symmetric")));
    }
    let min_eig = SymmetricEigen::new(m.clone()).eigenvalues.min();
    if !(min_eig > 0.0) {
        return Err(Error::invalid(format!("{name} is not positive definite (min eigenvalue {min_eig:e})")));
    }
    Ok(())
}

/// `m^{1/2}`, or `m^{-1/2}` when `inverse` is set, of the symmetric part of
/// `m`. Eigenvalues are clamped at 1e-12.
pub fn symmetric_sqrt(m: &DMatrix<f64>, inverse: bool) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let vals = eig.eigenvalues.map(|l| {
        let r = l.max(EIGEN_FLOOR).sqrt();
        if inverse {
            1.0 / r
        } else {
            r
        }
    });
    let v = &eig.eigenvectors;
    let out = v * DMatrix::from_diagonal(&vals) * v.transpose();
    (&out + out.transpose()) * 0.5
}

/// Optimal linear map between centred Gaussians with covariances `s1` and
/// `s2`: `A = s1^{-1/2} (s1^{1/2} s2 s1^{1/2})^{1/2} s1^{-1/2}`, symmetric
/// positive definite with `A s1 A = s2`.
pub fn gaussian_brenier(s1: &DMatrix<f64>, s2: &DMatrix<f64>) -> Result<LinearMap> {
    check_spd(s1, "source covariance")?;
    check_spd(s2, "target covariance")?;
    if s1.nrows() != s2.nrows() {
        return Err(Error::DimensionMismatch { expected: s1.nrows(), found: s2.nrows() });
    }
    let root = symmetric_sqrt(s1, false);
    let inv_root = symmetric_sqrt(s1, true);
    let middle = symmetric_sqrt(&(&root * s2 * &root), false);
    let a = &inv_root * middle * &inv_root;
    LinearMap::new((&a + a.transpose()) * 0.5)
}
