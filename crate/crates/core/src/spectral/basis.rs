use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Truncated Laplace–Beltrami eigenbasis of one shape.
///
/// Columns of `phi` are M-orthonormal eigenfunctions ordered by ascending
/// eigenvalue; `mass` is the diagonal of the lumped mass matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    evals: Vec<f64>,
    phi: DMatrix<f64>,
    mass: Vec<f64>,
}

impl SpectralBasis {
    pub fn new(evals: Vec<f64>, phi: DMatrix<f64>, mass: Vec<f64>) -> Result<Self> {
        if phi.ncols() != evals.len() {
            return Err(Error::DimensionMismatch {
                what: "eigenvector count",
                expected: evals.len(),
                got: phi.ncols(),
            });
        }
        if phi.nrows() != mass.len() {
            return Err(Error::DimensionMismatch {
                what: "eigenvector length",
                expected: mass.len(),
                got: phi.nrows(),
            });
        }
        Ok(Self { evals, phi, mass })
    }

    pub fn k(&self) -> usize {
        self.evals.len()
    }

    pub fn n(&self) -> usize {
        self.mass.len()
    }

    pub fn evals(&self) -> &[f64] {
        &self.evals
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn total_area(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// The first `k` eigenpairs.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k > self.k() {
            return Err(Error::InsufficientBasis {
                needed: k,
                available: self.k(),
            });
        }
        Ok(Self {
            evals: self.evals[..k].to_vec(),
            phi: self.phi.columns(0, k).into_owned(),
            mass: self.mass.clone(),
        })
    }

    /// `Φᵀ M`, the mass-weighted pseudoinverse of `Φ` (k × n).
    pub fn pinv(&self) -> DMatrix<f64> {
        let mut pt = self.phi.transpose();
        for (j, mut col) in pt.column_iter_mut().enumerate() {
            col *= self.mass[j];
        }
        pt
    }

    /// Reduced coefficients `Φᵀ M f` of the columns of `f` (n × q → k × q).
    pub fn project(&self, f: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if f.nrows() != self.n() {
            return Err(Error::DimensionMismatch {
                what: "function length",
                expected: self.n(),
                got: f.nrows(),
            });
        }
        let mut mf = f.clone();
        for (i, mut row) in mf.row_iter_mut().enumerate() {
            row *= self.mass[i];
        }
        Ok(self.phi.tr_mul(&mf))
    }

    pub fn project_vector(&self, f: &[f64]) -> Result<DVector<f64>> {
        let m = DMatrix::from_column_slice(f.len(), 1, f);
        Ok(self.project(&m)?.column(0).into_owned())
    }

    /// `Φ a` for coefficient columns `a`.
    pub fn reconstruct(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        &self.phi * a
    }

    /// `Φ[rows, :]`, gathering one row of `Φ` per entry of `rows`.
    pub fn gather_rows(&self, rows: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), self.k(), |i, j| self.phi[(rows[i], j)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncation_and_projection() {
        let phi = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 0.0, 1.0, -1.0]);
        let b = SpectralBasis::new(vec![0.0, 1.0], phi, vec![0.5, 1.0, 2.0]).unwrap();
        let t = b.truncated(1).unwrap();
        assert_eq!(t.k(), 1);
        assert!(matches!(b.truncated(3), Err(Error::InsufficientBasis { needed: 3, available: 2 })));
        let p = b.project_vector(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(p.as_slice(), &[3.5, -1.0]);
        assert_eq!(b.pinv() * DVector::from_element(3, 1.0), p);
        assert_eq!(b.gather_rows(&[2, 0]), DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 1.0, 2.0]));
    }
}
