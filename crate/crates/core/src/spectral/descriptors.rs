use nalgebra::DMatrix;

use super::basis::SpectralBasis;
use crate::error::{Error, Result};

/// Probe functions on one shape: per-vertex values and their reduced
/// coefficients `Φᵀ M raw`.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorSet {
    raw: DMatrix<f64>,
    reduced: DMatrix<f64>,
}

impl DescriptorSet {
    /// Wraps an `n × q` matrix of per-vertex values, projecting it onto `basis`.
    pub fn from_raw(basis: &SpectralBasis, raw: DMatrix<f64>) -> Result<Self> {
        if raw.ncols() == 0 {
            return Err(Error::Config("descriptor set needs at least one column".into()));
        }
        let reduced = basis.project(&raw)?;
        Ok(Self { raw, reduced })
    }

    pub fn raw(&self) -> &DMatrix<f64> {
        &self.raw
    }

    pub fn reduced(&self) -> &DMatrix<f64> {
        &self.reduced
    }

    pub fn len(&self) -> usize {
        self.raw.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.ncols() == 0
    }

    /// Values of descriptor `j` at every vertex.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.raw.column(j).iter().copied().collect()
    }

    /// Indices `0, stride, 2·stride, …` of the columns used for operators.
    pub fn strided_columns(&self, stride: usize) -> Vec<usize> {
        (0..self.len()).step_by(stride.max(1)).collect()
    }
}
