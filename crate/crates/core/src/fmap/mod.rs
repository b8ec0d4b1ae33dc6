//! Functional maps, point-to-point maps and the conversions between them.

mod convert;
pub mod nn;
mod solve;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use convert::{fmap_to_pointmap, pointmap_to_fmap};
pub use solve::{
    resolve_weights, solve_initial_map, EnergyWeights, InitialMapProblem, InitialMapSolution, OperatorPair,
    TermResiduals,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Initialized,
    Refined,
}

/// A `k₂ × k₁` matrix transporting coefficients in the source basis to
/// coefficients in the target basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalMap {
    pub matrix: DMatrix<f64>,
    pub provenance: Provenance,
}

impl FunctionalMap {
    pub fn new(matrix: DMatrix<f64>, provenance: Provenance) -> Self {
        Self { matrix, provenance }
    }

    /// `‖CᵀC − I‖_F`, a measure of how far the map is from area-preserving.
    pub fn orthogonality_defect(&self) -> f64 {
        let k = self.matrix.ncols();
        (self.matrix.tr_mul(&self.matrix) - DMatrix::identity(k, k)).norm()
    }
}

/// Vertex-to-vertex assignment: entry `i` is the target vertex of source
/// vertex `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PointMap {
    targets: Vec<usize>,
    n_target: usize,
}

impl PointMap {
    pub fn new(targets: Vec<usize>, n_target: usize) -> Result<Self> {
        if let Some((position, &index)) = targets.iter().enumerate().find(|(_, &t)| t >= n_target) {
            return Err(Error::MapIndexOutOfRange {
                position,
                index,
                n_target,
            });
        }
        Ok(Self { targets, n_target })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            targets: (0..n).collect(),
            n_target: n,
        }
    }

    /// Every source vertex mapped to `target`.
    pub fn constant(n_source: usize, target: usize, n_target: usize) -> Result<Self> {
        Self::new(vec![target; n_source], n_target)
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn n_source(&self) -> usize {
        self.targets.len()
    }

    pub fn n_target(&self) -> usize {
        self.n_target
    }

    pub fn get(&self, i: usize) -> usize {
        self.targets[i]
    }

    pub fn set(&mut self, i: usize, target: usize) {
        assert!(target < self.n_target, "target {target} out of range");
        self.targets[i] = target;
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.targets
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.targets
    }

    /// `next ∘ self`: source vertex `i` goes to `next(self(i))`.
    pub fn then(&self, next: &PointMap) -> Result<PointMap> {
        if next.n_source() != self.n_target {
            return Err(Error::DimensionMismatch {
                what: "composed map domain",
                expected: self.n_target,
                got: next.n_source(),
            });
        }
        Ok(PointMap {
            targets: self.targets.iter().map(|&t| next.targets[t]).collect(),
            n_target: next.n_target,
        })
    }

    /// Number of source vertices mapped onto each target vertex.
    pub fn preimage_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_target];
        for &t in &self.targets {
            counts[t] += 1;
        }
        counts
    }

    /// Source vertices mapped onto each target vertex, in ascending order.
    pub fn preimages(&self) -> Vec<Vec<usize>> {
        let mut pre = vec![Vec::new(); self.n_target];
        for (i, &t) in self.targets.iter().enumerate() {
            pre[t].push(i);
        }
        pre
    }

    /// Number of distinct target vertices hit.
    pub fn covered_count(&self) -> usize {
        self.preimage_counts().iter().filter(|&&c| c > 0).count()
    }

    /// Fraction of `self` entries equal to their index.
    pub fn identity_fraction(&self) -> f64 {
        if self.targets.is_empty() {
            return 0.0;
        }
        self.targets.iter().enumerate().filter(|(i, &t)| *i == t).count() as f64 / self.targets.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_and_composition() {
        assert!(matches!(
            PointMap::new(vec![0, 3], 3),
            Err(Error::MapIndexOutOfRange { position: 1, index: 3, n_target: 3 })
        ));
        let a = PointMap::new(vec![2, 0, 1], 3).unwrap();
        let b = PointMap::new(vec![1, 2, 0], 3).unwrap();
        assert_eq!(a.then(&b).unwrap(), PointMap::identity(3));
        let c = PointMap::constant(4, 1, 3).unwrap();
        assert_eq!(c.preimage_counts(), vec![0, 4, 0]);
        assert_eq!(c.covered_count(), 1);
        assert_eq!(c.preimages()[1], vec![0, 1, 2, 3]);
        assert_eq!(PointMap::identity(5).identity_fraction(), 1.0);
    }
}
