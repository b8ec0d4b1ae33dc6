use super::nn::nearest_rows;
use super::{FunctionalMap, PointMap, Provenance};
use crate::error::{Error, Result};
use crate::spectral::SpectralBasis;

/// Point map from target to source induced by `c12`: target vertex `i` goes
/// to the source vertex whose row of `Φ₁` is nearest to row `i` of `Φ₂ C₁₂`.
pub fn fmap_to_pointmap(source: &SpectralBasis, target: &SpectralBasis, c12: &FunctionalMap) -> Result<PointMap> {
    let c = &c12.matrix;
    if c.nrows() != target.k() || c.ncols() != source.k() {
        return Err(Error::DimensionMismatch {
            what: "functional map shape (target k x source k)",
            expected: target.k() * source.k(),
            got: c.nrows() * c.ncols(),
        });
    }
    let queries = target.phi() * c;
    PointMap::new(nearest_rows(&queries, source.phi()), source.n())
}

/// Least-squares functional map `C₁₂ = Φ₂ᵀ M₂ Φ₁[T₂₁]` of a target-to-source
/// point map.
pub fn pointmap_to_fmap(source: &SpectralBasis, target: &SpectralBasis, t21: &PointMap) -> Result<FunctionalMap> {
    if t21.n_source() != target.n() || t21.n_target() != source.n() {
        return Err(Error::DimensionMismatch {
            what: "point map length (target vertices)",
            expected: target.n(),
            got: t21.n_source(),
        });
    }
    let pulled = source.gather_rows(t21.as_slice());
    Ok(FunctionalMap::new(target.project(&pulled)?, Provenance::Initialized))
}
