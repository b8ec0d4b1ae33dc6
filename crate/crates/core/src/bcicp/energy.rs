use serde::Serialize;

use super::RefinementState;
use crate::error::Result;
use crate::spectral::SpectralBasis;

/// Terms of the refinement energy, each an unweighted squared Frobenius norm.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub total: f64,
    /// `‖Φ₂C₁₂ − π₂₁Φ₁‖²`
    pub e1: f64,
    /// `‖Φ₁C₂₁ − π₁₂Φ₂‖²`
    pub e2: f64,
    /// `‖Φ₁C₁₁ − π₁₂π₂₁Φ₁‖²`
    pub e3: f64,
    /// `‖Φ₂C₂₂ − π₂₁π₁₂Φ₂‖²`
    pub e4: f64,
}

/// Evaluates the weighted sum `λ₁E₁ + λ₂E₂ + λ₃E₃ + λ₄E₄`.
pub fn refinement_energy(
    state: &RefinementState,
    source: &SpectralBasis,
    target: &SpectralBasis,
    lambdas: [f64; 4],
) -> Result<EnergyBreakdown> {
    let (phi1, phi2) = (source.phi(), target.phi());
    let e1 = (phi2 * &state.c12 - source.gather_rows(state.t21.as_slice())).norm_squared();
    let e2 = (phi1 * &state.c21 - target.gather_rows(state.t12.as_slice())).norm_squared();
    // π₁₂π₂₁Φ₁ has row i equal to Φ₁[T₂₁(T₁₂(i))].
    let loop1 = state.t12.then(&state.t21)?;
    let loop2 = state.t21.then(&state.t12)?;
    let e3 = (phi1 * &state.c11 - source.gather_rows(loop1.as_slice())).norm_squared();
    let e4 = (phi2 * &state.c22 - target.gather_rows(loop2.as_slice())).norm_squared();
    Ok(EnergyBreakdown {
        total: lambdas[0] * e1 + lambdas[1] * e2 + lambdas[2] * e3 + lambdas[3] * e4,
        e1,
        e2,
        e3,
        e4,
    })
}
