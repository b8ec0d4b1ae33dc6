//! End-to-end matching: eigenbases, descriptors, operator-regularized initial
//! maps in both directions, then refinement.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::bcicp::{bcicp_refine, Refinement, RefineConfig, RefinementState, Shape};
use crate::error::{Error, Result};
use crate::fmap::{
    resolve_weights, solve_initial_map, EnergyWeights, InitialMapProblem, InitialMapSolution, OperatorPair,
};
use crate::mesh::TriangleMesh;
use crate::operators::{descriptor_operators, DescriptorOperators, Orientation};
use crate::spectral::{build_laplacian, eigenbasis, wks, DescriptorSet, SpectralBasis};

/// Where per-vertex descriptors come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DescriptorSource {
    /// Wave kernel signatures computed from each shape's spectrum.
    Wks { energies: usize, eigs: usize },
    /// Externally supplied `n × q` matrices, one per shape, with matching `q`.
    External { source: DMatrix<f64>, target: DMatrix<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchConfig {
    /// Basis size on both shapes.
    pub k: usize,
    pub descriptors: DescriptorSource,
    /// Every this many descriptor columns yield an operator pair.
    pub operator_stride: usize,
    /// Relative initialization weights, resolved by [`resolve_weights`].
    pub weights: EnergyWeights,
    /// Orientation term sign; `None` leaves the term out.
    pub orientation: Option<Orientation>,
    pub refine: RefineConfig,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            k: 50,
            descriptors: DescriptorSource::Wks { energies: 100, eigs: 50 },
            operator_stride: 10,
            weights: EnergyWeights {
                descriptors: 1.0,
                multiplicative: 1.0,
                laplacian: 1e-2,
                orientation: 1.0,
            },
            orientation: Some(Orientation::Preserve),
            refine: RefineConfig::bcicp(),
        }
    }
}

/// Eigenbasis and descriptors of one shape.
#[derive(Debug, Clone)]
pub struct PreparedShape {
    pub basis: SpectralBasis,
    pub descriptors: DescriptorSet,
}

/// Summary of one initial-map solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitialSolveSummary {
    pub weights: EnergyWeights,
    pub energy: f64,
    pub zero_energy: f64,
    pub descriptor_only_energy: f64,
    pub regularized: bool,
}

impl From<&InitialMapSolution> for InitialSolveSummary {
    fn from(s: &InitialMapSolution) -> Self {
        Self {
            weights: s.weights,
            energy: s.energy,
            zero_energy: s.zero_energy,
            descriptor_only_energy: s.descriptor_only_energy,
            regularized: s.regularized,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MatchResult {
    pub source: PreparedShape,
    pub target: PreparedShape,
    /// Initial source-to-target functional map.
    pub c12: DMatrix<f64>,
    /// Initial target-to-source functional map.
    pub c21: DMatrix<f64>,
    pub solve12: InitialSolveSummary,
    pub solve21: InitialSolveSummary,
    pub refinement: Refinement,
}

/// Scales each column to unit mass-weighted norm; all-zero columns stay zero.
fn normalize_columns(raw: &mut DMatrix<f64>, mass: &[f64]) {
    for mut col in raw.column_iter_mut() {
        let norm = col.iter().zip(mass).map(|(x, m)| m * x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            col /= norm;
        }
    }
}

fn raw_descriptors(mesh: &TriangleMesh, k: usize, source: &DescriptorSource, external: Option<&DMatrix<f64>>) -> Result<PreparedShape> {
    let lap = build_laplacian(mesh)?;
    let (basis, mut raw) = match source {
        DescriptorSource::Wks { energies, eigs } => {
            let full = eigenbasis(&lap, k.max(*eigs))?;
            let raw = wks(&full, *energies, *eigs)?.raw().clone();
            (full.truncated(k)?, raw)
        }
        DescriptorSource::External { .. } => {
            let raw = external.expect("external descriptors present").clone();
            if raw.nrows() != mesh.n_vertices() {
                return Err(Error::DimensionMismatch {
                    what: "descriptor rows (mesh vertices)",
                    expected: mesh.n_vertices(),
                    got: raw.nrows(),
                });
            }
            (eigenbasis(&lap, k)?, raw)
        }
    };
    normalize_columns(&mut raw, basis.mass());
    let descriptors = DescriptorSet::from_raw(&basis, raw)?;
    Ok(PreparedShape { basis, descriptors })
}

/// Computes the eigenbasis and descriptors of both shapes.
pub fn prepare_pair(source: &TriangleMesh, target: &TriangleMesh, config: &MatchConfig) -> Result<(PreparedShape, PreparedShape)> {
    if config.k < 2 {
        return Err(Error::Config(format!("basis size must be at least 2, got {}", config.k)));
    }
    let (ext_s, ext_t) = match &config.descriptors {
        DescriptorSource::External { source, target } => {
            if source.ncols() != target.ncols() {
                return Err(Error::DimensionMismatch {
                    what: "descriptor column count",
                    expected: source.ncols(),
                    got: target.ncols(),
                });
            }
            (Some(source), Some(target))
        }
        DescriptorSource::Wks { .. } => (None, None),
    };
    let (s, t) = rayon::join(
        || raw_descriptors(source, config.k, &config.descriptors, ext_s),
        || raw_descriptors(target, config.k, &config.descriptors, ext_t),
    );
    Ok((s?, t?))
}

fn operators(mesh: &TriangleMesh, shape: &PreparedShape, stride: usize, orientation: Option<Orientation>) -> Result<DescriptorOperators> {
    let columns = shape.descriptors.strided_columns(stride);
    descriptor_operators(mesh, &shape.basis, &shape.descriptors, &columns, orientation)
}

/// Builds the initialization problem for the map `from → to`. Orientation
/// operators on `from` always preserve orientation; those on `to` carry the
/// requested sign.
pub fn initial_problem(
    from: &PreparedShape,
    to: &PreparedShape,
    from_ops: &DescriptorOperators,
    to_ops: &DescriptorOperators,
) -> InitialMapProblem {
    let pair = |a: &[crate::operators::ReducedOperator], b: &[crate::operators::ReducedOperator]| {
        a.iter()
            .zip(b)
            .map(|(s, t)| OperatorPair {
                source: s.matrix.clone(),
                target: t.matrix.clone(),
            })
            .collect()
    };
    InitialMapProblem {
        source_descriptors: from.descriptors.reduced().clone(),
        target_descriptors: to.descriptors.reduced().clone(),
        source_evals: from.basis.evals().to_vec(),
        target_evals: to.basis.evals().to_vec(),
        multiplicative: pair(&from_ops.multiplicative, &to_ops.multiplicative),
        orientation: pair(&from_ops.orientation, &to_ops.orientation),
    }
}

/// Initial functional maps in both directions.
pub fn initial_maps(
    source_mesh: &TriangleMesh,
    target_mesh: &TriangleMesh,
    source: &PreparedShape,
    target: &PreparedShape,
    config: &MatchConfig,
) -> Result<(InitialMapSolution, InitialMapSolution)> {
    let stride = config.operator_stride;
    let signed = config.orientation;
    let plain = config.orientation.map(|_| Orientation::Preserve);
    let (s_plain, s_signed) = (operators(source_mesh, source, stride, plain)?, operators(source_mesh, source, stride, signed)?);
    let (t_plain, t_signed) = (operators(target_mesh, target, stride, plain)?, operators(target_mesh, target, stride, signed)?);
    let solve = |problem: InitialMapProblem| -> Result<InitialMapSolution> {
        let weights = resolve_weights(&problem, &config.weights);
        solve_initial_map(&problem, &weights)
    };
    let s12 = solve(initial_problem(source, target, &s_plain, &t_signed))?;
    let s21 = solve(initial_problem(target, source, &t_plain, &s_signed))?;
    Ok((s12, s21))
}

/// Full pipeline: prepare both shapes, solve the initial maps, refine.
pub fn match_shapes(source: &TriangleMesh, target: &TriangleMesh, config: &MatchConfig) -> Result<MatchResult> {
    let (ps, pt) = prepare_pair(source, target, config)?;
    let (s12, s21) = initial_maps(source, target, &ps, &pt, config)?;
    let (c12, c21) = (s12.map.matrix.clone(), s21.map.matrix.clone());
    let state = RefinementState::from_fmaps(c12.clone(), c21.clone(), &ps.basis, &pt.basis)?;
    let refinement = bcicp_refine(
        state,
        Shape::new(source, &ps.basis)?,
        Shape::new(target, &pt.basis)?,
        &config.refine,
    )?;
    Ok(MatchResult {
        solve12: (&s12).into(),
        solve21: (&s21).into(),
        source: ps,
        target: pt,
        c12,
        c21,
        refinement,
    })
}

/// Orientation-reversing self-map of one shape.
pub fn self_symmetry(mesh: &TriangleMesh, config: &MatchConfig) -> Result<MatchResult> {
    let config = MatchConfig {
        orientation: Some(Orientation::Reverse),
        ..config.clone()
    };
    match_shapes(mesh, mesh, &config)
}
