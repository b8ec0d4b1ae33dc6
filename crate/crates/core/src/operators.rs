//! Reduced-basis operators attached to descriptor functions.
//!
//! A multiplicative operator represents pointwise multiplication by `f`.
//! An orientation operator represents `h ↦ ⟨∇f × ∇h, n⟩`, which changes
//! sign under reflections; commuting with it distinguishes direct maps from
//! mirrored ones.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sprs::{CsMat, TriMat};

use crate::error::{Error, Result};
use crate::mesh::{face_gradient, TriangleMesh};
use crate::spectral::{sparse_mul, DescriptorSet, SpectralBasis};

/// Faces smaller than this fraction of the mean face area contribute nothing
/// to orientation operators.
pub const MIN_FACE_AREA_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Preserve,
    Reverse,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Preserve => 1.0,
            Orientation::Reverse => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Multiplicative,
    Orientation,
}

/// A k × k operator acting on reduced coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedOperator {
    pub matrix: DMatrix<f64>,
    pub kind: OperatorKind,
    /// Descriptor column the operator was built from, if any.
    pub descriptor: Option<usize>,
}

fn check_len(basis: &SpectralBasis, f: &[f64]) -> Result<()> {
    if f.len() != basis.n() {
        return Err(Error::DimensionMismatch {
            what: "per-vertex function length",
            expected: basis.n(),
            got: f.len(),
        });
    }
    Ok(())
}

/// `Φᵀ M diag(f) Φ`.
pub fn multiplicative_operator(basis: &SpectralBasis, f: &[f64]) -> Result<ReducedOperator> {
    check_len(basis, f)?;
    let phi = basis.phi();
    let mut weighted = phi.clone();
    for (i, mut row) in weighted.row_iter_mut().enumerate() {
        row *= basis.mass()[i] * f[i];
    }
    let m = phi.tr_mul(&weighted);
    Ok(ReducedOperator {
        matrix: (&m + m.transpose()) * 0.5,
        kind: OperatorKind::Multiplicative,
        descriptor: None,
    })
}

/// Per-face values `⟨∇f × ∇g, n⟩` of the piecewise-linear gradients.
pub fn orientation_density(mesh: &TriangleMesh, f: &[f64], g: &[f64]) -> Result<Vec<f64>> {
    let gf = face_gradient(mesh, f)?;
    let gg = face_gradient(mesh, g)?;
    Ok(gf
        .iter()
        .zip(&gg)
        .zip(mesh.face_normals())
        .map(|((a, b), n)| a.cross(b).dot(n))
        .collect())
}

/// Sparse `n × n` matrix `S_f` with `(S_f h)(v)` the area-weighted average of
/// `⟨n × ∇f, ∇h⟩` over the faces around `v`.
pub fn orientation_vertex_operator(mesh: &TriangleMesh, f: &[f64]) -> Result<CsMat<f64>> {
    let (rows, _) = orientation_stencil(mesh, f, false)?;
    Ok(rows)
}

/// Applies [`orientation_vertex_operator`] of `f` to `h`.
pub fn orientation_apply(mesh: &TriangleMesh, f: &[f64], h: &[f64]) -> Result<Vec<f64>> {
    if h.len() != mesh.n_vertices() {
        return Err(Error::DimensionMismatch {
            what: "per-vertex function length",
            expected: mesh.n_vertices(),
            got: h.len(),
        });
    }
    let s = orientation_vertex_operator(mesh, f)?;
    Ok(s.outer_iterator()
        .map(|row| row.iter().map(|(j, &v)| v * h[j]).sum())
        .collect())
}

/// Returns `S_f` (or `M S_f` when `mass_weighted`) together with the vertex
/// ring areas.
fn orientation_stencil(mesh: &TriangleMesh, f: &[f64], mass_weighted: bool) -> Result<(CsMat<f64>, Vec<f64>)> {
    let n = mesh.n_vertices();
    let grad = face_gradient(mesh, f)?;
    let mean_area = mesh.total_area() / mesh.n_faces().max(1) as f64;
    let mut ring_area = vec![0.0; n];
    for (face, &a) in mesh.faces().iter().zip(mesh.face_areas()) {
        for &v in face {
            ring_area[v] += a;
        }
    }
    let mut tri = TriMat::with_capacity((n, n), mesh.n_faces() * 9);
    for (t, face) in mesh.faces().iter().enumerate() {
        let area = mesh.face_areas()[t];
        if area < MIN_FACE_AREA_RATIO * mean_area {
            continue;
        }
        let p = [mesh.vertex(face[0]), mesh.vertex(face[1]), mesh.vertex(face[2])];
        let e = [p[2] - p[1], p[0] - p[2], p[1] - p[0]];
        // ⟨n × ∇f, ∇φ_i⟩ = ⟨n × ∇f, n × e_i⟩ / 2A = ⟨∇f, e_i⟩ / 2A.
        let c: [f64; 3] = std::array::from_fn(|i| grad[t].dot(&e[i]) / (2.0 * area));
        for &v in face {
            let w = if mass_weighted { area / 3.0 } else { area / ring_area[v] };
            for i in 0..3 {
                tri.add_triplet(v, face[i], w * c[i]);
            }
        }
    }
    Ok((tri.to_csr(), ring_area))
}

/// `sign · Φᵀ M S_f Φ`.
pub fn orientation_operator(
    mesh: &TriangleMesh,
    basis: &SpectralBasis,
    f: &[f64],
    orientation: Orientation,
) -> Result<ReducedOperator> {
    check_len(basis, f)?;
    if mesh.n_vertices() != basis.n() {
        return Err(Error::DimensionMismatch {
            what: "mesh and basis vertex count",
            expected: basis.n(),
            got: mesh.n_vertices(),
        });
    }
    let (ms, _) = orientation_stencil(mesh, f, true)?;
    let msphi = sparse_mul(&ms, basis.phi());
    let m = basis.phi().tr_mul(&msphi) * orientation.sign();
    Ok(ReducedOperator {
        matrix: m,
        kind: OperatorKind::Orientation,
        descriptor: None,
    })
}

/// Reduced operators built from selected descriptor columns.
#[derive(Debug, Clone, Default)]
pub struct DescriptorOperators {
    pub multiplicative: Vec<ReducedOperator>,
    pub orientation: Vec<ReducedOperator>,
}

/// Multiplicative operators for every listed column and, when `orientation`
/// is given, orientation operators with that sign.
pub fn descriptor_operators(
    mesh: &TriangleMesh,
    basis: &SpectralBasis,
    descriptors: &DescriptorSet,
    columns: &[usize],
    orientation: Option<Orientation>,
) -> Result<DescriptorOperators> {
    let built: Result<Vec<(ReducedOperator, Option<ReducedOperator>)>> = columns
        .par_iter()
        .map(|&j| {
            let f = descriptors.column(j);
            let mut mult = multiplicative_operator(basis, &f)?;
            mult.descriptor = Some(j);
            let orient = match orientation {
                Some(o) => {
                    let mut op = orientation_operator(mesh, basis, &f, o)?;
                    op.descriptor = Some(j);
                    Some(op)
                }
                None => None,
            };
            Ok((mult, orient))
        })
        .collect();
    let mut out = DescriptorOperators::default();
    for (m, o) in built? {
        out.multiplicative.push(m);
        out.orientation.extend(o);
    }
    Ok(out)
}
