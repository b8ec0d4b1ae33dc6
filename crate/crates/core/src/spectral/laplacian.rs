use nalgebra::DMatrix;
use sprs::{CsMat, TriMat};

use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;

/// Cotangent weights above this magnitude indicate a sliver triangle.
pub const MAX_COTANGENT: f64 = 1e8;

/// Discrete Laplace–Beltrami operator as a stiffness/mass pair.
///
/// `stiffness` is the positive semidefinite cotangent matrix with
/// `W_ij = -(cot α_ij + cot β_ij) / 2` off the diagonal and zero row sums;
/// `mass` holds the diagonal of the barycentric lumped mass matrix.
#[derive(Debug, Clone)]
pub struct Laplacian {
    pub stiffness: CsMat<f64>,
    pub mass: Vec<f64>,
}

impl Laplacian {
    pub fn n(&self) -> usize {
        self.mass.len()
    }

    /// Dense copy of the stiffness matrix (for tests and small meshes).
    pub fn stiffness_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut d = DMatrix::zeros(n, n);
        for (&v, (i, j)) in self.stiffness.iter() {
            d[(i, j)] += v;
        }
        d
    }
}

pub fn build_laplacian(mesh: &TriangleMesh) -> Result<Laplacian> {
    let n = mesh.n_vertices();
    let mut tri = TriMat::with_capacity((n, n), mesh.n_faces() * 9);
    for (fi, f) in mesh.faces().iter().enumerate() {
        for k in 0..3 {
            // Angle at f[k] is opposite the edge (f[k+1], f[k+2]).
            let (o, i, j) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
            let a = mesh.vertex(i) - mesh.vertex(o);
            let b = mesh.vertex(j) - mesh.vertex(o);
            let cot = a.dot(&b) / a.cross(&b).norm();
            if !(cot.abs() <= MAX_COTANGENT) {
                return Err(Error::NumericalDegeneracy { face: fi, weight: cot });
            }
            let w = 0.5 * cot;
            tri.add_triplet(i, j, -w);
            tri.add_triplet(j, i, -w);
            tri.add_triplet(i, i, w);
            tri.add_triplet(j, j, w);
        }
    }
    Ok(Laplacian {
        stiffness: tri.to_csr(),
        mass: mesh.vertex_areas(),
    })
}

/// Sparse product `W x` for a dense block `x`.
pub(crate) fn sparse_mul(w: &CsMat<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(w.rows(), x.ncols());
    for c in 0..x.ncols() {
        let xc = x.column(c);
        let mut oc = out.column_mut(c);
        for (i, row) in w.outer_iterator().enumerate() {
            let mut s = 0.0;
            for (j, &v) in row.iter() {
                s += v * xc[j];
            }
            oc[i] = s;
        }
    }
    out
}
