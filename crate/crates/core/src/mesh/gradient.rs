use super::{TriangleMesh, Vec3};
use crate::error::{Error, Result};

/// Gradients of the three hat functions of face `t`, in face-vertex order.
///
/// For vertex `i` with opposite edge `e_i` (counter-clockwise), the gradient
/// of its hat function is `n × e_i / (2A)`.
pub fn hat_gradients(mesh: &TriangleMesh, t: usize) -> [Vec3; 3] {
    let f = mesh.faces()[t];
    let n = mesh.face_normals()[t];
    let two_area = 2.0 * mesh.face_areas()[t];
    let p = [mesh.vertex(f[0]), mesh.vertex(f[1]), mesh.vertex(f[2])];
    let e = [p[2] - p[1], p[0] - p[2], p[1] - p[0]];
    [
        n.cross(&e[0]) / two_area,
        n.cross(&e[1]) / two_area,
        n.cross(&e[2]) / two_area,
    ]
}

/// Piecewise-linear gradient of a per-vertex function, one vector per face.
pub fn face_gradient(mesh: &TriangleMesh, f: &[f64]) -> Result<Vec<Vec3>> {
    if f.len() != mesh.n_vertices() {
        return Err(Error::DimensionMismatch {
            what: "per-vertex function length",
            expected: mesh.n_vertices(),
            got: f.len(),
        });
    }
    Ok((0..mesh.n_faces())
        .map(|t| {
            let face = mesh.faces()[t];
            let g = hat_gradients(mesh, t);
            g[0] * f[face[0]] + g[1] * f[face[1]] + g[2] * f[face[2]]
        })
        .collect())
}
