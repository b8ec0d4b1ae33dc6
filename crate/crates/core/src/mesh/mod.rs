//! Triangle meshes and the differential-geometry primitives built on them.
//!
//! A [`TriangleMesh`] is immutable once constructed: every derived quantity
//! (face areas, unit normals, one-rings, the undirected edge list) is computed
//! by [`TriangleMesh::new`], which also validates the input.

mod geodesic;
mod gradient;
mod graph;
pub mod io;
pub mod shapes;

use std::collections::HashMap;

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub use geodesic::{geodesic_distances, DistanceField, GeodesicCache};
pub use gradient::{face_gradient, hat_gradients};
pub use graph::{connected_components, largest_connected_component, largest_component_of_subset};

pub type Vec3 = Vector3<f64>;

/// Relative area below which a face counts as degenerate.
const DEGENERATE_AREA: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    face_areas: Vec<f64>,
    face_normals: Vec<Vec3>,
    neighbors: Vec<Vec<usize>>,
    edges: Vec<[usize; 2]>,
    vertex_faces: Vec<Vec<usize>>,
    total_area: f64,
    closed: bool,
}

impl TriangleMesh {
    /// Builds a mesh and all derived connectivity.
    ///
    /// Faces of a closed mesh whose signed volume is negative are flipped so
    /// that normals point outward.
    pub fn new(vertices: Vec<Vec3>, mut faces: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                if v >= n {
                    return Err(Error::IndexOutOfRange {
                        face: fi,
                        index: v,
                        n_vertices: n,
                    });
                }
            }
        }

        let scale = bbox_diagonal(&vertices).max(f64::MIN_POSITIVE);
        for (fi, f) in faces.iter().enumerate() {
            let area = raw_area(&vertices, f);
            if !(area > DEGENERATE_AREA * scale * scale) || f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::DegenerateFace { face: fi });
            }
        }

        // Every directed edge may appear once; an undirected edge at most twice.
        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(faces.len() * 3);
        for f in &faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let count = directed.entry((a, b)).or_insert(0);
                *count += 1;
                if *count > 1 {
                    return Err(Error::InconsistentWinding { a, b });
                }
            }
        }
        let closed = !faces.is_empty()
            && directed.keys().all(|&(a, b)| directed.contains_key(&(b, a)));

        if closed && signed_volume(&vertices, &faces) < 0.0 {
            for f in &mut faces {
                f.swap(1, 2);
            }
        }

        let mut face_areas = Vec::with_capacity(faces.len());
        let mut face_normals = Vec::with_capacity(faces.len());
        for f in &faces {
            let c = (vertices[f[1]] - vertices[f[0]]).cross(&(vertices[f[2]] - vertices[f[0]]));
            let norm = c.norm();
            face_areas.push(0.5 * norm);
            face_normals.push(c / norm);
        }
        let total_area = face_areas.iter().sum();

        let mut neighbors = vec![Vec::new(); n];
        let mut vertex_faces = vec![Vec::new(); n];
        for (fi, f) in faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                neighbors[a].push(b);
                neighbors[b].push(a);
                vertex_faces[f[k]].push(fi);
            }
        }
        for ring in &mut neighbors {
            ring.sort_unstable();
            ring.dedup();
        }
        let edges = neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, ring)| ring.iter().filter(move |&&j| j > i).map(move |&j| [i, j]))
            .collect();

        Ok(Self {
            vertices,
            faces,
            face_areas,
            face_normals,
            neighbors,
            edges,
            vertex_faces,
            total_area,
            closed,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Vec3 {
        self.vertices[i]
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn face_areas(&self) -> &[f64] {
        &self.face_areas
    }

    pub fn face_normals(&self) -> &[Vec3] {
        &self.face_normals
    }

    /// Sorted one-ring of vertex `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// Faces incident to vertex `i`.
    pub fn vertex_faces(&self, i: usize) -> &[usize] {
        &self.vertex_faces[i]
    }

    /// Undirected edges `[i, j]` with `i < j`, sorted lexicographically.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn total_area(&self) -> f64 {
        self.total_area
    }

    /// True when every edge is shared by exactly two faces.
    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Barycentric vertex areas: a third of the incident face areas.
    pub fn vertex_areas(&self) -> Vec<f64> {
        let mut areas = vec![0.0; self.n_vertices()];
        for (f, &a) in self.faces.iter().zip(&self.face_areas) {
            for &v in f {
                areas[v] += a / 3.0;
            }
        }
        areas
    }

    /// Area-weighted vertex normals, normalized.
    pub fn vertex_normals(&self) -> Vec<Vec3> {
        let mut normals = vec![Vec3::zeros(); self.n_vertices()];
        for ((f, &a), n) in self.faces.iter().zip(&self.face_areas).zip(&self.face_normals) {
            for &v in f {
                normals[v] += n * a;
            }
        }
        for n in &mut normals {
            let len = n.norm();
            if len > 0.0 {
                *n /= len;
            }
        }
        normals
    }

    pub fn edge_length(&self, e: [usize; 2]) -> f64 {
        (self.vertices[e[0]] - self.vertices[e[1]]).norm()
    }

    pub fn max_edge_length(&self) -> f64 {
        self.edges.iter().map(|&e| self.edge_length(e)).fold(0.0, f64::max)
    }

    pub fn mean_edge_length(&self) -> f64 {
        if self.edges.is_empty() {
            return 0.0;
        }
        self.edges.iter().map(|&e| self.edge_length(e)).sum::<f64>() / self.edges.len() as f64
    }

    /// Signed enclosed volume (meaningful for closed meshes).
    pub fn signed_volume(&self) -> f64 {
        signed_volume(&self.vertices, &self.faces)
    }

    /// Copy with every vertex transformed by `f`; connectivity is kept.
    pub fn map_vertices(&self, f: impl Fn(Vec3) -> Vec3) -> Result<Self> {
        Self::new(self.vertices.iter().map(|&v| f(v)).collect(), self.faces.clone())
    }

    /// Mirror image through the plane `x = 0`, with faces rewound so the
    /// normals still point outward. Vertex indices are preserved.
    pub fn mirrored(&self) -> Result<Self> {
        let vertices = self.vertices.iter().map(|v| Vec3::new(-v.x, v.y, v.z)).collect();
        let faces = self.faces.iter().map(|f| [f[0], f[2], f[1]]).collect();
        Self::new(vertices, faces)
    }
}

fn raw_area(vertices: &[Vec3], f: &[usize; 3]) -> f64 {
    0.5 * (vertices[f[1]] - vertices[f[0]])
        .cross(&(vertices[f[2]] - vertices[f[0]]))
        .norm()
}

fn signed_volume(vertices: &[Vec3], faces: &[[usize; 3]]) -> f64 {
    faces
        .iter()
        .map(|f| vertices[f[0]].dot(&vertices[f[1]].cross(&vertices[f[2]])) / 6.0)
        .sum()
}

fn bbox_diagonal(vertices: &[Vec3]) -> f64 {
    if vertices.is_empty() {
        return 0.0;
    }
    let mut lo = vertices[0];
    let mut hi = vertices[0];
    for v in vertices {
        lo = lo.inf(v);
        hi = hi.sup(v);
    }
    (hi - lo).norm()
}
