//! Procedural meshes used by tests, benchmarks and the fixture generators.

use std::collections::HashMap;
use std::f64::consts::PI;

use super::{TriangleMesh, Vec3};

const ICOSAHEDRON_FACES: [[usize; 3]; 20] = [
    [0, 11, 5],
    [0, 5, 1],
    [0, 1, 7],
    [0, 7, 10],
    [0, 10, 11],
    [1, 5, 9],
    [5, 11, 4],
    [11, 10, 2],
    [10, 7, 6],
    [7, 1, 8],
    [3, 9, 4],
    [3, 4, 2],
    [3, 2, 6],
    [3, 6, 8],
    [3, 8, 9],
    [4, 9, 5],
    [2, 4, 11],
    [6, 2, 10],
    [8, 6, 7],
    [9, 8, 1],
];

fn icosahedron_vertices() -> Vec<Vec3> {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|p| Vec3::new(p[0], p[1], p[2]).normalize())
    .collect()
}

/// Regular icosahedron inscribed in the unit sphere.
pub fn icosahedron() -> TriangleMesh {
    TriangleMesh::new(icosahedron_vertices(), ICOSAHEDRON_FACES.to_vec()).expect("valid icosahedron")
}

/// Unit sphere obtained by splitting every icosahedron face into
/// `frequency²` triangles and projecting onto the sphere.
///
/// Has `10·frequency² + 2` vertices.
pub fn geodesic_sphere(frequency: usize) -> TriangleMesh {
    assert!(frequency >= 1, "frequency must be positive");
    let base = icosahedron_vertices();
    let nu = frequency as f64;
    let mut vertices = Vec::new();
    let mut index: HashMap<[i64; 3], usize> = HashMap::new();
    let mut faces = Vec::with_capacity(20 * frequency * frequency);
    for f in ICOSAHEDRON_FACES {
        let (a, b, c) = (base[f[0]], base[f[1]], base[f[2]]);
        let mut local = HashMap::new();
        for i in 0..=frequency {
            for j in 0..=frequency - i {
                let p = (a + (b - a) * (i as f64 / nu) + (c - a) * (j as f64 / nu)).normalize();
                let key = [(p.x * 1e9).round() as i64, (p.y * 1e9).round() as i64, (p.z * 1e9).round() as i64];
                let id = *index.entry(key).or_insert_with(|| {
                    vertices.push(p);
                    vertices.len() - 1
                });
                local.insert((i, j), id);
            }
        }
        for i in 0..frequency {
            for j in 0..frequency - i {
                faces.push([local[&(i, j)], local[&(i + 1, j)], local[&(i, j + 1)]]);
                if i + j + 1 < frequency {
                    faces.push([local[&(i + 1, j)], local[&(i + 1, j + 1)], local[&(i, j + 1)]]);
                }
            }
        }
    }
    TriangleMesh::new(vertices, faces).expect("valid geodesic sphere")
}

/// Unit icosphere after `subdivisions` rounds of 1-to-4 splitting
/// (`10·4^s + 2` vertices).
pub fn icosphere(subdivisions: u32) -> TriangleMesh {
    geodesic_sphere(1 << subdivisions)
}

/// Flat `nx × ny` vertex grid spanning `[0, width] × [0, height]` in the
/// z = 0 plane. Vertex `(i, j)` has index `j·nx + i`.
pub fn grid(nx: usize, ny: usize, width: f64, height: f64) -> TriangleMesh {
    assert!(nx >= 2 && ny >= 2, "grid needs at least 2x2 vertices");
    let mut vertices = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            vertices.push(Vec3::new(
                width * i as f64 / (nx - 1) as f64,
                height * j as f64 / (ny - 1) as f64,
                0.0,
            ));
        }
    }
    let mut faces = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let a = j * nx + i;
            let (b, c) = (a + 1, a + nx);
            let d = c + 1;
            faces.push([a, b, d]);
            faces.push([a, d, c]);
        }
    }
    TriangleMesh::new(vertices, faces).expect("valid grid")
}

/// Torus around the z axis with major radius `major` and tube radius `minor`.
pub fn torus(n_major: usize, n_minor: usize, major: f64, minor: f64) -> TriangleMesh {
    assert!(n_major >= 3 && n_minor >= 3);
    let mut vertices = Vec::with_capacity(n_major * n_minor);
    for i in 0..n_major {
        let u = 2.0 * PI * i as f64 / n_major as f64;
        for j in 0..n_minor {
            let v = 2.0 * PI * j as f64 / n_minor as f64;
            let r = major + minor * v.cos();
            vertices.push(Vec3::new(r * u.cos(), r * u.sin(), minor * v.sin()));
        }
    }
    let id = |i: usize, j: usize| (i % n_major) * n_minor + (j % n_minor);
    let mut faces = Vec::with_capacity(2 * n_major * n_minor);
    for i in 0..n_major {
        for j in 0..n_minor {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            faces.push([a, b, d]);
            faces.push([a, d, c]);
        }
    }
    TriangleMesh::new(vertices, faces).expect("valid torus")
}

/// Open tube along the z axis from `z = 0` to `z = length`.
///
/// `radius(s)` gives the tube radius at normalized height `s ∈ [0, 1]`.
/// Ring `j` holds vertices `j·n_around .. (j+1)·n_around`.
pub fn tube(n_around: usize, n_along: usize, length: f64, radius: impl Fn(f64) -> f64) -> TriangleMesh {
    assert!(n_around >= 3 && n_along >= 2);
    let mut vertices = Vec::with_capacity(n_around * n_along);
    for j in 0..n_along {
        let s = j as f64 / (n_along - 1) as f64;
        let r = radius(s);
        // Alternate rings are rotated by half a step for better-shaped triangles.
        let shift = if j % 2 == 1 { 0.5 } else { 0.0 };
        for i in 0..n_around {
            let u = 2.0 * PI * (i as f64 + shift) / n_around as f64;
            vertices.push(Vec3::new(r * u.cos(), r * u.sin(), length * s));
        }
    }
    let id = |i: usize, j: usize| j * n_around + (i % n_around);
    let mut faces = Vec::with_capacity(2 * n_around * (n_along - 1));
    for j in 0..n_along - 1 {
        for i in 0..n_around {
            if j % 2 == 0 {
                faces.push([id(i, j), id(i + 1, j), id(i, j + 1)]);
                faces.push([id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
            } else {
                faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
                faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            }
        }
    }
    TriangleMesh::new(vertices, faces).expect("valid tube")
}
