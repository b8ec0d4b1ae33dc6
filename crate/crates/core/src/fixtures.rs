//! Synthetic shape pairs with correspondences known by construction.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::eval::GroundTruth;
use crate::fmap::PointMap;
use crate::mesh::{shapes, TriangleMesh, Vec3};

/// Two meshes with the same vertex count and a known source-to-target map.
#[derive(Debug, Clone)]
pub struct ShapePair {
    pub source: TriangleMesh,
    pub target: TriangleMesh,
    pub ground_truth: GroundTruth,
}

/// Elongated blob that is almost symmetric under `x → −x`; `asymmetry`
/// scales the only term that breaks the symmetry. 1002 vertices.
pub fn lopsided_blob(asymmetry: f64) -> TriangleMesh {
    shapes::geodesic_sphere(10)
        .map_vertices(|v| {
            let bulge = 1.0 + 0.25 * v.z + 0.2 * v.y * v.y - 0.15 * v.z * v.z * v.y + asymmetry * v.x * (v.y + 0.5 * v.z);
            Vec3::new(0.7 * v.x, 0.9 * v.y, 1.6 * v.z) * bulge
        })
        .expect("valid blob")
}

/// A blob and its mirror image. Vertex `i` of the mirror is the reflection of
/// vertex `i`, so the identity is an exact isometry that reverses
/// orientation; the orientation-preserving candidate is the blob's own
/// near-symmetry.
pub fn mirrored_pair(asymmetry: f64) -> ShapePair {
    let source = lopsided_blob(asymmetry);
    let target = source.mirrored().expect("mirror of a valid mesh");
    let n = source.n_vertices();
    ShapePair {
        source,
        target,
        ground_truth: GroundTruth::direct(PointMap::identity(n)),
    }
}

/// The vertex permutation of [`lopsided_blob`] induced by `x → −x` on the
/// underlying sphere.
pub fn blob_reflection() -> PointMap {
    let sphere = shapes::geodesic_sphere(10);
    let key = |p: Vec3| [(p.x * 1e6).round() as i64, (p.y * 1e6).round() as i64, (p.z * 1e6).round() as i64];
    let index: std::collections::HashMap<_, _> = (0..sphere.n_vertices()).map(|i| (key(sphere.vertex(i)), i)).collect();
    let targets = (0..sphere.n_vertices())
        .map(|i| {
            let p = sphere.vertex(i);
            index[&key(Vec3::new(-p.x, p.y, p.z))]
        })
        .collect();
    PointMap::new(targets, sphere.n_vertices()).expect("reflection stays on the sphere")
}

/// Open tube of 1000 vertices with an irregular cross-section, lying along
/// the z axis from 0 to 2.
pub fn wobbly_tube() -> TriangleMesh {
    wobbly_tube_with(25, 40)
}

/// The surface of [`wobbly_tube`] sampled with `n_around × n_along` vertices.
pub fn wobbly_tube_with(n_around: usize, n_along: usize) -> TriangleMesh {
    shapes::tube(n_around, n_along, 2.0, |s| 0.3 + 0.08 * s + 0.04 * (3.0 * s).sin())
        .map_vertices(|v| {
            let theta = v.y.atan2(v.x);
            let s = v.z / 2.0;
            let radial = 1.0 + 0.12 * (theta + 1.5 * s).cos() + 0.06 * (2.0 * theta).sin();
            Vec3::new(v.x * radial, v.y * radial, v.z)
        })
        .expect("valid tube")
}

/// Bends the z axis onto a circular arc of total angle `angle` in the x–z
/// plane, keeping the arc length of the axis.
pub fn bend(mesh: &TriangleMesh, angle: f64) -> Result<TriangleMesh> {
    let length = mesh.vertices().iter().map(|v| v.z).fold(0.0, f64::max);
    let radius = length / angle;
    mesh.map_vertices(|v| {
        let phi = v.z / radius;
        let r = radius - v.x;
        Vec3::new(radius - r * phi.cos(), v.y, r * phi.sin())
    })
}

/// [`wobbly_tube`] and a copy bent by 60 degrees, with identity ground truth.
pub fn bent_cylinder() -> ShapePair {
    let source = wobbly_tube();
    let target = bend(&source, std::f64::consts::FRAC_PI_3).expect("bent tube is valid");
    let n = source.n_vertices();
    ShapePair {
        source,
        target,
        ground_truth: GroundTruth::direct(PointMap::identity(n)),
    }
}

/// Copy of `map` with `fraction` of its entries (chosen at random) sent to
/// uniformly random targets.
pub fn corrupt(map: &PointMap, fraction: f64, seed: u64) -> PointMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = map.len();
    let count = ((fraction * n as f64).round() as usize).min(n);
    let mut out = map.clone();
    for i in sample(&mut rng, n, count) {
        out.set(i, rng.random_range(0..map.n_target()));
    }
    out
}
