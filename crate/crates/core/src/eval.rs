//! Map quality measurements: geodesic accuracy, continuity, coverage,
//! bijectivity, orientation consistency and cumulative error curves.
//!
//! Distances are shortest edge-path lengths divided by the square root of
//! the surface area, so values are comparable across fixtures.

use serde::Serialize;

use crate::bcicp::area_coverage;
use crate::error::{Error, Result};
use crate::fmap::PointMap;
use crate::mesh::{GeodesicCache, TriangleMesh};

/// Number of thresholds sampled by [`cumulative_curve`].
pub const CURVE_SAMPLES: usize = 100;
/// Largest threshold sampled by [`cumulative_curve`].
pub const CURVE_MAX_ERROR: f64 = 0.25;

/// Known correspondences from source to target.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub direct: PointMap,
    /// The correspondence composed with an intrinsic symmetry of the target.
    pub symmetric: Option<PointMap>,
}

impl GroundTruth {
    pub fn direct(direct: PointMap) -> Self {
        Self { direct, symmetric: None }
    }

    pub fn with_symmetric(direct: PointMap, symmetric: PointMap) -> Result<Self> {
        if symmetric.n_source() != direct.n_source() || symmetric.n_target() != direct.n_target() {
            return Err(Error::DimensionMismatch {
                what: "symmetric ground truth size",
                expected: direct.n_source(),
                got: symmetric.n_source(),
            });
        }
        Ok(Self {
            direct,
            symmetric: Some(symmetric),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Accuracy {
    /// Per source vertex, the smaller of the direct and symmetric errors.
    #[serde(skip)]
    pub per_vertex: Vec<f64>,
    /// The smaller of the mean direct and mean symmetric errors.
    pub per_map: f64,
    /// Mean error against the direct correspondence only.
    pub direct: f64,
    /// No symmetric ground truth was given; per-vertex and per-map errors
    /// equal the direct ones.
    pub symmetric_missing: bool,
}

fn check_source_len(what: &'static str, map: &PointMap, expected: usize) -> Result<()> {
    if map.n_source() != expected {
        return Err(Error::DimensionMismatch {
            what,
            expected,
            got: map.n_source(),
        });
    }
    Ok(())
}

fn check_target(map: &PointMap, target: &TriangleMesh) -> Result<()> {
    if map.n_target() != target.n_vertices() {
        return Err(Error::DimensionMismatch {
            what: "point map range (target vertices)",
            expected: target.n_vertices(),
            got: map.n_target(),
        });
    }
    Ok(())
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Geodesic error of `map` against the ground truth on `target`.
pub fn accuracy(map: &PointMap, gt: &GroundTruth, target: &TriangleMesh) -> Result<Accuracy> {
    let cache = GeodesicCache::area_normalized(target);
    accuracy_with(map, gt, &cache)
}

/// [`accuracy`] reusing memoized distance fields.
pub fn accuracy_with(map: &PointMap, gt: &GroundTruth, target: &GeodesicCache<'_>) -> Result<Accuracy> {
    let n = gt.direct.n_source();
    check_source_len("point map length (ground truth)", map, n)?;
    check_target(map, target.mesh())?;
    check_target(&gt.direct, target.mesh())?;
    let errors_to = |truth: &PointMap| -> Vec<f64> {
        target.prefetch(truth.as_slice().iter().copied());
        (0..n).map(|i| target.distance(truth.get(i), map.get(i))).collect()
    };
    let direct = errors_to(&gt.direct);
    let direct_mean = mean(&direct);
    match &gt.symmetric {
        None => Ok(Accuracy {
            per_map: direct_mean,
            direct: direct_mean,
            per_vertex: direct,
            symmetric_missing: true,
        }),
        Some(sym) => {
            check_target(sym, target.mesh())?;
            let symmetric = errors_to(sym);
            Ok(Accuracy {
                per_vertex: direct.iter().zip(&symmetric).map(|(a, b)| a.min(*b)).collect(),
                per_map: direct_mean.min(mean(&symmetric)),
                direct: direct_mean,
                symmetric_missing: false,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Continuity {
    /// One ratio per source edge, in edge order: target geodesic distance
    /// between the mapped endpoints over the source edge length.
    #[serde(skip)]
    pub ratios: Vec<f64>,
    pub mean: f64,
    pub median: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityCoverage {
    pub continuity: Continuity,
    /// Fraction of the target area covered by the image of the map.
    pub coverage: f64,
}

pub fn continuity_and_coverage(map: &PointMap, source: &TriangleMesh, target: &TriangleMesh) -> Result<ContinuityCoverage> {
    check_source_len("point map length (source vertices)", map, source.n_vertices())?;
    check_target(map, target)?;
    let cache = GeodesicCache::with_scale(target, 1.0);
    cache.prefetch(source.edges().iter().map(|e| map.get(e[0])));
    let ratios: Vec<f64> = source
        .edges()
        .iter()
        .map(|&e| cache.distance(map.get(e[0]), map.get(e[1])) / source.edge_length(e))
        .collect();
    let mut sorted = ratios.clone();
    sorted.sort_by(f64::total_cmp);
    let median = match sorted.len() {
        0 => 0.0,
        n if n % 2 == 1 => sorted[n / 2],
        n => 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]),
    };
    Ok(ContinuityCoverage {
        continuity: Continuity {
            mean: mean(&ratios),
            median,
            max: sorted.last().copied().unwrap_or(0.0),
            ratios,
        },
        coverage: area_coverage(map, &target.vertex_areas()),
    })
}

/// Mean normalized geodesic distance between each vertex and its image
/// under the round trips `T₂₁∘T₁₂` (on the source) and `T₁₂∘T₂₁` (on the
/// target), averaged over the two shapes.
pub fn bijectivity(t12: &PointMap, t21: &PointMap, source: &TriangleMesh, target: &TriangleMesh) -> Result<f64> {
    check_source_len("forward map length", t12, source.n_vertices())?;
    check_source_len("backward map length", t21, target.n_vertices())?;
    check_target(t12, target)?;
    check_target(t21, source)?;
    let drift = |mesh: &TriangleMesh, there: &PointMap, back: &PointMap| -> Result<f64> {
        let round = there.then(back)?;
        let cache = GeodesicCache::area_normalized(mesh);
        let moved: Vec<usize> = (0..mesh.n_vertices()).filter(|&i| round.get(i) != i).collect();
        cache.prefetch(moved.iter().copied());
        let total: f64 = moved.iter().map(|&i| cache.distance(i, round.get(i))).sum();
        Ok(total / mesh.n_vertices().max(1) as f64)
    };
    Ok(0.5 * (drift(source, t12, t21)? + drift(target, t21, t12)?))
}

/// Fraction of errors at or below each of [`CURVE_SAMPLES`] thresholds
/// evenly spaced over `[0, CURVE_MAX_ERROR]`.
pub fn cumulative_curve(errors: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len().max(1) as f64;
    (0..CURVE_SAMPLES)
        .map(|s| {
            let t = CURVE_MAX_ERROR * s as f64 / (CURVE_SAMPLES - 1) as f64;
            let below = sorted.partition_point(|&e| e <= t);
            (t, below as f64 / n)
        })
        .collect()
}

/// Mean sign, over source faces, of the mapped triangle's normal against the
/// target surface normal there. Near 1 for orientation-preserving maps and
/// near -1 for orientation-reversing ones; faces collapsed by the map count
/// as zero.
pub fn orientation_consistency(map: &PointMap, source: &TriangleMesh, target: &TriangleMesh) -> Result<f64> {
    check_source_len("point map length (source vertices)", map, source.n_vertices())?;
    check_target(map, target)?;
    let normals = target.vertex_normals();
    let total: f64 = source
        .faces()
        .iter()
        .map(|f| {
            let [a, b, c] = [map.get(f[0]), map.get(f[1]), map.get(f[2])];
            let (ya, yb, yc) = (target.vertex(a), target.vertex(b), target.vertex(c));
            let n = (yb - ya).cross(&(yc - ya));
            let up = normals[a] + normals[b] + normals[c];
            let s = n.dot(&up);
            if s > 0.0 {
                1.0
            } else if s < 0.0 {
                -1.0
            } else {
                0.0
            }
        })
        .sum();
    Ok(total / source.n_faces().max(1) as f64)
}

/// Every measurement for one source-to-target map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapReport {
    /// Present when ground truth was supplied.
    pub accuracy: Option<Accuracy>,
    pub coverage: f64,
    pub continuity: Continuity,
    /// Present when the reverse map was supplied.
    pub bijectivity: Option<f64>,
    pub orientation_consistency: f64,
    /// Fraction of source vertices mapped to the vertex with the same index.
    pub identity_fraction: f64,
}

/// Measures `t12`, against `gt` when given; bijectivity needs `t21`.
pub fn evaluate_map(
    t12: &PointMap,
    t21: Option<&PointMap>,
    gt: Option<&GroundTruth>,
    source: &TriangleMesh,
    target: &TriangleMesh,
) -> Result<MapReport> {
    check_source_len("point map length (source vertices)", t12, source.n_vertices())?;
    let accuracy = gt.map(|gt| accuracy(t12, gt, target)).transpose()?;
    let cc = continuity_and_coverage(t12, source, target)?;
    let bij = t21.map(|t21| bijectivity(t12, t21, source, target)).transpose()?;
    Ok(MapReport {
        accuracy,
        coverage: cc.coverage,
        continuity: cc.continuity,
        bijectivity: bij,
        orientation_consistency: orientation_consistency(t12, source, target)?,
        identity_fraction: t12.identity_fraction(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{geodesic_distances, shapes};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn swap_map(m: &TriangleMesh) -> PointMap {
        // Left-right reflection of a square grid, an intrinsic symmetry.
        let n = (m.n_vertices() as f64).sqrt() as usize;
        PointMap::new((0..n * n).map(|v| (v / n) * n + (n - 1 - v % n)).collect(), n * n).unwrap()
    }

    #[test]
    fn exact_maps_score_zero() {
        let m = shapes::grid(8, 8, 1.0, 1.0);
        let id = PointMap::identity(64);
        let sym = swap_map(&m);
        let gt = GroundTruth::with_symmetric(id.clone(), sym.clone()).unwrap();
        let a = accuracy(&id, &gt, &m).unwrap();
        assert_eq!((a.per_map, a.direct), (0.0, 0.0));
        assert!(a.per_vertex.iter().all(|&e| e == 0.0));
        let s = accuracy(&sym, &gt, &m).unwrap();
        assert!(s.per_vertex.iter().all(|&e| e == 0.0));
        assert_eq!(s.per_map, 0.0);
        assert!(s.direct > 0.0);
        let d = accuracy(&sym, &GroundTruth::direct(id), &m).unwrap();
        assert!(d.symmetric_missing);
        assert_eq!(d.per_map, d.direct);
    }

    #[test]
    fn identity_and_constant_continuity() {
        let m = shapes::grid(6, 6, 1.0, 1.0);
        let id = continuity_and_coverage(&PointMap::identity(36), &m, &m).unwrap();
        assert!(id.continuity.ratios.iter().all(|r| (r - 1.0).abs() < 1e-12));
        assert!((id.coverage - 1.0).abs() < 1e-12);
        let c = continuity_and_coverage(&PointMap::constant(36, 14, 36).unwrap(), &m, &m).unwrap();
        assert!(c.continuity.ratios.iter().all(|&r| r == 0.0));
        assert!((c.coverage - m.vertex_areas()[14] / m.total_area()).abs() < 1e-12);
    }

    #[test]
    fn bijectivity_closed_forms() {
        let m = shapes::icosphere(1);
        let n = m.n_vertices();
        let perm: Vec<usize> = (0..n).map(|i| (i + 5) % n).collect();
        let mut inv = vec![0; n];
        for (i, &p) in perm.iter().enumerate() {
            inv[p] = i;
        }
        let t12 = PointMap::new(perm, n).unwrap();
        let t21 = PointMap::new(inv, n).unwrap();
        assert_eq!(bijectivity(&t12, &t21, &m, &m).unwrap(), 0.0);
        let zero = PointMap::constant(n, 0, n).unwrap();
        let field = geodesic_distances(&m, 0).normalized(m.total_area().sqrt());
        let expected = field.distances().iter().sum::<f64>() / n as f64;
        assert!((bijectivity(&zero, &zero, &m, &m).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn curve_shapes() {
        assert!(cumulative_curve(&[0.0; 10]).iter().all(|&(_, f)| f == 1.0));
        for (t, f) in cumulative_curve(&[0.1]) {
            assert_eq!(f, if t >= 0.1 { 1.0 } else { 0.0 });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let uniform: Vec<f64> = (0..10_000).map(|_| rng.random_range(0.0..CURVE_MAX_ERROR)).collect();
        for (t, f) in cumulative_curve(&uniform) {
            assert!((f - t / CURVE_MAX_ERROR).abs() < 0.05);
        }
    }

    #[test]
    fn orientation_sign_detects_reflection() {
        let m = shapes::icosphere(2);
        let id = PointMap::identity(m.n_vertices());
        assert_eq!(orientation_consistency(&id, &m, &m).unwrap(), 1.0);
        // Reflection x -> -x maps the sphere onto itself reversing orientation.
        let mut flip = Vec::new();
        for i in 0..m.n_vertices() {
            let mut p = m.vertex(i);
            p.x = -p.x;
            let j = (0..m.n_vertices())
                .min_by(|&a, &b| (m.vertex(a) - p).norm().total_cmp(&(m.vertex(b) - p).norm()))
                .unwrap();
            flip.push(j);
        }
        let flip = PointMap::new(flip, m.n_vertices()).unwrap();
        assert_eq!(orientation_consistency(&flip, &m, &m).unwrap(), -1.0);
    }

    proptest! {
        #[test]
        fn metric_orderings(seed in 0u64..1000) {
            let m = shapes::grid(6, 6, 1.0, 1.0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = PointMap::new((0..36).map(|_| rng.random_range(0..36)).collect(), 36).unwrap();
            let gt = GroundTruth::with_symmetric(PointMap::identity(36), swap_map(&m)).unwrap();
            let a = accuracy(&t, &gt, &m).unwrap();
            let d = accuracy(&t, &GroundTruth::direct(PointMap::identity(36)), &m).unwrap();
            prop_assert!(a.per_map <= a.direct);
            for (x, y) in a.per_vertex.iter().zip(&d.per_vertex) {
                prop_assert!(x <= y);
            }
            let curve = cumulative_curve(&a.per_vertex);
            prop_assert!(curve.windows(2).all(|w| w[0].1 <= w[1].1));
        }
    }
}
