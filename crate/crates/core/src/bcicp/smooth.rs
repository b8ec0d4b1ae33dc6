use super::outliers::check_map;
use crate::error::Result;
use crate::fmap::PointMap;
use crate::mesh::{largest_component_of_subset, TriangleMesh, Vec3};

/// Per-vertex record passed to the [`smooth_map`] observer.
#[derive(Debug, Clone, Copy)]
pub struct SmoothingStep<'a> {
    pub sweep: usize,
    pub vertex: usize,
    /// Admissible targets for `vertex`, ascending.
    pub candidates: &'a [usize],
    pub chosen: usize,
}

/// Displacement-averaging smoothing of a point map.
///
/// Each sweep visits the source vertices in order. A vertex may only move to
/// the largest connected piece of the target region spanned by its
/// neighbors' images and their one-rings; within it, the target closest to
/// the vertex shifted by the mean displacement of its neighbors (taken from
/// the previous sweep) is chosen. Images are updated in place, so later
/// vertices see earlier moves. Vertices without neighbors keep their image.
pub fn smooth_map(
    map: &PointMap,
    source: &TriangleMesh,
    target: &TriangleMesh,
    sweeps: usize,
    mut observer: impl FnMut(SmoothingStep<'_>),
) -> Result<PointMap> {
    check_map(map, source, target)?;
    let mut map = map.clone();
    let n = source.n_vertices();
    let displacement = |map: &PointMap, i: usize| -> Vec3 { target.vertex(map.get(i)) - source.vertex(i) };
    let mut previous: Vec<Vec3> = (0..n).map(|i| displacement(&map, i)).collect();
    let mut candidates = Vec::new();
    for sweep in 0..sweeps {
        for i in 0..n {
            let ring = source.neighbors(i);
            if ring.is_empty() {
                continue;
            }
            candidates.clear();
            for &l in ring {
                let m = map.get(l);
                candidates.push(m);
                candidates.extend_from_slice(target.neighbors(m));
            }
            candidates.sort_unstable();
            candidates.dedup();
            let admissible = largest_component_of_subset(&candidates, |v| target.neighbors(v));
            let mean = ring.iter().map(|&l| previous[l]).sum::<Vec3>() / ring.len() as f64;
            let p = source.vertex(i) + mean;
            let mut best = (f64::INFINITY, usize::MAX);
            for &y in &admissible {
                let d = (target.vertex(y) - p).norm_squared();
                if d < best.0 {
                    best = (d, y);
                }
            }
            map.set(i, best.1);
            observer(SmoothingStep {
                sweep,
                vertex: i,
                candidates: &admissible,
                chosen: best.1,
            });
        }
        previous = (0..n).map(|i| displacement(&map, i)).collect();
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_is_fixed_point() {
        let m = shapes::icosphere(2);
        let id = PointMap::identity(m.n_vertices());
        assert_eq!(smooth_map(&id, &m, &m, 5, |_| {}).unwrap(), id);
    }

    #[test]
    fn teleported_vertex_snaps_back() {
        let n = 12;
        let m = shapes::grid(n, n, 1.0, 1.0);
        let v = 5 * n + 5;
        let mut t: Vec<usize> = (0..n * n).collect();
        t[v] = 10 * n + 10;
        let map = PointMap::new(t, n * n).unwrap();
        let one = smooth_map(&map, &m, &m, 1, |_| {}).unwrap();
        let two = smooth_map(&map, &m, &m, 2, |_| {}).unwrap();
        assert!(one.get(v) == v || two.get(v) == v);
        assert_eq!(smooth_map(&map, &m, &m, 5, |_| {}).unwrap(), PointMap::identity(n * n));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn choices_stay_in_candidate_sets(seed in 0u64..10_000) {
            let m = shapes::grid(5, 4, 1.0, 0.7);
            let n = m.n_vertices();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let map = PointMap::new((0..n).map(|_| rng.random_range(0..n)).collect(), n).unwrap();
            let mut ok = true;
            let mut count = 0;
            let out = smooth_map(&map, &m, &m, 3, |s| {
                ok &= s.candidates.binary_search(&s.chosen).is_ok();
                count += 1;
            }).unwrap();
            prop_assert!(ok);
            prop_assert_eq!(count, 3 * n);
            prop_assert_eq!(out.n_source(), n);
        }
    }
}
