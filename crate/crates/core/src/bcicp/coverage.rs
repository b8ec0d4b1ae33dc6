use super::outliers::check_map;
use crate::error::Result;
use crate::fmap::PointMap;
use crate::mesh::TriangleMesh;

/// Fraction of the target area (by vertex areas) hit by `map`.
pub fn area_coverage(map: &PointMap, target_vertex_areas: &[f64]) -> f64 {
    let total: f64 = target_vertex_areas.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let covered: f64 = map
        .preimage_counts()
        .iter()
        .zip(target_vertex_areas)
        .filter(|(&c, _)| c > 0)
        .map(|(_, &a)| a)
        .sum();
    covered / total
}

/// One pass of coverage promotion on `t12`.
///
/// Uncovered target vertices are visited in ascending order. Each takes one
/// source vertex from the neighbor with the largest preimage (at least two
/// members, ties to the smallest index): the reverse image `T₂₁(z)` when it
/// belongs to that preimage, otherwise the member closest to it. Preimages are
/// updated as the pass proceeds, so every reassignment covers one more target
/// vertex without uncovering any.
pub fn improve_coverage(
    t12: &PointMap,
    t21: &PointMap,
    source: &TriangleMesh,
    target: &TriangleMesh,
) -> Result<PointMap> {
    check_map(t12, source, target)?;
    check_map(t21, target, source)?;
    let mut map = t12.clone();
    let mut pre = map.preimages();
    for z in 0..target.n_vertices() {
        if !pre[z].is_empty() {
            continue;
        }
        let mut donor: Option<usize> = None;
        for &y in target.neighbors(z) {
            let size = pre[y].len();
            if size >= 2 && donor.is_none_or(|d| size > pre[d].len()) {
                donor = Some(y);
            }
        }
        let Some(y) = donor else { continue };
        let back = t21.get(z);
        let x = if pre[y].binary_search(&back).is_ok() {
            back
        } else {
            let anchor = source.vertex(back);
            let mut best = (f64::INFINITY, usize::MAX);
            for &x in &pre[y] {
                let d = (source.vertex(x) - anchor).norm_squared();
                if d < best.0 {
                    best = (d, x);
                }
            }
            best.1
        };
        let pos = pre[y].binary_search(&x).expect("member of preimage");
        pre[y].remove(pos);
        pre[z].push(x);
        map.set(x, z);
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
    fn collapsed_pair_is_split() {
        let m = shapes::grid(3, 3, 1.0, 1.0);
        // Source vertices 0 and 1 both land on 0; target 1 is uncovered.
        let mut t = (0..9).collect::<Vec<_>>();
        t[1] = 0;
        let t12 = PointMap::new(t, 9).unwrap();
        let fixed = improve_coverage(&t12, &PointMap::identity(9), &m, &m).unwrap();
        assert_eq!(fixed, PointMap::identity(9));
    }

    #[test]
    fn identity_is_fixed_point() {
        let m = shapes::icosphere(1);
        let id = PointMap::identity(m.n_vertices());
        assert_eq!(improve_coverage(&id, &id, &m, &m).unwrap(), id);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn never_loses_coverage(seed in 0u64..10_000) {
            let m = shapes::grid(6, 5, 1.0, 0.8);
            let n = m.n_vertices();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // Random maps concentrated on a few targets so coverage is low.
            let hubs = rng.random_range(1..n);
            let t12 = PointMap::new((0..n).map(|_| rng.random_range(0..hubs)).collect(), n).unwrap();
            let t21 = PointMap::new((0..n).map(|_| rng.random_range(0..n)).collect(), n).unwrap();
            let areas = m.vertex_areas();
            let before = area_coverage(&t12, &areas);
            let after_map = improve_coverage(&t12, &t21, &m, &m).unwrap();
            let after = area_coverage(&after_map, &areas);
            prop_assert!(after >= before - 1e-15);
            prop_assert!(after_map.covered_count() >= t12.covered_count());
            // Targets that were covered stay covered.
            let old = t12.preimage_counts();
            let new = after_map.preimage_counts();
            for z in 0..n {
                prop_assert!(old[z] == 0 || new[z] > 0);
            }
        }
    }
}
