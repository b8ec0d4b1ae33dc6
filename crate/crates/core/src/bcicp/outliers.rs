use crate::error::{Error, Result};
use crate::fmap::PointMap;
use crate::mesh::{largest_connected_component, TriangleMesh};

/// Result of [`fix_outliers`].
#[derive(Debug, Clone, PartialEq)]
pub struct OutlierFix {
    pub map: PointMap,
    /// Source vertices outside the largest consistent component, ascending.
    pub outliers: Vec<usize>,
    /// Number of source edges whose mapped endpoints are farther apart than
    /// the threshold.
    pub broken_edges: usize,
}

/// Reassigns vertices that landed away from the bulk of the map.
///
/// Source edges whose endpoints map more than `threshold` apart (Euclidean,
/// on the target) are cut. Vertices outside the largest remaining component
/// take the image of their Euclidean-nearest vertex inside it. A `None`
/// threshold uses the longest target edge.
pub fn fix_outliers(
    map: &PointMap,
    source: &TriangleMesh,
    target: &TriangleMesh,
    threshold: Option<f64>,
) -> Result<OutlierFix> {
    check_map(map, source, target)?;
    let eps = threshold.unwrap_or_else(|| target.max_edge_length());
    let t = map.as_slice();
    let mut kept = Vec::with_capacity(source.edges().len());
    let mut broken_edges = 0;
    for &[a, b] in source.edges() {
        if (target.vertex(t[a]) - target.vertex(t[b])).norm() > eps {
            broken_edges += 1;
        } else {
            kept.push([a, b]);
        }
    }
    let inside = largest_connected_component(source.n_vertices(), &kept);
    let mut is_inside = vec![false; source.n_vertices()];
    for &v in &inside {
        is_inside[v] = true;
    }
    let outliers: Vec<usize> = (0..source.n_vertices()).filter(|&v| !is_inside[v]).collect();
    let mut fixed = map.clone();
    if !inside.is_empty() {
        for &v in &outliers {
            let x = source.vertex(v);
            let mut best = (f64::INFINITY, usize::MAX);
            for &w in &inside {
                let d = (source.vertex(w) - x).norm_squared();
                if d < best.0 {
                    best = (d, w);
                }
            }
            fixed.set(v, t[best.1]);
        }
    }
    Ok(OutlierFix {
        map: fixed,
        outliers,
        broken_edges,
    })
}

pub(crate) fn check_map(map: &PointMap, source: &TriangleMesh, target: &TriangleMesh) -> Result<()> {
    if map.n_source() != source.n_vertices() {
        return Err(Error::DimensionMismatch {
            what: "point map length (source vertices)",
            expected: source.n_vertices(),
            got: map.n_source(),
        });
    }
    if map.n_target() != target.n_vertices() {
        return Err(Error::DimensionMismatch {
            what: "point map range (target vertices)",
            expected: target.n_vertices(),
            got: map.n_target(),
        });
    }
    Ok(())
}
