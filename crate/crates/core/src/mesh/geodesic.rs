//! Shortest-path distances on the mesh edge graph.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::sync::{Arc, RwLock};

use rayon::prelude::*;

use super::TriangleMesh;
use crate::error::{Error, Result};

/// Per-vertex distances from one source vertex.
#[derive(Debug, Clone)]
pub struct DistanceField {
    source: usize,
    distances: Vec<f64>,
}

impl DistanceField {
    pub fn source(&self) -> usize {
        self.source
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn distance(&self, v: usize) -> f64 {
        self.distances[v]
    }

    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }

    /// Vertices that could not be reached (their distance is infinite).
    pub fn unreachable(&self) -> Vec<usize> {
        (0..self.distances.len())
            .filter(|&v| !self.distances[v].is_finite())
            .collect()
    }

    /// Fails with [`Error::DisconnectedVertex`] if any vertex is unreachable.
    pub fn require_connected(self) -> Result<Self> {
        let count = self.unreachable().len();
        if count > 0 {
            return Err(Error::DisconnectedVertex {
                source_vertex: self.source,
                count,
            });
        }
        Ok(self)
    }

    /// Field with every distance divided by `scale`.
    pub fn normalized(mut self, scale: f64) -> Self {
        for d in &mut self.distances {
            *d /= scale;
        }
        self
    }
}

#[derive(Copy, Clone, PartialEq)]
struct Entry {
    dist: f64,
    vertex: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on distance, then on vertex index.
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra distances over mesh edges weighted by Euclidean length.
///
/// Unreachable vertices are reported as `f64::INFINITY`; see
/// [`DistanceField::unreachable`].
pub fn geodesic_distances(mesh: &TriangleMesh, source: usize) -> DistanceField {
    let n = mesh.n_vertices();
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Entry { dist: 0.0, vertex: source });
    while let Some(Entry { dist: d, vertex: v }) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        let pv = mesh.vertex(v);
        for &w in mesh.neighbors(v) {
            let nd = d + (mesh.vertex(w) - pv).norm();
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(Entry { dist: nd, vertex: w });
            }
        }
    }
    DistanceField { source, distances: dist }
}

/// Memoized distance fields on one mesh, scaled by a fixed normalization.
///
/// Fields are computed on first use; [`GeodesicCache::prefetch`] fills many
/// in parallel.
pub struct GeodesicCache<'a> {
    mesh: &'a TriangleMesh,
    scale: f64,
    fields: RwLock<HashMap<usize, Arc<Vec<f64>>>>,
}

impl<'a> GeodesicCache<'a> {
    /// Distances divided by the square root of the total surface area.
    pub fn area_normalized(mesh: &'a TriangleMesh) -> Self {
        Self::with_scale(mesh, mesh.total_area().sqrt())
    }

    pub fn with_scale(mesh: &'a TriangleMesh, scale: f64) -> Self {
        Self {
            mesh,
            scale,
            fields: RwLock::new(HashMap::new()),
        }
    }

    pub fn mesh(&self) -> &TriangleMesh {
        self.mesh
    }

    pub fn field(&self, source: usize) -> Arc<Vec<f64>> {
        if let Some(f) = self.fields.read().expect("cache lock").get(&source) {
            return f.clone();
        }
        let f = Arc::new(self.compute(source));
        self.fields
            .write()
            .expect("cache lock")
            .entry(source)
            .or_insert(f)
            .clone()
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return 0.0;
        }
        self.field(a)[b]
    }

    /// Computes the fields for all `sources` not already cached.
    pub fn prefetch(&self, sources: impl IntoIterator<Item = usize>) {
        let mut missing: Vec<usize> = {
            let fields = self.fields.read().expect("cache lock");
            sources.into_iter().filter(|s| !fields.contains_key(s)).collect()
        };
        missing.sort_unstable();
        missing.dedup();
        let computed: Vec<(usize, Vec<f64>)> = missing
            .into_par_iter()
            .map(|s| (s, self.compute(s)))
            .collect();
        let mut fields = self.fields.write().expect("cache lock");
        for (s, f) in computed {
            fields.entry(s).or_insert_with(|| Arc::new(f));
        }
    }

    fn compute(&self, source: usize) -> Vec<f64> {
        geodesic_distances(self.mesh, source)
            .normalized(self.scale)
            .distances
    }
}
