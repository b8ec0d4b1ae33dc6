//! Exact nearest-row search in the spectral embedding.
//!
//! Ties are broken by the smallest point index, so results are deterministic
//! and the identity is recovered exactly when queries equal points.

use nalgebra::DMatrix;
use rayon::prelude::*;

/// Below this many points a brute-force scan is used.
pub const BRUTE_FORCE_LIMIT: usize = 2000;

const LEAF_SIZE: usize = 16;

/// Row-major copy of a point set for cache-friendly scans.
struct Rows {
    data: Vec<f64>,
    dim: usize,
}

impl Rows {
    fn new(m: &DMatrix<f64>) -> Self {
        let (n, dim) = m.shape();
        let mut data = Vec::with_capacity(n * dim);
        for i in 0..n {
            data.extend(m.row(i).iter());
        }
        Self { data, dim }
    }

    fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn better(d: f64, i: usize, best: (f64, usize)) -> bool {
    d < best.0 || (d == best.0 && i < best.1)
}

enum Node {
    Leaf { start: usize, end: usize },
    Split { dim: usize, value: f64, left: Box<Node>, right: Box<Node> },
}

/// Static index answering exact nearest-neighbor queries.
pub struct NearestRows {
    points: Rows,
    order: Vec<usize>,
    root: Option<Node>,
}

impl NearestRows {
    /// Index over the rows of `points`; builds a k-d tree when the set is
    /// large enough to benefit.
    pub fn new(points: &DMatrix<f64>) -> Self {
        Self::with_limit(points, BRUTE_FORCE_LIMIT)
    }

    pub fn with_limit(points: &DMatrix<f64>, brute_force_limit: usize) -> Self {
        let points = Rows::new(points);
        let mut order: Vec<usize> = (0..points.len()).collect();
        let root = if points.len() >= brute_force_limit && points.len() > 0 {
            let n = order.len();
            Some(build(&points, &mut order, 0, n))
        } else {
            None
        };
        Self { points, order, root }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.len() == 0
    }

    /// Index of the nearest point to `q` (smallest index on ties).
    pub fn nearest(&self, q: &[f64]) -> usize {
        let mut best = (f64::INFINITY, usize::MAX);
        match &self.root {
            None => {
                for i in 0..self.points.len() {
                    let d = dist2(q, self.points.row(i));
                    if better(d, i, best) {
                        best = (d, i);
                    }
                }
            }
            Some(root) => self.search(root, q, &mut best),
        }
        best.1
    }

    /// Nearest point for every row of `queries`.
    pub fn nearest_rows(&self, queries: &DMatrix<f64>) -> Vec<usize> {
        let q = Rows::new(queries);
        (0..queries.nrows())
            .into_par_iter()
            .map(|i| self.nearest(q.row(i)))
            .collect()
    }

    fn search(&self, node: &Node, q: &[f64], best: &mut (f64, usize)) {
        match node {
            Node::Leaf { start, end } => {
                for &i in &self.order[*start..*end] {
                    let d = dist2(q, self.points.row(i));
                    if better(d, i, *best) {
                        *best = (d, i);
                    }
                }
            }
            Node::Split { dim, value, left, right } => {
                let diff = q[*dim] - value;
                let (near, far) = if diff <= 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, best);
                // Equality must still be explored: a tie may carry a smaller index.
                if diff * diff <= best.0 {
                    self.search(far, q, best);
                }
            }
        }
    }
}

fn build(points: &Rows, order: &mut [usize], start: usize, end: usize) -> Node {
    if end - start <= LEAF_SIZE {
        return Node::Leaf { start, end };
    }
    let slice = &mut order[start..end];
    let mut dim = 0;
    let mut spread = -1.0;
    for d in 0..points.dim {
        let (lo, hi) = slice.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            let v = points.row(i)[d];
            (lo.min(v), hi.max(v))
        });
        if hi - lo > spread {
            spread = hi - lo;
            dim = d;
        }
    }
    if spread <= 0.0 {
        return Node::Leaf { start, end };
    }
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| points.row(a)[dim].total_cmp(&points.row(b)[dim]));
    let value = points.row(slice[mid])[dim];
    // Left holds values <= split, right holds values >= split.
    let left = build(points, order, start, start + mid);
    let right = build(points, order, start + mid, end);
    Node::Split {
        dim,
        value,
        left: Box::new(left),
        right: Box::new(right),
    }
}

/// For each row of `queries`, the index of the nearest row of `points`.
pub fn nearest_rows(queries: &DMatrix<f64>, points: &DMatrix<f64>) -> Vec<usize> {
    NearestRows::new(points).nearest_rows(queries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(queries: &DMatrix<f64>, points: &DMatrix<f64>) -> Vec<usize> {
        (0..queries.nrows())
            .map(|i| {
                let mut best = (f64::INFINITY, 0);
                for j in 0..points.nrows() {
                    let d = (queries.row(i) - points.row(j)).norm_squared();
                    if d < best.0 {
                        best = (d, j);
                    }
                }
                best.1
            })
            .collect()
    }

    #[test]
    fn tree_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = DMatrix::from_fn(3000, 8, |_, _| rng.random_range(-1.0..1.0));
        let q = DMatrix::from_fn(300, 8, |_, _| rng.random_range(-1.0..1.0));
        let tree = NearestRows::with_limit(&p, 100);
        assert_eq!(tree.nearest_rows(&q), brute(&q, &p));
    }

    #[test]
    fn ties_go_to_smallest_index_in_tree() {
        // Many duplicated points on a coarse lattice.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = DMatrix::from_fn(2500, 3, |_, _| rng.random_range(0..3) as f64);
        let tree = NearestRows::with_limit(&p, 10);
        let flat = NearestRows::with_limit(&p, usize::MAX);
        assert_eq!(tree.nearest_rows(&p), flat.nearest_rows(&p));
        for (i, j) in tree.nearest_rows(&p).into_iter().enumerate() {
            assert!(j <= i);
            assert_eq!(p.row(i), p.row(j));
        }
    }

    #[test]
    fn three_point_toy() {
        let p = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 2.0]);
        let q = DMatrix::from_row_slice(4, 2, &[0.4, 0.0, 0.6, 0.1, 0.0, 1.0, 0.5, 0.0]);
        // The last query is equidistant from rows 0 and 1.
        assert_eq!(nearest_rows(&q, &p), vec![0, 1, 0, 0]);
    }

    proptest! {
        #[test]
        fn invariant_under_orthogonal_transform(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = DMatrix::from_fn(60, 4, |_, _| rng.random_range(-1.0..1.0));
            let q = DMatrix::from_fn(20, 4, |_, _| rng.random_range(-1.0..1.0));
            let r = DMatrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0)).qr().q();
            prop_assert_eq!(nearest_rows(&(&q * &r), &(&p * &r)), nearest_rows(&q, &p));
            prop_assert_eq!(nearest_rows(&(&q * 3.0), &(&p * 3.0)), nearest_rows(&q, &p));
        }
    }
}
