//! Connected components over undirected edge sets.

use std::collections::VecDeque;

/// Components of the graph on `n` vertices, each sorted ascending, ordered by
/// their smallest vertex.
pub fn connected_components(n: usize, edges: &[[usize; 2]]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &[a, b] in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut label = vec![usize::MAX; n];
    let mut components = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut members = vec![start];
        label[start] = id;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if label[w] == usize::MAX {
                    label[w] = id;
                    members.push(w);
                    queue.push_back(w);
                }
            }
        }
        members.sort_unstable();
        components.push(members);
    }
    components
}

/// Vertex set of the largest component; ties go to the component containing
/// the smallest vertex index. Empty input gives an empty set.
pub fn largest_connected_component(n: usize, edges: &[[usize; 2]]) -> Vec<usize> {
    pick_largest(connected_components(n, edges))
}

/// Largest component of the subgraph induced on `subset` by `neighbors`.
///
/// `subset` must be sorted and free of duplicates.
pub fn largest_component_of_subset<'a, F>(subset: &[usize], neighbors: F) -> Vec<usize>
where
    F: Fn(usize) -> &'a [usize],
{
    let m = subset.len();
    let mut edges = Vec::new();
    for (li, &v) in subset.iter().enumerate() {
        for &w in neighbors(v) {
            if w > v {
                if let Ok(lj) = subset.binary_search(&w) {
                    edges.push([li, lj]);
                }
            }
        }
    }
    pick_largest(connected_components(m, &edges))
        .into_iter()
        .map(|li| subset[li])
        .collect()
}

fn pick_largest(components: Vec<Vec<usize>>) -> Vec<usize> {
    // Components arrive ordered by smallest member, so the first maximum wins ties.
    let mut best: Option<Vec<usize>> = None;
    for c in components {
        if best.as_ref().is_none_or(|b| c.len() > b.len()) {
            best = Some(c);
        }
    }
    best.unwrap_or_default()
}
