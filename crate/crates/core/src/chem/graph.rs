//! Plain graph algorithms over the bond adjacency lists.

use std::collections::VecDeque;

use super::Bond;

/// Connected components, each sorted, ordered by their smallest atom index.
pub fn components(adjacency: &[Vec<(usize, usize)>]) -> Vec<Vec<usize>> {
    let n = adjacency.len();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut comp = vec![start];
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for &(v, _) in &adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    comp.push(v);
                    stack.push(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// `true` for every bond that lies on a cycle (i.e. is not a bridge).
pub fn ring_bonds(n: usize, bonds: &[Bond], adjacency: &[Vec<(usize, usize)>]) -> Vec<bool> {
    let mut in_ring = vec![true; bonds.len()];
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut timer = 0;
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        // iterative Tarjan: (vertex, bond used to enter, next adjacency slot)
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        while let Some(&mut (u, parent_bond, ref mut slot)) = stack.last_mut() {
            if *slot < adjacency[u].len() {
                let (v, k) = adjacency[u][*slot];
                *slot += 1;
                if k == parent_bond {
                    continue;
                }
                if disc[v] == usize::MAX {
                    disc[v] = timer;
                    low[v] = timer;
                    timer += 1;
                    stack.push((v, k, 0));
                } else {
                    low[u] = low[u].min(disc[v]);
                }
            } else {
                stack.pop();
                if let Some(&(p, _, _)) = stack.last() {
                    low[p] = low[p].min(low[u]);
                    if low[u] > disc[p] {
                        in_ring[parent_bond] = false;
                    }
                }
            }
        }
    }
    in_ring
}

/// Shortest bond-path distances from `source`; `None` when unreachable.
pub fn bfs_distances(adjacency: &[Vec<(usize, usize)>], source: usize) -> Vec<Option<u32>> {
    let mut dist = vec![None; adjacency.len()];
    dist[source] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].unwrap();
        for &(v, _) in &adjacency[u] {
            if dist[v].is_none() {
                dist[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// BFS parent pointers from `source`, optionally ignoring one bond.
fn bfs_tree(
    adjacency: &[Vec<(usize, usize)>],
    source: usize,
    skip_bond: Option<usize>,
) -> Vec<Option<usize>> {
    let n = adjacency.len();
    let mut parent = vec![None; n];
    let mut seen = vec![false; n];
    seen[source] = true;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        for &(v, k) in &adjacency[u] {
            if Some(k) == skip_bond || seen[v] {
                continue;
            }
            seen[v] = true;
            parent[v] = Some(u);
            queue.push_back(v);
        }
    }
    parent
}

fn path_to_root(parent: &[Option<usize>], mut v: usize, root: usize) -> Option<Vec<usize>> {
    let mut path = vec![v];
    while v != root {
        v = parent[v]?;
        path.push(v);
    }
    Some(path)
}

struct CycleBasis {
    words: usize,
    rows: Vec<Vec<u64>>,
    pivots: Vec<usize>,
}

impl CycleBasis {
    fn new(edges: usize) -> Self {
        CycleBasis {
            words: edges.div_ceil(64).max(1),
            rows: Vec::new(),
            pivots: Vec::new(),
        }
    }

    /// Add the edge set if it is independent of the rows so far over GF(2).
    fn insert(&mut self, edges: &[usize]) -> bool {
        let mut v = vec![0u64; self.words];
        for &e in edges {
            v[e / 64] ^= 1 << (e % 64);
        }
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if v[p / 64] >> (p % 64) & 1 == 1 {
                for (a, b) in v.iter_mut().zip(row) {
                    *a ^= b;
                }
            }
        }
        match (0..self.words * 64).find(|&b| v[b / 64] >> (b % 64) & 1 == 1) {
            Some(p) => {
                self.rows.push(v);
                self.pivots.push(p);
                true
            }
            None => false,
        }
    }
}

fn cycle_edges(cycle: &[usize], adjacency: &[Vec<(usize, usize)>]) -> Vec<usize> {
    (0..cycle.len())
        .map(|i| {
            let (u, v) = (cycle[i], cycle[(i + 1) % cycle.len()]);
            adjacency[u]
                .iter()
                .find(|&&(w, _)| w == v)
                .map(|&(_, k)| k)
                .expect("consecutive cycle atoms are bonded")
        })
        .collect()
}

/// Smallest set of smallest rings.
///
/// Candidates are the shortest cycle through each ring bond; when those do
/// not span the cycle space the Horton candidate set is added. Candidates are
/// accepted shortest-first while they stay linearly independent.
pub fn smallest_rings(
    n: usize,
    bonds: &[Bond],
    adjacency: &[Vec<(usize, usize)>],
) -> Vec<Vec<usize>> {
    let n_components = components(adjacency).len();
    let nullity = bonds.len() + n_components - n;
    if nullity == 0 {
        return Vec::new();
    }
    let mut candidates: Vec<Vec<usize>> = Vec::new();
    for (k, bond) in bonds.iter().enumerate() {
        let parent = bfs_tree(adjacency, bond.a, Some(k));
        if let Some(path) = path_to_root(&parent, bond.b, bond.a) {
            candidates.push(path);
        }
    }
    let mut rings = select_independent(candidates, bonds.len(), nullity, adjacency);
    if rings.len() < nullity {
        let mut horton = Vec::new();
        for w in 0..n {
            let parent = bfs_tree(adjacency, w, None);
            for bond in bonds {
                let (Some(pu), Some(mut pv)) = (
                    path_to_root(&parent, bond.a, w),
                    path_to_root(&parent, bond.b, w),
                ) else {
                    continue;
                };
                // the two tree paths may only share the root
                if pu.iter().rev().skip(1).any(|x| pv.contains(x)) {
                    continue;
                }
                let mut cycle = pu;
                cycle.reverse();
                pv.pop();
                cycle.extend(pv);
                if cycle.len() >= 3 {
                    horton.push(cycle);
                }
            }
        }
        rings = select_independent(horton, bonds.len(), nullity, adjacency);
    }
    rings
}

fn select_independent(
    mut candidates: Vec<Vec<usize>>,
    n_edges: usize,
    nullity: usize,
    adjacency: &[Vec<(usize, usize)>],
) -> Vec<Vec<usize>> {
    candidates.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    let mut basis = CycleBasis::new(n_edges);
    let mut rings = Vec::new();
    for cycle in candidates {
        if rings.len() == nullity {
            break;
        }
        if basis.insert(&cycle_edges(&cycle, adjacency)) {
            rings.push(cycle);
        }
    }
    rings
}
