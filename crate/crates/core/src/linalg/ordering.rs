use std::collections::VecDeque;

use super::CsrMatrix;

/// Reverse Cuthill-McKee ordering of the symmetrized pattern of `a`.
///
/// Returns `perm` with `perm[new] = old`. Each connected component starts
/// from a pseudo-peripheral node found by repeated BFS.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let adj = symmetric_adjacency(a);
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(&adj, seed);
        let mut queue = VecDeque::new();
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
            nbrs.sort_by_key(|&u| (degree[u], u));
            for u in nbrs {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

fn symmetric_adjacency(a: &CsrMatrix) -> Vec<Vec<usize>> {
    let n = a.nrows();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for &j in a.row(i).0 {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

/// BFS levels from `root`; returns (eccentricity, last level nodes).
fn bfs_levels(adj: &[Vec<usize>], root: usize) -> (usize, Vec<usize>) {
    let mut dist = vec![usize::MAX; adj.len()];
    dist[root] = 0;
    let mut queue = VecDeque::from([root]);
    let mut far = 0;
    while let Some(v) = queue.pop_front() {
        far = far.max(dist[v]);
        for &u in &adj[v] {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    let last = (0..adj.len()).filter(|&v| dist[v] == far).collect();
    (far, last)
}

fn pseudo_peripheral(adj: &[Vec<usize>], seed: usize) -> usize {
    let mut root = seed;
    let (mut ecc, mut last) = bfs_levels(adj, root);
    loop {
        let cand = *last
            .iter()
            .min_by_key(|&&v| (adj[v].len(), v))
            .expect("component is non-empty");
        let (e, l) = bfs_levels(adj, cand);
        if e <= ecc {
            return root;
        }
        root = cand;
        ecc = e;
        last = l;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    fn bandwidth(a: &CsrMatrix) -> usize {
        (0..a.nrows())
            .flat_map(|i| a.row(i).0.iter().map(move |&j| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    #[test]
    fn rcm_is_a_permutation_and_shrinks_bandwidth() {
        // path graph numbered in a scrambled order
        let n = 40;
        let label: Vec<usize> = (0..n).map(|i| (i * 17) % n).collect();
        let mut t = Vec::new();
        for i in 0..n {
            t.push((label[i], label[i], C64::new(2.0, 0.0)));
            if i + 1 < n {
                t.push((label[i], label[i + 1], C64::new(-1.0, 0.0)));
                t.push((label[i + 1], label[i], C64::new(-1.0, 0.0)));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t).unwrap();
        let perm = reverse_cuthill_mckee(&a);
        let mut seen = perm.clone();
        seen.sort_unstable();
        assert_eq!(seen, (0..n).collect::<Vec<_>>());
        assert!(bandwidth(&a) > 1);
        assert_eq!(bandwidth(&a.permute_symmetric(&perm)), 1);
    }
}
