use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::graph::{Bfs, Graph, UNREACHABLE};

use super::{normalize_targets, MetricError};

const MAX_DP_TERMINALS: usize = 8;
const MAX_ENUM_NODES: usize = 20;

/// Exact minimum Steiner tree size (edge count) for small instances.
///
/// Up to 8 terminals: Dreyfus–Wagner dynamic program over terminal subsets.
/// Otherwise, graphs of at most 20 nodes: enumeration of Steiner point sets,
/// since an optimal tree is a spanning tree of a connected node set holding
/// all terminals.
pub fn exact_steiner_size(g: &Graph, terminals: &[usize]) -> Result<usize, MetricError> {
    let terminals = normalize_targets(g.node_count(), terminals)?;
    if terminals.len() == 1 {
        return Ok(0);
    }
    let mut bfs = Bfs::new();
    bfs.run(g, &terminals[..1]);
    if terminals.iter().any(|&t| bfs.dist()[t] == UNREACHABLE) {
        return Err(MetricError::Disconnected);
    }
    if terminals.len() <= MAX_DP_TERMINALS {
        Ok(dreyfus_wagner(g, &terminals))
    } else if g.node_count() <= MAX_ENUM_NODES {
        Ok(enumerate_steiner_points(g, &terminals))
    } else {
        Err(MetricError::TooLarge(format!(
            "{} terminals on {} nodes",
            terminals.len(),
            g.node_count()
        )))
    }
}

fn dreyfus_wagner(g: &Graph, terminals: &[usize]) -> usize {
    let n = g.node_count();
    let k = terminals.len();
    let full = (1usize << k) - 1;
    let inf = u32::MAX / 4;
    let mut dp = vec![vec![inf; n]; 1 << k];
    let mut bfs = Bfs::new();
    for (i, &t) in terminals.iter().enumerate() {
        bfs.run(g, &[t]);
        for (v, &d) in bfs.dist().iter().enumerate() {
            if d != UNREACHABLE {
                dp[1 << i][v] = d;
            }
        }
    }
    for mask in 1..=full {
        if mask.count_ones() < 2 {
            continue;
        }
        // Split at every node, keeping the lowest terminal in the first part
        // so each unordered split is visited once.
        let low = mask & mask.wrapping_neg();
        let rest = mask ^ low;
        let mut sub = rest;
        loop {
            let a = sub | low;
            if a != mask {
                let b = mask ^ a;
                for v in 0..n {
                    let c = dp[a][v] + dp[b][v];
                    if c < dp[mask][v] {
                        dp[mask][v] = c;
                    }
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
        relax(g, &mut dp[mask]);
    }
    dp[full][terminals[0]] as usize
}

/// `cost[v] ← min_u cost[u] + d(u, v)` via Dijkstra seeded with every node.
fn relax(g: &Graph, cost: &mut [u32]) {
    let mut heap: BinaryHeap<Reverse<(u32, usize)>> =
        cost.iter().enumerate().map(|(v, &c)| Reverse((c, v))).collect();
    while let Some(Reverse((c, u))) = heap.pop() {
        if c > cost[u] {
            continue;
        }
        for &w in g.neighbors(u) {
            if c + 1 < cost[w] {
                cost[w] = c + 1;
                heap.push(Reverse((c + 1, w)));
            }
        }
    }
}

fn enumerate_steiner_points(g: &Graph, terminals: &[usize]) -> usize {
    let n = g.node_count();
    let mut adj = vec![0u32; n];
    for (v, mask) in adj.iter_mut().enumerate() {
        for &w in g.neighbors(v) {
            *mask |= 1 << w;
        }
    }
    let term_mask: u32 = terminals.iter().fold(0, |m, &t| m | (1 << t));
    let others: Vec<usize> = (0..n).filter(|v| term_mask & (1 << v) == 0).collect();

    let mut best = usize::MAX;
    for pick in 0u32..(1u32 << others.len()) {
        let extra = pick.count_ones() as usize;
        if terminals.len() + extra - 1 >= best {
            continue;
        }
        let mut nodes = term_mask;
        for (i, &v) in others.iter().enumerate() {
            if pick & (1 << i) != 0 {
                nodes |= 1 << v;
            }
        }
        if connected(&adj, nodes, terminals[0]) {
            best = terminals.len() + extra - 1;
        }
    }
    best
}

fn connected(adj: &[u32], nodes: u32, start: usize) -> bool {
    let mut reached = 1u32 << start;
    let mut frontier = reached;
    while frontier != 0 {
        let v = frontier.trailing_zeros() as usize;
        frontier &= frontier - 1;
        let fresh = adj[v] & nodes & !reached;
        reached |= fresh;
        frontier |= fresh;
    }
    reached == nodes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{bfs_distances, build_balanced_tree, build_er};
    use crate::metrics::steiner_tree_2approx;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn open_grid(rows: usize, cols: usize) -> Graph {
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let v = r * cols + c;
                if c + 1 < cols {
                    edges.push((v, v + 1));
                }
                if r + 1 < rows {
                    edges.push((v, v + cols));
                }
            }
        }
        Graph::from_edges(rows * cols, edges).unwrap()
    }

    #[test]
    fn two_terminals_shortest_path() {
        let g = open_grid(4, 5);
        let d = bfs_distances(&g, &[0]).unwrap();
        assert_eq!(exact_steiner_size(&g, &[0, 19]).unwrap() as u32, d.get(19).unwrap());
    }

    #[test]
    fn all_nodes_of_tree() {
        let g = build_balanced_tree(2, 3).unwrap();
        let all: Vec<usize> = (0..15).collect();
        assert_eq!(exact_steiner_size(&g, &all).unwrap(), 14);
    }

    #[test]
    fn grid_corners() {
        // Corners of a 4×4 node grid (side length 3): the optimum is a spine
        // of 3 edges plus two crossbars of 3, found by both solvers.
        let g = open_grid(4, 4);
        let corners = [0, 3, 12, 15];
        assert_eq!(dreyfus_wagner(&g, &corners), 9);
        assert_eq!(enumerate_steiner_points(&g, &corners), 9);
    }

    #[test]
    fn dp_agrees_with_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..150 {
            let n = rng.random_range(3..=14);
            let g = build_er(n, rng.random_range(0.2..0.6), &mut rng).unwrap();
            let (giant, _) = crate::graph::giant_component(&g).unwrap();
            let m = giant.node_count();
            let mut t: Vec<usize> = (0..rng.random_range(2..=5)).map(|_| rng.random_range(0..m)).collect();
            t.sort_unstable();
            t.dedup();
            if t.len() < 2 {
                continue;
            }
            let dp = dreyfus_wagner(&giant, &t);
            assert_eq!(dp, enumerate_steiner_points(&giant, &t));
            assert!(steiner_tree_2approx(&giant, &t).unwrap().size() <= 2 * dp);
        }
    }

    #[test]
    fn limits() {
        let g = Graph::from_edges(30, (1..30).map(|i| (i - 1, i))).unwrap();
        let t: Vec<usize> = (0..10).collect();
        assert!(matches!(exact_steiner_size(&g, &t), Err(MetricError::TooLarge(_))));
        let g2 = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert!(matches!(
            exact_steiner_size(&g2, &[0, 2]),
            Err(MetricError::Disconnected)
        ));
    }

    #[test]
    fn adding_terminal_never_shrinks() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..60 {
            let g = build_er(12, 0.35, &mut rng).unwrap();
            let (giant, _) = crate::graph::giant_component(&g).unwrap();
            let m = giant.node_count();
            if m < 4 {
                continue;
            }
            let mut t = vec![rng.random_range(0..m)];
            let mut prev = 0;
            for _ in 0..4 {
                t.push(rng.random_range(0..m));
                let cur = exact_steiner_size(&giant, &t).unwrap();
                assert!(cur >= prev);
                prev = cur;
            }
        }
    }
}
