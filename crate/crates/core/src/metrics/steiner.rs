use std::collections::{HashMap, VecDeque};

use crate::graph::{Graph, UNREACHABLE};

use super::{normalize_targets, MetricError};

/// A tree subgraph connecting all terminals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SteinerTree {
    /// Tree edges as `(u, v)` with `u < v`, sorted.
    pub edges: Vec<(usize, usize)>,
    /// Σ over terminals of the hop distance to the nearest other terminal.
    /// Any Steiner tree has at least half this many edges.
    pub nearest_terminal_sum: u64,
}

impl SteinerTree {
    pub fn size(&self) -> usize {
        self.edges.len()
    }
}

struct Voronoi {
    dist: Vec<u32>,
    /// Index into the terminal list.
    owner: Vec<usize>,
    parent: Vec<usize>,
}

/// Multi-source BFS from the terminals. A node equidistant from several
/// terminals belongs to the one listed first.
fn voronoi(g: &Graph, terminals: &[usize]) -> Voronoi {
    let n = g.node_count();
    let mut dist = vec![UNREACHABLE; n];
    let mut owner = vec![usize::MAX; n];
    let mut parent = vec![usize::MAX; n];
    let mut queue = VecDeque::with_capacity(n);
    for (i, &t) in terminals.iter().enumerate() {
        dist[t] = 0;
        owner[t] = i;
        queue.push_back(t);
    }
    // FIFO order finishes every node at level d before any node at level
    // d + 1 is expanded, so owners are final by the time they propagate.
    while let Some(u) = queue.pop_front() {
        let next = dist[u] + 1;
        for &w in g.neighbors(u) {
            if dist[w] == UNREACHABLE {
                dist[w] = next;
                owner[w] = owner[u];
                parent[w] = u;
                queue.push_back(w);
            } else if dist[w] == next && owner[u] < owner[w] {
                owner[w] = owner[u];
                parent[w] = u;
            }
        }
    }
    Voronoi { dist, owner, parent }
}

struct DisjointSets(Vec<usize>);

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Per terminal (in sorted, deduplicated order), the hop distance to the
/// nearest other terminal; `None` when no other terminal is reachable.
pub fn nearest_terminal_distances(
    g: &Graph,
    terminals: &[usize],
) -> Result<Vec<Option<u32>>, MetricError> {
    let terminals = normalize_targets(g.node_count(), terminals)?;
    let vor = voronoi(g, &terminals);
    let mut nearest = vec![None; terminals.len()];
    for (u, v) in g.edges() {
        let (a, b) = (vor.owner[u], vor.owner[v]);
        if a != b && a != usize::MAX && b != usize::MAX {
            let w = vor.dist[u] + 1 + vor.dist[v];
            for t in [a, b] {
                nearest[t] = Some(nearest[t].map_or(w, |x: u32| x.min(w)));
            }
        }
    }
    Ok(nearest)
}

/// Mehlhorn's Steiner tree 2-approximation with unit edge weights.
///
/// 1. Voronoi partition of the nodes around the terminals (multi-source BFS).
/// 2. Every edge joining two regions proposes a terminal pair with length
///    d(s, u) + 1 + d(v, t); keep the shortest per pair.
/// 3. Minimum spanning tree over those terminal pairs.
/// 4. Expand each chosen pair back into its path through the graph.
/// 5. Take a spanning tree of the union and strip non-terminal leaves.
pub fn steiner_tree_2approx(g: &Graph, terminals: &[usize]) -> Result<SteinerTree, MetricError> {
    let terminals = normalize_targets(g.node_count(), terminals)?;
    let k = terminals.len();
    if k == 1 {
        return Ok(SteinerTree {
            edges: Vec::new(),
            nearest_terminal_sum: 0,
        });
    }
    let vor = voronoi(g, &terminals);

    let mut best: HashMap<(usize, usize), (u32, usize, usize)> = HashMap::new();
    let mut nearest = vec![u32::MAX; k];
    for (u, v) in g.edges() {
        let (a, b) = (vor.owner[u], vor.owner[v]);
        if a == b || a == usize::MAX || b == usize::MAX {
            continue;
        }
        let w = vor.dist[u] + 1 + vor.dist[v];
        nearest[a] = nearest[a].min(w);
        nearest[b] = nearest[b].min(w);
        let key = (a.min(b), a.max(b));
        let cand = (w, u, v);
        best.entry(key)
            .and_modify(|cur| *cur = (*cur).min(cand))
            .or_insert(cand);
    }

    let mut pairs: Vec<_> = best.into_iter().map(|(key, (w, u, v))| (w, key, u, v)).collect();
    pairs.sort_unstable();
    let mut sets = DisjointSets::new(k);
    let mut chosen = Vec::with_capacity(k - 1);
    for (_, (a, b), u, v) in pairs {
        if sets.union(a, b) {
            chosen.push((u, v));
        }
    }
    if chosen.len() + 1 < k {
        return Err(MetricError::Disconnected);
    }

    let mut union_edges = Vec::new();
    for (u, v) in chosen {
        union_edges.push((u.min(v), u.max(v)));
        for mut x in [u, v] {
            while vor.dist[x] > 0 {
                let p = vor.parent[x];
                union_edges.push((x.min(p), x.max(p)));
                x = p;
            }
        }
    }
    union_edges.sort_unstable();
    union_edges.dedup();

    let edges = prune_to_tree(g.node_count(), &terminals, union_edges);
    let nearest_terminal_sum = nearest.iter().map(|&d| u64::from(d)).sum();
    let tree = SteinerTree {
        edges,
        nearest_terminal_sum,
    };
    debug_assert!(
        tree.nearest_terminal_sum <= 2 * tree.size() as u64,
        "nearest-terminal bound violated: {} > 2·{}",
        tree.nearest_terminal_sum,
        tree.size()
    );
    Ok(tree)
}

/// Spanning forest of `edges`, then repeatedly removes leaves that are not
/// terminals.
fn prune_to_tree(n: usize, terminals: &[usize], edges: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
    let mut sets = DisjointSets::new(n);
    let mut tree: Vec<(usize, usize)> = edges.into_iter().filter(|&(u, v)| sets.union(u, v)).collect();

    let mut is_terminal = vec![false; n];
    for &t in terminals {
        is_terminal[t] = true;
    }
    let mut adjacency: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, &(u, v)) in tree.iter().enumerate() {
        adjacency.entry(u).or_default().push(i);
        adjacency.entry(v).or_default().push(i);
    }
    let mut degree: HashMap<usize, usize> = adjacency.iter().map(|(&v, es)| (v, es.len())).collect();
    let mut removed = vec![false; tree.len()];
    let mut leaves: Vec<usize> = degree
        .iter()
        .filter(|&(&v, &d)| d == 1 && !is_terminal[v])
        .map(|(&v, _)| v)
        .collect();
    while let Some(leaf) = leaves.pop() {
        for &e in &adjacency[&leaf] {
            if removed[e] {
                continue;
            }
            removed[e] = true;
            let (u, v) = tree[e];
            let other = if u == leaf { v } else { u };
            *degree.get_mut(&leaf).unwrap() -= 1;
            let d = degree.get_mut(&other).unwrap();
            *d -= 1;
            if *d == 1 && !is_terminal[other] {
                leaves.push(other);
            }
        }
    }
    let mut i = 0;
    tree.retain(|_| {
        let keep = !removed[i];
        i += 1;
        keep
    });
    tree
}
