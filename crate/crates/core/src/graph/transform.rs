use rand::seq::SliceRandom;
use rand::Rng;

use super::{Bfs, Family, Graph, GraphBuilder, GraphError};

/// A bijection on node ids. `forward[old] = new`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodePermutation {
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

impl NodePermutation {
    pub fn new(forward: Vec<usize>) -> Result<Self, GraphError> {
        let n = forward.len();
        let mut inverse = vec![usize::MAX; n];
        for (old, &new) in forward.iter().enumerate() {
            if new >= n || inverse[new] != usize::MAX {
                return Err(GraphError::InvalidParameter(
                    "permutation entries must be distinct ids in 0..n".into(),
                ));
            }
            inverse[new] = old;
        }
        Ok(NodePermutation { forward, inverse })
    }

    pub fn identity(n: usize) -> Self {
        NodePermutation {
            forward: (0..n).collect(),
            inverse: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    #[inline]
    pub fn apply(&self, old: usize) -> usize {
        self.forward[old]
    }

    #[inline]
    pub fn invert(&self, new: usize) -> usize {
        self.inverse[new]
    }

    pub fn forward(&self) -> &[usize] {
        &self.forward
    }

    pub fn inverse(&self) -> NodePermutation {
        NodePermutation {
            forward: self.inverse.clone(),
            inverse: self.forward.clone(),
        }
    }

    /// Renames every node of `g` through this permutation.
    pub fn relabel(&self, g: &Graph) -> Result<Graph, GraphError> {
        if self.len() != g.node_count() {
            return Err(GraphError::InvalidParameter(format!(
                "permutation of {} ids applied to graph of {} nodes",
                self.len(),
                g.node_count()
            )));
        }
        let n = g.node_count();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::with_capacity(2 * g.edge_count());
        offsets.push(0);
        for new in 0..n {
            let start = targets.len();
            targets.extend(g.neighbors(self.inverse[new]).iter().map(|&w| self.forward[w]));
            targets[start..].sort_unstable();
            offsets.push(targets.len());
        }
        Ok(Graph {
            offsets,
            targets,
            family: g.family().clone(),
        })
    }
}

/// Applies a uniformly random permutation to the node ids of `g`.
pub fn random_relabel<R: Rng + ?Sized>(g: &Graph, rng: &mut R) -> (Graph, NodePermutation) {
    let mut forward: Vec<usize> = (0..g.node_count()).collect();
    forward.shuffle(rng);
    let perm = NodePermutation::new(forward).expect("shuffle yields a permutation");
    let relabeled = perm.relabel(g).expect("sizes agree");
    (relabeled, perm)
}

/// Connected components, each sorted ascending, ordered by smallest member.
pub fn connected_components(g: &Graph) -> Vec<Vec<usize>> {
    let n = g.node_count();
    let mut seen = vec![false; n];
    let mut bfs = Bfs::new();
    let mut comps = Vec::new();
    for v in 0..n {
        if seen[v] {
            continue;
        }
        bfs.run(g, &[v]);
        let mut comp = bfs.visited().to_vec();
        for &w in &comp {
            seen[w] = true;
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps
}

/// Largest connected component as a standalone graph, together with the
/// old→new id map (`None` for dropped nodes). Among equally large
/// components the one holding the smallest original id wins.
pub fn giant_component(g: &Graph) -> Result<(Graph, Vec<Option<usize>>), GraphError> {
    if g.is_empty() {
        return Err(GraphError::Empty);
    }
    let comps = connected_components(g);
    // `max_by_key` keeps the last maximum, so scan in reverse to keep the first.
    let giant = comps
        .iter()
        .rev()
        .max_by_key(|c| c.len())
        .expect("non-empty graph has a component");
    Ok(induced_subgraph(g, giant))
}

/// Subgraph induced by all nodes within `radius` hops of `center`, with ids
/// compacted in ascending order of the original ids. Returns new→old ids.
pub fn induced_ball_subgraph(
    g: &Graph,
    center: usize,
    radius: u32,
) -> Result<(Graph, Vec<usize>), GraphError> {
    g.check_node(center)?;
    let mut bfs = Bfs::new();
    bfs.run_bounded(g, &[center], radius);
    let mut members = bfs.visited().to_vec();
    members.sort_unstable();
    let (sub, _) = induced_subgraph(g, &members);
    Ok((sub, members))
}

/// `members` must be sorted ascending.
pub(crate) fn induced_subgraph(g: &Graph, members: &[usize]) -> (Graph, Vec<Option<usize>>) {
    let mut map = vec![None; g.node_count()];
    for (new, &old) in members.iter().enumerate() {
        map[old] = Some(new);
    }
    let mut builder = GraphBuilder::new(members.len());
    for (new, &old) in members.iter().enumerate() {
        for &w in g.neighbors(old) {
            if let Some(nw) = map[w] {
                if nw > new {
                    builder.add_edge(new, nw).expect("ids in range");
                }
            }
        }
    }
    (builder.build().0.with_family(Family::Derived), map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_grid_torus, diameter, DiameterMode};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn giant_picks_larger_component() {
        // Path on 0..7 plus a triangle on 7..10.
        let mut edges: Vec<(usize, usize)> = (1..7).map(|i| (i - 1, i)).collect();
        edges.extend([(7, 8), (8, 9), (9, 7)]);
        let g = Graph::from_edges(10, edges).unwrap();
        let (giant, map) = giant_component(&g).unwrap();
        assert_eq!(giant.node_count(), 7);
        assert_eq!(map[9], None);
        assert_eq!(map[3], Some(3));
    }

    #[test]
    fn giant_tie_prefers_smallest_id() {
        let g = Graph::from_edges(4, [(2, 3), (0, 1)]).unwrap();
        let (_, map) = giant_component(&g).unwrap();
        assert_eq!(map[0], Some(0));
        assert_eq!(map[2], None);
    }

    #[test]
    fn giant_of_connected_is_identity() {
        let g = build_grid_torus(5, 2).unwrap();
        let (giant, map) = giant_component(&g).unwrap();
        assert_eq!(giant.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
        assert!(map.iter().enumerate().all(|(i, m)| *m == Some(i)));
    }

    #[test]
    fn giant_of_empty_errors() {
        let g = Graph::from_edges(0, []).unwrap();
        assert!(matches!(giant_component(&g), Err(GraphError::Empty)));
    }

    #[test]
    fn ball_radius_zero_is_single_node() {
        let g = build_grid_torus(5, 2).unwrap();
        let (sub, ids) = induced_ball_subgraph(&g, 12, 0).unwrap();
        assert_eq!(sub.node_count(), 1);
        assert_eq!(ids, vec![12]);
    }

    #[test]
    fn ball_radius_one_is_plus_shape() {
        let g = build_grid_torus(5, 2).unwrap();
        let (sub, _) = induced_ball_subgraph(&g, 12, 1).unwrap();
        assert_eq!(sub.node_count(), 5);
        assert_eq!(sub.edge_count(), 4);
    }

    #[test]
    fn ball_beyond_eccentricity_is_component() {
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (3, 4)]).unwrap();
        let (sub, ids) = induced_ball_subgraph(&g, 1, 50).unwrap();
        assert_eq!(ids, vec![0, 1, 2]);
        assert_eq!(sub.edge_count(), 2);
    }

    #[test]
    fn relabel_roundtrip_and_degrees() {
        let g = build_grid_torus(6, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (h, perm) = random_relabel(&g, &mut rng);
        assert!(h.validate().is_ok());
        for (u, v) in g.edges() {
            assert!(h.has_edge(perm.apply(u), perm.apply(v)));
        }
        let back = perm.inverse().relabel(&h).unwrap();
        assert_eq!(back.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
        let mut dg: Vec<_> = (0..36).map(|v| g.degree(v)).collect();
        let mut dh: Vec<_> = (0..36).map(|v| h.degree(v)).collect();
        dg.sort();
        dh.sort();
        assert_eq!(dg, dh);
        assert_eq!(diameter(&h, DiameterMode::Exact).unwrap(), 6);
    }

    #[test]
    fn permutation_validation() {
        assert!(NodePermutation::new(vec![1, 0, 2]).is_ok());
        assert!(NodePermutation::new(vec![1, 1, 2]).is_err());
        assert!(NodePermutation::new(vec![0, 3]).is_err());
        let p = NodePermutation::new(vec![2, 0, 1]).unwrap();
        for v in 0..3 {
            assert_eq!(p.invert(p.apply(v)), v);
        }
    }

    #[test]
    fn relabel_is_uniform_over_s4() {
        // 24 permutations, 10,000 draws: expected 416.7 each.
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut counts = std::collections::HashMap::new();
        let draws = 10_000;
        for _ in 0..draws {
            let (_, perm) = random_relabel(&g, &mut rng);
            *counts.entry(perm.forward().to_vec()).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 24);
        let p = 1.0 / 24.0;
        let expected = draws as f64 * p;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        let mut chi2 = 0.0;
        for &c in counts.values() {
            // 4σ per cell keeps the family-wise false alarm rate negligible.
            assert!((c as f64 - expected).abs() < 4.0 * sigma, "count {c}");
            chi2 += (c as f64 - expected).powi(2) / expected;
        }
        // χ²(23) 99.9th percentile ≈ 49.7.
        assert!(chi2 < 49.7, "chi-square {chi2}");
    }
}
