use std::collections::VecDeque;

use super::{Family, Graph, GraphError};

/// Stored distance of a node no source can reach.
pub const UNREACHABLE: u32 = u32::MAX;

/// Hop distances from a source set. Unreachable nodes read as `None`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopDistances(Vec<u32>);

impl HopDistances {
    pub fn get(&self, v: usize) -> Option<u32> {
        match self.0[v] {
            UNREACHABLE => None,
            d => Some(d),
        }
    }

    /// Raw distances with [`UNREACHABLE`] marking unreachable nodes.
    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_finite(&self) -> Option<u32> {
        self.0.iter().copied().filter(|&d| d != UNREACHABLE).max()
    }
}

/// Reusable BFS scratch space. One per worker.
#[derive(Debug, Default, Clone)]
pub struct Bfs {
    dist: Vec<u32>,
    queue: VecDeque<usize>,
    order: Vec<usize>,
}

impl Bfs {
    pub fn new() -> Self {
        Self::default()
    }

    /// Multi-source BFS. Distances stay valid in [`Bfs::dist`] until the next
    /// run; [`Bfs::visited`] lists reached nodes in nondecreasing distance.
    pub fn run(&mut self, g: &Graph, sources: &[usize]) {
        self.run_bounded(g, sources, u32::MAX);
    }

    /// As [`Bfs::run`] but does not expand beyond `radius` hops.
    pub fn run_bounded(&mut self, g: &Graph, sources: &[usize], radius: u32) {
        let n = g.node_count();
        self.dist.clear();
        self.dist.resize(n, UNREACHABLE);
        self.queue.clear();
        self.order.clear();
        for &s in sources {
            if self.dist[s] != 0 {
                self.dist[s] = 0;
                self.queue.push_back(s);
                self.order.push(s);
            }
        }
        while let Some(u) = self.queue.pop_front() {
            let du = self.dist[u];
            if du >= radius {
                continue;
            }
            for &w in g.neighbors(u) {
                if self.dist[w] == UNREACHABLE {
                    self.dist[w] = du + 1;
                    self.queue.push_back(w);
                    self.order.push(w);
                }
            }
        }
    }

    pub fn dist(&self) -> &[u32] {
        &self.dist
    }

    pub fn visited(&self) -> &[usize] {
        &self.order
    }

    pub fn into_distances(self) -> HopDistances {
        HopDistances(self.dist)
    }
}

pub fn bfs_distances(g: &Graph, sources: &[usize]) -> Result<HopDistances, GraphError> {
    if sources.is_empty() {
        return Err(GraphError::InvalidParameter("BFS needs at least one source".into()));
    }
    for &s in sources {
        g.check_node(s)?;
    }
    let mut bfs = Bfs::new();
    bfs.run(g, sources);
    Ok(bfs.into_distances())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiameterMode {
    /// Maximum eccentricity, computed exactly.
    Exact,
    /// Closed form; only available for torus grids, where it is d·⌊side/2⌋.
    Analytic,
}

pub fn diameter(g: &Graph, mode: DiameterMode) -> Result<u32, GraphError> {
    match mode {
        DiameterMode::Analytic => match *g.family() {
            Family::Grid { side, dim } => u32::try_from(dim * (side / 2))
                .map_err(|_| GraphError::Overflow("grid diameter".into())),
            ref other => Err(GraphError::NoAnalyticDiameter(other.to_string())),
        },
        DiameterMode::Exact => {
            if g.is_empty() {
                return Err(GraphError::Empty);
            }
            let mut bfs = Bfs::new();
            bfs.run(g, &[0]);
            if bfs.visited().len() != g.node_count() {
                return Err(GraphError::Disconnected);
            }
            let all: Vec<usize> = (0..g.node_count()).collect();
            Ok(component_diameter(g, &all, &mut bfs))
        }
    }
}

/// Largest diameter over all connected components (0 for an empty graph).
pub fn max_component_diameter(g: &Graph) -> u32 {
    let mut bfs = Bfs::new();
    let mut best = 0;
    for comp in super::connected_components(g) {
        if comp.len() as u32 > best + 1 {
            best = best.max(component_diameter(g, &comp, &mut bfs));
        }
    }
    best
}

/// Exact diameter by BFS from every node. Kept as a reference for the bounded
/// version below.
pub fn diameter_all_pairs(g: &Graph) -> Result<u32, GraphError> {
    if g.is_empty() {
        return Err(GraphError::Empty);
    }
    let mut bfs = Bfs::new();
    let mut best = 0;
    for v in 0..g.node_count() {
        bfs.run(g, &[v]);
        if bfs.visited().len() != g.node_count() {
            return Err(GraphError::Disconnected);
        }
        best = best.max(bfs.dist()[*bfs.visited().last().unwrap()]);
    }
    Ok(best)
}

/// Exact diameter of one connected component via eccentricity bounds.
///
/// Every BFS yields the exact eccentricity of its root and, by the triangle
/// inequality, `ecc(w) ≤ ecc(v) + d(v, w)` and `ecc(w) ≥ max(d(v, w),
/// ecc(v) - d(v, w))` for all other nodes. Nodes whose upper bound cannot
/// beat the best eccentricity seen so far are discarded. Roots alternate
/// between the largest upper bound and the smallest lower bound.
fn component_diameter(g: &Graph, comp: &[usize], bfs: &mut Bfs) -> u32 {
    if comp.len() <= 1 {
        return 0;
    }
    let mut lower = vec![0u32; comp.len()];
    let mut upper = vec![u32::MAX; comp.len()];
    let mut alive: Vec<usize> = (0..comp.len()).collect();
    let mut best = 0u32;
    let mut pick_high = true;

    while !alive.is_empty() {
        let idx = if pick_high {
            *alive
                .iter()
                .max_by_key(|&&i| (upper[i], std::cmp::Reverse(i)))
                .unwrap()
        } else {
            *alive
                .iter()
                .min_by_key(|&&i| (lower[i], i))
                .unwrap()
        };
        pick_high = !pick_high;

        bfs.run(g, &[comp[idx]]);
        let dist = bfs.dist();
        let ecc = dist[*bfs.visited().last().unwrap()];
        best = best.max(ecc);
        lower[idx] = ecc;
        upper[idx] = ecc;
        for (i, &v) in comp.iter().enumerate() {
            let d = dist[v];
            lower[i] = lower[i].max(d).max(ecc.saturating_sub(d));
            upper[i] = upper[i].min(ecc + d);
        }
        alive.retain(|&i| i != idx && upper[i] > best);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_balanced_tree, build_er, build_grid_torus};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn path(n: usize) -> Graph {
        Graph::from_edges(n, (1..n).map(|i| (i - 1, i))).unwrap()
    }

    #[test]
    fn single_source_path() {
        let d = bfs_distances(&path(3), &[0]).unwrap();
        assert_eq!(d.as_slice(), &[0, 1, 2]);
    }

    #[test]
    fn all_sources_zero() {
        let g = path(6);
        let all: Vec<usize> = (0..6).collect();
        let d = bfs_distances(&g, &all).unwrap();
        assert!(d.as_slice().iter().all(|&x| x == 0));
    }

    #[test]
    fn unreachable_is_none() {
        let g = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        let d = bfs_distances(&g, &[0]).unwrap();
        assert_eq!(d.get(1), Some(1));
        assert_eq!(d.get(2), None);
        assert_eq!(d.max_finite(), Some(1));
    }

    #[test]
    fn empty_sources_rejected() {
        assert!(bfs_distances(&path(3), &[]).is_err());
        assert!(bfs_distances(&path(3), &[7]).is_err());
    }

    #[test]
    fn bounded_bfs_stops() {
        let mut bfs = Bfs::new();
        bfs.run_bounded(&path(10), &[0], 3);
        assert_eq!(bfs.visited().len(), 4);
    }

    #[test]
    fn torus_diameter_exact_matches_analytic() {
        let g = build_grid_torus(40, 2).unwrap();
        assert_eq!(diameter(&g, DiameterMode::Analytic).unwrap(), 40);
        assert_eq!(diameter(&g, DiameterMode::Exact).unwrap(), 40);
    }

    #[test]
    fn small_diameters() {
        let single = Graph::from_edges(1, []).unwrap();
        assert_eq!(diameter(&single, DiameterMode::Exact).unwrap(), 0);
        let tree = build_balanced_tree(2, 4).unwrap();
        assert_eq!(diameter(&tree, DiameterMode::Exact).unwrap(), 8);
        assert_eq!(
            diameter(&build_balanced_tree(2, 9).unwrap(), DiameterMode::Exact).unwrap(),
            18
        );
        assert!(matches!(
            diameter(&tree, DiameterMode::Analytic),
            Err(GraphError::NoAnalyticDiameter(_))
        ));
    }

    #[test]
    fn disconnected_exact_diameter_rejected() {
        let g = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert!(matches!(
            diameter(&g, DiameterMode::Exact),
            Err(GraphError::Disconnected)
        ));
        assert!(matches!(diameter_all_pairs(&g), Err(GraphError::Disconnected)));
    }

    #[test]
    fn bounded_diameter_matches_all_pairs() {
        for seed in 0..30 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = build_er(120, 0.03, &mut rng).unwrap();
            let (giant, _) = crate::graph::giant_component(&g).unwrap();
            assert_eq!(
                diameter(&giant, DiameterMode::Exact).unwrap(),
                diameter_all_pairs(&giant).unwrap(),
                "seed {seed}"
            );
            assert!(max_component_diameter(&g) >= diameter_all_pairs(&giant).unwrap());
        }
    }
}
