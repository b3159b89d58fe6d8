//! Undirected, unweighted graphs in compressed adjacency form.
//!
//! A [`Graph`] is immutable once built. Node ids are dense (`0..n`), every
//! neighbor list is sorted and duplicate-free, and there are no self-loops.
//! All randomized constructors take an explicit RNG so that experiments are
//! reproducible from a seed.

mod distance;
mod generators;
mod io;
mod transform;

use std::fmt;

pub use distance::{
    bfs_distances, diameter, diameter_all_pairs, max_component_diameter, Bfs, DiameterMode,
    HopDistances, UNREACHABLE,
};
pub use generators::{build_balanced_tree, build_er, build_grid_torus};
pub use io::{load_edge_list, write_edge_list, LoadedGraph};
pub use transform::{
    connected_components, giant_component, induced_ball_subgraph, random_relabel, NodePermutation,
};

/// Errors raised while constructing, loading or measuring graphs.
#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("graph size overflows: {0}")]
    Overflow(String),
    #[error("graph is empty")]
    Empty,
    #[error("graph is disconnected")]
    Disconnected,
    #[error("node {node} out of range for graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("analytic diameter is not available for {0} graphs")]
    NoAnalyticDiameter(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Where a graph came from. Carried along for analytic shortcuts and for the
/// `# family=...` header of edge-list dumps.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Grid { side: usize, dim: usize },
    ErdosRenyi { n: usize, p: f64 },
    BalancedTree { branching: usize, depth: usize },
    Loaded,
    /// Produced by a transform (component extraction, induced ball, ...).
    Derived,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Grid { side, dim } => write!(f, "grid side={side} dim={dim}"),
            Family::ErdosRenyi { n, p } => write!(f, "er n={n} p={p}"),
            Family::BalancedTree { branching, depth } => {
                write!(f, "tree branching={branching} depth={depth}")
            }
            Family::Loaded => f.write_str("loaded"),
            Family::Derived => f.write_str("derived"),
        }
    }
}

#[derive(Clone, PartialEq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    family: Family,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("nodes", &self.node_count())
            .field("edges", &self.edge_count())
            .field("family", &self.family)
            .finish()
    }
}

impl Graph {
    /// Builds a graph on `n` nodes from arbitrary edge pairs. Self-loops and
    /// repeated edges are dropped.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Graph, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut builder = GraphBuilder::new(n);
        for (u, v) in edges {
            builder.add_edge(u, v)?;
        }
        Ok(builder.build().0)
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.node_count() == 0
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.node_count() && self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub(crate) fn with_family(mut self, family: Family) -> Graph {
        self.family = family;
        self
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.node_count()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    pub fn check_node(&self, v: usize) -> Result<(), GraphError> {
        if v < self.node_count() {
            Ok(())
        } else {
            Err(GraphError::NodeOutOfRange {
                node: v,
                n: self.node_count(),
            })
        }
    }

    /// Verifies symmetry, sortedness, and absence of self-loops and parallel
    /// edges. Intended for tests and debug assertions.
    pub fn validate(&self) -> Result<(), String> {
        let n = self.node_count();
        for v in 0..n {
            let adj = self.neighbors(v);
            for w in adj.windows(2) {
                if w[0] >= w[1] {
                    return Err(format!("adjacency of {v} not strictly sorted"));
                }
            }
            for &u in adj {
                if u >= n {
                    return Err(format!("edge {v}-{u} leaves the node range"));
                }
                if u == v {
                    return Err(format!("self-loop at {v}"));
                }
                if !self.has_edge(u, v) {
                    return Err(format!("edge {v}-{u} is not symmetric"));
                }
            }
        }
        Ok(())
    }
}

/// Counts of input edges discarded while building a graph.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DropStats {
    pub duplicates: usize,
    pub self_loops: usize,
}

pub(crate) struct GraphBuilder {
    n: usize,
    pairs: Vec<(usize, usize)>,
    self_loops: usize,
}

impl GraphBuilder {
    pub(crate) fn new(n: usize) -> Self {
        GraphBuilder {
            n,
            pairs: Vec::new(),
            self_loops: 0,
        }
    }

    pub(crate) fn with_capacity(n: usize, edges: usize) -> Self {
        GraphBuilder {
            n,
            pairs: Vec::with_capacity(2 * edges),
            self_loops: 0,
        }
    }

    pub(crate) fn add_edge(&mut self, u: usize, v: usize) -> Result<(), GraphError> {
        for x in [u, v] {
            if x >= self.n {
                return Err(GraphError::NodeOutOfRange { node: x, n: self.n });
            }
        }
        if u == v {
            self.self_loops += 1;
        } else {
            self.pairs.push((u, v));
            self.pairs.push((v, u));
        }
        Ok(())
    }

    pub(crate) fn build(mut self) -> (Graph, DropStats) {
        self.pairs.sort_unstable();
        let before = self.pairs.len();
        self.pairs.dedup();
        let duplicates = (before - self.pairs.len()) / 2;

        let mut offsets = vec![0usize; self.n + 1];
        for &(u, _) in &self.pairs {
            offsets[u + 1] += 1;
        }
        for i in 0..self.n {
            offsets[i + 1] += offsets[i];
        }
        let targets = self.pairs.into_iter().map(|(_, v)| v).collect();
        let graph = Graph {
            offsets,
            targets,
            family: Family::Derived,
        };
        (
            graph,
            DropStats {
                duplicates,
                self_loops: self.self_loops,
            },
        )
    }
}
