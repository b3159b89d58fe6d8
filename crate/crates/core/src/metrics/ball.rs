use crate::graph::{Bfs, Graph, UNREACHABLE};

use super::{normalize_targets, MetricError};

/// A ball containing every target: all targets lie within `radius` hops of
/// `center`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BallCover {
    pub center: usize,
    pub radius: u32,
}

/// Result of [`radius_ball`]. Targets spread over several components admit
/// no enclosing ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Radius {
    Bounded(BallCover),
    Unbounded,
}

impl Radius {
    pub fn hops(&self) -> Option<u32> {
        match self {
            Radius::Bounded(b) => Some(b.radius),
            Radius::Unbounded => None,
        }
    }

    /// Radius as a real number, `f64::INFINITY` when unbounded.
    pub fn value(&self) -> f64 {
        self.hops().map_or(f64::INFINITY, f64::from)
    }
}

/// Smallest-radius ball, over all n candidate centers, containing `targets`.
/// Ties go to the smallest center id.
pub fn radius_ball(g: &Graph, targets: &[usize]) -> Result<Radius, MetricError> {
    BallSolver::new().solve(g, targets)
}

/// Scratch space for repeated [`radius_ball`] queries.
///
/// The radius is `min_v max_{s∈S} d(v, s)`. Rather than one BFS per target,
/// the solver keeps lower bounds `lb(v) = max d(v, s)` over the targets
/// explored so far. The node with the smallest bound is checked exactly; if
/// its true eccentricity w.r.t. S equals the bound, it is optimal. Otherwise
/// its farthest target is explored next, which lifts that node's bound above
/// the current minimum. Each round adds a new target, so the loop ends after
/// at most |S| rounds and the answer is exact.
#[derive(Debug, Default, Clone)]
pub struct BallSolver {
    bfs: Bfs,
    lower: Vec<u32>,
}

impl BallSolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn solve(&mut self, g: &Graph, targets: &[usize]) -> Result<Radius, MetricError> {
        let targets = normalize_targets(g.node_count(), targets)?;
        if targets.len() == 1 {
            return Ok(Radius::Bounded(BallCover {
                center: targets[0],
                radius: 0,
            }));
        }

        self.bfs.run(g, &targets[..1]);
        if targets.iter().any(|&s| self.bfs.dist()[s] == UNREACHABLE) {
            return Ok(Radius::Unbounded);
        }
        self.lower.clear();
        self.lower.extend_from_slice(self.bfs.dist());

        loop {
            let (bound, center) = self
                .lower
                .iter()
                .enumerate()
                .map(|(v, &b)| (b, v))
                .min()
                .expect("graph has nodes");

            self.bfs.run(g, &[center]);
            let dist = self.bfs.dist();
            let (reach, far) = targets
                .iter()
                .map(|&s| (dist[s], std::cmp::Reverse(s)))
                .max()
                .expect("targets non-empty");
            if reach == bound {
                return Ok(Radius::Bounded(BallCover {
                    center,
                    radius: bound,
                }));
            }
            debug_assert!(reach > bound);

            self.bfs.run(g, &[far.0]);
            for (lb, &d) in self.lower.iter_mut().zip(self.bfs.dist()) {
                *lb = (*lb).max(d);
            }
        }
    }
}
