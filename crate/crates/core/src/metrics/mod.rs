//! Clustering statistics of a node set: smallest enclosing ball radius and
//! (approximate) minimum Steiner tree size, with exact small-instance
//! references.

mod ball;
mod exact;
mod steiner;

pub use ball::{radius_ball, BallCover, BallSolver, Radius};
pub use exact::exact_steiner_size;
pub use steiner::{nearest_terminal_distances, steiner_tree_2approx, SteinerTree};

#[derive(Debug, thiserror::Error)]
pub enum MetricError {
    #[error("target set is empty")]
    EmptyTargets,
    #[error("node {node} out of range for graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("terminals lie in different connected components")]
    Disconnected,
    #[error("instance too large for the exact solver: {0}")]
    TooLarge(String),
}

/// Sorted, deduplicated copy of `targets`, validated against `n`.
pub(crate) fn normalize_targets(n: usize, targets: &[usize]) -> Result<Vec<usize>, MetricError> {
    if targets.is_empty() {
        return Err(MetricError::EmptyTargets);
    }
    if let Some(&node) = targets.iter().find(|&&v| v >= n) {
        return Err(MetricError::NodeOutOfRange { node, n });
    }
    let mut t = targets.to_vec();
    t.sort_unstable();
    t.dedup();
    Ok(t)
}
