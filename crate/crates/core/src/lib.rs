//! Simulation of SI epidemics on graphs and detection of their cause from a
//! partial set of reporting sick nodes.
//!
//! * [`graph`]: compressed graphs, generators, edge-list I/O, BFS and diameter.
//! * [`percolation`]: event-driven SI simulation (first-passage percolation
//!   with exponential transit times), random sickness and report sampling.
//! * [`metrics`]: smallest enclosing ball radius and Steiner tree size.
//! * [`detectors`]: comparative ball, threshold ball and threshold tree
//!   decision rules, plus threshold selection.
//! * [`experiments`]: seeded Monte-Carlo sweeps producing error curves.

pub mod detectors;
pub mod experiments;
pub mod graph;
pub mod metrics;
pub mod percolation;

pub use graph::{Graph, GraphError};
