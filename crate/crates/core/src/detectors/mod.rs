//! Decision rules.
//!
//! * [`comparative_ball`]: which of two candidate networks carries an
//!   epidemic. Each graph scores `RadiusBall / (scale · diameter)`; the lower
//!   score wins, ties go to the first graph.
//! * [`threshold_ball`] / [`threshold_tree`]: epidemic versus random sickness
//!   on one graph, by comparing a clustering statistic against a threshold.

mod constants;
mod threshold;

pub use constants::{fit_speed_constants, Sidecar, SpeedConstants, SpeedSample};
pub use threshold::{
    calibrate_empirical_threshold, compute_threshold, log_log, Calibration, PolicyFamily,
    PolicyParams, Statistic, ThresholdPolicy, TimeKnowledge,
};

use crate::graph::{max_component_diameter, Graph};
use crate::metrics::{steiner_tree_2approx, BallSolver, MetricError};
use crate::percolation::ReportSet;

#[derive(Debug, thiserror::Error)]
pub enum DetectError {
    #[error("no reporting nodes: the trial is undecidable")]
    Undecidable,
    #[error("candidate graphs differ in size ({0} vs {1} nodes)")]
    NodeCountMismatch(usize, usize),
    #[error("missing parameter `{0}` for the selected threshold policy")]
    MissingParameter(&'static str),
    #[error("no threshold rule for {0}")]
    UnsupportedPolicy(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Network {
    G1,
    G2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonVerdict {
    pub choice: Network,
    pub score1: f64,
    pub score2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sickness {
    Infection,
    Random,
}

impl Sickness {
    pub fn as_str(&self) -> &'static str {
        match self {
            Sickness::Infection => "INFECTION",
            Sickness::Random => "RANDOM",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SicknessVerdict {
    pub label: Sickness,
    /// Ball radius or Steiner tree size; infinite when the reports are not
    /// connected in the graph.
    pub statistic: f64,
    pub threshold: f64,
}

impl SicknessVerdict {
    pub fn decide(statistic: f64, threshold: f64) -> Self {
        let label = if statistic <= threshold {
            Sickness::Infection
        } else {
            Sickness::Random
        };
        SicknessVerdict {
            label,
            statistic,
            threshold,
        }
    }
}

/// One side of a comparison, with its diameter computed up front.
#[derive(Debug, Clone, Copy)]
pub struct Candidate<'a> {
    pub graph: &'a Graph,
    pub diameter: u32,
    pub scale: f64,
    /// When set, only reports on nodes flagged `true` count for this graph
    /// (e.g. the giant component of a sparse random graph).
    pub support: Option<&'a [bool]>,
}

impl<'a> Candidate<'a> {
    /// Uses the largest component diameter, which is the diameter for a
    /// connected graph.
    pub fn new(graph: &'a Graph, scale: f64) -> Self {
        Candidate {
            graph,
            diameter: max_component_diameter(graph),
            scale,
            support: None,
        }
    }
}

/// Picks the network with the smaller normalized ball radius.
pub fn comparative_ball(
    g1: &Graph,
    g2: &Graph,
    reports: &ReportSet,
    diam_scale1: f64,
    diam_scale2: f64,
) -> Result<ComparisonVerdict, DetectError> {
    if g1.node_count() != g2.node_count() {
        return Err(DetectError::NodeCountMismatch(g1.node_count(), g2.node_count()));
    }
    if reports.is_empty() {
        return Err(DetectError::Undecidable);
    }
    compare_candidates(
        &Candidate::new(g1, diam_scale1),
        &Candidate::new(g2, diam_scale2),
        &reports.nodes,
        &mut BallSolver::new(),
    )
}

pub fn compare_candidates(
    c1: &Candidate<'_>,
    c2: &Candidate<'_>,
    reports: &[usize],
    solver: &mut BallSolver,
) -> Result<ComparisonVerdict, DetectError> {
    if reports.is_empty() {
        return Err(DetectError::Undecidable);
    }
    let score1 = normalized_radius(c1, reports, solver)?;
    let score2 = normalized_radius(c2, reports, solver)?;
    let choice = if score1 <= score2 {
        Network::G1
    } else {
        Network::G2
    };
    Ok(ComparisonVerdict {
        choice,
        score1,
        score2,
    })
}

/// `RadiusBall / (scale · diameter)` over the reports the candidate
/// supports; infinite when none are supported or they span components.
pub fn normalized_radius(
    c: &Candidate<'_>,
    reports: &[usize],
    solver: &mut BallSolver,
) -> Result<f64, DetectError> {
    if !(c.scale > 0.0) {
        return Err(DetectError::InvalidParameter(format!(
            "diameter scale must be positive, got {}",
            c.scale
        )));
    }
    let radius = match c.support {
        Some(mask) => {
            let kept: Vec<usize> = reports.iter().copied().filter(|&v| mask[v]).collect();
            if kept.is_empty() {
                return Ok(f64::INFINITY);
            }
            solver.solve(c.graph, &kept)?
        }
        None => solver.solve(c.graph, reports)?,
    };
    let r = radius.value();
    Ok(if r == 0.0 {
        0.0
    } else {
        r / (c.scale * f64::from(c.diameter))
    })
}

pub fn threshold_ball(g: &Graph, reports: &ReportSet, m: f64) -> Result<SicknessVerdict, DetectError> {
    if reports.is_empty() {
        return Err(DetectError::Undecidable);
    }
    let radius = BallSolver::new().solve(g, &reports.nodes)?;
    Ok(SicknessVerdict::decide(radius.value(), m))
}

/// Reports split across components cannot come from one epidemic and get an
/// infinite statistic, hence RANDOM.
pub fn threshold_tree(g: &Graph, reports: &ReportSet, m: f64) -> Result<SicknessVerdict, DetectError> {
    if reports.is_empty() {
        return Err(DetectError::Undecidable);
    }
    Ok(SicknessVerdict::decide(tree_statistic(g, &reports.nodes)?, m))
}

pub(crate) fn tree_statistic(g: &Graph, nodes: &[usize]) -> Result<f64, DetectError> {
    match steiner_tree_2approx(g, nodes) {
        Ok(tree) => Ok(tree.size() as f64),
        Err(MetricError::Disconnected) => Ok(f64::INFINITY),
        Err(e) => Err(e.into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_grid_torus, diameter, random_relabel, DiameterMode};
    use crate::percolation::{sample_reports, simulate_si, StopRule};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reports(nodes: &[usize]) -> ReportSet {
        ReportSet {
            nodes: nodes.to_vec(),
            q: 0.25,
        }
    }

    #[test]
    fn single_report_ties_to_first() {
        let g = build_grid_torus(6, 2).unwrap();
        let (h, _) = random_relabel(&g, &mut ChaCha8Rng::seed_from_u64(1));
        let v = comparative_ball(&g, &h, &reports(&[5]), 1.0, 1.0).unwrap();
        assert_eq!(v.choice, Network::G1);
        assert_eq!((v.score1, v.score2), (0.0, 0.0));
    }

    #[test]
    fn scattered_on_second_graph_picks_first() {
        let g1 = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let g2 = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        let v = comparative_ball(&g1, &g2, &reports(&[0, 3]), 1.0, 1.0).unwrap();
        assert_eq!(v.choice, Network::G1);
        assert!(v.score2.is_infinite());
        let v = comparative_ball(&g2, &g1, &reports(&[0, 3]), 1.0, 1.0).unwrap();
        assert_eq!(v.choice, Network::G2);
    }

    #[test]
    fn empty_reports_undecidable() {
        let g = build_grid_torus(4, 2).unwrap();
        assert!(matches!(
            comparative_ball(&g, &g, &reports(&[]), 1.0, 1.0),
            Err(DetectError::Undecidable)
        ));
        assert!(matches!(threshold_ball(&g, &reports(&[]), 1.0), Err(DetectError::Undecidable)));
        assert!(matches!(threshold_tree(&g, &reports(&[]), 1.0), Err(DetectError::Undecidable)));
    }

    #[test]
    fn size_mismatch_and_bad_scale() {
        let a = build_grid_torus(4, 2).unwrap();
        let b = build_grid_torus(5, 2).unwrap();
        assert!(matches!(
            comparative_ball(&a, &b, &reports(&[0]), 1.0, 1.0),
            Err(DetectError::NodeCountMismatch(16, 25))
        ));
        assert!(comparative_ball(&a, &a, &reports(&[0, 5]), 0.0, 1.0).is_err());
    }

    #[test]
    fn threshold_ball_limits() {
        let g = build_grid_torus(8, 2).unwrap();
        let diam = diameter(&g, DiameterMode::Analytic).unwrap() as f64;
        let r = reports(&[0, 9, 36, 63]);
        assert_eq!(threshold_ball(&g, &r, diam).unwrap().label, Sickness::Infection);
        assert_eq!(threshold_ball(&g, &r, 0.0).unwrap().label, Sickness::Random);
    }

    #[test]
    fn threshold_tree_limits() {
        let g = build_grid_torus(8, 2).unwrap();
        let v = threshold_tree(&g, &reports(&[17]), 0.0).unwrap();
        assert_eq!((v.label, v.statistic), (Sickness::Infection, 0.0));
        let r = reports(&[0, 9, 36, 63]);
        assert_eq!(threshold_tree(&g, &r, 64.0).unwrap().label, Sickness::Infection);
        let split = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        let v = threshold_tree(&split, &reports(&[0, 3]), 1e9).unwrap();
        assert_eq!(v.label, Sickness::Random);
    }

    #[test]
    fn grid_vs_relabeled_grid_prefers_truth() {
        let g = build_grid_torus(40, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut right = 0;
        let trials = 100;
        for _ in 0..trials {
            let (h, _) = random_relabel(&g, &mut rng);
            let src = rng.random_range(0..1600);
            let tr = simulate_si(&g, src, StopRule::InfectedCount(160), &mut rng).unwrap();
            let rep = sample_reports(tr.infected(), 0.25, &mut rng).unwrap();
            if rep.is_empty() {
                continue;
            }
            if comparative_ball(&g, &h, &rep, 1.0, 1.0).unwrap().choice == Network::G1 {
                right += 1;
            }
        }
        assert!(right >= 90, "correct {right}/{trials}");
    }
}
