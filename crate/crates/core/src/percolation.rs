//! SI epidemics as first-passage percolation.
//!
//! Every edge carries an independent mean-1 exponential transit time and a
//! node's infection time is its weighted shortest-path distance from the
//! source. The simulator is a Dijkstra frontier that draws an edge's transit
//! time the first time the edge is examined, so only the infected region and
//! its boundary are ever touched.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::io::Write;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::graph::{build_grid_torus, Graph, GraphError};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("source node {node} out of range for graph with {n} nodes")]
    InvalidSource { node: usize, n: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("infection wrapped around the torus (side {side}); use a larger lattice")]
    WrapDetected { side: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// When to take the snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Everything infected at or before time `t`.
    Horizon(f64),
    /// The first `k` infected nodes (fewer if the component is smaller).
    InfectedCount(usize),
}

/// Source of edge transit times. Called at most once per undirected edge.
pub trait TransitTimes {
    fn sample(&mut self, from: usize, to: usize) -> f64;
}

/// Independent mean-1 exponential transit times.
pub struct ExpTransit<'a, R: Rng + ?Sized>(pub &'a mut R);

impl<R: Rng + ?Sized> TransitTimes for ExpTransit<'_, R> {
    #[inline]
    fn sample(&mut self, _from: usize, _to: usize) -> f64 {
        Exp1.sample(self.0)
    }
}

/// Wraps another sampler and keeps every drawn transit time, keyed by the
/// edge `(min, max)`.
pub struct RecordedTransit<T> {
    pub inner: T,
    pub weights: HashMap<(usize, usize), f64>,
}

impl<T> RecordedTransit<T> {
    pub fn new(inner: T) -> Self {
        RecordedTransit {
            inner,
            weights: HashMap::new(),
        }
    }
}

impl<T: TransitTimes> TransitTimes for RecordedTransit<T> {
    fn sample(&mut self, from: usize, to: usize) -> f64 {
        let w = self.inner.sample(from, to);
        let key = (from.min(to), from.max(to));
        let prev = self.weights.insert(key, w);
        debug_assert!(prev.is_none(), "edge {key:?} sampled twice");
        w
    }
}

#[derive(Debug, Clone)]
pub struct InfectionTrace {
    source: usize,
    horizon: f64,
    infection_time: Vec<f64>,
    parent: Vec<Option<usize>>,
    infected: Vec<usize>,
}

impl InfectionTrace {
    pub fn source(&self) -> usize {
        self.source
    }

    /// Snapshot time. For [`StopRule::InfectedCount`] this is the infection
    /// time of the last node taken.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Infection time of `v`, `f64::INFINITY` if not infected by the horizon.
    pub fn infection_time(&self, v: usize) -> f64 {
        self.infection_time[v]
    }

    pub fn infection_times(&self) -> &[f64] {
        &self.infection_time
    }

    /// The node that passed the infection to `v`.
    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    /// Infected nodes in order of infection.
    pub fn infected(&self) -> &[usize] {
        &self.infected
    }

    pub fn size(&self) -> usize {
        self.infected.len()
    }

    pub fn is_infected(&self, v: usize) -> bool {
        self.infection_time[v].is_finite()
    }

    /// `node,infection_time` rows for infected nodes in infection order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), SimError> {
        writeln!(out, "node,infection_time")?;
        for &v in &self.infected {
            writeln!(out, "{},{}", v, self.infection_time[v])?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    node: usize,
    from: usize,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // Reversed: BinaryHeap is a max-heap and we want the earliest event.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.node.cmp(&self.node))
    }
}

pub fn simulate_si<R: Rng + ?Sized>(
    g: &Graph,
    source: usize,
    stop: StopRule,
    rng: &mut R,
) -> Result<InfectionTrace, SimError> {
    simulate_with(g, source, stop, &mut ExpTransit(rng))
}

/// Event-driven SI run with transit times drawn from `transit`.
pub fn simulate_with<T: TransitTimes + ?Sized>(
    g: &Graph,
    source: usize,
    stop: StopRule,
    transit: &mut T,
) -> Result<InfectionTrace, SimError> {
    let n = g.node_count();
    if source >= n {
        return Err(SimError::InvalidSource { node: source, n });
    }
    let (horizon, limit) = match stop {
        StopRule::Horizon(t) if t >= 0.0 => (t, usize::MAX),
        StopRule::Horizon(t) => {
            return Err(SimError::InvalidParameter(format!(
                "horizon must be non-negative, got {t}"
            )))
        }
        StopRule::InfectedCount(0) => {
            return Err(SimError::InvalidParameter("infected count must be at least 1".into()))
        }
        StopRule::InfectedCount(k) => (f64::INFINITY, k),
    };

    let mut time = vec![f64::INFINITY; n];
    let mut tentative = vec![f64::INFINITY; n];
    let mut parent = vec![None; n];
    let mut infected = Vec::new();
    let mut frontier = BinaryHeap::new();
    tentative[source] = 0.0;
    frontier.push(Event {
        time: 0.0,
        node: source,
        from: usize::MAX,
    });

    while let Some(ev) = frontier.pop() {
        if ev.time > horizon || infected.len() >= limit {
            break;
        }
        let u = ev.node;
        if time[u].is_finite() || ev.time > tentative[u] {
            continue;
        }
        time[u] = ev.time;
        if ev.from != usize::MAX {
            parent[u] = Some(ev.from);
        }
        infected.push(u);
        for &w in g.neighbors(u) {
            if time[w].is_finite() {
                continue;
            }
            let arrival = ev.time + transit.sample(u, w);
            if arrival < tentative[w] {
                tentative[w] = arrival;
                frontier.push(Event {
                    time: arrival,
                    node: w,
                    from: u,
                });
            }
        }
    }

    let horizon = match stop {
        StopRule::Horizon(t) => t,
        StopRule::InfectedCount(_) => infected.last().map_or(0.0, |&v| time[v]),
    };
    Ok(InfectionTrace {
        source,
        horizon,
        infection_time: time,
        parent,
        infected,
    })
}

/// Uniform random `count`-subset of the nodes, sorted ascending.
pub fn sample_random_sickness<R: Rng + ?Sized>(
    g: &Graph,
    count: usize,
    rng: &mut R,
) -> Result<Vec<usize>, SimError> {
    let n = g.node_count();
    if count > n {
        return Err(SimError::InvalidParameter(format!(
            "cannot pick {count} sick nodes from {n}"
        )));
    }
    let mut sick = index::sample(rng, n, count).into_vec();
    sick.sort_unstable();
    Ok(sick)
}

/// Every node independently sick with probability `p`.
pub fn sample_random_sickness_bernoulli<R: Rng + ?Sized>(
    g: &Graph,
    p: f64,
    rng: &mut R,
) -> Result<Vec<usize>, SimError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(SimError::InvalidParameter(format!(
            "sickness probability must lie in [0, 1], got {p}"
        )));
    }
    Ok((0..g.node_count()).filter(|_| rng.random_bool(p)).collect())
}

/// The observed evidence: sick nodes that reported.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportSet {
    pub nodes: Vec<usize>,
    pub q: f64,
}

impl ReportSet {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Keeps each sick node independently with probability `q`.
pub fn sample_reports<R: Rng + ?Sized>(
    sick: &[usize],
    q: f64,
    rng: &mut R,
) -> Result<ReportSet, SimError> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(SimError::InvalidParameter(format!(
            "reporting probability must lie in (0, 1], got {q}"
        )));
    }
    let nodes = if q >= 1.0 {
        sick.to_vec()
    } else {
        sick.iter().copied().filter(|_| rng.random_bool(q)).collect()
    };
    Ok(ReportSet { nodes, q })
}

/// Monte-Carlo estimate of the axis rate μ of the `dim`-dimensional grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisRate {
    pub mu: f64,
    pub std_error: f64,
    pub trials: usize,
    pub side: usize,
}

/// Runs `trials` epidemics to time `t` from the center of a torus with side
/// about 6t and averages, over trials and the 2·dim axis directions,
/// the farthest infected displacement along that direction divided by `t`.
pub fn estimate_axis_rate_mu<R: Rng + ?Sized>(
    dim: usize,
    t: f64,
    trials: usize,
    rng: &mut R,
) -> Result<AxisRate, SimError> {
    if !(t > 0.0 && t.is_finite()) || trials == 0 || dim == 0 {
        return Err(SimError::InvalidParameter(format!(
            "need dim ≥ 1, t > 0 and trials ≥ 1 (got dim={dim}, t={t}, trials={trials})"
        )));
    }
    // Axis reach in two dimensions runs at about 2.3·t, so 4t is not enough.
    let half = (3.0 * t).ceil() as usize + 2;
    let side = 2 * half + 1;
    estimate_axis_rate_on_side(dim, t, trials, side, rng)
}

pub(crate) fn estimate_axis_rate_on_side<R: Rng + ?Sized>(
    dim: usize,
    t: f64,
    trials: usize,
    side: usize,
    rng: &mut R,
) -> Result<AxisRate, SimError> {
    let half = side / 2;
    let g = build_grid_torus(side, dim)?;
    let center: usize = (0..dim).map(|i| half * side.pow(i as u32)).sum();

    let mut samples = Vec::with_capacity(trials);
    for _ in 0..trials {
        let trace = simulate_si(&g, center, StopRule::Horizon(t), rng)?;
        let mut reach = vec![0usize; 2 * dim];
        for &v in trace.infected() {
            let mut rest = v;
            for axis in 0..dim {
                let x = rest % side;
                rest /= side;
                if x == 0 || x == side - 1 {
                    return Err(SimError::WrapDetected { side });
                }
                if x >= half {
                    reach[2 * axis] = reach[2 * axis].max(x - half);
                } else {
                    reach[2 * axis + 1] = reach[2 * axis + 1].max(half - x);
                }
            }
        }
        let mean_reach = reach.iter().sum::<usize>() as f64 / reach.len() as f64;
        samples.push(mean_reach / t);
    }
    let k = samples.len() as f64;
    let mu = samples.iter().sum::<f64>() / k;
    let var = if samples.len() > 1 {
        samples.iter().map(|s| (s - mu).powi(2)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    Ok(AxisRate {
        mu,
        std_error: (var / k).sqrt(),
        trials,
        side,
    })
}
