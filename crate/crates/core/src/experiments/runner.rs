use std::borrow::Cow;
use std::fs::File;
use std::io::BufReader;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rayon::ThreadPool;

use super::config::{ExperimentConfig, GraphSpec, Kind, Knowledge, SicknessModel, SweepVar, ThresholdRule};
use super::curve::{CurveRow, ErrorCurve, Tally};
use super::plot::XAxis;
use super::ExperimentError;
use crate::detectors::{
    calibrate_empirical_threshold, compare_candidates, compute_threshold, fit_speed_constants,
    tree_statistic, Candidate, Network, PolicyFamily, PolicyParams, Sidecar, SpeedSample, Statistic,
    ThresholdPolicy, TimeKnowledge,
};
use crate::graph::{
    build_balanced_tree, build_er, build_grid_torus, diameter, giant_component, induced_ball_subgraph,
    load_edge_list, max_component_diameter, random_relabel, DiameterMode, Graph, NodePermutation,
};
use crate::metrics::BallSolver;
use crate::percolation::{
    estimate_axis_rate_mu, sample_random_sickness, sample_random_sickness_bernoulli, sample_reports,
    simulate_si, StopRule,
};

/// Random stream for one trial. Each (seed, stream) pair is an independent
/// ChaCha8 sequence; trials take disjoint 2^36-word blocks of it.
pub fn trial_rng(seed: u64, stream: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos((trial as u128) << 36);
    rng
}

const EDGE_LIST_CENTER_STREAM: u64 = u64::MAX;
const AXIS_RATE_STREAM: u64 = u64::MAX - 1;

/// Everything an experiment produced.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    /// Named error curves; a single unnamed curve for comparisons.
    pub series: Vec<(String, ErrorCurve)>,
    /// Calibrated constants (calibrate kind only).
    pub sidecar: Option<Sidecar>,
    pub x_axis: XAxis,
    pub labels: [&'static str; 2],
}

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentOutput, ExperimentError> {
    cfg.validate()?;
    let threshold_labels = ["type I", "type II"];
    Ok(match cfg.kind {
        Kind::Compare => ExperimentOutput {
            series: vec![(String::new(), run_compare(cfg)?)],
            sidecar: None,
            x_axis: XAxis::MeanSize,
            labels: ["T:G1;A:G2", "T:G2;A:G1"],
        },
        Kind::ThresholdVsN => ExperimentOutput {
            series: run_threshold_vs_n(cfg)?,
            sidecar: None,
            x_axis: XAxis::Sweep,
            labels: threshold_labels,
        },
        Kind::ThresholdVsSize => ExperimentOutput {
            series: run_threshold_vs_size(cfg)?,
            sidecar: None,
            x_axis: XAxis::MeanSize,
            labels: threshold_labels,
        },
        Kind::Calibrate => ExperimentOutput {
            series: Vec::new(),
            sidecar: Some(run_calibrate(cfg)?),
            x_axis: XAxis::Sweep,
            labels: threshold_labels,
        },
    })
}

fn pool(threads: usize) -> Result<ThreadPool, ExperimentError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))
}

/// Runs `f` for trials `0..n` on the pool and returns results in trial order.
fn par_trials<T, F>(pool: &ThreadPool, n: usize, f: F) -> Result<Vec<T>, ExperimentError>
where
    T: Send,
    F: Fn(usize) -> Result<T, ExperimentError> + Sync,
{
    pool.install(|| (0..n).into_par_iter().map(&f).collect())
}

/// One graph as seen by a trial.
#[derive(Debug, Clone)]
struct Instance {
    graph: Graph,
    /// Nodes that can host the epidemic and whose reports count; all nodes
    /// when `None`.
    support: Option<Vec<bool>>,
    support_nodes: Option<Vec<usize>>,
    /// Largest component diameter; only filled for comparisons.
    diameter: u32,
    /// Epidemics start at node 0 (the root of a balanced tree).
    root_source: bool,
}

impl Instance {
    fn whole(graph: Graph, diameter: u32, root_source: bool) -> Self {
        Instance {
            graph,
            support: None,
            support_nodes: None,
            diameter,
            root_source,
        }
    }

    fn pick_source<R: Rng>(&self, rng: &mut R) -> usize {
        if self.root_source {
            0
        } else if let Some(pool) = &self.support_nodes {
            pool[rng.random_range(0..pool.len())]
        } else {
            rng.random_range(0..self.graph.node_count())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Threshold runs: sparse random graphs are cut to their giant component.
    Threshold,
    /// Comparisons: all n nodes are kept so both candidates share a node
    /// set; sparse random graphs restrict sources and reports to the giant.
    Compare,
}

enum Sampler {
    Fixed(Arc<Instance>),
    Er { n: usize, p: f64 },
    ErDense { n: usize, p: f64 },
}

impl Sampler {
    fn prepare(spec: &GraphSpec, seed: u64) -> Result<Self, ExperimentError> {
        let missing = |what: &str| ExperimentError::Config(format!("graph `{spec}` needs {what}"));
        let fixed = |graph: Graph, root: bool| -> Result<Sampler, ExperimentError> {
            let diam = match diameter(&graph, DiameterMode::Analytic) {
                Ok(d) => d,
                Err(_) => max_component_diameter(&graph),
            };
            Ok(Sampler::Fixed(Arc::new(Instance::whole(graph, diam, root))))
        };
        match spec {
            GraphSpec::Grid { side, dim } => {
                fixed(build_grid_torus(side.ok_or_else(|| missing("side"))?, *dim)?, false)
            }
            GraphSpec::Tree { c, depth } => {
                fixed(build_balanced_tree(*c, depth.ok_or_else(|| missing("depth"))?)?, true)
            }
            GraphSpec::Er { n, c } => {
                let n = n.ok_or_else(|| missing("n"))?;
                Ok(Sampler::Er { n, p: c / n as f64 })
            }
            GraphSpec::ErDense { n, d } => {
                let n = n.ok_or_else(|| missing("n"))?;
                let np = (n as f64).powf(1.0 / f64::from(*d));
                Ok(Sampler::ErDense { n, p: np / n as f64 })
            }
            GraphSpec::EdgeList { path, ball } => {
                let file = File::open(path).map_err(|e| ExperimentError::Io {
                    context: format!("opening {}", path.display()),
                    source: e,
                })?;
                let loaded = load_edge_list(BufReader::new(file))?;
                let graph = match ball {
                    Some(radius) => {
                        let mut rng = trial_rng(seed, EDGE_LIST_CENTER_STREAM, 0);
                        let center = rng.random_range(0..loaded.graph.node_count());
                        induced_ball_subgraph(&loaded.graph, center, *radius)?.0
                    }
                    None => loaded.graph,
                };
                fixed(graph, false)
            }
        }
    }

    fn node_count(&self) -> usize {
        match self {
            Sampler::Fixed(inst) => inst.graph.node_count(),
            Sampler::Er { n, .. } | Sampler::ErDense { n, .. } => *n,
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R, mode: Mode) -> Result<Cow<'_, Instance>, ExperimentError> {
        Ok(match self {
            Sampler::Fixed(inst) => Cow::Borrowed(inst.as_ref()),
            Sampler::ErDense { n, p } => {
                let g = build_er(*n, *p, rng)?;
                let diam = if mode == Mode::Compare {
                    max_component_diameter(&g)
                } else {
                    0
                };
                Cow::Owned(Instance::whole(g, diam, false))
            }
            Sampler::Er { n, p } => {
                let g = build_er(*n, *p, rng)?;
                let (giant, map) = giant_component(&g)?;
                match mode {
                    Mode::Threshold => Cow::Owned(Instance::whole(giant, 0, false)),
                    Mode::Compare => {
                        let mask: Vec<bool> = map.iter().map(Option::is_some).collect();
                        let nodes = (0..g.node_count()).filter(|&v| mask[v]).collect();
                        Cow::Owned(Instance {
                            diameter: max_component_diameter(&giant),
                            graph: g,
                            support: Some(mask),
                            support_nodes: Some(nodes),
                            root_source: false,
                        })
                    }
                }
            }
        })
    }
}

fn stop_rule(var: SweepVar, value: f64) -> StopRule {
    match var {
        SweepVar::Time => StopRule::Horizon(value),
        SweepVar::Infected => StopRule::InfectedCount(value.round().max(1.0) as usize),
    }
}

fn permute_mask(mask: &[bool], perm: &NodePermutation) -> Vec<bool> {
    let mut out = vec![false; mask.len()];
    for (old, &m) in mask.iter().enumerate() {
        out[perm.apply(old)] = m;
    }
    out
}

/// Comparative ball error curve. Even trials put the epidemic on graph 1,
/// odd trials on graph 2; both graphs get fresh random labels every trial.
/// Type 1 counts "truth G1, answered G2", type 2 the reverse.
pub fn run_compare(cfg: &ExperimentConfig) -> Result<ErrorCurve, ExperimentError> {
    let spec1 = cfg.graph1.as_ref().ok_or_else(|| ExperimentError::Config("missing graph1".into()))?;
    let spec2 = cfg.graph2.as_ref().ok_or_else(|| ExperimentError::Config("missing graph2".into()))?;
    let s1 = Sampler::prepare(spec1, cfg.seed)?;
    let s2 = Sampler::prepare(spec2, cfg.seed)?;
    if s1.node_count() != s2.node_count() {
        return Err(ExperimentError::Config(format!(
            "candidate graphs differ in size ({} vs {} nodes)",
            s1.node_count(),
            s2.node_count()
        )));
    }
    let pool = pool(cfg.threads)?;
    let mut rows = Vec::with_capacity(cfg.sweep.len());
    for (point, &value) in cfg.sweep.iter().enumerate() {
        let stop = stop_rule(cfg.sweep_var, value);
        let outcomes = par_trials(&pool, cfg.trials, |trial| {
            let mut rng = trial_rng(cfg.seed, point as u64, trial);
            let inst1 = s1.sample(&mut rng, Mode::Compare)?;
            let inst2 = s2.sample(&mut rng, Mode::Compare)?;
            let (h1, p1) = random_relabel(&inst1.graph, &mut rng);
            let (h2, p2) = random_relabel(&inst2.graph, &mut rng);
            let m1 = inst1.support.as_deref().map(|m| permute_mask(m, &p1));
            let m2 = inst2.support.as_deref().map(|m| permute_mask(m, &p2));

            let truth_first = trial % 2 == 0;
            let (inst, host, perm) = if truth_first {
                (&inst1, &h1, &p1)
            } else {
                (&inst2, &h2, &p2)
            };
            let source = perm.apply(inst.pick_source(&mut rng));
            let trace = simulate_si(host, source, stop, &mut rng)?;
            let reports = sample_reports(trace.infected(), cfg.q, &mut rng)?;
            if reports.is_empty() {
                return Ok((truth_first, trace.size(), None));
            }
            let c1 = Candidate {
                graph: &h1,
                diameter: inst1.diameter,
                scale: cfg.scale1,
                support: m1.as_deref(),
            };
            let c2 = Candidate {
                graph: &h2,
                diameter: inst2.diameter,
                scale: cfg.scale2,
                support: m2.as_deref(),
            };
            let verdict = compare_candidates(&c1, &c2, &reports.nodes, &mut BallSolver::new())?;
            let wrong = (verdict.choice == Network::G1) != truth_first;
            Ok((truth_first, trace.size(), Some(wrong)))
        })?;

        let (mut first, mut second) = (Tally::default(), Tally::default());
        let mut total_size = 0usize;
        for &(truth_first, size, outcome) in &outcomes {
            total_size += size;
            if truth_first {
                first.record(outcome);
            } else {
                second.record(outcome);
            }
        }
        let mean = total_size as f64 / outcomes.len() as f64;
        rows.push(CurveRow::from_tallies(value, mean, first, second));
    }
    Ok(ErrorCurve { rows })
}

/// Statistics of one trial's reports.
#[derive(Debug, Clone, Copy)]
struct Obs {
    /// Sick (or infected) count.
    size: usize,
    x_rep: usize,
    ball: f64,
    tree: f64,
}

impl Obs {
    fn stat(&self, s: Statistic) -> Option<f64> {
        (self.x_rep > 0).then_some(match s {
            Statistic::Ball => self.ball,
            Statistic::Tree => self.tree,
        })
    }
}

fn observe(
    g: &Graph,
    sick: &[usize],
    q: f64,
    stats: [bool; 2],
    rng: &mut ChaCha8Rng,
) -> Result<Obs, ExperimentError> {
    let reports = sample_reports(sick, q, rng)?;
    let mut obs = Obs {
        size: sick.len(),
        x_rep: reports.len(),
        ball: f64::NAN,
        tree: f64::NAN,
    };
    if !reports.is_empty() {
        if stats[0] {
            obs.ball = BallSolver::new().solve(g, &reports.nodes)?.value();
        }
        if stats[1] {
            obs.tree = tree_statistic(g, &reports.nodes)?;
        }
    }
    Ok(obs)
}

/// One sweep point of a threshold experiment.
struct Point {
    sweep: f64,
    spec: GraphSpec,
    stop: StopRule,
    /// Graph size used in threshold formulas.
    n: usize,
}

struct Constants {
    mu: Option<f64>,
    b: Option<f64>,
    b2: Option<f64>,
}

fn load_constants(cfg: &ExperimentConfig) -> Result<Constants, ExperimentError> {
    let sidecar = match &cfg.constants {
        Some(path) => {
            let file = File::open(path).map_err(|e| ExperimentError::Io {
                context: format!("opening {}", path.display()),
                source: e,
            })?;
            Sidecar::parse(BufReader::new(file)).map_err(|e| ExperimentError::Io {
                context: format!("reading {}", path.display()),
                source: e,
            })?
        }
        None => Sidecar::new(),
    };
    Ok(Constants {
        mu: cfg.mu.or(sidecar.get_f64("mu")),
        b: cfg.b.or(sidecar.get_f64("b")),
        b2: cfg.b2.or(sidecar.get_f64("b2")),
    })
}

enum Resolved {
    Fixed(f64),
    PerTrial(ThresholdPolicy),
}

impl Resolved {
    fn at(&self, obs: &Obs) -> Result<f64, ExperimentError> {
        match self {
            Resolved::Fixed(m) => Ok(*m),
            Resolved::PerTrial(policy) => {
                let mut p = *policy;
                p.time = TimeKnowledge::Adaptive { x_rep: obs.x_rep };
                Ok(compute_threshold(&p)?)
            }
        }
    }
}

/// Turns the configured rule into a threshold for this point.
fn resolve(
    rule: ThresholdRule,
    statistic: Statistic,
    cfg: &ExperimentConfig,
    point: &Point,
    constants: &Constants,
    mean_size: f64,
    epi: &[Obs],
    rnd: &[Obs],
) -> Result<Resolved, ExperimentError> {
    Ok(match rule {
        ThresholdRule::Off => unreachable!("disabled series are skipped"),
        ThresholdRule::Scaled(s) => Resolved::Fixed(s.eval(point.n as f64)),
        ThresholdRule::Calibrated => {
            let a: Vec<f64> = epi.iter().filter_map(|o| o.stat(statistic)).collect();
            let b: Vec<f64> = rnd.iter().filter_map(|o| o.stat(statistic)).collect();
            if a.is_empty() || b.is_empty() {
                Resolved::Fixed(f64::NAN)
            } else {
                Resolved::Fixed(calibrate_empirical_threshold(&a, &b)?.threshold)
            }
        }
        ThresholdRule::Policy => {
            let family = point.spec.policy_family()?;
            let params = PolicyParams {
                mu: constants.mu,
                b: constants.b,
                b2: constants.b2,
                q: Some(cfg.q),
                n: Some(point.n),
                expected_size: Some(mean_size),
            };
            let t = match point.stop {
                StopRule::Horizon(t) => t,
                StopRule::InfectedCount(_) => f64::NAN,
            };
            let policy = ThresholdPolicy {
                family,
                statistic,
                time: TimeKnowledge::Known { t },
                params,
            };
            match cfg.time_knowledge {
                Knowledge::Adaptive => Resolved::PerTrial(policy),
                Knowledge::Known => {
                    let needs_time = !matches!(family, PolicyFamily::ErDense { .. })
                        && !(statistic == Statistic::Tree);
                    if needs_time && t.is_nan() {
                        return Err(ExperimentError::Config(
                            "known-time ball policies need a horizon, not an infected count".into(),
                        ));
                    }
                    Resolved::Fixed(compute_threshold(&policy)?)
                }
            }
        }
    })
}

fn run_points(
    cfg: &ExperimentConfig,
    points: &[Point],
) -> Result<Vec<(String, ErrorCurve)>, ExperimentError> {
    let constants = load_constants(cfg)?;
    let pool = pool(cfg.threads)?;
    let series: Vec<(Statistic, ThresholdRule, &str)> = [
        (Statistic::Ball, cfg.ball_threshold, "ball"),
        (Statistic::Tree, cfg.tree_threshold, "tree"),
    ]
    .into_iter()
    .filter(|(_, rule, _)| *rule != ThresholdRule::Off)
    .collect();
    let stats = [
        cfg.ball_threshold != ThresholdRule::Off,
        cfg.tree_threshold != ThresholdRule::Off,
    ];
    let mut curves: Vec<ErrorCurve> = vec![ErrorCurve::default(); series.len()];

    for (idx, point) in points.iter().enumerate() {
        let sampler = Sampler::prepare(&point.spec, cfg.seed)?;
        let epi = par_trials(&pool, cfg.trials, |trial| {
            let mut rng = trial_rng(cfg.seed, 2 * idx as u64, trial);
            let inst = sampler.sample(&mut rng, Mode::Threshold)?;
            let source = inst.pick_source(&mut rng);
            let trace = simulate_si(&inst.graph, source, point.stop, &mut rng)?;
            observe(&inst.graph, trace.infected(), cfg.q, stats, &mut rng)
        })?;
        let mean_size = epi.iter().map(|o| o.size as f64).sum::<f64>() / epi.len() as f64;

        let rnd = par_trials(&pool, cfg.trials, |trial| {
            let mut rng = trial_rng(cfg.seed, 2 * idx as u64 + 1, trial);
            let inst = sampler.sample(&mut rng, Mode::Threshold)?;
            let g = &inst.graph;
            let sick = match cfg.sickness {
                SicknessModel::Fixed => {
                    let k = (mean_size.round() as usize).min(g.node_count());
                    sample_random_sickness(g, k, &mut rng)?
                }
                SicknessModel::Bernoulli => {
                    let p = (mean_size / g.node_count() as f64).min(1.0);
                    sample_random_sickness_bernoulli(g, p, &mut rng)?
                }
            };
            observe(g, &sick, cfg.q, stats, &mut rng)
        })?;

        for ((statistic, rule, _), curve) in series.iter().zip(curves.iter_mut()) {
            let m = resolve(*rule, *statistic, cfg, point, &constants, mean_size, &epi, &rnd)?;
            let (mut type1, mut type2) = (Tally::default(), Tally::default());
            for o in &rnd {
                type1.record(match o.stat(*statistic) {
                    Some(s) => Some(s <= m.at(o)?),
                    None => None,
                });
            }
            for o in &epi {
                type2.record(match o.stat(*statistic) {
                    Some(s) => Some(s > m.at(o)?),
                    None => None,
                });
            }
            let mut row = CurveRow::from_tallies(point.sweep, mean_size, type1, type2);
            if let Resolved::Fixed(m) = m {
                row.threshold = Some(m);
            }
            curve.rows.push(row);
        }
    }
    Ok(series
        .into_iter()
        .zip(curves)
        .map(|((_, _, name), c)| (name.to_string(), c))
        .collect())
}

/// Type I / Type II errors against graph size. The sweep lists sizes n;
/// the horizon (or infected count) and explicit thresholds are rules in n.
pub fn run_threshold_vs_n(cfg: &ExperimentConfig) -> Result<Vec<(String, ErrorCurve)>, ExperimentError> {
    let template = cfg.graph.as_ref().ok_or_else(|| ExperimentError::Config("missing graph".into()))?;
    let points = cfg
        .sweep
        .iter()
        .map(|&n| {
            let spec = template.with_n(n as usize)?;
            let nf = n;
            let stop = match (cfg.time, cfg.size) {
                (Some(t), _) => StopRule::Horizon(t.eval(nf)),
                (None, Some(k)) => StopRule::InfectedCount(k.eval(nf).round().max(1.0) as usize),
                (None, None) => {
                    return Err(ExperimentError::Config("need `time` or `size`".into()))
                }
            };
            Ok(Point {
                sweep: n,
                spec,
                stop,
                n: n as usize,
            })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    run_points(cfg, &points)
}

/// Errors against infection size on one graph family, with the threshold
/// rules of the config (by default calibrated to the minimum empirical
/// error at every point).
pub fn run_threshold_vs_size(cfg: &ExperimentConfig) -> Result<Vec<(String, ErrorCurve)>, ExperimentError> {
    let spec = cfg.graph.as_ref().ok_or_else(|| ExperimentError::Config("missing graph".into()))?;
    let n = Sampler::prepare(spec, cfg.seed)?.node_count();
    let points: Vec<Point> = cfg
        .sweep
        .iter()
        .map(|&v| Point {
            sweep: v,
            spec: spec.clone(),
            stop: stop_rule(cfg.sweep_var, v),
            n,
        })
        .collect();
    run_points(cfg, &points)
}

/// Fits the speed constants b, λ and b2 from epidemics at the sweep
/// horizons; on grids also estimates the axis rate μ.
pub fn run_calibrate(cfg: &ExperimentConfig) -> Result<Sidecar, ExperimentError> {
    let spec = cfg.graph.as_ref().ok_or_else(|| ExperimentError::Config("missing graph".into()))?;
    if cfg.sweep_var != SweepVar::Time {
        return Err(ExperimentError::Config("calibration sweeps horizons".into()));
    }
    let sampler = Sampler::prepare(spec, cfg.seed)?;
    let pool = pool(cfg.threads)?;
    let mut samples = Vec::with_capacity(cfg.sweep.len());
    for (idx, &t) in cfg.sweep.iter().enumerate() {
        let obs = par_trials(&pool, cfg.trials, |trial| {
            let mut rng = trial_rng(cfg.seed, idx as u64, trial);
            let inst = sampler.sample(&mut rng, Mode::Threshold)?;
            let source = inst.pick_source(&mut rng);
            let trace = simulate_si(&inst.graph, source, StopRule::Horizon(t), &mut rng)?;
            let radius = BallSolver::new().solve(&inst.graph, trace.infected())?.value();
            Ok((radius, trace.size()))
        })?;
        let k = obs.len() as f64;
        samples.push(SpeedSample {
            t,
            mean_radius: obs.iter().map(|o| o.0).sum::<f64>() / k,
            mean_size: obs.iter().map(|o| o.1 as f64).sum::<f64>() / k,
        });
    }
    let fit = fit_speed_constants(&samples)?;

    let mut sidecar = Sidecar::new();
    sidecar.set("family", spec);
    sidecar.set("seed", cfg.seed);
    sidecar.set("trials", cfg.trials);
    sidecar.set("b", fit.b);
    sidecar.set("lambda", fit.lambda);
    sidecar.set("b2", fit.b2);
    if let GraphSpec::Grid { dim, .. } = spec {
        let mut rng = trial_rng(cfg.seed, AXIS_RATE_STREAM, 0);
        let rate = estimate_axis_rate_mu(*dim, cfg.mu_time, cfg.mu_trials, &mut rng)?;
        sidecar.set("mu", rate.mu);
        sidecar.set("mu_std_error", rate.std_error);
        sidecar.set("mu_time", cfg.mu_time);
        sidecar.set("mu_trials", cfg.mu_trials);
    }
    for s in &samples {
        sidecar.set(&format!("mean_radius[t={}]", s.t), s.mean_radius);
        sidecar.set(&format!("mean_size[t={}]", s.t), s.mean_size);
    }
    Ok(sidecar)
}
