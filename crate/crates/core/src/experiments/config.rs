use std::fmt;
use std::io::BufRead;
use std::path::PathBuf;

use super::ExperimentError;
use crate::detectors::PolicyFamily;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Compare,
    ThresholdVsN,
    ThresholdVsSize,
    Calibrate,
}

impl Kind {
    fn as_str(&self) -> &'static str {
        match self {
            Kind::Compare => "compare",
            Kind::ThresholdVsN => "threshold_vs_n",
            Kind::ThresholdVsSize => "threshold_vs_size",
            Kind::Calibrate => "calibrate",
        }
    }
}

/// A graph family with its parameters. Size parameters left as `None` are
/// filled from the sweep value n by [`GraphSpec::with_n`].
#[derive(Debug, Clone, PartialEq)]
pub enum GraphSpec {
    Grid { side: Option<usize>, dim: usize },
    /// Sparse G(n, c/n); experiments use its giant component.
    Er { n: Option<usize>, c: f64 },
    /// Dense G(n, p) with np = n^{1/d}.
    ErDense { n: Option<usize>, d: u32 },
    Tree { c: usize, depth: Option<usize> },
    /// Edge-list file, optionally cut down to the ball of the given radius
    /// around a seeded random node.
    EdgeList { path: PathBuf, ball: Option<u32> },
}

impl GraphSpec {
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let bad = |msg: String| ExperimentError::Config(format!("graph `{text}`: {msg}"));
        let mut words = text.split_whitespace();
        let family = words.next().ok_or_else(|| bad("empty".into()))?;
        let mut pairs = Vec::new();
        for w in words {
            let (k, v) = w
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got `{w}`")))?;
            pairs.push((k, v));
        }
        let take = |key: &str| pairs.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
        let num = |key: &str| -> Result<Option<usize>, ExperimentError> {
            take(key)
                .map(|v| v.parse().map_err(|_| bad(format!("bad integer for {key}"))))
                .transpose()
        };
        let allowed: &[&str] = match family {
            "grid" => &["side", "dim"],
            "er" => &["n", "c"],
            "er_dense" => &["n", "d"],
            "tree" => &["c", "depth"],
            "edgelist" => &["path", "ball"],
            other => return Err(bad(format!("unknown family `{other}`"))),
        };
        if let Some((k, _)) = pairs.iter().find(|(k, _)| !allowed.contains(k)) {
            return Err(bad(format!("unknown parameter `{k}`")));
        }
        let spec = match family {
            "grid" => GraphSpec::Grid {
                side: num("side")?,
                dim: num("dim")?.unwrap_or(2),
            },
            "er" => GraphSpec::Er {
                n: num("n")?,
                c: take("c")
                    .map(|v| v.parse().map_err(|_| bad("bad c".into())))
                    .transpose()?
                    .unwrap_or(2.0),
            },
            "er_dense" => GraphSpec::ErDense {
                n: num("n")?,
                d: num("d")?.ok_or_else(|| bad("missing d".into()))? as u32,
            },
            "tree" => GraphSpec::Tree {
                c: num("c")?.unwrap_or(2),
                depth: num("depth")?,
            },
            _ => GraphSpec::EdgeList {
                path: take("path").ok_or_else(|| bad("missing path".into()))?.into(),
                ball: num("ball")?.map(|b| b as u32),
            },
        };
        Ok(spec)
    }

    /// Fills the size parameter so the graph has about `n` nodes.
    pub fn with_n(&self, n: usize) -> Result<GraphSpec, ExperimentError> {
        Ok(match self {
            GraphSpec::Grid { dim, .. } => {
                let mut side = (n as f64).powf(1.0 / *dim as f64).round() as usize;
                while side > 0 && side.checked_pow(*dim as u32).is_none_or(|m| m > n) {
                    side -= 1;
                }
                GraphSpec::Grid {
                    side: Some(side),
                    dim: *dim,
                }
            }
            GraphSpec::Er { c, .. } => GraphSpec::Er { n: Some(n), c: *c },
            GraphSpec::ErDense { d, .. } => GraphSpec::ErDense { n: Some(n), d: *d },
            GraphSpec::Tree { c, .. } => {
                // Deepest complete tree with at most n nodes.
                let (mut depth, mut size, mut level) = (0usize, 1usize, 1usize);
                loop {
                    level = level.saturating_mul(*c);
                    match size.checked_add(level) {
                        Some(s) if s <= n => {
                            size = s;
                            depth += 1;
                        }
                        _ => break,
                    }
                }
                GraphSpec::Tree {
                    c: *c,
                    depth: Some(depth),
                }
            }
            GraphSpec::EdgeList { .. } => {
                return Err(ExperimentError::Config(
                    "an edge-list graph cannot be resized".into(),
                ))
            }
        })
    }

    pub fn policy_family(&self) -> Result<PolicyFamily, ExperimentError> {
        Ok(match self {
            GraphSpec::Grid { dim, .. } => PolicyFamily::Grid { d: *dim as u32 },
            GraphSpec::Er { c, .. } => PolicyFamily::Er { c: *c },
            GraphSpec::ErDense { d, .. } => PolicyFamily::ErDense { d: *d },
            GraphSpec::Tree { c, .. } => PolicyFamily::Tree { c: *c as u32 },
            GraphSpec::EdgeList { .. } => {
                return Err(ExperimentError::Config(
                    "threshold policies need a known graph family".into(),
                ))
            }
        })
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::Grid { side, dim } => {
                write!(f, "grid")?;
                if let Some(s) = side {
                    write!(f, " side={s}")?;
                }
                write!(f, " dim={dim}")
            }
            GraphSpec::Er { n, c } => {
                write!(f, "er")?;
                if let Some(n) = n {
                    write!(f, " n={n}")?;
                }
                write!(f, " c={c}")
            }
            GraphSpec::ErDense { n, d } => {
                write!(f, "er_dense")?;
                if let Some(n) = n {
                    write!(f, " n={n}")?;
                }
                write!(f, " d={d}")
            }
            GraphSpec::Tree { c, depth } => {
                write!(f, "tree c={c}")?;
                if let Some(d) = depth {
                    write!(f, " depth={d}")?;
                }
                Ok(())
            }
            GraphSpec::EdgeList { path, ball } => {
                write!(f, "edgelist path={}", path.display())?;
                if let Some(b) = ball {
                    write!(f, " ball={b}")?;
                }
                Ok(())
            }
        }
    }
}

/// A quantity as a function of the graph size n. Logs are natural.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scaling {
    /// a
    Const(f64),
    /// a·n
    Linear(f64),
    /// a·√n
    Sqrt(f64),
    /// a·n^{1/d}
    Root { d: u32, a: f64 },
    /// a·ln(b·n)
    Log { a: f64, b: f64 },
    /// a·√(n ln n)·ln n
    SqrtNLogN(f64),
}

impl Scaling {
    pub fn eval(&self, n: f64) -> f64 {
        match *self {
            Scaling::Const(a) => a,
            Scaling::Linear(a) => a * n,
            Scaling::Sqrt(a) => a * n.sqrt(),
            Scaling::Root { d, a } => a * n.powf(1.0 / f64::from(d)),
            Scaling::Log { a, b } => a * (b * n).ln(),
            Scaling::SqrtNLogN(a) => a * (n * n.ln()).sqrt() * n.ln(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let bad = || ExperimentError::Config(format!("bad scaling rule `{text}`"));
        let words: Vec<&str> = text.split_whitespace().collect();
        let nums: Vec<f64> = words
            .iter()
            .skip(1)
            .map(|w| w.parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        let rule = match (words.first().copied(), nums.as_slice()) {
            (Some("const"), [a]) => Scaling::Const(*a),
            (Some("linear"), [a]) => Scaling::Linear(*a),
            (Some("sqrt"), [a]) => Scaling::Sqrt(*a),
            (Some("root"), [d, a]) if *d >= 1.0 && d.fract() == 0.0 => Scaling::Root { d: *d as u32, a: *a },
            (Some("log"), [a, b]) => Scaling::Log { a: *a, b: *b },
            (Some("sqrtnlogn"), [a]) => Scaling::SqrtNLogN(*a),
            _ => return Err(bad()),
        };
        Ok(rule)
    }
}

impl fmt::Display for Scaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scaling::Const(a) => write!(f, "const {a}"),
            Scaling::Linear(a) => write!(f, "linear {a}"),
            Scaling::Sqrt(a) => write!(f, "sqrt {a}"),
            Scaling::Root { d, a } => write!(f, "root {d} {a}"),
            Scaling::Log { a, b } => write!(f, "log {a} {b}"),
            Scaling::SqrtNLogN(a) => write!(f, "sqrtnlogn {a}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdRule {
    /// Series disabled.
    Off,
    /// Explicit rule in n.
    Scaled(Scaling),
    /// Formula from the threshold policy table for the graph family.
    Policy,
    /// Minimum empirical error at each sweep point.
    Calibrated,
}

impl ThresholdRule {
    fn parse(text: &str) -> Result<Self, ExperimentError> {
        Ok(match text.trim() {
            "none" => ThresholdRule::Off,
            "policy" => ThresholdRule::Policy,
            "calibrated" => ThresholdRule::Calibrated,
            other => ThresholdRule::Scaled(Scaling::parse(other)?),
        })
    }
}

impl fmt::Display for ThresholdRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdRule::Off => write!(f, "none"),
            ThresholdRule::Policy => write!(f, "policy"),
            ThresholdRule::Calibrated => write!(f, "calibrated"),
            ThresholdRule::Scaled(s) => write!(f, "{s}"),
        }
    }
}

/// How the epidemic is stopped at each sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    /// Sweep values are horizons t.
    Time,
    /// Sweep values are infected counts.
    Infected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SicknessModel {
    /// Uniform subset of size round(mean epidemic size).
    Fixed,
    /// Each node sick independently with probability mean size / n.
    Bernoulli,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Knowledge {
    Known,
    Adaptive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: Kind,
    /// Single graph for threshold and calibration runs.
    pub graph: Option<GraphSpec>,
    pub graph1: Option<GraphSpec>,
    pub graph2: Option<GraphSpec>,
    pub scale1: f64,
    pub scale2: f64,
    pub q: f64,
    pub trials: usize,
    pub seed: u64,
    pub threads: usize,
    /// Horizons or infected counts (compare, threshold_vs_size, calibrate),
    /// or graph sizes (threshold_vs_n).
    pub sweep: Vec<f64>,
    pub sweep_var: SweepVar,
    /// threshold_vs_n: horizon as a function of n.
    pub time: Option<Scaling>,
    /// threshold_vs_n: infected-count stop as a function of n.
    pub size: Option<Scaling>,
    pub ball_threshold: ThresholdRule,
    pub tree_threshold: ThresholdRule,
    pub time_knowledge: Knowledge,
    pub sickness: SicknessModel,
    /// Sidecar with calibrated constants for policy thresholds.
    pub constants: Option<PathBuf>,
    pub mu: Option<f64>,
    pub b: Option<f64>,
    pub b2: Option<f64>,
    /// calibrate: horizon and trial count of the grid axis-rate estimate.
    pub mu_time: f64,
    pub mu_trials: usize,
}

impl ExperimentConfig {
    pub fn new(kind: Kind) -> Self {
        let calibrated = kind == Kind::ThresholdVsSize;
        let default_rule = if calibrated {
            ThresholdRule::Calibrated
        } else {
            ThresholdRule::Off
        };
        ExperimentConfig {
            kind,
            graph: None,
            graph1: None,
            graph2: None,
            scale1: 1.0,
            scale2: 1.0,
            q: 0.25,
            trials: 1000,
            seed: 1,
            threads: 1,
            sweep: Vec::new(),
            sweep_var: SweepVar::Time,
            time: None,
            size: None,
            ball_threshold: default_rule,
            tree_threshold: default_rule,
            time_knowledge: Knowledge::Known,
            sickness: SicknessModel::Fixed,
            constants: None,
            mu: None,
            b: None,
            b2: None,
            mu_time: 25.0,
            mu_trials: 200,
        }
    }

    /// Parses `key = value` lines; `#` starts a comment line. `kind` must
    /// come first so defaults can depend on it.
    pub fn parse<R: BufRead>(input: R) -> Result<Self, ExperimentError> {
        let mut pairs = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line.map_err(|e| ExperimentError::Io {
                context: "reading config".into(),
                source: e,
            })?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                ExperimentError::Config(format!("line {}: expected `key = value`", i + 1))
            })?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        Self::from_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))
    }

    pub fn from_pairs<'a, I>(pairs: I) -> Result<Self, ExperimentError>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut iter = pairs.into_iter();
        let kind = match iter.next() {
            Some(("kind", v)) => parse_kind(v)?,
            _ => return Err(ExperimentError::Config("the first key must be `kind`".into())),
        };
        let mut cfg = ExperimentConfig::new(kind);
        for (k, v) in iter {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one `key = value` setting, as from a file line or a CLI
    /// override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ExperimentError> {
        let value = value.trim();
        let bad = |what: &str| ExperimentError::Config(format!("bad value `{value}` for {key}: {what}"));
        let float = || value.parse::<f64>().map_err(|_| bad("expected a number"));
        let int = || value.parse::<usize>().map_err(|_| bad("expected an integer"));
        let opt_float = || -> Result<Option<f64>, ExperimentError> {
            if value == "none" {
                Ok(None)
            } else {
                float().map(Some)
            }
        };
        match key {
            "kind" => {
                if parse_kind(value)? != self.kind {
                    return Err(ExperimentError::Config("`kind` cannot be changed".into()));
                }
            }
            "graph" => self.graph = Some(GraphSpec::parse(value)?),
            "graph1" => self.graph1 = Some(GraphSpec::parse(value)?),
            "graph2" => self.graph2 = Some(GraphSpec::parse(value)?),
            "scale1" => self.scale1 = float()?,
            "scale2" => self.scale2 = float()?,
            "q" => self.q = float()?,
            "trials" => self.trials = int()?,
            "seed" => self.seed = value.parse().map_err(|_| bad("expected an integer"))?,
            "threads" => self.threads = int()?,
            "sweep" => {
                self.sweep = value
                    .split_whitespace()
                    .map(|w| w.parse::<f64>().map_err(|_| bad("expected numbers")))
                    .collect::<Result<_, _>>()?
            }
            "sweep_var" => {
                self.sweep_var = match value {
                    "time" => SweepVar::Time,
                    "infected" => SweepVar::Infected,
                    _ => return Err(bad("expected time or infected")),
                }
            }
            "time" => self.time = (value != "none").then(|| Scaling::parse(value)).transpose()?,
            "size" => self.size = (value != "none").then(|| Scaling::parse(value)).transpose()?,
            "ball_threshold" => self.ball_threshold = ThresholdRule::parse(value)?,
            "tree_threshold" => self.tree_threshold = ThresholdRule::parse(value)?,
            "time_knowledge" => {
                self.time_knowledge = match value {
                    "known" => Knowledge::Known,
                    "adaptive" => Knowledge::Adaptive,
                    _ => return Err(bad("expected known or adaptive")),
                }
            }
            "sickness" => {
                self.sickness = match value {
                    "fixed" => SicknessModel::Fixed,
                    "bernoulli" => SicknessModel::Bernoulli,
                    _ => return Err(bad("expected fixed or bernoulli")),
                }
            }
            "constants" => self.constants = (value != "none").then(|| value.into()),
            "mu" => self.mu = opt_float()?,
            "b" => self.b = opt_float()?,
            "b2" => self.b2 = opt_float()?,
            "mu_time" => self.mu_time = float()?,
            "mu_trials" => self.mu_trials = int()?,
            other => return Err(ExperimentError::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let fail = |msg: &str| Err(ExperimentError::Config(msg.into()));
        if self.trials == 0 {
            return fail("trials must be at least 1");
        }
        if self.threads == 0 {
            return fail("threads must be at least 1");
        }
        if self.sweep.is_empty() {
            return fail("sweep grid is empty");
        }
        if self.sweep.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return fail("sweep values must be positive");
        }
        if !(self.q > 0.0 && self.q <= 1.0) {
            return fail("q must lie in (0, 1]");
        }
        if !(self.scale1 > 0.0 && self.scale2 > 0.0) {
            return fail("diameter scales must be positive");
        }
        match self.kind {
            Kind::Compare => {
                if self.graph1.is_none() || self.graph2.is_none() {
                    return fail("compare needs graph1 and graph2");
                }
            }
            Kind::ThresholdVsN | Kind::ThresholdVsSize | Kind::Calibrate => {
                if self.graph.is_none() {
                    return fail("this experiment needs `graph`");
                }
            }
        }
        if self.kind == Kind::ThresholdVsN {
            if self.time.is_some() == self.size.is_some() {
                return fail("threshold_vs_n needs exactly one of `time` and `size`");
            }
            if self.sweep.iter().any(|x| x.fract() != 0.0) {
                return fail("threshold_vs_n sweeps integer graph sizes");
            }
        }
        if matches!(self.kind, Kind::ThresholdVsN | Kind::ThresholdVsSize)
            && self.ball_threshold == ThresholdRule::Off
            && self.tree_threshold == ThresholdRule::Off
        {
            return fail("both threshold series are disabled");
        }
        if self.kind == Kind::ThresholdVsN
            && (self.ball_threshold == ThresholdRule::Calibrated
                || self.tree_threshold == ThresholdRule::Calibrated)
        {
            return fail("calibrated thresholds are only available in threshold_vs_size");
        }
        Ok(())
    }

    /// Canonical text form listing every setting; parsing it gives back the
    /// same config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        let opt = |v: &Option<f64>| v.map_or("none".to_string(), |x| x.to_string());
        line("kind", self.kind.as_str().into());
        for (key, spec) in [("graph", &self.graph), ("graph1", &self.graph1), ("graph2", &self.graph2)] {
            if let Some(s) = spec {
                line(key, s.to_string());
            }
        }
        line("scale1", self.scale1.to_string());
        line("scale2", self.scale2.to_string());
        line("q", self.q.to_string());
        line("trials", self.trials.to_string());
        line("seed", self.seed.to_string());
        line("threads", self.threads.to_string());
        line(
            "sweep",
            self.sweep.iter().map(f64::to_string).collect::<Vec<_>>().join(" "),
        );
        line(
            "sweep_var",
            match self.sweep_var {
                SweepVar::Time => "time",
                SweepVar::Infected => "infected",
            }
            .into(),
        );
        line("time", self.time.map_or("none".into(), |s| s.to_string()));
        line("size", self.size.map_or("none".into(), |s| s.to_string()));
        line("ball_threshold", self.ball_threshold.to_string());
        line("tree_threshold", self.tree_threshold.to_string());
        line(
            "time_knowledge",
            match self.time_knowledge {
                Knowledge::Known => "known",
                Knowledge::Adaptive => "adaptive",
            }
            .into(),
        );
        line(
            "sickness",
            match self.sickness {
                SicknessModel::Fixed => "fixed",
                SicknessModel::Bernoulli => "bernoulli",
            }
            .into(),
        );
        line(
            "constants",
            self.constants
                .as_ref()
                .map_or("none".into(), |p| p.display().to_string()),
        );
        line("mu", opt(&self.mu));
        line("b", opt(&self.b));
        line("b2", opt(&self.b2));
        line("mu_time", self.mu_time.to_string());
        line("mu_trials", self.mu_trials.to_string());
        out
    }
}

fn parse_kind(v: &str) -> Result<Kind, ExperimentError> {
    Ok(match v.trim() {
        "compare" => Kind::Compare,
        "threshold_vs_n" => Kind::ThresholdVsN,
        "threshold_vs_size" => Kind::ThresholdVsSize,
        "calibrate" => Kind::Calibrate,
        other => return Err(ExperimentError::Config(format!("unknown kind `{other}`"))),
    })
}
