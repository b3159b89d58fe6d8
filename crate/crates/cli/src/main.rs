//! `epidetect` command-line front end.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use epidetect::detectors::{normalized_radius, threshold_ball, threshold_tree, Candidate, Network};
use epidetect::experiments::{self, emit_plot, write_csv, ExperimentConfig, Kind};
use epidetect::graph::{
    build_balanced_tree, build_er, build_grid_torus, load_edge_list, write_edge_list, LoadedGraph,
};
use epidetect::metrics::BallSolver;
use epidetect::percolation::{sample_reports, simulate_si, ReportSet, StopRule};

#[derive(Parser, Debug)]
#[command(name = "epidetect", version, about = "Epidemic simulation and detection on graphs")]
struct Cli {
    /// Master random seed, echoed into every output file [default: 1].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for experiments; outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output path (stdout when omitted). Experiments treat it as a prefix.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a generated graph as an edge list.
    Generate(GenerateArgs),
    /// Run one SI epidemic and write the infection trace.
    Simulate(SimulateArgs),
    /// Decide from a report list and print a verdict line.
    Detect(DetectArgs),
    /// Fit speed constants for a graph family and write a sidecar.
    Calibrate(CalibrateArgs),
    /// Run an experiment config and write CSV and SVG output.
    Experiment(ExperimentArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FamilyArg {
    Grid,
    Er,
    Tree,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Grid side length.
    #[arg(long)]
    side: Option<usize>,
    /// Grid dimension.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Random graph node count.
    #[arg(long)]
    n: Option<usize>,
    /// Random graph mean degree (p = c/n), or tree branching factor.
    #[arg(long)]
    c: Option<f64>,
    /// Tree depth.
    #[arg(long)]
    depth: Option<usize>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Edge-list file.
    #[arg(long)]
    graph: PathBuf,
    /// Source node id as written in the edge list.
    #[arg(long)]
    source: u64,
    /// Stop at this time.
    #[arg(long, conflicts_with = "infected", required_unless_present = "infected")]
    horizon: Option<f64>,
    /// Stop after this many infections.
    #[arg(long)]
    infected: Option<usize>,
    /// Also write a report list, each infected node kept with probability q.
    #[arg(long, requires = "q")]
    reports_out: Option<PathBuf>,
    /// Reporting probability for `--reports-out`
    #[arg(long)]
    q: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Algo {
    Comparative,
    Ball,
    Tree,
}

#[derive(Args, Debug)]
struct DetectArgs {
    #[arg(long, value_enum)]
    algo: Algo,
    /// Graph for threshold algorithms.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// First candidate for the comparative algorithm.
    #[arg(long)]
    g1: Option<PathBuf>,
    /// Second candidate for the comparative algorithm.
    #[arg(long)]
    g2: Option<PathBuf>,
    /// Report list: one node id per line.
    #[arg(long)]
    reports: PathBuf,
    /// Threshold for the ball and tree algorithms.
    #[arg(long)]
    m: Option<f64>,
    /// Diameter scale for the first candidate
    #[arg(long, default_value_t = 1.0)]
    scale1: f64,
    /// Diameter scale for the second candidate
    #[arg(long, default_value_t = 1.0)]
    scale2: f64,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    /// Graph spec, e.g. `tree c=2 depth=10` or `grid side=40 dim=2`.
    #[arg(long)]
    family: String,
    /// Horizons to fit over, space separated.
    #[arg(long, default_value = "1 2 3 4")]
    times: String,
    /// Epidemics per horizon
    #[arg(long, default_value_t = 1000)]
    trials: usize,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: PathBuf,
    /// Override a config setting; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

type Fallible<T> = Result<T, Box<dyn std::error::Error>>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: &Cli) -> Fallible<()> {
    match &cli.command {
        Command::Generate(a) => generate(cli, a),
        Command::Simulate(a) => simulate(cli, a),
        Command::Detect(a) => detect(a),
        Command::Calibrate(a) => calibrate(cli, a),
        Command::Experiment(a) => experiment(cli, a),
    }
}

fn digest(text: &str) -> String {
    format!("{:x}", Sha256::digest(text.as_bytes()))
}

fn metadata(out: &mut dyn Write, seed: u64, description: &str) -> io::Result<()> {
    writeln!(out, "# epidetect {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "# seed = {seed}")?;
    writeln!(out, "# config_sha256 = {}", digest(description))
}

fn open_out(path: Option<&Path>) -> Fallible<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| format!("creating {}: {e}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load(path: &Path) -> Fallible<LoadedGraph> {
    let file = File::open(path).map_err(|e| format!("opening {}: {e}", path.display()))?;
    Ok(load_edge_list(BufReader::new(file)).map_err(|e| format!("{}: {e}", path.display()))?)
}

fn generate(cli: &Cli, a: &GenerateArgs) -> Fallible<()> {
    let seed = cli.seed.unwrap_or(1);
    let need = |v: Option<usize>, flag: &str| v.ok_or_else(|| format!("--{flag} is required for this family"));
    let (g, description) = match a.family {
        FamilyArg::Grid => {
            let side = need(a.side, "side")?;
            (build_grid_torus(side, a.dim)?, format!("generate grid side={side} dim={}", a.dim))
        }
        FamilyArg::Er => {
            let n = need(a.n, "n")?;
            let c = a.c.ok_or("--c is required for this family")?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (build_er(n, c / n as f64, &mut rng)?, format!("generate er n={n} c={c}"))
        }
        FamilyArg::Tree => {
            let c = a.c.unwrap_or(2.0);
            if c.fract() != 0.0 || c < 2.0 {
                return Err("tree branching factor --c must be an integer ≥ 2".into());
            }
            let depth = need(a.depth, "depth")?;
            (
                build_balanced_tree(c as usize, depth)?,
                format!("generate tree c={c} depth={depth}"),
            )
        }
    };
    let mut out = open_out(cli.out.as_deref())?;
    metadata(&mut out, seed, &description)?;
    write_edge_list(&g, &mut out)?;
    out.flush()?;
    Ok(())
}

fn simulate(cli: &Cli, a: &SimulateArgs) -> Fallible<()> {
    let seed = cli.seed.unwrap_or(1);
    let loaded = load(&a.graph)?;
    let source = loaded
        .node_for(a.source)
        .ok_or_else(|| format!("source {} is not a node of the graph", a.source))?;
    let stop = match (a.horizon, a.infected) {
        (Some(t), _) => StopRule::Horizon(t),
        (None, Some(k)) => StopRule::InfectedCount(k),
        (None, None) => return Err("give --horizon or --infected".into()),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trace = simulate_si(&loaded.graph, source, stop, &mut rng)?;
    let description = format!(
        "simulate graph={} source={} stop={:?}",
        a.graph.display(),
        a.source,
        stop
    );

    let mut out = open_out(cli.out.as_deref())?;
    metadata(&mut out, seed, &description)?;
    writeln!(out, "node,infection_time")?;
    for &v in trace.infected() {
        writeln!(out, "{},{}", loaded.original_ids[v], trace.infection_time(v))?;
    }
    out.flush()?;

    if let Some(path) = &a.reports_out {
        let q = a.q.expect("clap enforces --q");
        let reports = sample_reports(trace.infected(), q, &mut rng)?;
        let mut f = open_out(Some(path))?;
        metadata(&mut f, seed, &format!("{description} q={q}"))?;
        for &v in &reports.nodes {
            writeln!(f, "{}", loaded.original_ids[v])?;
        }
        f.flush()?;
    }
    Ok(())
}

/// Node ids, one per line; blank lines and `#` comments are skipped.
fn read_report_ids(path: &Path) -> Fallible<Vec<u64>> {
    let file = File::open(path).map_err(|e| format!("opening {}: {e}", path.display()))?;
    let mut ids = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        ids.push(
            t.parse()
                .map_err(|_| format!("{}:{}: bad node id {t:?}", path.display(), i + 1))?,
        );
    }
    Ok(ids)
}

fn to_reports(loaded: &LoadedGraph, ids: &[u64]) -> Fallible<ReportSet> {
    let index = loaded.id_index();
    let nodes = ids
        .iter()
        .map(|id| index.get(id).copied().ok_or_else(|| format!("report id {id} is not in the graph")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ReportSet { nodes, q: 1.0 })
}

fn detect(a: &DetectArgs) -> Fallible<()> {
    let ids = read_report_ids(&a.reports)?;
    if ids.is_empty() {
        return Err("the report list is empty; nothing to decide".into());
    }
    let line = match a.algo {
        Algo::Comparative => {
            let (p1, p2) = match (&a.g1, &a.g2) {
                (Some(p1), Some(p2)) => (p1, p2),
                _ => return Err("--algo comparative needs --g1 and --g2".into()),
            };
            let (l1, l2) = (load(p1)?, load(p2)?);
            if l1.graph.node_count() != l2.graph.node_count() {
                return Err("candidate graphs differ in node count".into());
            }
            let (r1, r2) = (to_reports(&l1, &ids)?, to_reports(&l2, &ids)?);
            // Each graph sees the reports under its own id compaction.
            let mut solver = BallSolver::new();
            let c1 = Candidate::new(&l1.graph, a.scale1);
            let c2 = Candidate::new(&l2.graph, a.scale2);
            let s1 = normalized_radius(&c1, &r1.nodes, &mut solver)?;
            let s2 = normalized_radius(&c2, &r2.nodes, &mut solver)?;
            let choice = if s1 <= s2 { Network::G1 } else { Network::G2 };
            format!(
                "VERDICT={} STAT={} THRESH={}",
                match choice {
                    Network::G1 => "G1",
                    Network::G2 => "G2",
                },
                s1,
                s2
            )
        }
        Algo::Ball | Algo::Tree => {
            let path = a.graph.as_ref().ok_or("threshold algorithms need --graph")?;
            let m = a.m.ok_or("threshold algorithms need --m")?;
            let loaded = load(path)?;
            let reports = to_reports(&loaded, &ids)?;
            let v = if a.algo == Algo::Ball {
                threshold_ball(&loaded.graph, &reports, m)?
            } else {
                threshold_tree(&loaded.graph, &reports, m)?
            };
            format!("VERDICT={} STAT={} THRESH={}", v.label.as_str(), v.statistic, v.threshold)
        }
    };
    println!("{line}");
    Ok(())
}

fn calibrate(cli: &Cli, a: &CalibrateArgs) -> Fallible<()> {
    let mut cfg = ExperimentConfig::from_pairs([
        ("kind", "calibrate"),
        ("graph", a.family.as_str()),
        ("sweep", a.times.as_str()),
        ("trials", a.trials.to_string().as_str()),
    ])?;
    apply_globals(cli, &mut cfg)?;
    let sidecar = experiments::run_calibrate(&cfg)?;
    let mut out = open_out(cli.out.as_deref())?;
    metadata(&mut out, cfg.seed, &canonical(&cfg))?;
    sidecar.write(&mut out)?;
    out.flush()?;
    Ok(())
}

fn apply_globals(cli: &Cli, cfg: &mut ExperimentConfig) -> Fallible<()> {
    if let Some(seed) = cli.seed {
        cfg.set("seed", &seed.to_string())?;
    }
    if let Some(threads) = cli.threads {
        cfg.set("threads", &threads.to_string())?;
    }
    cfg.validate()?;
    Ok(())
}

/// Config text without the thread count, which never affects results.
fn canonical(cfg: &ExperimentConfig) -> String {
    cfg.to_text()
        .lines()
        .filter(|l| !l.starts_with("threads "))
        .map(|l| format!("{l}\n"))
        .collect()
}

fn experiment(cli: &Cli, a: &ExperimentArgs) -> Fallible<()> {
    let file = File::open(&a.config).map_err(|e| format!("opening {}: {e}", a.config.display()))?;
    let mut cfg = ExperimentConfig::parse(BufReader::new(file))?;
    for o in &a.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| format!("--set expects KEY=VALUE, got {o:?}"))?;
        cfg.set(k.trim(), v)?;
    }
    apply_globals(cli, &mut cfg)?;
    let output = experiments::run(&cfg)?;
    let description = canonical(&cfg);

    if cfg.kind == Kind::Calibrate {
        let mut out = open_out(cli.out.as_deref())?;
        metadata(&mut out, cfg.seed, &description)?;
        output.sidecar.expect("calibrate yields a sidecar").write(&mut out)?;
        out.flush()?;
        return Ok(());
    }

    let prefix = match &cli.out {
        Some(p) => p.clone(),
        None => {
            let mut out = open_out(None)?;
            for (name, curve) in &output.series {
                metadata(&mut out, cfg.seed, &description)?;
                if !name.is_empty() {
                    writeln!(out, "# series = {name}")?;
                }
                write_csv(curve, &mut out)?;
            }
            out.flush()?;
            return Ok(());
        }
    };
    let with_suffix = |suffix: &str| {
        let mut s = prefix.clone().into_os_string();
        s.push(suffix);
        PathBuf::from(s)
    };
    for (name, curve) in &output.series {
        let path = if output.series.len() == 1 {
            with_suffix(".csv")
        } else {
            with_suffix(&format!(".{name}.csv"))
        };
        let mut out = open_out(Some(&path))?;
        metadata(&mut out, cfg.seed, &description)?;
        write_csv(curve, &mut out)?;
        out.flush()?;
    }
    let series: Vec<(&str, &experiments::ErrorCurve)> =
        output.series.iter().map(|(n, c)| (n.as_str(), c)).collect();
    let svg_path = with_suffix(".svg");
    let mut svg = open_out(Some(&svg_path))?;
    let title = match cfg.kind {
        Kind::Compare => "comparative ball",
        Kind::ThresholdVsN => "threshold algorithms vs graph size",
        _ => "threshold algorithms vs infection size",
    };
    emit_plot(&series, output.labels, output.x_axis, title, &mut svg)?;
    svg.flush()?;
    Ok(())
}
