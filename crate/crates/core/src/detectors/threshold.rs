use std::fmt;

use super::DetectError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyFamily {
    /// d-dimensional torus.
    Grid { d: u32 },
    /// Balanced tree with branching factor c.
    Tree { c: u32 },
    /// Sparse G(n, c/n).
    Er { c: f64 },
    /// Dense G(n, p) with np = n^{1/d}.
    ErDense { d: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    Ball,
    Tree,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeKnowledge {
    Known { t: f64 },
    /// Elapsed time unknown; the number of reports stands in for it.
    Adaptive { x_rep: usize },
}

/// Constants a formula may draw on. Only those the selected row uses need
/// to be present.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PolicyParams {
    /// Axis rate of the grid epidemic.
    pub mu: Option<f64>,
    /// Ball radius growth per unit time.
    pub b: Option<f64>,
    /// Ball radius growth per unit of log infection size.
    pub b2: Option<f64>,
    pub q: Option<f64>,
    pub n: Option<usize>,
    /// Mean epidemic size at the known time.
    pub expected_size: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdPolicy {
    pub family: PolicyFamily,
    pub statistic: Statistic,
    pub time: TimeKnowledge,
    pub params: PolicyParams,
}

impl fmt::Display for ThresholdPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fam = match self.family {
            PolicyFamily::Grid { d } => format!("grid d={d}"),
            PolicyFamily::Tree { c } => format!("tree c={c}"),
            PolicyFamily::Er { c } => format!("er c={c}"),
            PolicyFamily::ErDense { d } => format!("er_dense d={d}"),
        };
        let stat = match self.statistic {
            Statistic::Ball => "ball",
            Statistic::Tree => "tree",
        };
        let time = match self.time {
            TimeKnowledge::Known { .. } => "known time",
            TimeKnowledge::Adaptive { .. } => "adaptive",
        };
        write!(f, "{fam} / {stat} / {time}")
    }
}

/// `max(1, ln ln n)`, so adaptive thresholds stay defined on toy graphs.
pub fn log_log(n: usize) -> f64 {
    let n = n.max(1) as f64;
    n.ln().ln().max(1.0)
}

fn need<T>(value: Option<T>, name: &'static str) -> Result<T, DetectError> {
    value.ok_or(DetectError::MissingParameter(name))
}

/// Threshold `m` for the selected (family, statistic, time knowledge) row.
/// Ball thresholds are in hops, tree thresholds in edges. Logs are natural.
pub fn compute_threshold(policy: &ThresholdPolicy) -> Result<f64, DetectError> {
    use PolicyFamily as F;
    use Statistic as S;
    use TimeKnowledge as T;

    let p = &policy.params;
    let adaptive_reports = |x_rep: usize| -> Result<(f64, f64, f64), DetectError> {
        if x_rep == 0 {
            return Err(DetectError::InvalidParameter(
                "adaptive threshold needs at least one report".into(),
            ));
        }
        let q = need(p.q, "q")?;
        if !(q > 0.0 && q <= 1.0) {
            return Err(DetectError::InvalidParameter(format!("q must lie in (0, 1], got {q}")));
        }
        Ok((x_rep as f64, q, log_log(need(p.n, "n")?)))
    };

    let m = match (policy.family, policy.statistic, policy.time) {
        (F::Grid { d }, S::Ball, T::Known { t }) => 1.1 * f64::from(d) * need(p.mu, "mu")? * t,
        (F::Grid { d }, S::Ball, T::Adaptive { x_rep }) => {
            let (x, q, ll) = adaptive_reports(x_rep)?;
            1.1 * f64::from(d) * (x * ll / q).powf(1.0 / f64::from(d))
        }
        (F::Tree { .. }, S::Ball, T::Known { t }) => 1.1 * need(p.b, "b")? * t,
        (F::Tree { .. }, S::Ball, T::Adaptive { x_rep }) => {
            let (x, q, ll) = adaptive_reports(x_rep)?;
            1.1 * need(p.b2, "b2")? * (x * ll * ll / q).ln()
        }
        (F::Er { .. }, S::Ball, T::Known { t }) => need(p.b, "b")? * t,
        (F::Er { .. }, S::Ball, T::Adaptive { x_rep }) => {
            let (x, q, ll) = adaptive_reports(x_rep)?;
            need(p.b2, "b2")? * (x / q * ll * ll).ln()
        }
        (F::Tree { .. } | F::Er { .. }, S::Tree, T::Known { .. }) => {
            need(p.expected_size, "expected_size")? * log_log(need(p.n, "n")?)
        }
        (F::Tree { .. } | F::Er { .. }, S::Tree, T::Adaptive { x_rep }) => {
            let (x, q, ll) = adaptive_reports(x_rep)?;
            x / q * ll.powi(3)
        }
        (F::ErDense { d }, S::Tree, T::Known { .. }) => {
            if d <= 3 {
                return Err(DetectError::InvalidParameter(format!(
                    "dense random graph rule needs d > 3, got {d}"
                )));
            }
            let q = need(p.q, "q")?;
            let n = need(p.n, "n")? as f64;
            0.99 * f64::from(d - 3) * q * n.powf(1.0 / f64::from(d)) / 2.0
        }
        _ => return Err(DetectError::UnsupportedPolicy(policy.to_string())),
    };
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub threshold: f64,
    /// `½·P(infection statistic > m) + ½·P(random statistic ≤ m)` at the
    /// chosen threshold.
    pub error: f64,
}

/// Threshold minimizing the equal-prior empirical error, searched over the
/// sample values. Ties go to the smallest threshold.
pub fn calibrate_empirical_threshold(
    infection: &[f64],
    random: &[f64],
) -> Result<Calibration, DetectError> {
    if infection.is_empty() || random.is_empty() {
        return Err(DetectError::InvalidParameter(
            "calibration needs samples under both hypotheses".into(),
        ));
    }
    if infection.iter().chain(random).any(|x| x.is_nan()) {
        return Err(DetectError::InvalidParameter("NaN statistic sample".into()));
    }
    let sorted = |xs: &[f64]| {
        let mut v = xs.to_vec();
        v.sort_by(f64::total_cmp);
        v
    };
    let inf = sorted(infection);
    let rnd = sorted(random);
    let mut candidates: Vec<f64> = inf.iter().chain(&rnd).copied().collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    let (ni, nr) = (inf.len() as u128, rnd.len() as u128);
    // Error scaled by 2·ni·nr, kept integral so ties compare exactly.
    let mut best: Option<(u128, f64)> = None;
    for m in candidates {
        let inf_above = ni - inf.partition_point(|&x| x <= m) as u128;
        let rnd_below = rnd.partition_point(|&x| x <= m) as u128;
        let cost = inf_above * nr + rnd_below * ni;
        if best.is_none_or(|(c, _)| cost < c) {
            best = Some((cost, m));
        }
    }
    let (cost, threshold) = best.expect("candidates non-empty");
    Ok(Calibration {
        threshold,
        error: cost as f64 / (2 * ni * nr) as f64,
    })
}
