use std::io::{BufRead, Write};

use super::ExperimentError;

pub const CSV_HEADER: &str = "sweep,mean_size,err_type1,err_type1_ci,err_type2,err_type2_ci,undecidable";

/// Outcome counts for one hypothesis at one sweep point.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub errors: u64,
    pub correct: u64,
    /// Trials with no reporting node.
    pub undecidable: u64,
}

impl Tally {
    pub fn total(&self) -> u64 {
        self.errors + self.correct + self.undecidable
    }

    pub fn decided(&self) -> u64 {
        self.errors + self.correct
    }

    /// Error fraction among decided trials; NaN when none were decided.
    pub fn rate(&self) -> f64 {
        self.errors as f64 / self.decided() as f64
    }

    /// 95% normal-approximation half-width over the decided trials.
    pub fn half_width(&self) -> f64 {
        binomial_half_width(self.rate(), self.decided())
    }

    pub fn record(&mut self, outcome: Option<bool>) {
        match outcome {
            Some(true) => self.errors += 1,
            Some(false) => self.correct += 1,
            None => self.undecidable += 1,
        }
    }
}

pub fn binomial_half_width(p: f64, trials: u64) -> f64 {
    1.96 * (p * (1.0 - p) / trials as f64).sqrt()
}

/// One sweep point. For threshold runs type 1 is "random sickness declared
/// an epidemic" and type 2 "epidemic declared random"; for comparisons they
/// are the two truth/answer directions (truth G1, answered G2 and back).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub sweep: f64,
    pub mean_size: f64,
    pub err_type1: f64,
    pub err_type1_ci: f64,
    pub err_type2: f64,
    pub err_type2_ci: f64,
    /// Fraction of all trials at this point with no report.
    pub undecidable: f64,
    /// Raw counts behind the rates; absent when read back from CSV.
    pub counts: Option<[Tally; 2]>,
    /// Threshold applied, when it was fixed across the point's trials.
    pub threshold: Option<f64>,
}

impl CurveRow {
    pub fn from_tallies(sweep: f64, mean_size: f64, type1: Tally, type2: Tally) -> Self {
        let total = type1.total() + type2.total();
        CurveRow {
            sweep,
            mean_size,
            err_type1: type1.rate(),
            err_type1_ci: type1.half_width(),
            err_type2: type2.rate(),
            err_type2_ci: type2.half_width(),
            undecidable: (type1.undecidable + type2.undecidable) as f64 / total as f64,
            counts: Some([type1, type2]),
            threshold: None,
        }
    }

    /// Equal-prior error `(type1 + type2) / 2`.
    pub fn overall_error(&self) -> f64 {
        0.5 * (self.err_type1 + self.err_type2)
    }

    pub fn max_error(&self) -> f64 {
        self.err_type1.max(self.err_type2)
    }

    fn values(&self) -> [f64; 7] {
        [
            self.sweep,
            self.mean_size,
            self.err_type1,
            self.err_type1_ci,
            self.err_type2,
            self.err_type2_ci,
            self.undecidable,
        ]
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorCurve {
    pub rows: Vec<CurveRow>,
}

impl ErrorCurve {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&CurveRow> {
        self.rows.last()
    }
}

/// Shortest decimal form carrying 6 significant digits.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_nan() { "nan".into() } else { x.to_string() };
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-4..15).contains(&exp) {
        return format!("{x:.5e}");
    }
    if exp > 5 {
        let unit = 10f64.powi(exp - 5);
        return format!("{:.0}", (x / unit).round() * unit);
    }
    let decimals = (5 - exp) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn write_csv<W: Write>(curve: &ErrorCurve, mut out: W) -> Result<(), ExperimentError> {
    if curve.is_empty() {
        return Err(ExperimentError::EmptyCurve);
    }
    let io = |e| ExperimentError::Io {
        context: "writing CSV".into(),
        source: e,
    };
    writeln!(out, "{CSV_HEADER}").map_err(io)?;
    for row in &curve.rows {
        let cells: Vec<String> = row.values().iter().map(|&v| format_sig6(v)).collect();
        writeln!(out, "{}", cells.join(",")).map_err(io)?;
    }
    Ok(())
}

/// Reads a CSV written by [`write_csv`]; `#` lines before the header are
/// skipped.
pub fn read_csv<R: BufRead>(input: R) -> Result<ErrorCurve, ExperimentError> {
    let mut rows = Vec::new();
    let mut seen_header = false;
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| ExperimentError::Io {
            context: "reading CSV".into(),
            source: e,
        })?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !seen_header {
            if line != CSV_HEADER {
                return Err(ExperimentError::Csv(format!("line {}: unexpected header", i + 1)));
            }
            seen_header = true;
            continue;
        }
        let v: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| ExperimentError::Csv(format!("line {}: {e}", i + 1)))?;
        if v.len() != 7 {
            return Err(ExperimentError::Csv(format!(
                "line {}: expected 7 columns, found {}",
                i + 1,
                v.len()
            )));
        }
        rows.push(CurveRow {
            sweep: v[0],
            mean_size: v[1],
            err_type1: v[2],
            err_type1_ci: v[3],
            err_type2: v[4],
            err_type2_ci: v[5],
            undecidable: v[6],
            counts: None,
            threshold: None,
        });
    }
    if rows.is_empty() {
        return Err(ExperimentError::EmptyCurve);
    }
    Ok(ErrorCurve { rows })
}
