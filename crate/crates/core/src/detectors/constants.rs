use std::io::{self, BufRead, Write};

use super::DetectError;

/// Averages over epidemic trials at one horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedSample {
    pub t: f64,
    /// Mean RadiusBall of the full infected set.
    pub mean_radius: f64,
    /// Mean number of infected nodes.
    pub mean_size: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedConstants {
    /// Least-squares slope through the origin of radius against t.
    pub b: f64,
    /// Least-squares slope of ln(mean size) against t.
    pub lambda: f64,
    /// `1.1 · b / lambda`: radius growth per unit of log infection size.
    pub b2: f64,
}

pub fn fit_speed_constants(samples: &[SpeedSample]) -> Result<SpeedConstants, DetectError> {
    if samples.len() < 2 {
        return Err(DetectError::InvalidParameter(
            "fitting needs at least two horizons".into(),
        ));
    }
    if samples.iter().any(|s| !(s.t > 0.0) || !(s.mean_size >= 1.0) || !s.mean_radius.is_finite()) {
        return Err(DetectError::InvalidParameter(
            "speed samples need t > 0, mean size ≥ 1 and finite radius".into(),
        ));
    }
    let stt: f64 = samples.iter().map(|s| s.t * s.t).sum();
    let b = samples.iter().map(|s| s.t * s.mean_radius).sum::<f64>() / stt;

    let k = samples.len() as f64;
    let t_bar = samples.iter().map(|s| s.t).sum::<f64>() / k;
    let y_bar = samples.iter().map(|s| s.mean_size.ln()).sum::<f64>() / k;
    let sxx: f64 = samples.iter().map(|s| (s.t - t_bar).powi(2)).sum();
    let sxy: f64 = samples.iter().map(|s| (s.t - t_bar) * (s.mean_size.ln() - y_bar)).sum();
    if sxx == 0.0 {
        return Err(DetectError::InvalidParameter("horizons must differ".into()));
    }
    let lambda = sxy / sxx;
    if !(lambda > 0.0) {
        return Err(DetectError::InvalidParameter(format!(
            "infection size does not grow with t (slope {lambda})"
        )));
    }
    Ok(SpeedConstants {
        b,
        lambda,
        b2: 1.1 * b / lambda,
    })
}

/// Plain-text `key = value` store for calibrated constants. Lines starting
/// with `#` are comments. Key order is preserved.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Sidecar {
    entries: Vec<(String, String)>,
}

impl Sidecar {
    pub fn new() -> Self {
        Self::default()
    }

    /// Replaces an existing value in place.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key).and_then(|v| v.parse().ok())
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn write<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (k, v) in &self.entries {
            writeln!(out, "{k} = {v}")?;
        }
        Ok(())
    }

    pub fn parse<R: BufRead>(input: R) -> io::Result<Self> {
        let mut sidecar = Sidecar::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("line {}: expected `key = value`", i + 1),
                )
            })?;
            sidecar.set(k.trim(), v.trim());
        }
        Ok(sidecar)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_fit() {
        let samples: Vec<SpeedSample> = [1.0, 2.0, 4.0]
            .iter()
            .map(|&t| SpeedSample {
                t,
                mean_radius: 1.5 * t,
                mean_size: (0.7 * t + 0.2f64).exp(),
            })
            .collect();
        let c = fit_speed_constants(&samples).unwrap();
        assert!((c.b - 1.5).abs() < 1e-12);
        assert!((c.lambda - 0.7).abs() < 1e-12);
        assert!((c.b2 - 1.1 * 1.5 / 0.7).abs() < 1e-12);
    }

    #[test]
    fn rejects_degenerate() {
        let s = SpeedSample {
            t: 1.0,
            mean_radius: 1.0,
            mean_size: 2.0,
        };
        assert!(fit_speed_constants(&[s]).is_err());
        assert!(fit_speed_constants(&[s, s]).is_err());
        let shrink = SpeedSample { t: 2.0, mean_size: 1.0, ..s };
        assert!(fit_speed_constants(&[s, shrink]).is_err());
    }

    #[test]
    fn sidecar_round_trip() {
        let mut s = Sidecar::new();
        s.set("family", "tree c=2 depth=10");
        s.set("b", 0.8125);
        s.set("seed", 7);
        s.set("b", 0.75);
        let mut buf = Vec::new();
        s.write(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "family = tree c=2 depth=10\nb = 0.75\nseed = 7\n");
        let back = Sidecar::parse(format!("# header\n\n{text}").as_bytes()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.get_f64("b"), Some(0.75));
        assert!(Sidecar::parse("junk\n".as_bytes()).is_err());
    }
}
