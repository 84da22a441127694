//! Report rows, CSV output and rate fitting.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::{Error, Result};

use super::config::StudyKind;

/// CSV header, in column order.
pub const COLUMNS: [&str; 13] = [
    "kind", "d", "p", "n", "level", "r", "q", "value", "bound", "ratio", "pass", "source", "seconds",
];

/// One line of a study. Empty optional fields become empty CSV cells;
/// rows with `pass == None` are informational and never fail a study.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub kind: StudyKind,
    pub d: usize,
    pub p: Option<usize>,
    pub n: Option<u32>,
    pub level: String,
    pub r: Option<usize>,
    pub q: Option<usize>,
    pub value: f64,
    pub bound: Option<f64>,
    pub pass: Option<bool>,
    pub source: &'static str,
    pub seconds: Option<f64>,
}

impl Row {
    pub fn new(kind: StudyKind, d: usize, source: &'static str, value: f64) -> Self {
        Self {
            kind,
            d,
            p: None,
            n: None,
            level: String::new(),
            r: None,
            q: None,
            value,
            bound: None,
            pass: None,
            source,
            seconds: None,
        }
    }

    pub fn p(mut self, p: usize) -> Self {
        self.p = Some(p);
        self
    }

    pub fn n(mut self, n: u32) -> Self {
        self.n = Some(n);
        self
    }

    pub fn level(mut self, level: impl Into<String>) -> Self {
        self.level = level.into();
        self
    }

    pub fn orders(mut self, r: Option<usize>, q: Option<usize>) -> Self {
        self.r = r;
        self.q = q;
        self
    }

    /// Upper bound check `value <= bound`.
    pub fn upper(mut self, bound: Option<f64>) -> Self {
        self.bound = bound;
        self.pass = bound.map(|b| self.value <= b);
        self
    }

    /// Sets the bound column and an explicit verdict.
    pub fn judged(mut self, bound: Option<f64>, pass: bool) -> Self {
        self.bound = bound;
        self.pass = Some(pass);
        self
    }

    pub fn ratio(&self) -> Option<f64> {
        self.bound.filter(|b| *b != 0.0).map(|b| self.value / b)
    }

    fn cells(&self) -> Vec<String> {
        fn opt<T: ToString>(v: Option<T>) -> String {
            v.map(|v| v.to_string()).unwrap_or_default()
        }
        // Debug keeps the shortest round-trip digits and switches to
        // exponent notation for very small or large values
        fn num(v: Option<f64>) -> String {
            v.map(|v| format!("{v:?}")).unwrap_or_default()
        }
        vec![
            self.kind.name().to_string(),
            self.d.to_string(),
            opt(self.p),
            opt(self.n),
            self.level.clone(),
            opt(self.r),
            opt(self.q),
            num(Some(self.value)),
            num(self.bound),
            num(self.ratio()),
            opt(self.pass),
            self.source.to_string(),
            num(self.seconds),
        ]
    }
}

/// Fitted convergence order of one series.
#[derive(Debug, Clone, PartialEq)]
pub struct FitSummary {
    pub source: &'static str,
    pub d: usize,
    pub p: usize,
    pub r: usize,
    pub q: Option<usize>,
    /// Order after dividing the errors by `|log h|^log_power`.
    pub corrected: f64,
    /// Order of the raw errors.
    pub raw: f64,
    pub log_power: u32,
    /// Acceptance window for the corrected order.
    pub min: f64,
    pub max: Option<f64>,
}

impl FitSummary {
    pub fn pass(&self) -> bool {
        self.corrected >= self.min && self.max.map_or(true, |m| self.corrected <= m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub kind: StudyKind,
    pub rows: Vec<Row>,
    pub fits: Vec<FitSummary>,
}

impl StudyReport {
    /// Rows that carry a verdict and failed.
    pub fn failures(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| r.pass == Some(false))
    }

    pub fn all_pass(&self) -> bool {
        self.failures().next().is_none()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(COLUMNS).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.cells()).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
    }

    /// Short human-readable summary: verdict counts, fitted orders and the
    /// failing rows.
    pub fn summary(&self) -> String {
        let checked = self.rows.iter().filter(|r| r.pass.is_some()).count();
        let failed = self.failures().count();
        let mut s = format!(
            "{}: {} rows, {} checked, {} failed\n",
            self.kind,
            self.rows.len(),
            checked,
            failed
        );
        for f in &self.fits {
            let q = f.q.map(|q| format!(" q={q}")).unwrap_or_default();
            let window = match f.max {
                Some(m) => format!("[{:.3}, {:.3}]", f.min, m),
                None => format!(">= {:.3}", f.min),
            };
            let _ = writeln!(
                s,
                "  {} d={} p={} r={}{q}: order {:.3} (log power {}), raw {:.3}, want {} -> {}",
                f.source,
                f.d,
                f.p,
                f.r,
                f.corrected,
                f.log_power,
                f.raw,
                window,
                if f.pass() { "ok" } else { "FAIL" }
            );
        }
        for r in self.failures() {
            let _ = writeln!(
                s,
                "  FAIL {} d={} p={} n={} level={} value={} bound={}",
                r.source,
                r.d,
                r.p.map(|v| v.to_string()).unwrap_or_default(),
                r.n.map(|v| v.to_string()).unwrap_or_default(),
                r.level,
                r.value,
                r.bound.map(|v| v.to_string()).unwrap_or_default()
            );
        }
        s
    }
}

/// Least-squares slope of `log(e / |log h|^log_power)` against `log h`.
///
/// Needs at least three pairs, strictly decreasing `h` in `(0, 1)` and
/// positive errors.
pub fn fit_rate(pairs: &[(f64, f64)], log_power: u32) -> Result<f64> {
    if pairs.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "rate fit needs at least 3 pairs, got {}",
            pairs.len()
        )));
    }
    if pairs.windows(2).any(|w| w[1].0 >= w[0].0) {
        return Err(Error::InvalidArgument("mesh sizes must be strictly decreasing".into()));
    }
    let mut xs = Vec::with_capacity(pairs.len());
    let mut ys = Vec::with_capacity(pairs.len());
    for &(h, e) in pairs {
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::InvalidArgument(format!("mesh size {h} outside (0, 1)")));
        }
        if !(e > 0.0 && e.is_finite()) {
            return Err(Error::InvalidArgument(format!("error {e} is not positive")));
        }
        xs.push(h.ln());
        ys.push(e.ln() - log_power as f64 * (-h.ln()).ln());
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halving_sequence() {
        let pairs = [(0.1, 0.1), (0.05, 0.025), (0.025, 0.00625)];
        assert!((fit_rate(&pairs, 0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn log_correction() {
        let pairs: Vec<(f64, f64)> = (3..=8)
            .map(|k| {
                let h = 2f64.powi(-k);
                (h, h * h * (-h.ln()))
            })
            .collect();
        assert!((fit_rate(&pairs, 1).unwrap() - 2.0).abs() < 0.01);
        assert!(fit_rate(&pairs, 0).unwrap() < 2.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_rate(&[(0.1, 0.1), (0.05, 0.025)], 0).is_err());
        assert!(fit_rate(&[(0.1, 0.1), (0.05, 0.0), (0.01, 0.01)], 0).is_err());
        assert!(fit_rate(&[(0.1, 0.1), (0.2, 0.1), (0.01, 0.01)], 0).is_err());
    }
}
