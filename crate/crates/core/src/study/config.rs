//! Flat `key = value` study configurations.

use std::fmt;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::functions::TargetId;
use crate::geometry::GeometryMap;
use crate::index::lambda_eff;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StudyKind {
    UnivariateConvergence,
    SparseConvergence,
    MappedConvergence,
    Equivalence,
    Identities,
    InverseInequality,
    Dimensions,
}

impl StudyKind {
    pub const ALL: [StudyKind; 7] = [
        StudyKind::UnivariateConvergence,
        StudyKind::SparseConvergence,
        StudyKind::MappedConvergence,
        StudyKind::Equivalence,
        StudyKind::Identities,
        StudyKind::InverseInequality,
        StudyKind::Dimensions,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StudyKind::UnivariateConvergence => "univariate-convergence",
            StudyKind::SparseConvergence => "sparse-convergence",
            StudyKind::MappedConvergence => "mapped-convergence",
            StudyKind::Equivalence => "equivalence",
            StudyKind::Identities => "identities",
            StudyKind::InverseInequality => "inverse-inequality",
            StudyKind::Dimensions => "dimensions",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            StudyKind::UnivariateConvergence => {
                "univariate projection errors against the a priori bound, with fitted order"
            }
            StudyKind::SparseConvergence => {
                "combination-technique errors on the unit cube against the explicit sparse bound"
            }
            StudyKind::MappedConvergence => {
                "combination-technique errors on a mapped domain, log-corrected fitted order"
            }
            StudyKind::Equivalence => {
                "combination vs hierarchical space: dimensions and cross residuals"
            }
            StudyKind::Identities => "exact combinatorial identities and operator identities",
            StudyKind::InverseInequality => {
                "largest Rayleigh quotients on vanishing-derivative spaces against inverse bounds"
            }
            StudyKind::Dimensions => "sparse and full tensor dimensions with brute-force ranks",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Self::ALL.iter().map(|k| k.name()).collect();
                Error::Config(format!("unknown kind '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

impl fmt::Display for StudyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Where the mapped studies take their geometry from.
#[derive(Debug, Clone, PartialEq)]
pub enum GeometrySource {
    Builtin(String),
    File(PathBuf),
}

impl GeometrySource {
    pub fn parse(s: &str) -> Self {
        if GeometryMap::BUILTIN_NAMES.contains(&s) {
            GeometrySource::Builtin(s.to_string())
        } else {
            GeometrySource::File(PathBuf::from(s))
        }
    }

    pub fn load(&self) -> Result<GeometryMap> {
        match self {
            GeometrySource::Builtin(name) => {
                GeometryMap::builtin(name).ok_or_else(|| Error::Config(format!("unknown geometry '{name}'")))
            }
            GeometrySource::File(path) => GeometryMap::from_file(path),
        }
    }
}

impl fmt::Display for GeometrySource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometrySource::Builtin(n) => f.write_str(n),
            GeometrySource::File(p) => write!(f, "{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub kind: StudyKind,
    pub d: usize,
    pub p: Vec<usize>,
    pub n: RangeInclusive<u32>,
    pub r: usize,
    /// Empty means the kind's default (`p + 1` for convergence, `1` for inverse).
    pub q: Vec<usize>,
    pub target: TargetId,
    pub freq: f64,
    pub geometry: Option<GeometrySource>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub rate_tol: f64,
    pub rate_slack: f64,
    pub growth_slack: f64,
    pub residual_tol: f64,
    pub brute_max: u32,
    pub timing: bool,
}

impl StudyConfig {
    /// Defaults for a kind.
    pub fn new(kind: StudyKind) -> Self {
        let (d, p, n, freq, slack) = match kind {
            StudyKind::UnivariateConvergence => (1, vec![2], 3..=7, 2.0, 0.1),
            StudyKind::SparseConvergence => (2, vec![1, 2], 3..=8, 1.0, 0.15),
            StudyKind::MappedConvergence => (2, vec![2], 3..=7, 1.0, 0.2),
            StudyKind::Equivalence => (2, vec![1, 2], 2..=5, 1.0, 0.0),
            StudyKind::Identities => (6, vec![1, 2, 3, 4], 1..=12, 1.0, 0.0),
            StudyKind::InverseInequality => (2, vec![2, 3], 3..=5, 1.0, 0.0),
            StudyKind::Dimensions => (2, vec![1], 3..=10, 1.0, 0.0),
        };
        let geometry = (kind == StudyKind::MappedConvergence)
            .then(|| GeometrySource::Builtin("distorted-square".into()));
        Self {
            kind,
            d,
            p,
            n,
            r: 0,
            q: Vec::new(),
            target: TargetId::Sin,
            freq,
            geometry,
            seed: 0,
            out: None,
            rate_tol: 0.1,
            rate_slack: slack,
            growth_slack: 0.25,
            residual_tol: 1e-9,
            brute_max: 5,
            timing: false,
        }
    }

    /// Parses a configuration file body, then applies `overrides`
    /// (`key=value` strings, as given on the command line).
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut pairs: Vec<(String, String, String)> = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string(), format!("line {}", no + 1)));
        }
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set {o}: expected key=value")))?;
            pairs.push((k.trim().to_string(), v.trim().to_string(), format!("--set {}", k.trim())));
        }
        let kind = pairs
            .iter()
            .rev()
            .find(|(k, _, _)| k == "kind")
            .ok_or_else(|| Error::Config("missing key 'kind'".into()))
            .and_then(|(_, v, at)| StudyKind::parse(v).map_err(|e| Error::Config(format!("{at}: {e}"))))?;
        let mut cfg = Self::new(kind);
        for (k, v, at) in &pairs {
            cfg.set(k, v).map_err(|e| Error::Config(format!("{at}: {e}")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, overrides)
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("bad value '{v}' for {key}"))
        }
        fn list(key: &str, v: &str) -> std::result::Result<Vec<usize>, String> {
            v.split(',').map(|t| num(key, t.trim())).collect()
        }
        match key {
            "kind" => {}
            "d" => self.d = num(key, value)?,
            "p" => self.p = list(key, value)?,
            "n" => {
                self.n = match value.split_once("..") {
                    Some((a, b)) => num(key, a.trim())?..=num(key, b.trim())?,
                    None => {
                        let v = num(key, value)?;
                        v..=v
                    }
                }
            }
            "r" => self.r = num(key, value)?,
            "q" => self.q = list(key, value)?,
            "target" => self.target = TargetId::parse(value).map_err(|e| e.to_string())?,
            "freq" => self.freq = num(key, value)?,
            "geometry" => {
                self.geometry = match value {
                    "" | "none" => None,
                    v => Some(GeometrySource::parse(v)),
                }
            }
            "seed" => self.seed = num(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "rate_tol" => self.rate_tol = num(key, value)?,
            "rate_slack" => self.rate_slack = num(key, value)?,
            "growth_slack" => self.growth_slack = num(key, value)?,
            "residual_tol" => self.residual_tol = num(key, value)?,
            "brute_max" => self.brute_max = num(key, value)?,
            "timing" => {
                self.timing = match value {
                    "true" | "on" | "1" => true,
                    "false" | "off" | "0" => false,
                    _ => return Err(format!("bad value '{value}' for timing")),
                }
            }
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    /// Orders `q` used for the degree `p`.
    pub fn q_for(&self, p: usize) -> Vec<usize> {
        if !self.q.is_empty() {
            return self.q.clone();
        }
        match self.kind {
            StudyKind::InverseInequality => vec![1],
            _ => vec![p + 1],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.d == 0 {
            return fail("d must be at least 1".into());
        }
        if self.p.is_empty() {
            return fail("p must list at least one degree".into());
        }
        if self.n.is_empty() {
            return fail(format!("empty level range {:?}", self.n));
        }
        if *self.n.end() > 20 {
            return fail(format!("level {} is beyond desk scale (max 20)", self.n.end()));
        }
        let sparse_kinds = matches!(
            self.kind,
            StudyKind::SparseConvergence
                | StudyKind::MappedConvergence
                | StudyKind::Equivalence
                | StudyKind::InverseInequality
                | StudyKind::Dimensions
        );
        for &p in &self.p {
            if p > 10 {
                return fail(format!("degree {p} is not supported (max 10)"));
            }
            let min = if sparse_kinds && !(self.kind == StudyKind::InverseInequality && self.d == 1) {
                lambda_eff(p)
            } else {
                1
            };
            if *self.n.start() < min {
                return fail(format!(
                    "level range starts at {} but p = {p} needs levels >= {min}",
                    self.n.start()
                ));
            }
            for q in self.q_for(p) {
                match self.kind {
                    StudyKind::UnivariateConvergence
                    | StudyKind::SparseConvergence
                    | StudyKind::MappedConvergence => {
                        if !(self.r <= q && q <= p + 1) {
                            return fail(format!("orders must satisfy r <= q <= p + 1 (r={}, q={q}, p={p})", self.r));
                        }
                        if self.r > p {
                            return fail(format!("r = {} exceeds p = {p}", self.r));
                        }
                    }
                    StudyKind::InverseInequality => {
                        if q > p {
                            return fail(format!("q = {q} exceeds p = {p}"));
                        }
                    }
                    _ => {}
                }
            }
        }
        match self.kind {
            StudyKind::UnivariateConvergence if self.d != 1 => {
                return fail("univariate-convergence requires d = 1".into())
            }
            StudyKind::MappedConvergence => {
                if self.geometry.is_none() {
                    return fail("mapped-convergence requires a geometry".into());
                }
                if self.r > 1 {
                    return fail("mapped norms support r <= 1".into());
                }
            }
            StudyKind::Identities if self.d < 2 => return fail("identities require d >= 2".into()),
            _ => {}
        }
        Ok(())
    }

    /// Template configuration text for a kind.
    pub fn template(kind: StudyKind) -> String {
        let c = Self::new(kind);
        let ps: Vec<String> = c.p.iter().map(usize::to_string).collect();
        let mut s = format!(
            "# {}\nkind = {}\nd = {}\np = {}\nn = {}..{}\nr = {}\n",
            kind.description(),
            kind.name(),
            c.d,
            ps.join(","),
            c.n.start(),
            c.n.end(),
            c.r
        );
        match kind {
            StudyKind::UnivariateConvergence
            | StudyKind::SparseConvergence
            | StudyKind::MappedConvergence => {
                s.push_str("# q defaults to p + 1\n");
                s.push_str(&format!("target = {}\nfreq = {}\n", c.target, c.freq));
            }
            StudyKind::InverseInequality => {
                s.push_str("q = 1,2\n# set geometry to add mapped-domain quotients (q = 1)\n# geometry = distorted-square\n");
            }
            _ => {}
        }
        if let Some(g) = &c.geometry {
            s.push_str(&format!("geometry = {g}\n"));
        }
        s.push_str("seed = 0\n# out = results.csv\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_override() {
        let cfg = StudyConfig::parse(
            "kind = sparse-convergence # comment\np = 1\nn = 3..5\n",
            &["p=2".to_string()],
        )
        .unwrap();
        assert_eq!(cfg.p, vec![2]);
        assert_eq!(cfg.n, 3..=5);
        assert_eq!(cfg.q_for(2), vec![3]);
    }

    #[test]
    fn diagnostics_name_the_line() {
        let e = StudyConfig::parse("kind = dimensions\nbogus = 3\n", &[]).unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        let e = StudyConfig::parse("kind = dimensions\n", &["p=x".into()]).unwrap_err();
        assert!(e.to_string().contains("--set p"), "{e}");
        assert!(StudyConfig::parse("d = 2\n", &[]).is_err());
    }

    #[test]
    fn incompatible_orders_are_rejected() {
        let e = StudyConfig::parse("kind = univariate-convergence\np = 1\nq = 3\n", &[]);
        assert!(e.is_err());
        let e = StudyConfig::parse("kind = sparse-convergence\np = 4\nn = 2..4\n", &[]);
        assert!(e.is_err());
    }

    #[test]
    fn templates_parse() {
        for k in StudyKind::ALL {
            let cfg = StudyConfig::parse(&StudyConfig::template(k), &[]).unwrap();
            assert_eq!(cfg.kind, k);
        }
    }
}
