//! Study runners. Each kind builds its rows in a fixed parameter order; the
//! independent pieces run on the rayon pool and are collected in order.

use std::cell::RefCell;
use std::collections::HashMap;
use std::time::Instant;

use num_bigint::BigInt;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functions::{PlaneWaves, TargetFunction};
use crate::geometry::{pullback_error_norm, GeometryMap, Pullback};
use crate::index::{
    abs_log_h, hier_cardinality, lambda_eff, layer_cardinality, alternating_binomial_sum, layer_indicator_sum,
    sparse_dimension, CombinationSet, HierSet, LevelRule, TheoryConstants,
};
use crate::inverse::{mapped_inverse_ratio, sparse_inverse_ratio, univariate_inverse_ratio};
use crate::project::{error_norm, function_norm, project_full, NormMode};
use crate::sparse::{combination_project, combination_rank, equivalence_report, hier_basis, cancellation_sides, telescopic_residual};

use super::config::{StudyConfig, StudyKind};
use super::report::{fit_rate, FitSummary, Row, StudyReport};

/// Relative tolerance of the cancellation identity check.
pub const CANCELLATION_TOL: f64 = 1e-10;
/// Largest dimension for which the alternating binomial sums are always checked by `identities`.
pub const ALTERNATING_MAX_D: usize = 8;
/// Random functions per dimension in the telescopic check.
pub const TELESCOPIC_DRAWS: usize = 10;
/// Random coefficient draws per dimension in the cancellation check.
pub const CANCELLATION_DRAWS: usize = 100;

/// Runs a study on a pool capped by `STUDY_THREADS` and writes the CSV to
/// `cfg.out` when set.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = std::env::var("STUDY_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        builder = builder.num_threads(t.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let report = pool.install(|| run_kind(cfg))?;
    if let Some(path) = &cfg.out {
        let file = std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        report.write_csv(std::io::BufWriter::new(file))?;
    }
    Ok(report)
}

fn run_kind(cfg: &StudyConfig) -> Result<StudyReport> {
    let mut out = Output::new(cfg);
    match cfg.kind {
        StudyKind::UnivariateConvergence => univariate(cfg, &mut out)?,
        StudyKind::SparseConvergence => sparse_convergence(cfg, &mut out)?,
        StudyKind::MappedConvergence => mapped_convergence(cfg, &mut out)?,
        StudyKind::Equivalence => equivalence(cfg, &mut out)?,
        StudyKind::Identities => identities(cfg, &mut out)?,
        StudyKind::InverseInequality => inverse(cfg, &mut out)?,
        StudyKind::Dimensions => dimensions(cfg, &mut out)?,
    }
    Ok(StudyReport {
        kind: cfg.kind,
        rows: out.rows,
        fits: out.fits,
    })
}

struct Output {
    kind: StudyKind,
    timing: bool,
    rows: Vec<Row>,
    fits: Vec<FitSummary>,
}

impl Output {
    fn new(cfg: &StudyConfig) -> Self {
        Self {
            kind: cfg.kind,
            timing: cfg.timing,
            rows: Vec::new(),
            fits: Vec::new(),
        }
    }

    fn row(&self, d: usize, source: &'static str, value: f64) -> Row {
        Row::new(self.kind, d, source, value)
    }

    fn push(&mut self, mut row: Row, seconds: f64) {
        if self.timing {
            row.seconds = Some(seconds);
        }
        self.rows.push(row);
    }

    /// Pushes the checked (log-corrected) and raw fit rows.
    fn push_fit(&mut self, fit: FitSummary, n: u32) {
        let base = |level: &str, value: f64| {
            Row::new(self.kind, fit.d, fit.source, value)
                .p(fit.p)
                .n(n)
                .level(level)
                .orders(Some(fit.r), fit.q)
        };
        let checked = base("fit", fit.corrected).judged(Some(fit.min), fit.pass());
        let raw = base("fit-raw", fit.raw);
        self.rows.push(checked);
        self.rows.push(raw);
        self.fits.push(fit);
    }
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let t = Instant::now();
    let v = f()?;
    Ok((v, t.elapsed().as_secs_f64()))
}

fn levels(cfg: &StudyConfig) -> Vec<u32> {
    cfg.n.clone().collect()
}

fn h(n: u32) -> f64 {
    2f64.powi(-(n as i32))
}

fn target(cfg: &StudyConfig, d: usize) -> Box<dyn TargetFunction> {
    cfg.target.build_seeded(d, cfg.freq, cfg.seed)
}

/// Quadrature resolution for the analytic norms of the target.
fn norm_level(d: usize) -> u32 {
    match d {
        1 => 7,
        2 => 5,
        _ => 3,
    }
}
const NORM_POINTS: usize = 12;

fn fit_pair(
    series: &[(f64, f64)],
    log_power: u32,
) -> Result<(f64, f64)> {
    Ok((fit_rate(series, log_power)?, fit_rate(series, 0)?))
}

fn univariate(cfg: &StudyConfig, out: &mut Output) -> Result<()> {
    let f = target(cfg, 1);
    let ns = levels(cfg);
    let r = cfg.r;
    for &p in &cfg.p {
        let errors = ns
            .par_iter()
            .map(|&n| {
                timed(|| {
                    let u = project_full(&[n], p, &*f, r)?;
                    error_norm(&*f, &u, NormMode::Seminorm(r))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        for q in cfg.q_for(p) {
            let fq = function_norm(&*f, NormMode::Seminorm(q), norm_level(1), NORM_POINTS)?;
            for (&n, &(e, secs)) in ns.iter().zip(&errors) {
                // the estimate assumes h p < 1
                let bound = (h(n) * (p as f64) < 1.0)
                    .then(|| TheoryConstants::c1(q, r) * h(n).powi((q - r) as i32) * fq);
                let row = out.row(1, "L2", e).p(p).n(n).level(n.to_string()).orders(Some(r), Some(q)).upper(bound);
                out.push(row, secs);
            }
        }
        let series: Vec<(f64, f64)> = ns.iter().zip(&errors).map(|(&n, &(e, _))| (h(n), e)).collect();
        if series.len() >= 3 {
            let (corrected, raw) = fit_pair(&series, 0)?;
            let expected = (p + 1 - r) as f64;
            out.push_fit(
                FitSummary {
                    source: "L2",
                    d: 1,
                    p,
                    r,
                    q: None,
                    corrected,
                    raw,
                    log_power: 0,
                    min: expected - cfg.rate_tol,
                    max: Some(expected + cfg.rate_tol),
                },
                *cfg.n.end(),
            );
        }
    }
    Ok(())
}

fn sparse_convergence(cfg: &StudyConfig, out: &mut Output) -> Result<()> {
    let d = cfg.d;
    let f = target(cfg, d);
    let ns = levels(cfg);
    let r = cfg.r;
    for &p in &cfg.p {
        let errors = ns
            .iter()
            .map(|&n| {
                timed(|| {
                    let rule = LevelRule::new(d, n, p)?;
                    let u = combination_project(&*f, &rule, r)?;
                    error_norm(&*f, &u, NormMode::Mixed(r))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        for q in cfg.q_for(p) {
            let c10 = TheoryConstants::c10(d, q, r);
            let fq = if c10 > 0.0 {
                function_norm(&*f, NormMode::Mixed(q), norm_level(d), NORM_POINTS)?
            } else {
                f64::NAN
            };
            for (&n, &(e, secs)) in ns.iter().zip(&errors) {
                // the printed constant is not positive for every d; no bound then
                let bound = (c10 > 0.0).then(|| {
                    c10 * h(n).powi((q - r) as i32) * abs_log_h(n).powi(d as i32 - 1) * fq
                });
                let row = out.row(d, "L6", e).p(p).n(n).level(n.to_string()).orders(Some(r), Some(q)).upper(bound);
                out.push(row, secs);
            }
        }
        let series: Vec<(f64, f64)> = ns.iter().zip(&errors).map(|(&n, &(e, _))| (h(n), e)).collect();
        if series.len() >= 3 {
            let lp = d as u32 - 1;
            let (corrected, raw) = fit_pair(&series, lp)?;
            out.push_fit(
                FitSummary {
                    source: "L6",
                    d,
                    p,
                    r,
                    q: None,
                    corrected,
                    raw,
                    log_power: lp,
                    min: (p + 1 - r) as f64 - cfg.rate_slack,
                    max: None,
                },
                *cfg.n.end(),
            );
        }
    }
    Ok(())
}

fn load_geometry(cfg: &StudyConfig, d: usize) -> Result<Option<GeometryMap>> {
    let Some(src) = &cfg.geometry else {
        return Ok(None);
    };
    let map = src.load()?;
    if map.dims() != d {
        return Err(Error::Config(format!(
            "geometry '{src}' is {}-dimensional but d = {d}",
            map.dims()
        )));
    }
    Ok(Some(map))
}

fn mapped_convergence(cfg: &StudyConfig, out: &mut Output) -> Result<()> {
    let d = cfg.d;
    let map = load_geometry(cfg, d)?.ok_or_else(|| Error::Config("mapped-convergence requires a geometry".into()))?;
    let f = target(cfg, d);
    let pull = Pullback { f: &*f, map: &map };
    let ns = levels(cfg);
    let r = cfg.r;
    for &p in &cfg.p {
        let errors = ns
            .iter()
            .map(|&n| {
                timed(|| {
                    let rule = LevelRule::new(d, n, p)?;
                    // the pullback only has first derivatives, so the
                    // projection is the L2 one for every r
                    let u = combination_project(&pull, &rule, 0)?;
                    pullback_error_norm(&*f, &u, &map, NormMode::Seminorm(r))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        for (&n, &(e, secs)) in ns.iter().zip(&errors) {
            let row = out.row(d, "T1", e).p(p).n(n).level(n.to_string()).orders(Some(r), None);
            out.push(row, secs);
        }
        let series: Vec<(f64, f64)> = ns.iter().zip(&errors).map(|(&n, &(e, _))| (h(n), e)).collect();
        if series.len() >= 3 {
            let lp = d as u32 - 1;
            let (corrected, raw) = fit_pair(&series, lp)?;
            out.push_fit(
                FitSummary {
                    source: "T1",
                    d,
                    p,
                    r,
                    q: None,
                    corrected,
                    raw,
                    log_power: lp,
                    min: (p + 1 - r) as f64 - cfg.rate_slack,
                    max: None,
                },
                *cfg.n.end(),
            );
        }
    }
    Ok(())
}

fn equivalence(cfg: &StudyConfig, out: &mut Output) -> Result<()> {
    let d = cfg.d;
    let cases: Vec<(usize, u32)> = cfg
        .p
        .iter()
        .flat_map(|&p| levels(cfg).into_iter().map(move |n| (p, n)))
        .collect();
    let results = cases
        .par_iter()
        .map(|&(p, n)| {
            timed(|| {
                let rule = LevelRule::new(d, n, p)?;
                let rep = equivalence_report(&rule)?;
                Ok((rep, sparse_dimension(&rule).0))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    for (&(p, n), ((rep, formula), secs)) in cases.iter().zip(results) {
        let same = rep.dim_combination == rep.dim_hierarchical
            && rep.rank_hierarchical == rep.dim_hierarchical
            && rep.dim_hierarchical as u128 == formula;
        let row = out
            .row(d, "T2", rep.dim_combination as f64)
            .p(p)
            .n(n)
            .level("dim")
            .judged(Some(rep.dim_hierarchical as f64), same);
        out.push(row, secs);
        let row = out
            .row(d, "T2", rep.cross_residual_max)
            .p(p)
            .n(n)
            .level("residual")
            .judged(Some(cfg.residual_tol), rep.cross_residual_max < cfg.residual_tol);
        out.push(row, 0.0);
    }
    Ok(())
}

fn identities(cfg: &StudyConfig, out: &mut Output) -> Result<()> {
    // L1: alternating power sums
    for d in 2..=cfg.d.max(ALTERNATING_MAX_D) {
        let (bad, secs) = timed(|| Ok((0..=d as u32 - 2).filter(|&i| alternating_binomial_sum(d, i) != BigInt::from(0)).count()))?;
        let row = out.row(d, "L1", bad as f64).judged(Some(0.0), bad == 0);
        out.push(row, secs);
    }

    let ns = levels(cfg);
    // L3: alternating binomial sums reduce to the k = 0 indicator
    for &p in &cfg.p {
        let (bad, secs) = timed(|| {
            let bad: usize = (1..=cfg.d)
                .into_par_iter()
                .map(|d| {
                    let mut bad = 0;
                    for &n in &ns {
                        for level in 0..=n {
                            for k in 0..d {
                                let want = if k == 0 { BigInt::one() } else { BigInt::from(0) };
                                if layer_indicator_sum(d, n, p, level, k) != want {
                                    bad += 1;
                                }
                            }
                        }
                    }
                    bad
                })
                .sum();
            Ok(bad)
        })?;
        let row = out.row(cfg.d, "L3", bad as f64).p(p).judged(Some(0.0), bad == 0);
        out.push(row, secs);
    }

    // L4: coefficient sums and layer sizes
    for &p in &cfg.p {
        let (bad, secs) = timed(|| {
            let bad: usize = (1..=cfg.d)
                .into_par_iter()
                .map(|d| {
                    let mut bad = 0;
                    for &n in ns.iter().filter(|&&n| n >= lambda_eff(p)) {
                        let Ok(rule) = LevelRule::new(d, n, p) else {
                            bad += 1;
                            continue;
                        };
                        let set = CombinationSet::new(rule);
                        if set.coefficient_sum() != BigInt::one() {
                            bad += 1;
                        }
                        for (l, layer) in set.layers().iter().enumerate() {
                            if BigInt::from(layer.len()) != layer_cardinality(&rule, l as u32) {
                                bad += 1;
                            }
                        }
                        if BigInt::from(HierSet::new(rule).len()) != hier_cardinality(&rule) {
                            bad += 1;
                        }
                    }
                    bad
                })
                .sum();
            Ok(bad)
        })?;
        let row = out.row(cfg.d, "L4", bad as f64).p(p).judged(Some(0.0), bad == 0);
        out.push(row, secs);
    }

    // L7: telescopic identity on random smooth functions and mixed levels
    let tele_p = cfg.p.iter().copied().filter(|&p| p <= 2).min().unwrap_or(1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x7e1e);
    let mut cases = Vec::new();
    for d in [2usize, 3] {
        let max_level = if d == 2 { 4 } else { 3 };
        for _ in 0..TELESCOPIC_DRAWS {
            let lv: Vec<u32> = (0..d).map(|_| rng.gen_range(1..=max_level)).collect();
            let f = PlaneWaves::random(d, 3, &mut rng);
            cases.push((d, lv, f));
        }
    }
    let res = cases
        .par_iter()
        .map(|(_, lv, f)| timed(|| telescopic_residual(f, lv, tele_p, 0)))
        .collect::<Result<Vec<_>>>()?;
    for ((d, lv, _), (v, secs)) in cases.iter().zip(res) {
        let label: Vec<String> = lv.iter().map(u32::to_string).collect();
        let row = out
            .row(*d, "L7", v)
            .p(tele_p)
            .level(label.join(":"))
            .orders(Some(0), None)
            .judged(Some(cfg.residual_tol), v < cfg.residual_tol);
        out.push(row, secs);
    }

    // L8: cancellation identity with random abstract values
    for d in [2usize, 3] {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (0x8a11 + d as u64));
        let (worst, secs) = timed(|| {
            let mut worst = 0f64;
            for _ in 0..CANCELLATION_DRAWS {
                let p = cfg.p[rng.gen_range(0..cfg.p.len())];
                let lambda = lambda_eff(p);
                let n = lambda + rng.gen_range(0..=5);
                let rule = LevelRule::new(d, n, p)?;
                let draw_seed: u64 = rng.gen();
                let values = RefCell::new((ChaCha8Rng::seed_from_u64(draw_seed), HashMap::new()));
                let a = |j: &[usize], lj: &[u32]| -> f64 {
                    let mut st = values.borrow_mut();
                    let (rng, map) = &mut *st;
                    *map.entry((j.to_vec(), lj.to_vec()))
                        .or_insert_with(|| rng.gen_range(-1.0..1.0))
                };
                worst = worst.max(cancellation_sides(&rule, &a).relative());
            }
            Ok(worst)
        })?;
        let row = out
            .row(d, "L8", worst)
            .level(format!("{CANCELLATION_DRAWS} draws"))
            .judged(Some(CANCELLATION_TOL), worst < CANCELLATION_TOL);
        out.push(row, secs);
    }
    Ok(())
}

/// Rows of a growth check `value_n <= c (1 + slack) g(n)`, `c` fitted on the
/// first level. Returns the fitted `c`.
fn growth_rows(
    out: &mut Output,
    make: impl Fn(u32, f64) -> Row,
    series: &[(u32, f64, f64)],
    g: impl Fn(u32) -> f64,
    slack: f64,
) -> f64 {
    let Some(&(n0, v0, _)) = series.first() else {
        return f64::NAN;
    };
    let c = v0 / g(n0);
    for &(n, v, secs) in series {
        let row = make(n, v).upper(Some(c * (1.0 + slack) * g(n)));
        out.push(row, secs);
    }
    c
}

fn inverse(cfg: &StudyConfig, out: &mut Output) -> Result<()> {
    let d = cfg.d;
    let ns = levels(cfg);
    for &p in &cfg.p {
        for q in cfg.q_for(p) {
            let vals = ns
                .par_iter()
                .map(|&n| {
                    timed(|| {
                        if d == 1 {
                            univariate_inverse_ratio(p, n, q)
                        } else {
                            sparse_inverse_ratio(&LevelRule::new(d, n, p)?, q)
                        }
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            for (&n, (v, secs)) in ns.iter().zip(vals) {
                let (source, bound) = if d == 1 {
                    ("L12", TheoryConstants::c2(q) * h(n).powi(-(q as i32)))
                } else {
                    (
                        "L10",
                        TheoryConstants::c11(d, q)
                            * h(n).powi(-(q as i32))
                            * abs_log_h(n).powf(d as f64 / 2.0),
                    )
                };
                let row = out.row(d, source, v).p(p).n(n).level(n.to_string()).orders(None, Some(q)).upper(Some(bound));
                out.push(row, secs);
            }
        }
    }
    if let Some(map) = load_geometry(cfg, d)? {
        for &p in &cfg.p {
            let vals = ns
                .par_iter()
                .map(|&n| timed(|| mapped_inverse_ratio(&LevelRule::new(d, n, p)?, &map)))
                .collect::<Result<Vec<_>>>()?;
            let series: Vec<(u32, f64, f64)> = ns.iter().zip(vals).map(|(&n, (v, s))| (n, v, s)).collect();
            let kind = out.kind;
            let c = growth_rows(
                out,
                |n, v| {
                    Row::new(kind, d, "T3", v)
                        .p(p)
                        .n(n)
                        .level(n.to_string())
                        .orders(None, Some(1))
                },
                &series,
                |n| h(n).recip() * abs_log_h(n).powf(d as f64 / 2.0),
                cfg.growth_slack,
            );
            let row = out.row(d, "T3", c).p(p).level("c").orders(None, Some(1));
            out.push(row, 0.0);
        }
    }
    Ok(())
}

fn dimensions(cfg: &StudyConfig, out: &mut Output) -> Result<()> {
    let d = cfg.d;
    let ns = levels(cfg);
    for &p in &cfg.p {
        let rows = ns
            .par_iter()
            .map(|&n| {
                timed(|| {
                    let rule = LevelRule::new(d, n, p)?;
                    let (sparse, full) = sparse_dimension(&rule);
                    let counted: usize = hier_basis(&rule)?.iter().map(|b| b.dim()).sum();
                    let brute = if n <= cfg.brute_max {
                        Some(combination_rank(&rule)?)
                    } else {
                        None
                    };
                    Ok((sparse, full, counted, brute))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut series = Vec::new();
        for (&n, ((sparse, full, counted, brute), secs)) in ns.iter().zip(rows) {
            let ok = counted as u128 == sparse && brute.map_or(true, |b| b as u128 == sparse);
            let label = match brute {
                Some(b) => format!("rank={b}"),
                None => "formula".to_string(),
            };
            let row = out
                .row(d, "P1", sparse as f64)
                .p(p)
                .n(n)
                .level(label)
                .judged(Some(full as f64), ok);
            out.push(row, secs);
            series.push((n, sparse as f64, 0.0));
        }
        let kind = out.kind;
        let c = growth_rows(
            out,
            |n, v| Row::new(kind, d, "P1", v).p(p).n(n).level("growth"),
            &series,
            |n| h(n).recip() * abs_log_h(n).powi(d as i32 - 1),
            cfg.growth_slack,
        );
        let row = out.row(d, "P1", c).p(p).level("c");
        out.push(row, 0.0);
    }
    Ok(())
}
