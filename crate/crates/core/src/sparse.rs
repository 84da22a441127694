//! Sparse-grid spline functions: combination form, hierarchical form, and the
//! identities relating them.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::bspline::SplineSpace1D;
use crate::error::{Error, Result};
use crate::functions::TargetFunction;
use crate::index::{cancellation_constant, levels_with_sum, CombinationSet, HierSet, LevelRule};
use crate::linalg::{kron_all, max_projection_residual, orthonormal_range, Tensor};
use crate::project::{
    error_points, project_full, CoefficientTensor, SampledField, SplineFunction, TensorGrid,
};

/// `u = sum_l c_l u_l` over the admissible levels of a combination set.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGridFunction {
    set: CombinationSet,
    components: Vec<(i64, CoefficientTensor)>,
}

impl SparseGridFunction {
    /// Components must follow `set.entries()` order.
    pub fn new(set: CombinationSet, components: Vec<CoefficientTensor>) -> Result<Self> {
        let entries = set.entries();
        if entries.len() != components.len() {
            return Err(Error::SpaceMismatch(format!(
                "{} components for {} admissible levels",
                components.len(),
                entries.len()
            )));
        }
        let mut out = Vec::with_capacity(entries.len());
        for ((lv, c), u) in entries.into_iter().zip(components) {
            if u.levels() != lv.as_slice() || u.degree() != set.rule().p {
                return Err(Error::SpaceMismatch(format!(
                    "component at levels {:?} (p={}) where {lv:?} (p={}) was expected",
                    u.levels(),
                    u.degree(),
                    set.rule().p
                )));
            }
            out.push((c, u));
        }
        Ok(Self {
            set,
            components: out,
        })
    }

    pub fn zeros(rule: LevelRule) -> Self {
        let set = CombinationSet::new(rule);
        let components = set
            .entries()
            .into_iter()
            .map(|(lv, c)| (c, CoefficientTensor::zeros(rule.p, &lv)))
            .collect();
        Self { set, components }
    }

    pub fn set(&self) -> &CombinationSet {
        &self.set
    }

    pub fn rule(&self) -> &LevelRule {
        self.set.rule()
    }

    pub fn components(&self) -> &[(i64, CoefficientTensor)] {
        &self.components
    }

    pub fn components_mut(&mut self) -> impl Iterator<Item = &mut CoefficientTensor> {
        self.components.iter_mut().map(|(_, u)| u)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.eval_deriv(x, &vec![0; x.len()])
    }

    pub fn eval_deriv(&self, x: &[f64], alpha: &[usize]) -> Result<f64> {
        let mut s = 0.0;
        for (c, u) in &self.components {
            s += *c as f64 * u.eval_deriv(x, alpha)?;
        }
        Ok(s)
    }
}

impl SplineFunction for SparseGridFunction {
    fn dim(&self) -> usize {
        self.rule().d
    }

    fn degree(&self) -> usize {
        self.rule().p
    }

    fn finest_levels(&self) -> Vec<u32> {
        let mut top = vec![0; self.rule().d];
        for (_, u) in &self.components {
            for (t, l) in top.iter_mut().zip(u.levels()) {
                *t = (*t).max(*l);
            }
        }
        top
    }

    fn grid_values(&self, nodes: &[&[f64]], alpha: &[usize]) -> Result<Tensor> {
        let shape: Vec<usize> = nodes.iter().map(|n| n.len()).collect();
        let mut acc = Tensor::zeros(&shape);
        for (c, u) in &self.components {
            acc.axpy(*c as f64, &u.grid_values(nodes, alpha)?);
        }
        Ok(acc)
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        SparseGridFunction::eval(self, x)
    }
}

/// `Pi^L f = sum_l c_l Pi_{p,h_l} f`; the per-level projections run in parallel.
pub fn combination_project(
    f: &dyn TargetFunction,
    rule: &LevelRule,
    r: usize,
) -> Result<SparseGridFunction> {
    if f.dim() != rule.d {
        return Err(Error::SpaceMismatch(format!(
            "{}-variate function for a {}-dimensional rule",
            f.dim(),
            rule.d
        )));
    }
    let set = CombinationSet::new(*rule);
    let components = set
        .entries()
        .par_iter()
        .map(|(lv, _)| project_full(lv, rule.p, f, r))
        .collect::<Result<Vec<_>>>()?;
    SparseGridFunction::new(set, components)
}

/// Fine-space indices spanning the univariate increment at level `k`.
///
/// The base level keeps the whole space. Above it, the functions at
/// positions `j + floor(p/2)` for odd `j` are taken; these are the functions
/// centred on the knots inserted at level `k`.
pub fn increment_selection(p: usize, lambda: u32, k: u32) -> Vec<usize> {
    if k == lambda {
        (0..(1usize << k) + p).collect()
    } else {
        (1..1usize << k).step_by(2).map(|j| j + p / 2).collect()
    }
}

/// Checks that the increments `lambda..=top` refined to level `top` span a
/// space of dimension `2^top + p`.
pub fn check_increment_chain(p: usize, lambda: u32, top: u32) -> Result<()> {
    let fine = SplineSpace1D::new(p, top)?;
    let pts = SplineSpace1D::new(p, top + 1)?.greville();
    let mut cols: Vec<DMatrix<f64>> = Vec::new();
    for k in lambda..=top {
        let s = SplineSpace1D::new(p, k)?;
        let b = s.collocation(&pts, 0)?;
        let sel = increment_selection(p, lambda, k);
        cols.push(b.select_columns(sel.iter()));
    }
    let total: usize = cols.iter().map(|c| c.ncols()).sum();
    let mut stacked = DMatrix::zeros(pts.len(), total);
    let mut at = 0;
    for c in &cols {
        stacked.view_mut((0, at), (c.nrows(), c.ncols())).copy_from(c);
        at += c.ncols();
    }
    let rank = crate::linalg::rank(&stacked, RANK_TOL);
    if rank != fine.dim() || total != fine.dim() {
        return Err(Error::RankDeficient(format!(
            "increments up to level {top} (p={p}) have rank {rank} with {total} functions, expected {}",
            fine.dim()
        )));
    }
    Ok(())
}

/// Relative singular-value threshold for collocation ranks.
pub const RANK_TOL: f64 = 1e-8;

/// Tensor basis of one hierarchical increment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HierIncrementBasis {
    levels: Vec<u32>,
    selections: Vec<Vec<usize>>,
}

impl HierIncrementBasis {
    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn selections(&self) -> &[Vec<usize>] {
        &self.selections
    }

    pub fn shape(&self) -> Vec<usize> {
        self.selections.iter().map(Vec::len).collect()
    }

    pub fn dim(&self) -> usize {
        self.shape().iter().product()
    }
}

/// Increment bases for every level of the hierarchical set, after checking
/// univariate independence up to level `n`.
pub fn hier_basis(rule: &LevelRule) -> Result<Vec<HierIncrementBasis>> {
    check_increment_chain(rule.p, rule.lambda, rule.n)?;
    Ok(HierSet::new(*rule)
        .levels()
        .iter()
        .map(|lv| HierIncrementBasis {
            levels: lv.clone(),
            selections: lv
                .iter()
                .map(|&k| increment_selection(rule.p, rule.lambda, k))
                .collect(),
        })
        .collect())
}

/// `u = sum_k w_k` with `w_k` in the increment of level `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct HierFunction {
    set: HierSet,
    increments: Vec<HierIncrementBasis>,
    coeffs: Vec<Tensor>,
}

impl HierFunction {
    pub fn new(rule: &LevelRule, coeffs: Vec<Tensor>) -> Result<Self> {
        let increments = hier_basis(rule)?;
        if coeffs.len() != increments.len() {
            return Err(Error::SpaceMismatch(format!(
                "{} coefficient arrays for {} increments",
                coeffs.len(),
                increments.len()
            )));
        }
        for (c, inc) in coeffs.iter().zip(&increments) {
            if c.shape() != inc.shape().as_slice() {
                return Err(Error::SpaceMismatch(format!(
                    "increment {:?} expects shape {:?}",
                    inc.levels,
                    inc.shape()
                )));
            }
        }
        Ok(Self {
            set: HierSet::new(*rule),
            increments,
            coeffs,
        })
    }

    pub fn set(&self) -> &HierSet {
        &self.set
    }

    pub fn increments(&self) -> &[HierIncrementBasis] {
        &self.increments
    }

    pub fn coeffs(&self) -> &[Tensor] {
        &self.coeffs
    }

    /// The increment `w_k` as a full coefficient tensor on level `k`.
    pub fn increment_tensor(&self, i: usize) -> CoefficientTensor {
        let inc = &self.increments[i];
        let p = self.set.rule().p;
        let mut u = CoefficientTensor::zeros(p, &inc.levels);
        let shape = inc.shape();
        let mut idx = vec![0usize; shape.len()];
        let mut full = vec![0usize; shape.len()];
        for v in self.coeffs[i].data() {
            for a in 0..idx.len() {
                full[a] = inc.selections[a][idx[a]];
            }
            let off = u.coeffs().offset(&full);
            u.coeffs_mut().data_mut()[off] = *v;
            crate::linalg::increment(&mut idx, &shape);
        }
        u
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let mut s = 0.0;
        for i in 0..self.increments.len() {
            s += self.increment_tensor(i).eval(x)?;
        }
        Ok(s)
    }
}

/// Result of comparing the combination-technique and hierarchical spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    /// Rank of all combination-level bases, stacked.
    pub dim_combination: usize,
    /// Number of hierarchical basis functions.
    pub dim_hierarchical: usize,
    /// Rank of the hierarchical basis functions (equals the count when independent).
    pub rank_hierarchical: usize,
    /// Largest relative least-squares residual of a basis function of one
    /// space fitted in the other.
    pub cross_residual_max: f64,
}

impl EquivalenceReport {
    pub fn equivalent(&self, tol: f64) -> bool {
        self.dim_combination == self.dim_hierarchical
            && self.rank_hierarchical == self.dim_hierarchical
            && self.cross_residual_max < tol
    }
}

/// Collocation of level-`l` basis functions at the level-`n+1` Greville points,
/// compressed by the orthogonal factor of the level-`n` collocation matrix.
struct Compressor {
    p: usize,
    points: Vec<f64>,
    qt: DMatrix<f64>,
}

impl Compressor {
    fn new(p: usize, n: u32) -> Result<Self> {
        let points = SplineSpace1D::new(p, n + 1)?.greville();
        let a = SplineSpace1D::new(p, n)?.collocation(&points, 0)?;
        let qt = a.qr().q().transpose();
        Ok(Self { p, points, qt })
    }

    fn columns(&self, level: u32, selection: Option<&[usize]>) -> Result<DMatrix<f64>> {
        let b = SplineSpace1D::new(self.p, level)?.collocation(&self.points, 0)?;
        let b = match selection {
            Some(sel) => b.select_columns(sel.iter()),
            None => b,
        };
        Ok(&self.qt * b)
    }
}

fn hstack(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.view_mut((0, at), (rows, b.ncols())).copy_from(b);
        at += b.ncols();
    }
    out
}

/// Stacked compressed collocation columns of all combination-level bases.
pub fn combination_collocation(rule: &LevelRule) -> Result<DMatrix<f64>> {
    let comp = Compressor::new(rule.p, rule.n)?;
    let set = CombinationSet::new(*rule);
    let mut cache: HashMap<u32, DMatrix<f64>> = HashMap::new();
    let mut blocks = Vec::new();
    for (lv, _) in set.entries() {
        for &l in &lv {
            if !cache.contains_key(&l) {
                cache.insert(l, comp.columns(l, None)?);
            }
        }
        let factors: Vec<&DMatrix<f64>> = lv.iter().map(|l| &cache[l]).collect();
        blocks.push(kron_all(&factors));
    }
    Ok(hstack(&blocks))
}

/// Rank of the stacked combination-level collocation matrix.
pub fn combination_rank(rule: &LevelRule) -> Result<usize> {
    Ok(crate::linalg::rank(&combination_collocation(rule)?, RANK_TOL))
}

pub fn equivalence_report(rule: &LevelRule) -> Result<EquivalenceReport> {
    let comp = Compressor::new(rule.p, rule.n)?;
    let l_mat = combination_collocation(rule)?;
    let incs = hier_basis(rule)?;
    let mut cache: HashMap<u32, DMatrix<f64>> = HashMap::new();
    let mut blocks = Vec::new();
    for inc in &incs {
        for (&l, sel) in inc.levels.iter().zip(&inc.selections) {
            if !cache.contains_key(&l) {
                cache.insert(l, comp.columns(l, Some(sel))?);
            }
        }
        let factors: Vec<&DMatrix<f64>> = inc.levels.iter().map(|l| &cache[l]).collect();
        blocks.push(kron_all(&factors));
    }
    let h_mat = hstack(&blocks);
    let (ql, _) = orthonormal_range(&l_mat, RANK_TOL);
    let (qh, _) = orthonormal_range(&h_mat, RANK_TOL);
    let residual = max_projection_residual(&ql, &h_mat).max(max_projection_residual(&qh, &l_mat));
    Ok(EquivalenceReport {
        dim_combination: ql.ncols(),
        dim_hierarchical: h_mat.ncols(),
        rank_hierarchical: qh.ncols(),
        cross_residual_max: residual,
    })
}

/// Largest pointwise difference between `(I - Pi_l) f` and the telescopic
/// sum `sum_{J != {}} (-1)^{|J|-1} (I - Pi)^J f` on a Gauss grid one level
/// finer than `levels`.
pub fn telescopic_residual(
    f: &dyn TargetFunction,
    levels: &[u32],
    p: usize,
    r: usize,
) -> Result<f64> {
    let d = levels.len();
    if f.dim() != d {
        return Err(Error::SpaceMismatch("dimension of f and levels differ".into()));
    }
    let fine: Vec<u32> = levels.iter().map(|l| l + 1).collect();
    let grid = TensorGrid::new(&fine, error_points(p))?;
    let spaces = levels
        .iter()
        .map(|&l| SplineSpace1D::new(p, l))
        .collect::<Result<Vec<_>>>()?;
    let field = SampledField::from_function(f, &grid, r);

    let mut full = field.clone();
    for (a, s) in spaces.iter().enumerate() {
        full = full.project_axis(a, s, r)?;
    }
    let mut lhs = field.values().clone();
    lhs.axpy(-1.0, full.values());

    let mut rhs = Tensor::zeros(&grid.shape());
    for mask in 1u32..(1 << d) {
        let mut g = field.clone();
        for (a, s) in spaces.iter().enumerate() {
            if mask & (1 << a) != 0 {
                g = g.complement_axis(a, s, r)?;
            }
        }
        let sign = if mask.count_ones() % 2 == 1 { 1.0 } else { -1.0 };
        rhs.axpy(sign, g.values());
    }
    lhs.axpy(-1.0, &rhs);
    Ok(lhs.max_abs())
}

/// Both sides of the coarse-error cancellation identity of the combination
/// technique.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CancellationSides {
    pub lhs: f64,
    pub rhs: f64,
    /// Sum of absolute values of the left-hand terms.
    pub scale: f64,
}

impl CancellationSides {
    pub fn absolute(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }

    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.absolute()
        } else {
            self.absolute() / self.scale
        }
    }
}

/// Evaluates
/// `sum_{l in L} c_l sum_{J != {}} a(J, l_J)` and its regrouping by layers
/// of the `J` components, where `a(J, l_J)` receives the sorted direction
/// list `J` and the components of `l` in those directions.
pub fn cancellation_sides(rule: &LevelRule, a: &dyn Fn(&[usize], &[u32]) -> f64) -> CancellationSides {
    let d = rule.d;
    let set = CombinationSet::new(*rule);
    let subsets: Vec<Vec<usize>> = (1u32..(1 << d))
        .map(|m| (0..d).filter(|i| m & (1 << i) != 0).collect())
        .collect();

    let mut lhs = 0.0;
    let mut scale = 0.0;
    let mut sub = Vec::with_capacity(d);
    for (lv, c) in set.entries() {
        for j in &subsets {
            sub.clear();
            sub.extend(j.iter().map(|&i| lv[i]));
            let t = c as f64 * a(j, &sub);
            lhs += t;
            scale += t.abs();
        }
    }

    let lambda = rule.lambda;
    let mut rhs = 0.0;
    for k in 1..d {
        for l in 0..=d - 2 {
            let c3 = cancellation_constant(d, k, l).to_f64().unwrap_or(f64::NAN);
            if c3 == 0.0 {
                continue;
            }
            let Some(sum) = (rule.n + (k as u32 - 1) * lambda).checked_sub(l as u32) else {
                continue;
            };
            let parts = levels_with_sum(k, sum, lambda);
            for j in subsets.iter().filter(|j| j.len() == k) {
                for lj in &parts {
                    rhs += c3 * a(j, lj);
                }
            }
        }
    }
    let all: Vec<usize> = (0..d).collect();
    for (l, layer) in set.layers().iter().enumerate() {
        let c4 = set.layer_coefficient(l) as f64;
        for lv in layer {
            rhs += c4 * a(&all, lv);
        }
    }
    CancellationSides { lhs, rhs, scale }
}

/// `|LHS - RHS|` of [`cancellation_sides`].
pub fn cancellation_residual(rule: &LevelRule, a: &dyn Fn(&[usize], &[u32]) -> f64) -> f64 {
    cancellation_sides(rule, a).absolute()
}
