//! Gram matrices, univariate projectors, tensor (and partial tensor)
//! projections, and Sobolev-type error norms on the unit cube.

use nalgebra::DMatrix;

use crate::bspline::SplineSpace1D;
use crate::error::{Error, Result};
use crate::functions::TargetFunction;
use crate::linalg::{increment, RowOperator, Tensor};
use crate::quadrature::{gauss_rule, QuadratureRule, MAX_POINTS};

/// `(D^r b_i, D^r b_j)_{L2}` for one univariate space.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    space: SplineSpace1D,
    order: usize,
    matrix: DMatrix<f64>,
}

impl GramMatrix {
    pub fn space(&self) -> &SplineSpace1D {
        &self.space
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }
}

fn check_rule(space: &SplineSpace1D, rule: &QuadratureRule) -> Result<()> {
    if rule.points() < space.degree() + 1 {
        return Err(Error::UnderResolvedQuadrature {
            points: rule.points(),
            degree: 2 * space.degree(),
        });
    }
    Ok(())
}

fn check_order(space: &SplineSpace1D, r: usize) -> Result<()> {
    if r > space.degree() {
        return Err(Error::OrderTooHigh {
            order: r,
            degree: space.degree(),
        });
    }
    Ok(())
}

/// Assembles the order-`r` Gram matrix element by element.
pub fn gram(space: &SplineSpace1D, r: usize, rule: &QuadratureRule) -> Result<GramMatrix> {
    check_order(space, r)?;
    check_rule(space, rule)?;
    let p = space.degree();
    let h = space.mesh_size();
    let mut g = DMatrix::zeros(space.dim(), space.dim());
    for cell in 0..space.cells() {
        for (xi, w) in rule.nodes().iter().zip(rule.weights()) {
            let x = (cell as f64 + xi) * h;
            let lb = space.local_basis_in_cell(cell, x, r);
            let v = &lb.values[r];
            for a in 0..=p {
                for b in 0..=p {
                    g[(lb.first + a, lb.first + b)] += w * h * v[a] * v[b];
                }
            }
        }
    }
    Ok(GramMatrix {
        space: space.clone(),
        order: r,
        matrix: g,
    })
}

/// Banded operator `x_i -> D^order s(x_i)` from coefficients to point values.
pub fn basis_operator(space: &SplineSpace1D, points: &[f64], order: usize) -> Result<RowOperator> {
    let rows = points
        .iter()
        .map(|&x| {
            let lb = space.local_basis(x, order)?;
            Ok((lb.first, lb.values[order].clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RowOperator::new(space.dim(), rows))
}

/// Default points per cell for the projection loads and Gram matrices.
pub fn projection_points(p: usize) -> usize {
    p + 1
}

/// Default points per cell for errors against analytic functions.
pub fn error_points(p: usize) -> usize {
    (p + 3).min(MAX_POINTS)
}

/// Composite Gauss grid on `2^level` cells of one direction.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisGrid {
    level: u32,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl AxisGrid {
    pub fn new(level: u32, points: usize) -> Result<Self> {
        let rule = gauss_rule(points)?;
        let (nodes, weights) = rule.composite(1usize << level);
        Ok(Self {
            level,
            nodes,
            weights,
        })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn points_per_cell(&self) -> usize {
        self.nodes.len() >> self.level
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Tensor product of axis grids.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorGrid {
    axes: Vec<AxisGrid>,
}

impl TensorGrid {
    pub fn new(levels: &[u32], points: usize) -> Result<Self> {
        let axes = levels
            .iter()
            .map(|&l| AxisGrid::new(l, points))
            .collect::<Result<_>>()?;
        Ok(Self { axes })
    }

    pub fn from_axes(axes: Vec<AxisGrid>) -> Self {
        Self { axes }
    }

    pub fn axes(&self) -> &[AxisGrid] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(AxisGrid::len).collect()
    }

    pub fn nodes(&self) -> Vec<&[f64]> {
        self.axes.iter().map(AxisGrid::nodes).collect()
    }

    pub fn weights(&self) -> Vec<Vec<f64>> {
        self.axes.iter().map(|a| a.weights.clone()).collect()
    }

    /// `D^alpha f` at every grid point.
    pub fn sample(&self, f: &dyn TargetFunction, alpha: &[usize]) -> Tensor {
        let mut x = vec![0.0; self.dim()];
        Tensor::from_fn(&self.shape(), |idx| {
            for (a, i) in idx.iter().enumerate() {
                x[a] = self.axes[a].nodes[*i];
            }
            f.deriv(&x, alpha)
        })
    }
}

/// Coefficient maps of the univariate projector sampled on a fixed grid:
/// `coeffs = value_map * f(nodes) + deriv_map * f^(r)(nodes)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector1D {
    space: SplineSpace1D,
    order: usize,
    value_map: DMatrix<f64>,
    deriv_map: Option<DMatrix<f64>>,
}

impl Projector1D {
    /// Builds the projector for samples on `grid`, whose cells must refine
    /// those of `space` and carry at least `p + 1` points each.
    ///
    /// For `r = 0` this is the L2 projection. For `r >= 1` it minimizes the
    /// `H^r` seminorm of the residual, which must in addition be
    /// L2-orthogonal to polynomials of degree `< r`.
    pub fn new(space: &SplineSpace1D, r: usize, grid: &AxisGrid) -> Result<Self> {
        check_order(space, r)?;
        if grid.level() < space.level() {
            return Err(Error::SpaceMismatch(format!(
                "grid level {} is coarser than space level {}",
                grid.level(),
                space.level()
            )));
        }
        if grid.points_per_cell() < space.degree() + 1 {
            return Err(Error::UnderResolvedQuadrature {
                points: grid.points_per_cell(),
                degree: 2 * space.degree(),
            });
        }
        let w = grid.weights();
        let b0 = space.collocation(grid.nodes(), 0)?;
        let n = space.dim();
        let nq = grid.len();
        let bt_w = |b: &DMatrix<f64>| {
            let mut t = b.transpose();
            for (j, wj) in w.iter().enumerate() {
                t.column_mut(j).scale_mut(*wj);
            }
            t
        };
        if r == 0 {
            let load = bt_w(&b0);
            let g = &load * &b0;
            let chol = g
                .cholesky()
                .ok_or_else(|| Error::Singular("L2 Gram matrix".into()))?;
            return Ok(Self {
                space: space.clone(),
                order: 0,
                value_map: chol.solve(&load),
                deriv_map: None,
            });
        }
        // D^r maps S_p onto S_{p-r}, so the minimizer has D^r u equal to the
        // L2 projection of f^(r) there; the moment rows fix the kernel.
        let p = space.degree();
        let low = SplineSpace1D::new(p - r, space.level())?;
        let low_proj = Projector1D::new(&low, 0, grid)?.value_map;
        let gl = low.greville();
        let h_r = space.mesh_size().powi(r as i32);
        let mut deriv = low
            .collocation(&gl, 0)?
            .lu()
            .solve(&space.collocation(&gl, r)?)
            .ok_or_else(|| Error::Singular("derivative map".into()))?;
        deriv.scale_mut(h_r);
        // monomials centred at 1/2 keep the moment rows well scaled
        let x = DMatrix::from_fn(nq, r, |i, k| (grid.nodes()[i] - 0.5).powi(k as i32));
        let mut xt_w = bt_w(&x);
        let mut moments = &xt_w * &b0;
        let mut low_proj = low_proj;
        // equilibrate rows together with their right-hand sides
        for (sys_rows, rhs_rows) in [(&mut deriv, &mut low_proj), (&mut moments, &mut xt_w)] {
            for i in 0..sys_rows.nrows() {
                let s = sys_rows.row(i).amax();
                if s > 0.0 {
                    sys_rows.row_mut(i).unscale_mut(s);
                    rhs_rows.row_mut(i).unscale_mut(s);
                }
            }
        }
        let m = n - r;
        let mut sys = DMatrix::zeros(n, n);
        sys.view_mut((0, 0), (m, n)).copy_from(&deriv);
        sys.view_mut((m, 0), (r, n)).copy_from(&moments);
        let inv = sys
            .try_inverse()
            .ok_or_else(|| Error::Singular("seminorm projection system".into()))?;
        let value_map = inv.columns(m, r) * xt_w;
        let deriv_map = inv.columns(0, m) * low_proj * h_r;
        Ok(Self {
            space: space.clone(),
            order: r,
            value_map,
            deriv_map: Some(deriv_map),
        })
    }

    pub fn space(&self) -> &SplineSpace1D {
        &self.space
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value_map(&self) -> &DMatrix<f64> {
        &self.value_map
    }

    pub fn deriv_map(&self) -> Option<&DMatrix<f64>> {
        self.deriv_map.as_ref()
    }
}

/// Univariate projection of `f` (given as `f(x, k) = f^(k)(x)`) onto `space`.
pub fn project_1d(
    space: &SplineSpace1D,
    f: impl Fn(f64, usize) -> f64,
    r: usize,
) -> Result<Vec<f64>> {
    let grid = AxisGrid::new(space.level(), projection_points(space.degree()))?;
    let proj = Projector1D::new(space, r, &grid)?;
    let vals: Vec<f64> = grid.nodes().iter().map(|&x| f(x, 0)).collect();
    let mut c = &proj.value_map * nalgebra::DVector::from_vec(vals);
    if let Some(dm) = &proj.deriv_map {
        let ders: Vec<f64> = grid.nodes().iter().map(|&x| f(x, r)).collect();
        c += dm * nalgebra::DVector::from_vec(ders);
    }
    Ok(c.iter().copied().collect())
}

/// Multi-index helpers over `{0..=m}^d`, row-major.
fn slot(alpha: &[usize], m: usize) -> usize {
    alpha.iter().fold(0, |acc, a| acc * (m + 1) + a)
}

fn all_alphas(d: usize, m: usize) -> Vec<Vec<usize>> {
    let shape = vec![m + 1; d];
    let mut out = Vec::new();
    let mut a = vec![0; d];
    loop {
        out.push(a.clone());
        if !increment(&mut a, &shape) {
            break;
        }
    }
    out
}

/// Samples of `D^alpha g` for every `alpha` in `{0..=max_order}^d` on a
/// tensor grid. Partial projections keep unprojected directions in this form.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    grid: TensorGrid,
    max_order: usize,
    data: Vec<Tensor>,
}

impl SampledField {
    pub fn from_function(f: &dyn TargetFunction, grid: &TensorGrid, max_order: usize) -> Self {
        let data = all_alphas(grid.dim(), max_order)
            .iter()
            .map(|a| grid.sample(f, a))
            .collect();
        Self {
            grid: grid.clone(),
            max_order,
            data,
        }
    }

    pub fn grid(&self) -> &TensorGrid {
        &self.grid
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn derivative(&self, alpha: &[usize]) -> &Tensor {
        &self.data[slot(alpha, self.max_order)]
    }

    pub fn values(&self) -> &Tensor {
        &self.data[0]
    }

    /// Applies `Pi` in direction `axis` onto `space` (projection order `r`).
    pub fn project_axis(&self, axis: usize, space: &SplineSpace1D, r: usize) -> Result<Self> {
        if r > self.max_order {
            return Err(Error::InvalidArgument(format!(
                "field carries derivatives up to {} but projection order is {r}",
                self.max_order
            )));
        }
        let ax = &self.grid.axes[axis];
        let proj = Projector1D::new(space, r, ax)?;
        let m = self.max_order;
        let evals: Vec<DMatrix<f64>> = (0..=m)
            .map(|a| {
                if a > space.degree() {
                    Ok(DMatrix::zeros(ax.len(), space.dim()))
                } else {
                    space.collocation(ax.nodes(), a)
                }
            })
            .collect::<Result<_>>()?;
        let vmaps: Vec<RowOperator> = evals
            .iter()
            .map(|e| RowOperator::from_dense(&(e * &proj.value_map)))
            .collect();
        let dmaps: Option<Vec<RowOperator>> = proj.deriv_map.as_ref().map(|dm| {
            evals
                .iter()
                .map(|e| RowOperator::from_dense(&(e * dm)))
                .collect()
        });
        let d = self.grid.dim();
        let alphas = all_alphas(d, m);
        let mut data = Vec::with_capacity(alphas.len());
        for alpha in &alphas {
            let a = alpha[axis];
            let mut src = alpha.clone();
            src[axis] = 0;
            let mut out = self.data[slot(&src, m)].apply(axis, &vmaps[a]);
            if let Some(dmaps) = &dmaps {
                src[axis] = r;
                out.axpy(1.0, &self.data[slot(&src, m)].apply(axis, &dmaps[a]));
            }
            data.push(out);
        }
        Ok(Self {
            grid: self.grid.clone(),
            max_order: m,
            data,
        })
    }

    /// `(I - Pi)` in direction `axis`.
    pub fn complement_axis(&self, axis: usize, space: &SplineSpace1D, r: usize) -> Result<Self> {
        let mut out = self.project_axis(axis, space, r)?;
        for (o, s) in out.data.iter_mut().zip(&self.data) {
            o.scale(-1.0);
            o.axpy(1.0, s);
        }
        Ok(out)
    }
}

/// Partial tensor projection `Pi^J`: univariate projections in the
/// directions of `dirs` (0-based), sampled data elsewhere. An empty `dirs`
/// returns the sampled input.
pub fn project_tensor(
    levels: &[u32],
    p: usize,
    f: &dyn TargetFunction,
    dirs: &[usize],
    r: usize,
    grid: &TensorGrid,
) -> Result<SampledField> {
    if levels.len() != f.dim() || grid.dim() != f.dim() {
        return Err(Error::SpaceMismatch("dimension of levels, grid and f differ".into()));
    }
    let mut field = SampledField::from_function(f, grid, r);
    for &axis in dirs {
        if axis >= levels.len() {
            return Err(Error::InvalidArgument(format!("direction {axis} out of range")));
        }
        let space = SplineSpace1D::new(p, levels[axis])?;
        field = field.project_axis(axis, &space, r)?;
    }
    Ok(field)
}

/// Tensor-product spline with level multi-index `levels`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTensor {
    degree: usize,
    levels: Vec<u32>,
    coeffs: Tensor,
}

impl CoefficientTensor {
    pub fn new(degree: usize, levels: &[u32], coeffs: Tensor) -> Result<Self> {
        let shape: Vec<usize> = levels.iter().map(|&l| (1usize << l) + degree).collect();
        if coeffs.shape() != shape.as_slice() {
            return Err(Error::SpaceMismatch(format!(
                "coefficient shape {:?} does not match space dims {shape:?}",
                coeffs.shape()
            )));
        }
        Ok(Self {
            degree,
            levels: levels.to_vec(),
            coeffs,
        })
    }

    pub fn zeros(degree: usize, levels: &[u32]) -> Self {
        let shape: Vec<usize> = levels.iter().map(|&l| (1usize << l) + degree).collect();
        Self {
            degree,
            levels: levels.to_vec(),
            coeffs: Tensor::zeros(&shape),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn coeffs(&self) -> &Tensor {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut Tensor {
        &mut self.coeffs
    }

    pub fn spaces(&self) -> Result<Vec<SplineSpace1D>> {
        self.levels
            .iter()
            .map(|&l| SplineSpace1D::with_level(self.degree, l))
            .collect()
    }

    /// `D^alpha u(x)`.
    pub fn eval_deriv(&self, x: &[f64], alpha: &[usize]) -> Result<f64> {
        if x.len() != self.levels.len() || alpha.len() != x.len() {
            return Err(Error::SpaceMismatch("point dimension".into()));
        }
        let spaces = self.spaces()?;
        let locals = spaces
            .iter()
            .zip(x.iter().zip(alpha))
            .map(|(s, (xi, a))| s.local_basis(*xi, *a))
            .collect::<Result<Vec<_>>>()?;
        let d = x.len();
        let shape = vec![self.degree + 1; d];
        let mut k = vec![0usize; d];
        let mut idx = vec![0usize; d];
        let mut sum = 0.0;
        loop {
            let mut w = 1.0;
            for a in 0..d {
                w *= locals[a].values[alpha[a]][k[a]];
                idx[a] = locals[a].first + k[a];
            }
            sum += w * self.coeffs.get(&idx);
            if !increment(&mut k, &shape) {
                break;
            }
        }
        Ok(sum)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.eval_deriv(x, &vec![0; x.len()])
    }
}

/// A spline-valued function on the unit cube that can be sampled on grids.
pub trait SplineFunction {
    fn dim(&self) -> usize;

    fn degree(&self) -> usize;

    /// Finest level per direction over all components.
    fn finest_levels(&self) -> Vec<u32>;

    /// `D^alpha u` on the tensor grid with the given axis nodes.
    fn grid_values(&self, nodes: &[&[f64]], alpha: &[usize]) -> Result<Tensor>;

    fn eval(&self, x: &[f64]) -> Result<f64>;
}

impl SplineFunction for CoefficientTensor {
    fn dim(&self) -> usize {
        self.levels.len()
    }

    fn degree(&self) -> usize {
        self.degree
    }

    fn finest_levels(&self) -> Vec<u32> {
        self.levels.clone()
    }

    fn grid_values(&self, nodes: &[&[f64]], alpha: &[usize]) -> Result<Tensor> {
        let spaces = self.spaces()?;
        let ops = spaces
            .iter()
            .zip(nodes.iter().zip(alpha))
            .map(|(s, (x, a))| basis_operator(s, x, *a))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<Option<&RowOperator>> = ops.iter().map(Some).collect();
        Ok(self.coeffs.apply_all(&refs))
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        CoefficientTensor::eval(self, x)
    }
}

/// Full tensor projection `Pi_{p,h_l} f` (all directions).
pub fn project_full(
    levels: &[u32],
    p: usize,
    f: &dyn TargetFunction,
    r: usize,
) -> Result<CoefficientTensor> {
    if levels.len() != f.dim() {
        return Err(Error::SpaceMismatch(format!(
            "{} levels for a {}-variate function",
            levels.len(),
            f.dim()
        )));
    }
    let grid = TensorGrid::new(levels, projection_points(p))?;
    let d = levels.len();
    let spaces = levels
        .iter()
        .map(|&l| SplineSpace1D::new(p, l))
        .collect::<Result<Vec<_>>>()?;
    let projs = spaces
        .iter()
        .zip(grid.axes())
        .map(|(s, ax)| Projector1D::new(s, r, ax))
        .collect::<Result<Vec<_>>>()?;
    // Only alpha in {0, r}^d is needed; slots are indexed by bitmask.
    let mut slots: Vec<Option<Tensor>> = (0u32..(1 << d))
        .map(|mask| {
            if r == 0 && mask != 0 {
                return None;
            }
            let alpha: Vec<usize> = (0..d)
                .map(|i| if mask & (1 << (d - 1 - i)) != 0 { r } else { 0 })
                .collect();
            Some(grid.sample(f, &alpha))
        })
        .collect();
    for (axis, proj) in projs.iter().enumerate() {
        let bit = 1u32 << (d - 1 - axis);
        let vop = RowOperator::from_dense(&proj.value_map);
        let dop = proj.deriv_map.as_ref().map(RowOperator::from_dense);
        for mask in 0u32..(1 << d) {
            if mask & bit != 0 {
                continue;
            }
            let Some(base) = slots[mask as usize].take() else {
                continue;
            };
            let mut out = base.apply(axis, &vop);
            if let Some(dop) = &dop {
                let other = slots[(mask | bit) as usize]
                    .take()
                    .expect("derivative samples present");
                out.axpy(1.0, &other.apply(axis, dop));
            }
            slots[mask as usize] = Some(out);
        }
    }
    let coeffs = slots[0].take().expect("coefficients");
    CoefficientTensor::new(p, levels, coeffs)
}

/// Which derivatives enter a norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMode {
    /// `|alpha|_1 = r`
    Seminorm(usize),
    /// `|alpha|_1 <= r`
    Full(usize),
    /// `|alpha|_inf = q`
    MixedSeminorm(usize),
    /// `|alpha|_inf <= q`
    Mixed(usize),
}

impl NormMode {
    pub fn max_component(self) -> usize {
        match self {
            NormMode::Seminorm(r) | NormMode::Full(r) => r,
            NormMode::MixedSeminorm(q) | NormMode::Mixed(q) => q,
        }
    }

    /// Multi-indices summed by the norm, in row-major order.
    pub fn alphas(self, d: usize) -> Vec<Vec<usize>> {
        let m = self.max_component();
        all_alphas(d, m)
            .into_iter()
            .filter(|a| {
                let l1: usize = a.iter().sum();
                let linf = a.iter().copied().max().unwrap_or(0);
                match self {
                    NormMode::Seminorm(r) => l1 == r,
                    NormMode::Full(r) => l1 <= r,
                    NormMode::MixedSeminorm(q) => linf == q,
                    NormMode::Mixed(_) => true,
                }
            })
            .collect()
    }
}

/// `(sum_alpha ||D^alpha (f - u)||^2)^{1/2}` by tensor Gauss quadrature on
/// the finest level of `u` with `p + 3` points per cell.
pub fn error_norm(f: &dyn TargetFunction, u: &dyn SplineFunction, mode: NormMode) -> Result<f64> {
    if f.dim() != u.dim() {
        return Err(Error::SpaceMismatch("dimension of f and u differ".into()));
    }
    if mode.max_component() > u.degree() {
        return Err(Error::OrderTooHigh {
            order: mode.max_component(),
            degree: u.degree(),
        });
    }
    let grid = TensorGrid::new(&u.finest_levels(), error_points(u.degree()))?;
    let weights = grid.weights();
    let nodes = grid.nodes();
    let mut total = 0.0;
    for alpha in mode.alphas(f.dim()) {
        let mut diff = grid.sample(f, &alpha);
        diff.axpy(-1.0, &u.grid_values(&nodes, &alpha)?);
        total += diff.weighted_square_sum(&weights);
    }
    Ok(total.sqrt())
}

/// Norm of an analytic function, by quadrature with `points` per cell on
/// `2^level` cells per direction.
pub fn function_norm(f: &dyn TargetFunction, mode: NormMode, level: u32, points: usize) -> Result<f64> {
    let grid = TensorGrid::new(&vec![level; f.dim()], points)?;
    let weights = grid.weights();
    let total: f64 = mode
        .alphas(f.dim())
        .iter()
        .map(|a| grid.sample(f, a).weighted_square_sum(&weights))
        .sum();
    Ok(total.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{Constant, Separable};

    #[test]
    fn gram_examples() {
        let s = SplineSpace1D::new(0, 1).unwrap();
        let g = gram(&s, 0, &gauss_rule(1).unwrap()).unwrap();
        assert_eq!(g.matrix(), &DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5]));
        let s = SplineSpace1D::new(1, 1).unwrap();
        let g = gram(&s, 1, &gauss_rule(2).unwrap()).unwrap();
        let e = DMatrix::from_row_slice(3, 3, &[2., -2., 0., -2., 4., -2., 0., -2., 2.]);
        assert!((g.matrix() - e).amax() < 1e-13);
    }

    #[test]
    fn gram_rejects_bad_inputs() {
        let s = SplineSpace1D::new(3, 2).unwrap();
        assert!(matches!(
            gram(&s, 0, &gauss_rule(3).unwrap()),
            Err(Error::UnderResolvedQuadrature { .. })
        ));
        assert!(matches!(
            gram(&s, 4, &gauss_rule(4).unwrap()),
            Err(Error::OrderTooHigh { .. })
        ));
    }

    #[test]
    fn projection_of_constant() {
        for r in 0..=2 {
            let s = SplineSpace1D::new(2, 3).unwrap();
            let c = project_1d(&s, |_, k| if k == 0 { 1.0 } else { 0.0 }, r).unwrap();
            assert!(c.iter().all(|v| (v - 1.0).abs() < 1e-12), "r={r}: {c:?}");
        }
    }

    #[test]
    fn full_projection_of_constant() {
        let f = Constant { dim: 2, value: 1.0 };
        let u = project_full(&[2, 3], 2, &f, 0).unwrap();
        assert!(u.coeffs().data().iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert_eq!(u.coeffs().shape(), &[6, 10]);
    }

    #[test]
    fn mixed_norm_index_sets() {
        assert_eq!(NormMode::MixedSeminorm(1).alphas(2), vec![vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(NormMode::Seminorm(2).alphas(2).len(), 3);
        assert_eq!(NormMode::Full(1).alphas(3).len(), 4);
        assert_eq!(NormMode::Mixed(2).alphas(2).len(), 9);
    }

    #[test]
    fn error_norm_rejects_high_order() {
        let f = Separable::sin_product(2, 1.0);
        let u = CoefficientTensor::zeros(1, &[2, 2]);
        assert!(matches!(
            error_norm(&f, &u, NormMode::Seminorm(2)),
            Err(Error::OrderTooHigh { .. })
        ));
    }
}
