//! Univariate maximally smooth B-spline spaces on dyadic meshes.
//!
//! A space of degree `p` and level `l` lives on the mesh `{j 2^-l}` of the
//! unit interval with an open (clamped) knot vector: `0` and `1` repeated
//! `p + 1` times and every interior node once, giving `C^{p-1}` continuity
//! and dimension `2^l + p`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Largest supported level; keeps `2^level` well inside `u64` and `f64` mantissas.
pub const MAX_LEVEL: u32 = 30;

/// Clamped dyadic knot vector. Knots are stored as integer numerators over
/// the common denominator `2^level`, so they are exact.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KnotVector {
    degree: usize,
    level: u32,
    numerators: Vec<u64>,
}

impl KnotVector {
    fn new(degree: usize, level: u32) -> Self {
        let cells = 1u64 << level;
        let mut numerators = Vec::with_capacity(cells as usize - 1 + 2 * (degree + 1));
        numerators.extend(std::iter::repeat(0).take(degree + 1));
        numerators.extend(1..cells);
        numerators.extend(std::iter::repeat(cells).take(degree + 1));
        Self {
            degree,
            level,
            numerators,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Denominator shared by all knots, `2^level`.
    pub fn denominator(&self) -> u64 {
        1u64 << self.level
    }

    pub fn numerators(&self) -> &[u64] {
        &self.numerators
    }

    pub fn len(&self) -> usize {
        self.numerators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.numerators.is_empty()
    }

    pub fn knot(&self, i: usize) -> f64 {
        self.numerators[i] as f64 / self.denominator() as f64
    }

    pub fn to_f64(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.knot(i)).collect()
    }
}

/// Basis values (and derivatives) of the `p + 1` functions that are nonzero
/// on the cell containing a point.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalBasis {
    /// Global index of the first nonzero function.
    pub first: usize,
    /// `values[m][k]` is the `m`-th derivative of function `first + k`.
    pub values: Vec<Vec<f64>>,
}

/// `S_{p,h_l}(0,1)`: splines of degree `p` and maximal smoothness on the
/// dyadic mesh of level `l`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SplineSpace1D {
    knots: KnotVector,
}

impl SplineSpace1D {
    /// Space of degree `degree` on the dyadic mesh with `2^level` cells.
    pub fn new(degree: usize, level: u32) -> Result<Self> {
        if level == 0 {
            return Err(Error::InvalidLevel(level));
        }
        Self::with_level(degree, level)
    }

    /// Single-element (Bernstein) space used for coarse geometry descriptions.
    pub fn coarsest(degree: usize) -> Self {
        Self {
            knots: KnotVector::new(degree, 0),
        }
    }

    pub(crate) fn with_level(degree: usize, level: u32) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(Error::InvalidArgument(format!(
                "level {level} exceeds the supported maximum {MAX_LEVEL}"
            )));
        }
        Ok(Self {
            knots: KnotVector::new(degree, level),
        })
    }

    pub fn degree(&self) -> usize {
        self.knots.degree
    }

    pub fn level(&self) -> u32 {
        self.knots.level
    }

    pub fn knots(&self) -> &KnotVector {
        &self.knots
    }

    pub fn cells(&self) -> usize {
        1usize << self.knots.level
    }

    /// Mesh size `h = 2^-level`.
    pub fn mesh_size(&self) -> f64 {
        1.0 / self.cells() as f64
    }

    pub fn dim(&self) -> usize {
        self.cells() + self.degree()
    }

    /// Index of the cell containing `x`; `x = 1` belongs to the last cell.
    pub fn cell_of(&self, x: f64) -> usize {
        let c = (x * self.cells() as f64).floor();
        (c.max(0.0) as usize).min(self.cells() - 1)
    }

    /// Greville abscissae (knot averages). For `p = 0`, the cell midpoints.
    pub fn greville(&self) -> Vec<f64> {
        let p = self.degree();
        if p == 0 {
            let h = self.mesh_size();
            return (0..self.cells()).map(|j| (j as f64 + 0.5) * h).collect();
        }
        let t = self.knots.to_f64();
        (0..self.dim())
            .map(|i| t[i + 1..=i + p].iter().sum::<f64>() / p as f64)
            .collect()
    }

    /// Nonzero basis functions and their derivatives up to `max_order` on the
    /// cell containing `x`. Orders above `p` are returned as zeros.
    pub fn local_basis(&self, x: f64, max_order: usize) -> Result<LocalBasis> {
        check_unit(x)?;
        Ok(self.local_basis_in_cell(self.cell_of(x), x, max_order))
    }

    /// Same as [`local_basis`](Self::local_basis) with the cell fixed by the
    /// caller; used at cell boundaries to pick one-sided limits.
    pub fn local_basis_in_cell(&self, cell: usize, x: f64, max_order: usize) -> LocalBasis {
        let p = self.degree();
        let span = cell + p;
        let t = &self.knots;
        let ders = basis_derivatives(span, x, p, max_order.min(p), |i| t.knot(i));
        let mut values = ders;
        values.resize(max_order + 1, vec![0.0; p + 1]);
        LocalBasis {
            first: cell,
            values,
        }
    }

    /// Dense vector of `order`-th derivatives of every basis function at `x`.
    pub fn eval_basis(&self, x: f64, order: usize) -> Result<Vec<f64>> {
        if order > self.degree() {
            return Err(Error::OrderTooHigh {
                order,
                degree: self.degree(),
            });
        }
        let local = self.local_basis(x, order)?;
        let mut out = vec![0.0; self.dim()];
        for (k, v) in local.values[order].iter().enumerate() {
            out[local.first + k] = *v;
        }
        Ok(out)
    }

    /// Evaluates the spline with coefficients `coeffs` (its `order`-th derivative).
    pub fn eval(&self, coeffs: &[f64], x: f64, order: usize) -> Result<f64> {
        if coeffs.len() != self.dim() {
            return Err(Error::SpaceMismatch(format!(
                "{} coefficients for a space of dimension {}",
                coeffs.len(),
                self.dim()
            )));
        }
        let local = self.local_basis(x, order)?;
        Ok(local.values[order]
            .iter()
            .enumerate()
            .map(|(k, v)| v * coeffs[local.first + k])
            .sum())
    }

    /// Dense collocation matrix `B[i][j] = D^order b_j(points[i])`.
    pub fn collocation(&self, points: &[f64], order: usize) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(points.len(), self.dim());
        for (i, &x) in points.iter().enumerate() {
            let local = self.local_basis(x, order)?;
            for (k, v) in local.values[order].iter().enumerate() {
                out[(i, local.first + k)] = *v;
            }
        }
        Ok(out)
    }
}

pub(crate) fn check_unit(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::OutOfDomain(x))
    }
}

/// Triangular Cox-de Boor recursion with derivatives for the `p + 1` basis
/// functions supported on knot span `span`.
fn basis_derivatives(
    span: usize,
    x: f64,
    p: usize,
    n_ders: usize,
    knot: impl Fn(usize) -> f64,
) -> Vec<Vec<f64>> {
    let mut ndu = vec![vec![0.0; p + 1]; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = x - knot(span + 1 - j);
        right[j] = knot(span + j) - x;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }

    let mut ders = vec![vec![0.0; p + 1]; n_ders + 1];
    for j in 0..=p {
        ders[0][j] = ndu[j][p];
    }
    let mut a = vec![vec![0.0; p + 1]; 2];
    for r in 0..=p {
        let (mut s1, mut s2) = (0usize, 1usize);
        a[0][0] = 1.0;
        for k in 1..=n_ders {
            let mut d = 0.0;
            let rk = r as isize - k as isize;
            let pk = p - k;
            if r >= k {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                d = a[s2][0] * ndu[rk as usize][pk];
            }
            let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2 = if r as isize - 1 <= pk as isize { k - 1 } else { p - r };
            for j in j1..=j2 {
                let idx = (rk + j as isize) as usize;
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                d += a[s2][j] * ndu[idx][pk];
            }
            if r <= pk {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut factor = p as f64;
    for k in 1..=n_ders {
        for v in ders[k].iter_mut() {
            *v *= factor;
        }
        factor *= (p - k) as f64;
    }
    ders
}

/// Knot-insertion matrix `R` with `fine.dim()` rows and `coarse.dim()`
/// columns: a coarse spline with coefficients `c` equals the fine spline
/// with coefficients `R c`. Levels must be consecutive.
pub fn refinement_operator(coarse: &SplineSpace1D, fine: &SplineSpace1D) -> Result<DMatrix<f64>> {
    if coarse.degree() != fine.degree() {
        return Err(Error::SpaceMismatch(format!(
            "degree {} vs {}",
            coarse.degree(),
            fine.degree()
        )));
    }
    if fine.level() != coarse.level() + 1 {
        return Err(Error::SpaceMismatch(format!(
            "levels {} -> {} are not consecutive",
            coarse.level(),
            fine.level()
        )));
    }
    let p = coarse.degree();
    // Work in units of the fine denominator so all knots stay integral.
    let mut knots: Vec<u64> = coarse.knots().numerators().iter().map(|k| 2 * k).collect();
    let mut op = DMatrix::<f64>::identity(coarse.dim(), coarse.dim());
    for odd in (1..(1u64 << fine.level())).step_by(2) {
        let span = knots.iter().rposition(|&k| k <= odd).expect("0 is a knot");
        let rows = op.nrows();
        let mut next = DMatrix::<f64>::zeros(rows + 1, op.ncols());
        for i in 0..=rows {
            if i + p <= span {
                next.set_row(i, &op.row(i));
            } else if i > span {
                next.set_row(i, &op.row(i - 1));
            } else {
                let alpha = (odd - knots[i]) as f64 / (knots[i + p] - knots[i]) as f64;
                let row = op.row(i) * alpha + op.row(i - 1) * (1.0 - alpha);
                next.set_row(i, &row);
            }
        }
        knots.insert(span + 1, odd);
        op = next;
    }
    debug_assert_eq!(op.nrows(), fine.dim());
    Ok(op)
}

/// Refinement across any number of dyadic levels (`coarse.level() <= fine.level()`).
pub fn refinement_between(coarse: &SplineSpace1D, fine: &SplineSpace1D) -> Result<DMatrix<f64>> {
    if coarse.degree() != fine.degree() || coarse.level() > fine.level() {
        return Err(Error::SpaceMismatch(format!(
            "cannot refine (p={}, l={}) into (p={}, l={})",
            coarse.degree(),
            coarse.level(),
            fine.degree(),
            fine.level()
        )));
    }
    let mut op = DMatrix::<f64>::identity(coarse.dim(), coarse.dim());
    let mut current = coarse.clone();
    while current.level() < fine.level() {
        let next = SplineSpace1D::with_level(current.degree(), current.level() + 1)?;
        op = refinement_operator(&current, &next)? * op;
        current = next;
    }
    Ok(op)
}

/// Subspace of splines whose derivatives of order `2l + q < p` vanish at
/// both endpoints, stored as a basis of parent-coefficient vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedSubspace1D {
    parent: SplineSpace1D,
    order: usize,
    basis: DMatrix<f64>,
}

impl ConstrainedSubspace1D {
    pub fn parent(&self) -> &SplineSpace1D {
        &self.parent
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Columns are parent coefficient vectors spanning the subspace.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Derivative orders constrained at each endpoint.
    pub fn constrained_orders(&self) -> Vec<usize> {
        constrained_orders(self.parent.degree(), self.order)
    }
}

/// Orders `2l + q` with `2l + q < p`.
pub fn constrained_orders(degree: usize, q: usize) -> Vec<usize> {
    (q..degree).step_by(2).collect()
}

/// Rows of endpoint derivative evaluations for the constraints of the
/// `q`-vanishing subspace: for each constrained order, one row at 0 and one at 1.
pub fn endpoint_constraints(space: &SplineSpace1D, q: usize) -> DMatrix<f64> {
    let orders = constrained_orders(space.degree(), q);
    let top = orders.last().copied().unwrap_or(0);
    let at0 = space.local_basis_in_cell(0, 0.0, top);
    let at1 = space.local_basis_in_cell(space.cells() - 1, 1.0, top);
    let mut c = DMatrix::zeros(2 * orders.len(), space.dim());
    for (r, &o) in orders.iter().enumerate() {
        for (k, v) in at0.values[o].iter().enumerate() {
            c[(2 * r, at0.first + k)] = *v;
        }
        for (k, v) in at1.values[o].iter().enumerate() {
            c[(2 * r + 1, at1.first + k)] = *v;
        }
    }
    c
}

/// Builds the `q`-vanishing-derivative subspace of `space`.
///
/// The nullspace of the endpoint constraint matrix is computed by
/// Gauss-Jordan elimination that pivots on the outermost coefficients first
/// (index 0, dim-1, 1, dim-2, ...). Endpoint derivatives only involve the
/// `p + 1` boundary coefficients, so each basis vector differs from a unit
/// vector only near the ends.
pub fn vanishing_subspace(space: &SplineSpace1D, q: usize) -> Result<ConstrainedSubspace1D> {
    if q > space.degree() {
        return Err(Error::OrderTooHigh {
            order: q,
            degree: space.degree(),
        });
    }
    let mut c = endpoint_constraints(space, q);
    let n = space.dim();
    let mut order = Vec::with_capacity(n);
    let (mut lo, mut hi) = (0usize, n);
    while lo < hi {
        order.push(lo);
        lo += 1;
        if lo < hi {
            hi -= 1;
            order.push(hi);
        }
    }

    let rows = c.nrows();
    let tol = 1e-12 * c.amax().max(1.0);
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut used = vec![false; rows];
    for &col in &order {
        let Some(r) = (0..rows)
            .filter(|&r| !used[r])
            .max_by(|&a, &b| c[(a, col)].abs().total_cmp(&c[(b, col)].abs()))
        else {
            break;
        };
        if c[(r, col)].abs() <= tol {
            continue;
        }
        used[r] = true;
        let piv = c[(r, col)];
        for j in 0..n {
            c[(r, j)] /= piv;
        }
        for other in 0..rows {
            if other != r && c[(other, col)] != 0.0 {
                let f = c[(other, col)];
                for j in 0..n {
                    let v = c[(r, j)];
                    c[(other, j)] -= f * v;
                }
            }
        }
        pivots.push((r, col));
    }

    let pivot_cols: Vec<usize> = pivots.iter().map(|&(_, col)| col).collect();
    let free: Vec<usize> = (0..n).filter(|j| !pivot_cols.contains(j)).collect();
    let mut basis = DMatrix::zeros(n, free.len());
    for (k, &f) in free.iter().enumerate() {
        basis[(f, k)] = 1.0;
        for &(r, col) in &pivots {
            basis[(col, k)] = -c[(r, f)];
        }
    }
    Ok(ConstrainedSubspace1D {
        parent: space.clone(),
        order: q,
        basis,
    })
}
