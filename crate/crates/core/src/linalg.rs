//! Small dense tensor type with mode products, plus the handful of dense
//! factorizations the spaces need (rank, orthonormal range, symmetric pencils).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Linear map stored row by row as `(first column, weights)`. Banded
/// collocation matrices and dense matrices share this representation.
#[derive(Debug, Clone, PartialEq)]
pub struct RowOperator {
    ncols: usize,
    rows: Vec<(usize, Vec<f64>)>,
}

impl RowOperator {
    pub fn new(ncols: usize, rows: Vec<(usize, Vec<f64>)>) -> Self {
        debug_assert!(rows.iter().all(|(s, w)| s + w.len() <= ncols));
        Self { ncols, rows }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let rows = (0..m.nrows())
            .map(|i| (0, m.row(i).iter().copied().collect()))
            .collect();
        Self {
            ncols: m.ncols(),
            rows,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            ncols: n,
            rows: (0..n).map(|i| (i, vec![1.0])).collect(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows(), self.ncols);
        for (i, (s, w)) in self.rows.iter().enumerate() {
            for (k, v) in w.iter().enumerate() {
                m[(i, s + k)] = *v;
            }
        }
        m
    }
}

/// Dense `d`-way array, row-major (last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        if shape.iter().product::<usize>() != data.len() {
            return Err(Error::InvalidArgument(format!(
                "shape {shape:?} does not hold {} entries",
                data.len()
            )));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    /// Fills the tensor by calling `f` on every multi-index.
    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = Self::zeros(shape);
        let mut idx = vec![0usize; shape.len()];
        for v in t.data.iter_mut() {
            *v = f(&idx);
            increment(&mut idx, shape);
        }
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.shape)
            .fold(0, |acc, (i, n)| acc * n + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    /// Mode product: applies `op` along `axis`, replacing that extent by `op.nrows()`.
    pub fn apply(&self, axis: usize, op: &RowOperator) -> Tensor {
        assert_eq!(self.shape[axis], op.ncols(), "operator/axis size mismatch");
        let outer: usize = self.shape[..axis].iter().product();
        let inner: usize = self.shape[axis + 1..].iter().product();
        let n = self.shape[axis];
        let m = op.nrows();
        let mut shape = self.shape.clone();
        shape[axis] = m;
        let mut out = vec![0.0; outer * m * inner];
        for o in 0..outer {
            let src = &self.data[o * n * inner..(o + 1) * n * inner];
            let dst = &mut out[o * m * inner..(o + 1) * m * inner];
            for (r, (start, w)) in op.rows.iter().enumerate() {
                let row = &mut dst[r * inner..(r + 1) * inner];
                for (k, wk) in w.iter().enumerate() {
                    if *wk == 0.0 {
                        continue;
                    }
                    let s = &src[(start + k) * inner..(start + k + 1) * inner];
                    for (a, b) in row.iter_mut().zip(s) {
                        *a += wk * b;
                    }
                }
            }
        }
        Tensor { shape, data: out }
    }

    /// Applies one operator per axis (`None` leaves the axis untouched).
    pub fn apply_all(&self, ops: &[Option<&RowOperator>]) -> Tensor {
        let mut t = self.clone();
        for (axis, op) in ops.iter().enumerate() {
            if let Some(op) = op {
                t = t.apply(axis, op);
            }
        }
        t
    }

    pub fn axpy(&mut self, alpha: f64, other: &Tensor) {
        assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `sum_i w_0[i_0] ... w_{d-1}[i_{d-1}] * self[i]^2`.
    pub fn weighted_square_sum(&self, weights: &[Vec<f64>]) -> f64 {
        let mut t = Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| v * v).collect(),
        };
        for (axis, w) in weights.iter().enumerate() {
            let op = RowOperator::new(w.len(), vec![(0, w.clone())]);
            t = t.apply(axis, &op);
        }
        t.data[0]
    }
}

/// Advances a row-major multi-index; returns false after the last one.
pub fn increment(idx: &mut [usize], shape: &[usize]) -> bool {
    for a in (0..idx.len()).rev() {
        idx[a] += 1;
        if idx[a] < shape[a] {
            return true;
        }
        idx[a] = 0;
    }
    false
}

/// Kronecker product of a list of matrices, consistent with row-major
/// tensor indexing (the last factor varies fastest).
pub fn kron_all(factors: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let mut acc = DMatrix::from_element(1, 1, 1.0);
    for f in factors {
        acc = acc.kronecker(f);
    }
    acc
}

/// Orthonormal basis of the column range, with rank decided by singular
/// values above `rel_tol` times the largest one.
pub fn orthonormal_range(m: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, Vec<f64>) {
    if m.ncols() == 0 || m.nrows() == 0 {
        return (DMatrix::zeros(m.nrows(), 0), Vec::new());
    }
    // SVD of the wide case goes through the transpose.
    let (u, s) = if m.nrows() >= m.ncols() {
        let svd = m.clone().svd(true, false);
        (svd.u.expect("requested U"), svd.singular_values)
    } else {
        let svd = m.transpose().svd(false, true);
        (svd.v_t.expect("requested V^T").transpose(), svd.singular_values)
    };
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let smax = s[order[0]];
    let keep: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| s[i] > rel_tol * smax && s[i] > 0.0)
        .collect();
    let mut basis = DMatrix::zeros(m.nrows(), keep.len());
    for (k, &i) in keep.iter().enumerate() {
        basis.set_column(k, &u.column(i));
    }
    let sorted: Vec<f64> = order.iter().map(|&i| s[i]).collect();
    (basis, sorted)
}

/// Numerical rank with singular-value threshold `rel_tol * s_max`.
pub fn rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    orthonormal_range(m, rel_tol).0.ncols()
}

/// Largest relative residual `|x - Q Q^T x| / |x|` over the columns `x`,
/// where `q` has orthonormal columns.
pub fn max_projection_residual(q: &DMatrix<f64>, columns: &DMatrix<f64>) -> f64 {
    let coeffs = q.transpose() * columns;
    let fit = q * coeffs;
    (0..columns.ncols())
        .map(|j| {
            let x = columns.column(j);
            let n = x.norm();
            if n == 0.0 {
                0.0
            } else {
                (x - fit.column(j)).norm() / n
            }
        })
        .fold(0.0, f64::max)
}

/// Eigenvalues of the symmetric-definite pencil `(a, m)` in increasing order.
pub fn generalized_eigenvalues(a: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    // C = L^{-1} A L^{-T}
    let y = l
        .solve_lower_triangular(a)
        .ok_or_else(|| Error::Singular("triangular solve".into()))?;
    let c = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| Error::Singular("triangular solve".into()))?;
    let c = (&c + c.transpose()) * 0.5;
    let mut ev: Vec<f64> = c.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

pub fn max_generalized_eigenvalue(a: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<f64> {
    generalized_eigenvalues(a, m)?
        .last()
        .copied()
        .ok_or_else(|| Error::InvalidArgument("empty pencil".into()))
}

pub fn dvec(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_product_matches_dense_kron() {
        let a = DMatrix::from_row_slice(2, 3, &[1., 2., 3., 4., 5., 6.]);
        let b = DMatrix::from_row_slice(3, 2, &[1., -1., 0., 2., 3., 1.]);
        let x = Tensor::from_fn(&[3, 2], |i| (i[0] * 2 + i[1]) as f64 + 0.5);
        let y = x
            .apply(0, &RowOperator::from_dense(&a))
            .apply(1, &RowOperator::from_dense(&b));
        let k = kron_all(&[&a, &b]);
        let expected = &k * dvec(x.data());
        for (u, v) in y.data().iter().zip(expected.iter()) {
            assert!((u - v).abs() < 1e-13);
        }
        assert_eq!(y.shape(), &[2, 3]);
    }

    #[test]
    fn banded_and_dense_agree() {
        let op = RowOperator::new(4, vec![(0, vec![1.0, 2.0]), (2, vec![3.0, 4.0])]);
        let dense = RowOperator::from_dense(&op.to_dense());
        let x = Tensor::from_fn(&[2, 4, 3], |i| (i[0] + 3 * i[1] + 7 * i[2]) as f64);
        assert_eq!(x.apply(1, &op), x.apply(1, &dense));
    }

    #[test]
    fn pencil_eigenvalues() {
        let a = DMatrix::from_row_slice(2, 2, &[2., 0., 0., 8.]);
        let m = DMatrix::from_row_slice(2, 2, &[1., 0., 0., 2.]);
        let ev = generalized_eigenvalues(&a, &m).unwrap();
        assert!((ev[0] - 2.0).abs() < 1e-14 && (ev[1] - 4.0).abs() < 1e-14);
    }

    #[test]
    fn rank_and_residuals() {
        let m = DMatrix::from_row_slice(3, 3, &[1., 2., 3., 2., 4., 6., 0., 1., 1.]);
        assert_eq!(rank(&m, 1e-10), 2);
        let (q, _) = orthonormal_range(&m, 1e-10);
        assert!(max_projection_residual(&q, &m) < 1e-14);
        let outside = DMatrix::from_row_slice(3, 1, &[2., -1., 0.]);
        assert!(max_projection_residual(&q, &outside) > 0.1);
    }
}
