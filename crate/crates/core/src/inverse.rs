//! Largest Rayleigh quotients `|u|_a / ||u||_0` over spline spaces with
//! vanishing endpoint derivatives, via symmetric-definite pencils.

use nalgebra::DMatrix;

use crate::bspline::{refinement_between, vanishing_subspace, SplineSpace1D};
use crate::error::{Error, Result};
use crate::geometry::GeometryMap;
use crate::index::{CombinationSet, LevelRule};
use crate::linalg::{increment, kron_all, max_generalized_eigenvalue, orthonormal_range, RowOperator, Tensor};
use crate::project::{gram, projection_points};
use crate::quadrature::gauss_rule;

/// `sqrt(lambda_max)` of `(G_q, G_0)` on the `q`-vanishing subspace of
/// `S_{p,h_l}`: the best constant in `|u|_{H^q} <= C ||u||_{L2}`.
pub fn univariate_inverse_ratio(p: usize, level: u32, q: usize) -> Result<f64> {
    let space = SplineSpace1D::new(p, level)?;
    let z = vanishing_subspace(&space, q)?;
    let rule = gauss_rule(projection_points(p))?;
    let gq = gram(&space, q, &rule)?.into_matrix();
    let g0 = gram(&space, 0, &rule)?.into_matrix();
    let b = z.basis();
    let a = b.transpose() * gq * b;
    let m = b.transpose() * g0 * b;
    Ok(max_generalized_eigenvalue(&a, &m)?.max(0.0).sqrt())
}

/// Orthonormal coefficient basis (in the full level-`n` tensor space) of the
/// sparse space built from `q`-vanishing univariate factors.
pub fn vanishing_sparse_basis(rule: &LevelRule, q: usize) -> Result<DMatrix<f64>> {
    let top = SplineSpace1D::new(rule.p, rule.n)?;
    let set = CombinationSet::new(*rule);
    let mut factors: std::collections::HashMap<u32, DMatrix<f64>> = Default::default();
    let mut blocks = Vec::new();
    for (lv, _) in set.entries() {
        for &l in &lv {
            if let std::collections::hash_map::Entry::Vacant(e) = factors.entry(l) {
                let s = SplineSpace1D::new(rule.p, l)?;
                let z = vanishing_subspace(&s, q)?;
                e.insert(refinement_between(&s, &top)? * z.basis());
            }
        }
        let fs: Vec<&DMatrix<f64>> = lv.iter().map(|l| &factors[l]).collect();
        blocks.push(kron_all(&fs));
    }
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let rows = top.dim().pow(rule.d as u32);
    let mut all = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in &blocks {
        all.view_mut((0, at), (rows, b.ncols())).copy_from(b);
        at += b.ncols();
    }
    Ok(orthonormal_range(&all, 1e-10).0)
}

/// `U^T (op_1 x ... x op_d) U` with the Kronecker factors applied as mode products.
fn reduce_kron(u: &DMatrix<f64>, ops: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let shape: Vec<usize> = ops.iter().map(|o| o.ncols()).collect();
    let rows: Vec<RowOperator> = ops.iter().map(|o| RowOperator::from_dense(o)).collect();
    let mut au = DMatrix::zeros(u.nrows(), u.ncols());
    for j in 0..u.ncols() {
        let mut t = Tensor::from_vec(&shape, u.column(j).iter().copied().collect())
            .expect("column length matches");
        for (a, op) in rows.iter().enumerate() {
            t = t.apply(a, op);
        }
        au.set_column(j, &nalgebra::DVector::from_column_slice(t.data()));
    }
    u.transpose() * au
}

/// `sqrt(lambda_max)` of the pencil (full mixed `H^q` Gram, L2 Gram) over
/// the `q`-vanishing sparse space on the unit cube.
pub fn sparse_inverse_ratio(rule: &LevelRule, q: usize) -> Result<f64> {
    if q > rule.p {
        return Err(Error::OrderTooHigh {
            order: q,
            degree: rule.p,
        });
    }
    let u = vanishing_sparse_basis(rule, q)?;
    let top = SplineSpace1D::new(rule.p, rule.n)?;
    let gr = gauss_rule(projection_points(rule.p))?;
    let k0 = gram(&top, 0, &gr)?.into_matrix();
    // sum over |alpha|_inf <= q of the Kronecker products factorizes
    let mut s = k0.clone();
    for a in 1..=q {
        s += gram(&top, a, &gr)?.into_matrix();
    }
    let d = rule.d;
    let a = reduce_kron(&u, &vec![&s; d]);
    let m = reduce_kron(&u, &vec![&k0; d]);
    Ok(max_generalized_eigenvalue(&a, &m)?.max(0.0).sqrt())
}

/// Physical H1-seminorm and L2 Gram matrices of the full level-`n` tensor
/// space pulled back through `map`.
pub fn mapped_grams(p: usize, n: u32, map: &GeometryMap) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let d = map.dims();
    let space = SplineSpace1D::new(p, n)?;
    let dim1 = space.dim();
    let total = dim1.pow(d as u32);
    let rule = gauss_rule((p + 3).min(crate::quadrature::MAX_POINTS))?;
    let h = space.mesh_size();
    let mut stiff = DMatrix::zeros(total, total);
    let mut mass = DMatrix::zeros(total, total);
    let cells = vec![space.cells(); d];
    let qshape = vec![rule.points(); d];
    let lshape = vec![p + 1; d];
    let nloc = (p + 1).pow(d as u32);
    let mut cell = vec![0; d];
    loop {
        let mut qi = vec![0; d];
        loop {
            let mut xi = vec![0.0; d];
            let mut w = 1.0;
            for a in 0..d {
                xi[a] = (cell[a] as f64 + rule.nodes()[qi[a]]) * h;
                w *= rule.weights()[qi[a]] * h;
            }
            let locals: Vec<_> = (0..d)
                .map(|a| space.local_basis_in_cell(cell[a], xi[a], 1))
                .collect();
            let jac = map.jacobian(&xi)?;
            let det = jac.determinant();
            let jinv_t = jac
                .transpose()
                .try_inverse()
                .ok_or_else(|| Error::Singular(format!("Jacobian at {xi:?}")))?;
            let mut glob = Vec::with_capacity(nloc);
            let mut vals = Vec::with_capacity(nloc);
            let mut grads = Vec::with_capacity(nloc);
            let mut k = vec![0; d];
            loop {
                let mut g = 0usize;
                for a in 0..d {
                    g = g * dim1 + locals[a].first + k[a];
                }
                glob.push(g);
                vals.push((0..d).map(|a| locals[a].values[0][k[a]]).product::<f64>());
                let ref_grad = nalgebra::DVector::from_iterator(
                    d,
                    (0..d).map(|dir| {
                        (0..d)
                            .map(|a| locals[a].values[usize::from(a == dir)][k[a]])
                            .product::<f64>()
                    }),
                );
                grads.push(&jinv_t * ref_grad);
                if !increment(&mut k, &lshape) {
                    break;
                }
            }
            let wd = w * det.abs();
            for i in 0..nloc {
                for j in 0..nloc {
                    mass[(glob[i], glob[j])] += wd * vals[i] * vals[j];
                    stiff[(glob[i], glob[j])] += wd * grads[i].dot(&grads[j]);
                }
            }
            if !increment(&mut qi, &qshape) {
                break;
            }
        }
        if !increment(&mut cell, &cells) {
            break;
        }
    }
    Ok((stiff, mass))
}

/// `sqrt(lambda_max)` of (physical H1 seminorm Gram, physical L2 Gram) over
/// the 1-vanishing sparse space pushed forward by `map`.
pub fn mapped_inverse_ratio(rule: &LevelRule, map: &GeometryMap) -> Result<f64> {
    if map.dims() != rule.d {
        return Err(Error::SpaceMismatch("map and rule dimensions differ".into()));
    }
    let u = vanishing_sparse_basis(rule, 1)?;
    let (stiff, mass) = mapped_grams(rule.p, rule.n, map)?;
    let a = u.transpose() * stiff * &u;
    let m = u.transpose() * mass * &u;
    Ok(max_generalized_eigenvalue(&a, &m)?.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_hats_ratio() {
        // p = 1 has no constraints; the largest quotient of |u'| / ||u|| on
        // uniform hats is bounded by sqrt(12)/h.
        let r = univariate_inverse_ratio(1, 3, 1).unwrap();
        assert!(r > 0.0 && r <= 12f64.sqrt() * 8.0 + 1e-9, "{r}");
    }

    #[test]
    fn sparse_basis_dimension_matches_unconstrained_count() {
        // q = p leaves no constraints, so the space is the whole sparse space.
        let rule = LevelRule::new(2, 3, 1).unwrap();
        assert_eq!(vanishing_sparse_basis(&rule, 1).unwrap().ncols(), 49);
    }

    #[test]
    fn identity_map_grams_match_tensor_grams() {
        let g = GeometryMap::identity(2, 1);
        let (stiff, mass) = mapped_grams(2, 2, &g).unwrap();
        let s = SplineSpace1D::new(2, 2).unwrap();
        let r = gauss_rule(3).unwrap();
        let k0 = gram(&s, 0, &r).unwrap().into_matrix();
        let k1 = gram(&s, 1, &r).unwrap().into_matrix();
        let expected = k1.kronecker(&k0) + k0.kronecker(&k1);
        assert!((stiff - expected).amax() < 1e-12);
        assert!((mass - k0.kronecker(&k0)).amax() < 1e-13);
    }
}
