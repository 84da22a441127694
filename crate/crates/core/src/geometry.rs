//! Spline geometry maps `F: [0,1]^d -> R^d`, their inversion, and error norms
//! on the mapped domain.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::bspline::{refinement_between, SplineSpace1D};
use crate::error::{Error, Result};
use crate::functions::TargetFunction;
use crate::linalg::increment;
use crate::project::{error_points, NormMode, SplineFunction, TensorGrid};

/// Samples per direction of the determinant check.
pub const CHECK_SAMPLES: usize = 33;
/// Samples per direction of the Newton starting-point cache.
pub const LATTICE_SAMPLES: usize = 17;
pub const NEWTON_MAX_ITER: usize = 50;
pub const NEWTON_TOL: f64 = 1e-12;

/// Tensor-product spline map given by control points.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryMap {
    spaces: Vec<SplineSpace1D>,
    /// Row-major over the control multi-index, one `d`-vector each.
    control: Vec<Vec<f64>>,
    lattice: Vec<(Vec<f64>, Vec<f64>)>,
    min_det: f64,
}

impl GeometryMap {
    /// Map of degree `degree` on the single-element mesh, with `(degree+1)^d`
    /// control points. Fails unless `det J > 0` on a `33^d` sample grid.
    pub fn new(degree: usize, dims: usize, control: Vec<Vec<f64>>) -> Result<Self> {
        if dims == 0 {
            return Err(Error::InvalidGeometry("dimension must be positive".into()));
        }
        let spaces = vec![SplineSpace1D::coarsest(degree); dims];
        Self::from_spaces(spaces, control)
    }

    fn from_spaces(spaces: Vec<SplineSpace1D>, control: Vec<Vec<f64>>) -> Result<Self> {
        let d = spaces.len();
        let expected: usize = spaces.iter().map(SplineSpace1D::dim).product();
        if control.len() != expected {
            return Err(Error::InvalidGeometry(format!(
                "expected {expected} control points, got {}",
                control.len()
            )));
        }
        if let Some(bad) = control.iter().position(|c| c.len() != d) {
            return Err(Error::InvalidGeometry(format!(
                "control point {bad} has {} coordinates, expected {d}",
                control[bad].len()
            )));
        }
        if control.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGeometry("non-finite control point".into()));
        }
        let mut g = Self {
            spaces,
            control,
            lattice: Vec::new(),
            min_det: f64::NAN,
        };
        g.min_det = g.min_det_on_grid(CHECK_SAMPLES)?;
        if g.min_det <= 0.0 {
            return Err(Error::InvalidGeometry(format!(
                "Jacobian determinant {:.3e} is not positive on the sample grid",
                g.min_det
            )));
        }
        g.lattice = sample_points(d, LATTICE_SAMPLES)
            .into_iter()
            .map(|xi| {
                let x = g.eval(&xi).expect("lattice point inside the unit cube");
                (xi, x)
            })
            .collect();
        Ok(g)
    }

    /// Control points at the Greville abscissae: `F(xi) = xi`.
    pub fn identity(dims: usize, degree: usize) -> Self {
        let gr = SplineSpace1D::coarsest(degree.max(1)).greville();
        let shape = vec![gr.len(); dims];
        let mut control = Vec::new();
        let mut idx = vec![0; dims];
        loop {
            control.push(idx.iter().map(|&i| gr[i]).collect());
            if !increment(&mut idx, &shape) {
                break;
            }
        }
        Self::new(degree.max(1), dims, control).expect("identity map is valid")
    }

    /// `F(xi) = A xi + b`, represented with the identity's control net.
    pub fn affine(a: &DMatrix<f64>, b: &[f64], degree: usize) -> Result<Self> {
        let id = Self::identity(b.len(), degree);
        let control = id
            .control
            .iter()
            .map(|p| {
                let y = a * DVector::from_column_slice(p);
                y.iter().zip(b).map(|(y, b)| y + b).collect()
            })
            .collect();
        Self::new(id.degree(), b.len(), control)
    }

    /// The shear `[[1, 0.4], [0, 1]]`.
    pub fn shear() -> Self {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.0, 1.0]);
        Self::affine(&a, &[0.0, 0.0], 1).expect("shear is valid")
    }

    /// Biquadratic square whose centre control point is moved by
    /// `(0.15, 0.15)`.
    pub fn distorted_square() -> Self {
        let mut g = Self::identity(2, 2);
        let mut control = std::mem::take(&mut g.control);
        control[4][0] += 0.15;
        control[4][1] += 0.15;
        Self::new(2, 2, control).expect("distorted square is valid")
    }

    /// Built-in maps by name: `identity`, `shear`, `distorted-square`.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "identity" => Some(Self::identity(2, 1)),
            "shear" => Some(Self::shear()),
            "distorted-square" => Some(Self::distorted_square()),
            _ => None,
        }
    }

    pub const BUILTIN_NAMES: [&'static str; 3] = ["identity", "shear", "distorted-square"];

    pub fn dims(&self) -> usize {
        self.spaces.len()
    }

    pub fn degree(&self) -> usize {
        self.spaces[0].degree()
    }

    pub fn levels(&self) -> Vec<u32> {
        self.spaces.iter().map(SplineSpace1D::level).collect()
    }

    pub fn control_points(&self) -> &[Vec<f64>] {
        &self.control
    }

    /// Smallest Jacobian determinant found by the construction check.
    pub fn min_det(&self) -> f64 {
        self.min_det
    }

    fn check_point(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.dims() {
            return Err(Error::SpaceMismatch(format!(
                "{}-point for a {}-dimensional map",
                xi.len(),
                self.dims()
            )));
        }
        Ok(())
    }

    /// `(F(xi), J(xi))` with `J[(c, k)] = dF_c / dxi_k`.
    pub fn eval_with_jacobian(&self, xi: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        self.check_point(xi)?;
        let d = self.dims();
        let locals = self
            .spaces
            .iter()
            .zip(xi)
            .map(|(s, x)| s.local_basis(*x, 1))
            .collect::<Result<Vec<_>>>()?;
        let shape: Vec<usize> = self.spaces.iter().map(SplineSpace1D::dim).collect();
        let local_shape = vec![self.degree() + 1; d];
        let mut x = vec![0.0; d];
        let mut jac = DMatrix::zeros(d, d);
        let mut k = vec![0; d];
        let mut idx = vec![0; d];
        loop {
            for a in 0..d {
                idx[a] = locals[a].first + k[a];
            }
            let off = idx.iter().zip(&shape).fold(0, |acc, (i, n)| acc * n + i);
            let p = &self.control[off];
            let val: f64 = (0..d).map(|a| locals[a].values[0][k[a]]).product();
            for c in 0..d {
                x[c] += val * p[c];
            }
            for dir in 0..d {
                let w: f64 = (0..d)
                    .map(|a| locals[a].values[usize::from(a == dir)][k[a]])
                    .product();
                for c in 0..d {
                    jac[(c, dir)] += w * p[c];
                }
            }
            if !increment(&mut k, &local_shape) {
                break;
            }
        }
        Ok((x, jac))
    }

    pub fn eval(&self, xi: &[f64]) -> Result<Vec<f64>> {
        Ok(self.eval_with_jacobian(xi)?.0)
    }

    pub fn jacobian(&self, xi: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.eval_with_jacobian(xi)?.1)
    }

    /// Minimum of `det J` over a uniform `samples^d` grid.
    pub fn min_det_on_grid(&self, samples: usize) -> Result<f64> {
        let mut m = f64::INFINITY;
        for xi in sample_points(self.dims(), samples) {
            m = m.min(self.jacobian(&xi)?.determinant());
        }
        Ok(m)
    }

    /// Same map represented on finer meshes (levels per direction) by knot
    /// insertion.
    pub fn refined(&self, levels: &[u32]) -> Result<Self> {
        if levels.len() != self.dims() {
            return Err(Error::SpaceMismatch("one level per direction required".into()));
        }
        let fine: Vec<SplineSpace1D> = levels
            .iter()
            .map(|&l| SplineSpace1D::with_level(self.degree(), l))
            .collect::<Result<_>>()?;
        let mats = self
            .spaces
            .iter()
            .zip(&fine)
            .map(|(c, f)| refinement_between(c, f))
            .collect::<Result<Vec<_>>>()?;
        let d = self.dims();
        let coarse_shape: Vec<usize> = self.spaces.iter().map(SplineSpace1D::dim).collect();
        let mut control = Vec::new();
        let mut tensors: Vec<crate::linalg::Tensor> = (0..d)
            .map(|c| {
                crate::linalg::Tensor::from_vec(
                    &coarse_shape,
                    self.control.iter().map(|p| p[c]).collect(),
                )
                .expect("shape matches")
            })
            .collect();
        for t in tensors.iter_mut() {
            for (a, m) in mats.iter().enumerate() {
                *t = t.apply(a, &crate::linalg::RowOperator::from_dense(m));
            }
        }
        for i in 0..tensors[0].len() {
            control.push(tensors.iter().map(|t| t.data()[i]).collect());
        }
        Self::from_spaces(fine, control)
    }

    /// Solves `F(xi) = x` by Newton's method from the nearest cached sample.
    pub fn inverse(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        let dist = |y: &[f64]| -> f64 {
            y.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
        };
        let (mut xi, _) = self
            .lattice
            .iter()
            .min_by(|a, b| dist(&a.1).total_cmp(&dist(&b.1)))
            .cloned()
            .expect("non-empty lattice");
        let mut best = f64::INFINITY;
        for _ in 0..NEWTON_MAX_ITER {
            let (fx, jac) = self.eval_with_jacobian(&xi)?;
            let res: Vec<f64> = fx.iter().zip(x).map(|(a, b)| a - b).collect();
            let norm = res.iter().map(|v| v * v).sum::<f64>().sqrt();
            best = best.min(norm);
            if norm < NEWTON_TOL {
                return Ok(xi);
            }
            let step = jac
                .lu()
                .solve(&DVector::from_vec(res))
                .ok_or_else(|| Error::Singular(format!("Jacobian at {xi:?}")))?;
            for (v, s) in xi.iter_mut().zip(step.iter()) {
                *v = (*v - s).clamp(0.0, 1.0);
            }
        }
        Err(Error::NoConvergence { residual: best })
    }

    /// Reads the plain-text geometry format (see [`GeometryMap::to_text`]).
    pub fn parse(text: &str) -> Result<Self> {
        let mut degree: Option<usize> = None;
        let mut dims: Option<usize> = None;
        let mut control: Vec<Vec<f64>> = Vec::new();
        let mut in_block = false;
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            let lineno = no + 1;
            if line.is_empty() {
                continue;
            }
            if in_block {
                if line == "end" {
                    in_block = false;
                    continue;
                }
                let coords = line
                    .split_whitespace()
                    .map(|t| {
                        t.parse::<f64>().map_err(|_| {
                            Error::Config(format!("line {lineno}: bad coordinate '{t}'"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                control.push(coords);
                continue;
            }
            if line == "control_points" {
                in_block = true;
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {lineno}: expected key = value")))?;
            let (key, value) = (key.trim(), value.trim());
            let parsed = value
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("line {lineno}: bad value for {key}")))?;
            match key {
                "degree" => degree = Some(parsed),
                "dims" => dims = Some(parsed),
                _ => return Err(Error::Config(format!("line {lineno}: unknown key '{key}'"))),
            }
        }
        let degree = degree.ok_or_else(|| Error::Config("missing key 'degree'".into()))?;
        let dims = dims.ok_or_else(|| Error::Config("missing key 'dims'".into()))?;
        Self::new(degree, dims, control)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Writes the coarse map in the text format read by [`GeometryMap::parse`].
    pub fn to_text(&self) -> Result<String> {
        if self.levels().iter().any(|&l| l != 0) {
            return Err(Error::InvalidGeometry(
                "only single-element maps can be written".into(),
            ));
        }
        let mut s = String::new();
        let _ = writeln!(s, "degree = {}", self.degree());
        let _ = writeln!(s, "dims = {}", self.dims());
        s.push_str("control_points\n");
        for p in &self.control {
            let row: Vec<String> = p.iter().map(|v| format!("{v:?}")).collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        s.push_str("end\n");
        Ok(s)
    }
}

/// Uniform `samples^d` points of `[0,1]^d`, row-major.
fn sample_points(d: usize, samples: usize) -> Vec<Vec<f64>> {
    let shape = vec![samples; d];
    let step = 1.0 / (samples - 1) as f64;
    let mut idx = vec![0; d];
    let mut out = Vec::new();
    loop {
        out.push(idx.iter().map(|&i| i as f64 * step).collect());
        if !increment(&mut idx, &shape) {
            break;
        }
    }
    out
}

/// `f o F` as a parameter-domain target. Derivatives are available up to
/// first order; higher orders evaluate to NaN.
pub struct Pullback<'a> {
    pub f: &'a dyn TargetFunction,
    pub map: &'a GeometryMap,
}

impl TargetFunction for Pullback<'_> {
    fn dim(&self) -> usize {
        self.f.dim()
    }

    fn deriv(&self, xi: &[f64], alpha: &[usize]) -> f64 {
        let order: usize = alpha.iter().sum();
        let Ok((x, jac)) = self.map.eval_with_jacobian(xi) else {
            return f64::NAN;
        };
        match order {
            0 => self.f.value(&x),
            1 => {
                let k = alpha.iter().position(|&a| a == 1).expect("order one");
                let mut e = vec![0; x.len()];
                (0..x.len())
                    .map(|c| {
                        e.iter_mut().for_each(|v| *v = 0);
                        e[c] = 1;
                        self.f.deriv(&x, &e) * jac[(c, k)]
                    })
                    .sum()
            }
            _ => f64::NAN,
        }
    }
}

/// A parameter-domain spline seen on the physical domain: `u o F^{-1}`.
pub struct PushForward<'a> {
    pub u: &'a dyn SplineFunction,
    pub map: &'a GeometryMap,
}

impl PushForward<'_> {
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.u.eval(&self.map.inverse(x)?)
    }
}

/// Error of `u o F^{-1}` against `f_phys` on the mapped domain, in the L2
/// norm (`Seminorm(0)`/`Full(0)`), the H1 seminorm (`Seminorm(1)`) or the H1
/// norm (`Full(1)`). Integrals are pulled back to the parameter grid with
/// `|det J|` weights.
pub fn pullback_error_norm(
    f_phys: &dyn TargetFunction,
    u: &dyn SplineFunction,
    map: &GeometryMap,
    mode: NormMode,
) -> Result<f64> {
    let (with_values, with_grad) = match mode {
        NormMode::Seminorm(0) | NormMode::Full(0) => (true, false),
        NormMode::Seminorm(1) => (false, true),
        NormMode::Full(1) => (true, true),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "physical norms support orders 0 and 1 only (got {mode:?})"
            )))
        }
    };
    let d = u.dim();
    if f_phys.dim() != d || map.dims() != d {
        return Err(Error::SpaceMismatch("dimensions of f, u and map differ".into()));
    }
    if with_grad && u.degree() < 1 {
        return Err(Error::OrderTooHigh {
            order: 1,
            degree: u.degree(),
        });
    }
    let grid = TensorGrid::new(&u.finest_levels(), error_points(u.degree()))?;
    let nodes = grid.nodes();
    let weights = grid.weights();
    let shape = grid.shape();
    let vals = u.grid_values(&nodes, &vec![0; d])?;
    let grads = if with_grad {
        (0..d)
            .map(|k| {
                let mut e = vec![0; d];
                e[k] = 1;
                u.grid_values(&nodes, &e)
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let mut idx = vec![0; d];
    let mut xi = vec![0.0; d];
    let mut unit = vec![0; d];
    let mut total = 0.0;
    for flat in 0..vals.len() {
        let mut w = 1.0;
        for a in 0..d {
            xi[a] = nodes[a][idx[a]];
            w *= weights[a][idx[a]];
        }
        let (x, jac) = map.eval_with_jacobian(&xi)?;
        let det = jac.determinant();
        let mut integrand = 0.0;
        if with_values {
            integrand += (f_phys.value(&x) - vals.data()[flat]).powi(2);
        }
        if with_grad {
            let g = DVector::from_iterator(d, grads.iter().map(|t| t.data()[flat]));
            let phys = jac
                .transpose()
                .lu()
                .solve(&g)
                .ok_or_else(|| Error::Singular(format!("Jacobian at {xi:?}")))?;
            for c in 0..d {
                unit.iter_mut().for_each(|v| *v = 0);
                unit[c] = 1;
                integrand += (f_phys.deriv(&x, &unit) - phys[c]).powi(2);
            }
        }
        total += w * det.abs() * integrand;
        increment(&mut idx, &shape);
    }
    Ok(total.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_map_is_exact() {
        for p in 1..=3 {
            let g = GeometryMap::identity(2, p);
            for xi in [[0.0, 0.0], [0.3, 0.8], [1.0, 0.5]] {
                let (x, j) = g.eval_with_jacobian(&xi).unwrap();
                assert!((x[0] - xi[0]).abs() < 1e-14 && (x[1] - xi[1]).abs() < 1e-14);
                assert!((j - DMatrix::identity(2, 2)).amax() < 1e-13);
            }
        }
    }

    #[test]
    fn corners_interpolate_control_points() {
        let g = GeometryMap::distorted_square();
        let c = g.control_points();
        assert_eq!(g.eval(&[0.0, 0.0]).unwrap(), c[0]);
        assert_eq!(g.eval(&[1.0, 1.0]).unwrap(), c[8]);
        assert!(g.min_det() > 0.0);
    }

    #[test]
    fn folded_map_is_rejected() {
        let mut control = GeometryMap::identity(2, 1).control_points().to_vec();
        control.swap(0, 3);
        assert!(matches!(
            GeometryMap::new(1, 2, control),
            Err(Error::InvalidGeometry(_))
        ));
    }

    #[test]
    fn text_round_trip() {
        let g = GeometryMap::distorted_square();
        let back = GeometryMap::parse(&g.to_text().unwrap()).unwrap();
        assert_eq!(back, g);
        assert!(GeometryMap::parse("degree = 1\n").is_err());
        let err = GeometryMap::parse("degree = x\n").unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
    }
}
