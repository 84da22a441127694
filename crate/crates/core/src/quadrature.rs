//! Gauss-Legendre rules on the reference cell `(0, 1)` and their composite
//! versions on dyadic meshes.

use crate::error::{Error, Result};

pub const MAX_POINTS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn points(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes in `(0, 1)`, increasing.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Weights summing to one.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Highest polynomial degree integrated exactly.
    pub fn exactness(&self) -> usize {
        2 * self.points() - 1
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }

    /// Composite rule on the `cells` equal cells of `(0, 1)`: nodes ordered
    /// cell by cell, weights scaled by the cell size.
    pub fn composite(&self, cells: usize) -> (Vec<f64>, Vec<f64>) {
        let h = 1.0 / cells as f64;
        let mut nodes = Vec::with_capacity(cells * self.points());
        let mut weights = Vec::with_capacity(cells * self.points());
        for c in 0..cells {
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                nodes.push((c as f64 + x) * h);
                weights.push(w * h);
            }
        }
        (nodes, weights)
    }
}

/// Gauss-Legendre rule with `points` nodes mapped to `(0, 1)`.
pub fn gauss_rule(points: usize) -> Result<QuadratureRule> {
    if !(1..=MAX_POINTS).contains(&points) {
        return Err(Error::QuadraturePoints(points));
    }
    let n = points;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // x is the i-th largest root on (-1, 1); mirror onto (0, 1).
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    Ok(QuadratureRule { nodes, weights })
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = pk;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_rules() {
        let r = gauss_rule(1).unwrap();
        assert_eq!(r.nodes(), &[0.5]);
        assert_eq!(r.weights(), &[1.0]);
        let r = gauss_rule(2).unwrap();
        let off = 0.5 / 3f64.sqrt();
        assert!((r.nodes()[0] - (0.5 - off)).abs() < 1e-15);
        assert!((r.nodes()[1] - (0.5 + off)).abs() < 1e-15);
        assert!((r.weights()[0] - 0.5).abs() < 1e-15);
        assert!((r.integrate(|x| x.powi(3)) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn exact_on_monomials() {
        for n in 1..=MAX_POINTS {
            let r = gauss_rule(n).unwrap();
            assert!(r.weights().iter().all(|&w| w > 0.0));
            assert!((r.weights().iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert!(r.nodes().windows(2).all(|w| w[0] < w[1]));
            for k in 0..=r.exactness() {
                let exact = 1.0 / (k as f64 + 1.0);
                let got = r.integrate(|x| x.powi(k as i32));
                assert!((got - exact).abs() < 1e-13, "n={n} k={k}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn rejects_out_of_range() {
        assert_eq!(gauss_rule(0), Err(Error::QuadraturePoints(0)));
        assert_eq!(gauss_rule(17), Err(Error::QuadraturePoints(17)));
    }

    #[test]
    fn composite_rule_covers_interval() {
        let r = gauss_rule(3).unwrap();
        let (x, w) = r.composite(8);
        assert_eq!(x.len(), 24);
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(5)).sum();
        assert!((integral - 1.0 / 6.0).abs() < 1e-14);
    }
}
