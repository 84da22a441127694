//! Analytic target functions with closed-form mixed derivatives.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};

/// A `d`-variate function that can report `D^alpha f(x)` exactly.
pub trait TargetFunction: Send + Sync {
    fn dim(&self) -> usize;

    fn deriv(&self, x: &[f64], alpha: &[usize]) -> f64;

    fn value(&self, x: &[f64]) -> f64 {
        let zero = vec![0; self.dim()];
        self.deriv(x, &zero)
    }
}

/// Univariate building block of a separable function.
#[derive(Debug, Clone, PartialEq)]
pub enum Factor {
    /// `sin(omega x + phase)`
    Sin { omega: f64, phase: f64 },
    /// `exp(rate x)`
    Exp { rate: f64 },
    /// Polynomial with coefficients in increasing degree.
    Poly(Vec<f64>),
}

impl Factor {
    /// `x^a (1 - x)^a`, expanded.
    pub fn bump(a: usize) -> Self {
        // (1-x)^a = sum_j (-1)^j C(a,j) x^j
        let mut c = vec![0.0; 2 * a + 1];
        let mut binom = 1.0;
        for j in 0..=a {
            c[a + j] = if j % 2 == 0 { binom } else { -binom };
            binom = binom * (a - j) as f64 / (j + 1) as f64;
        }
        Factor::Poly(c)
    }

    pub fn deriv(&self, x: f64, k: usize) -> f64 {
        match self {
            Factor::Sin { omega, phase } => {
                omega.powi(k as i32) * (omega * x + phase + k as f64 * PI / 2.0).sin()
            }
            Factor::Exp { rate } => rate.powi(k as i32) * (rate * x).exp(),
            Factor::Poly(c) => {
                let mut acc = 0.0;
                for (j, cj) in c.iter().enumerate().skip(k).rev() {
                    let falling: f64 = (j - k + 1..=j).map(|t| t as f64).product();
                    acc = acc * x + cj * falling;
                }
                acc
            }
        }
    }
}

/// `prod_i g_i(x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Separable {
    factors: Vec<Factor>,
}

impl Separable {
    pub fn new(factors: Vec<Factor>) -> Self {
        Self { factors }
    }

    /// `prod_i sin(k pi x_i)`.
    pub fn sin_product(d: usize, k: f64) -> Self {
        Self::new(vec![
            Factor::Sin {
                omega: k * PI,
                phase: 0.0
            };
            d
        ])
    }

    pub fn bump(d: usize, a: usize) -> Self {
        Self::new(vec![Factor::bump(a); d])
    }

    /// `exp(x_1 + ... + x_d)`.
    pub fn exp_sum(d: usize) -> Self {
        Self::new(vec![Factor::Exp { rate: 1.0 }; d])
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }
}

impl TargetFunction for Separable {
    fn dim(&self) -> usize {
        self.factors.len()
    }

    fn deriv(&self, x: &[f64], alpha: &[usize]) -> f64 {
        self.factors
            .iter()
            .zip(x.iter().zip(alpha))
            .map(|(g, (xi, a))| g.deriv(*xi, *a))
            .product()
    }
}

/// `sum_k a_k sin(w_k . x + phi_k)`; smooth and not separable.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneWaves {
    dim: usize,
    terms: Vec<(f64, Vec<f64>, f64)>,
}

impl PlaneWaves {
    pub fn new(dim: usize, terms: Vec<(f64, Vec<f64>, f64)>) -> Self {
        assert!(terms.iter().all(|t| t.1.len() == dim));
        Self { dim, terms }
    }

    /// A few waves with frequencies in `[-3, 3]`, amplitudes in `[0.5, 1]`.
    pub fn random(dim: usize, terms: usize, rng: &mut impl Rng) -> Self {
        let terms = (0..terms)
            .map(|_| {
                let a = rng.gen_range(0.5..1.0);
                let w = (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let phi = rng.gen_range(0.0..2.0 * PI);
                (a, w, phi)
            })
            .collect();
        Self { dim, terms }
    }
}

impl TargetFunction for PlaneWaves {
    fn dim(&self) -> usize {
        self.dim
    }

    fn deriv(&self, x: &[f64], alpha: &[usize]) -> f64 {
        let order: usize = alpha.iter().sum();
        self.terms
            .iter()
            .map(|(a, w, phi)| {
                let arg: f64 = w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + phi;
                let scale: f64 = w.iter().zip(alpha).map(|(w, k)| w.powi(*k as i32)).product();
                a * scale * (arg + order as f64 * PI / 2.0).sin()
            })
            .sum()
    }
}

/// `x_1 ... x_d sin(x_1 + ... + x_d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonomialSine {
    pub dim: usize,
}

impl TargetFunction for MonomialSine {
    fn dim(&self) -> usize {
        self.dim
    }

    fn deriv(&self, x: &[f64], alpha: &[usize]) -> f64 {
        // Leibniz in each variable: D^a (x g) = x g^(a) + a g^(a-1).
        let s: f64 = x.iter().sum();
        let d = self.dim;
        let mut total = 0.0;
        for mask in 0u32..(1 << d) {
            let mut coef = 1.0;
            let mut order = 0;
            for i in 0..d {
                if mask & (1 << i) != 0 {
                    // x_i differentiated once
                    if alpha[i] == 0 {
                        coef = 0.0;
                        break;
                    }
                    coef *= alpha[i] as f64;
                    order += alpha[i] - 1;
                } else {
                    coef *= x[i];
                    order += alpha[i];
                }
            }
            if coef != 0.0 {
                total += coef * (s + order as f64 * PI / 2.0).sin();
            }
        }
        total
    }
}

/// Constant function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant {
    pub dim: usize,
    pub value: f64,
}

impl TargetFunction for Constant {
    fn dim(&self) -> usize {
        self.dim
    }

    fn deriv(&self, _x: &[f64], alpha: &[usize]) -> f64 {
        if alpha.iter().all(|&a| a == 0) {
            self.value
        } else {
            0.0
        }
    }
}

/// Built-in targets selectable by name from study configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetId {
    /// `prod sin(k pi x_i)`, `k` from the `freq` key.
    Sin,
    /// `prod x_i^a (1 - x_i)^a`, `a` from the `freq` key (default 3).
    Bump,
    /// `exp(x_1 + ... + x_d)`
    Exp,
    /// `sin(k pi x_1) exp(x_2 + ...)`
    SinExp,
    /// seeded sum of plane waves
    Waves,
}

impl TargetId {
    pub const ALL: [TargetId; 5] = [
        TargetId::Sin,
        TargetId::Bump,
        TargetId::Exp,
        TargetId::SinExp,
        TargetId::Waves,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TargetId::Sin => "sin",
            TargetId::Bump => "bump",
            TargetId::Exp => "exp",
            TargetId::SinExp => "sin-exp",
            TargetId::Waves => "waves",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown target '{s}'")))
    }

    /// [`TargetId::build`] with a ChaCha8 generator seeded from `seed`.
    pub fn build_seeded(self, d: usize, param: f64, seed: u64) -> Box<dyn TargetFunction> {
        self.build(d, param, &mut rand_chacha::ChaCha8Rng::seed_from_u64(seed))
    }

    /// Instantiates the target. `param` is the frequency (sin, sin-exp) or the
    /// bump exponent; `rng` seeds the plane waves.
    pub fn build(
        self,
        d: usize,
        param: f64,
        rng: &mut impl Rng,
    ) -> Box<dyn TargetFunction> {
        match self {
            TargetId::Sin => Box::new(Separable::sin_product(d, param)),
            TargetId::Bump => Box::new(Separable::bump(d, param.max(1.0) as usize)),
            TargetId::Exp => Box::new(Separable::exp_sum(d)),
            TargetId::SinExp => {
                let mut f = vec![Factor::Sin {
                    omega: param * PI,
                    phase: 0.0,
                }];
                f.extend(std::iter::repeat(Factor::Exp { rate: 1.0 }).take(d - 1));
                Box::new(Separable::new(f))
            }
            TargetId::Waves => Box::new(PlaneWaves::random(d, 3, rng)),
        }
    }
}

impl fmt::Display for TargetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;

    fn fd_check(f: &dyn TargetFunction, x: &[f64], alpha: &[usize]) {
        // one extra derivative in the first direction vs central difference
        let h = 1e-5;
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[0] += h;
        xm[0] -= h;
        let fd = (f.deriv(&xp, alpha) - f.deriv(&xm, alpha)) / (2.0 * h);
        let mut a1 = alpha.to_vec();
        a1[0] += 1;
        let exact = f.deriv(x, &a1);
        assert!(
            (fd - exact).abs() < 1e-6 * (1.0 + exact.abs()),
            "alpha {alpha:?}: {fd} vs {exact}"
        );
    }

    #[test]
    fn derivatives_match_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let fs: Vec<Box<dyn TargetFunction>> = vec![
            Box::new(Separable::sin_product(2, 1.0)),
            Box::new(Separable::bump(2, 3)),
            Box::new(Separable::exp_sum(3)),
            Box::new(PlaneWaves::random(2, 3, &mut rng)),
            Box::new(MonomialSine { dim: 3 }),
        ];
        for f in &fs {
            let d = f.dim();
            let x: Vec<f64> = (0..d).map(|i| 0.3 + 0.17 * i as f64).collect();
            for a in 0..3 {
                let mut alpha = vec![0; d];
                alpha[0] = a;
                alpha[d - 1] += 1;
                fd_check(f.as_ref(), &x, &alpha);
            }
        }
    }

    #[test]
    fn bump_expansion() {
        let b = Factor::bump(3);
        for x in [0.0f64, 0.2, 0.5, 0.9] {
            let exact = (x * (1.0 - x)).powi(3);
            assert!((b.deriv(x, 0) - exact).abs() < 1e-15);
        }
        // (x(1-x))^3 has sixth derivative -720
        assert!((b.deriv(0.4, 6) + 720.0).abs() < 1e-9);
        assert_eq!(b.deriv(0.4, 7), 0.0);
    }

    #[test]
    fn monomial_sine_values() {
        let f = MonomialSine { dim: 3 };
        let x = [0.2, 0.5, 0.7];
        assert!((f.value(&x) - 0.07 * 1.4f64.sin()).abs() < 1e-15);
        // d/dx (x y z sin s) = y z sin s + x y z cos s
        let e = 0.35 * 1.4f64.sin() + 0.07 * 1.4f64.cos();
        assert!((f.deriv(&x, &[1, 0, 0]) - e).abs() < 1e-14);
    }

    #[test]
    fn target_ids_round_trip() {
        for t in TargetId::ALL {
            assert_eq!(TargetId::parse(t.name()).unwrap(), t);
        }
        assert!(TargetId::parse("nope").is_err());
    }
}
