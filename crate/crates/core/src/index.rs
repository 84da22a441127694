//! Level index sets of sparse grids, combination coefficients, exact
//! combinatorial identities and dimension counts.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Smallest `lambda >= 1` with `2^lambda > p`, so that `h_l p < 1` for all
/// admissible levels.
pub fn lambda_eff(p: usize) -> u32 {
    let mut l = 1;
    while (1usize << l) <= p {
        l += 1;
    }
    l
}

/// Dimension `d`, maximum level `n`, degree `p` and the derived minimum level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LevelRule {
    pub d: usize,
    pub n: u32,
    pub p: usize,
    pub lambda: u32,
}

impl LevelRule {
    pub fn new(d: usize, n: u32, p: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        let lambda = lambda_eff(p);
        if n < lambda {
            return Err(Error::EmptyIndexSet { n, min: lambda });
        }
        Ok(Self { d, n, p, lambda })
    }

    /// `n + (d - 1) lambda`
    pub fn top_sum(&self) -> u32 {
        self.n + (self.d as u32 - 1) * self.lambda
    }
}

/// Level multi-indices with `l_j >= min` and `|l|_1 == sum`, lexicographic.
pub fn levels_with_sum(d: usize, sum: u32, min: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    if d == 0 {
        return out;
    }
    let mut cur = vec![0u32; d];
    fn rec(pos: usize, rest: u32, min: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        let d = cur.len();
        if pos == d - 1 {
            if rest >= min {
                cur[pos] = rest;
                out.push(cur.clone());
            }
            return;
        }
        let remaining = (d - 1 - pos) as u32 * min;
        if rest < min + remaining {
            return;
        }
        for v in min..=rest - remaining {
            cur[pos] = v;
            rec(pos + 1, rest - v, min, cur, out);
        }
    }
    rec(0, sum, min, &mut cur, &mut out);
    out
}

/// Level multi-indices with `l_j >= min` and `|l|_1 <= max_sum`, ordered by
/// sum then lexicographically.
pub fn levels_up_to(d: usize, max_sum: u32, min: u32) -> Vec<Vec<u32>> {
    (d as u32 * min..=max_sum)
        .flat_map(|s| levels_with_sum(d, s, min))
        .collect()
}

/// Admissible levels of the combination technique with their coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CombinationSet {
    rule: LevelRule,
    /// `layers[l]` holds the levels with `|l|_1 = n + (d-1) lambda - l`.
    layers: Vec<Vec<Vec<u32>>>,
}

impl CombinationSet {
    pub fn new(rule: LevelRule) -> Self {
        let layers = (0..rule.d as u32)
            .map(|l| {
                rule.top_sum()
                    .checked_sub(l)
                    .map(|s| levels_with_sum(rule.d, s, rule.lambda))
                    .unwrap_or_default()
            })
            .collect();
        Self { rule, layers }
    }

    pub fn rule(&self) -> &LevelRule {
        &self.rule
    }

    pub fn layer(&self, l: usize) -> &[Vec<u32>] {
        &self.layers[l]
    }

    pub fn layers(&self) -> &[Vec<Vec<u32>>] {
        &self.layers
    }

    /// `(-1)^l C(d-1, l)`
    pub fn layer_coefficient(&self, l: usize) -> i64 {
        let c = binomial_u64(self.rule.d as u64 - 1, l as u64) as i64;
        if l % 2 == 0 {
            c
        } else {
            -c
        }
    }

    /// All `(level, coefficient)` pairs, layer by layer.
    pub fn entries(&self) -> Vec<(Vec<u32>, i64)> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(l, lv)| {
                let c = self.layer_coefficient(l);
                lv.iter().map(move |x| (x.clone(), c))
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Exact `sum c_l`.
    pub fn coefficient_sum(&self) -> BigInt {
        self.layers
            .iter()
            .enumerate()
            .map(|(l, lv)| BigInt::from(self.layer_coefficient(l)) * BigInt::from(lv.len()))
            .sum()
    }
}

pub fn build_combination_set(d: usize, n: u32, p: usize) -> Result<CombinationSet> {
    Ok(CombinationSet::new(LevelRule::new(d, n, p)?))
}

/// Levels of the hierarchical sparse space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HierSet {
    rule: LevelRule,
    levels: Vec<Vec<u32>>,
}

impl HierSet {
    pub fn new(rule: LevelRule) -> Self {
        let levels = levels_up_to(rule.d, rule.top_sum(), rule.lambda);
        Self { rule, levels }
    }

    pub fn rule(&self) -> &LevelRule {
        &self.rule
    }

    pub fn levels(&self) -> &[Vec<u32>] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

pub fn build_hier_set(d: usize, n: u32, p: usize) -> Result<HierSet> {
    Ok(HierSet::new(LevelRule::new(d, n, p)?))
}

fn binomial_u64(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// `C(n, k)` for `n >= 0`, zero when `k > n` (cardinality convention).
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// `x (x-1) ... (x-k+1) / k!` for any integer `x`; zero for `k < 0`.
pub fn binomial_general(x: i64, k: i64) -> BigInt {
    if k < 0 {
        return BigInt::zero();
    }
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..k {
        num *= BigInt::from(x - i);
        den *= BigInt::from(i + 1);
    }
    num / den
}

/// `sum_{l=0}^{d-1} (-1)^l C(d-1, l) l^i` for one `i`.
pub fn alternating_binomial_sum(d: usize, i: u32) -> BigInt {
    (0..d as u64)
        .map(|l| {
            let t = binomial(d as u64 - 1, l) * BigInt::from(l).pow(i);
            if l % 2 == 0 {
                t
            } else {
                -t
            }
        })
        .sum()
}

/// True iff the alternating sums vanish for every `0 <= i <= d-2`.
pub fn alternating_sums_vanish(d: usize) -> bool {
    d >= 2 && (0..=d as u32 - 2).all(|i| alternating_binomial_sum(d, i).is_zero())
}

/// `sum_l (-1)^l C(d-1, l) C(n + d - 1 - lambda - l - level, d - 1 - k)`
/// in exact arithmetic. The inner binomial uses the falling-factorial
/// definition so that negative upper arguments are allowed.
pub fn layer_indicator_sum(d: usize, n: u32, p: usize, level: u32, k: usize) -> BigInt {
    let lambda = lambda_eff(p) as i64;
    let (d, n, level, k) = (d as i64, n as i64, level as i64, k as i64);
    (0..d)
        .map(|l| {
            let t = binomial(d as u64 - 1, l as u64)
                * binomial_general(n + d - 1 - lambda - l - level, d - 1 - k);
            if l % 2 == 0 {
                t
            } else {
                -t
            }
        })
        .sum()
}

/// Predicted size of layer `l`: `C(n + d - 1 - lambda - l, d - 1)`.
pub fn layer_cardinality(rule: &LevelRule, l: u32) -> BigInt {
    let top = rule.n as i64 + rule.d as i64 - 1 - rule.lambda as i64 - l as i64;
    if top < 0 {
        return BigInt::zero();
    }
    binomial(top as u64, rule.d as u64 - 1)
}

/// Predicted size of the hierarchical set: `C(n - lambda + d, d)`.
pub fn hier_cardinality(rule: &LevelRule) -> BigInt {
    binomial((rule.n - rule.lambda) as u64 + rule.d as u64, rule.d as u64)
}

/// Dimension of the univariate increment at level `l`.
pub fn increment_dim(p: usize, lambda: u32, l: u32) -> u128 {
    if l == lambda {
        (1u128 << l) + p as u128
    } else {
        1u128 << (l - 1)
    }
}

/// `(sparse, full)` dimensions for the rule.
pub fn sparse_dimension(rule: &LevelRule) -> (u128, u128) {
    let sparse = HierSet::new(*rule)
        .levels()
        .iter()
        .map(|lv| {
            lv.iter()
                .map(|&l| increment_dim(rule.p, rule.lambda, l))
                .product::<u128>()
        })
        .sum();
    let full = ((1u128 << rule.n) + rule.p as u128).pow(rule.d as u32);
    (sparse, full)
}

/// Layer constant of the coarse-error cancellation identity:
/// `sum_{kappa=0}^{l} (-1)^kappa C(d-1, kappa) C(d-k-1+l-kappa, d-1-k)`.
pub fn cancellation_constant(d: usize, k: usize, l: usize) -> BigInt {
    (0..=l)
        .map(|kappa| {
            let top = (d + l) as i64 - k as i64 - 1 - kappa as i64;
            let t = binomial(d as u64 - 1, kappa as u64)
                * binomial_general(top, d as i64 - 1 - k as i64);
            if kappa % 2 == 0 {
                t
            } else {
                -t
            }
        })
        .sum()
}

/// Closed-form constants of the error and inverse estimates.
pub struct TheoryConstants;

impl TheoryConstants {
    /// `sqrt(2)^(q - r)`
    pub fn c1(q: usize, r: usize) -> f64 {
        2f64.sqrt().powi(q as i32 - r as i32)
    }

    /// `(2 sqrt 3)^q`
    pub fn c2(q: usize) -> f64 {
        (2.0 * 3f64.sqrt()).powi(q as i32)
    }

    /// Constant of the sparse approximation estimate, summed as printed:
    /// `(d-1)^(d-1) / ((d-1)! ln2^(d-1)) * sum_{l=0}^{d-2} 2^(-(q-r)(d-1-l))
    /// (-1)^l C(d-1,l) (r+1)^(d/2) sqrt2^(d(q-r))`.
    pub fn c10(d: usize, q: usize, r: usize) -> f64 {
        let dm1 = d as i32 - 1;
        let s = q as i32 - r as i32;
        let ln2 = std::f64::consts::LN_2;
        let fact: f64 = (1..d).map(|i| i as f64).product();
        let pre = (dm1 as f64).powi(dm1) / (fact * ln2.powi(dm1));
        let sum: f64 = (0..d.saturating_sub(1))
            .map(|l| {
                let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
                2f64.powi(-s * (dm1 - l as i32))
                    * sign
                    * binomial_u64(d as u64 - 1, l as u64) as f64
                    * ((r + 1) as f64).powf(d as f64 / 2.0)
                    * 2f64.sqrt().powi(d as i32 * s)
            })
            .sum();
        pre * sum
    }

    /// Constant of the sparse inverse estimate:
    /// `(q+1)^(d/2) (2 sqrt3)^(dq) 2^(d-1) 2^(d/2) / (d! ln2^(d/2))`.
    pub fn c11(d: usize, q: usize) -> f64 {
        let df = d as f64;
        let fact: f64 = (1..=d).map(|i| i as f64).product();
        ((q + 1) as f64).powf(df / 2.0)
            * Self::c2(q).powi(d as i32)
            * 2f64.powi(d as i32 - 1)
            * 2f64.powf(df / 2.0)
            / (fact * std::f64::consts::LN_2.powf(df / 2.0))
    }
}

/// `|log h_n| = n ln 2`
pub fn abs_log_h(n: u32) -> f64 {
    n as f64 * std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_values() {
        assert_eq!(lambda_eff(0), 1);
        assert_eq!(lambda_eff(1), 1);
        assert_eq!(lambda_eff(2), 2);
        assert_eq!(lambda_eff(3), 2);
        assert_eq!(lambda_eff(4), 3);
        assert_eq!(lambda_eff(7), 3);
        assert_eq!(lambda_eff(8), 4);
    }

    #[test]
    fn small_combination_set() {
        let c = build_combination_set(2, 3, 1).unwrap();
        assert_eq!(c.layer(0), &[vec![1, 3], vec![2, 2], vec![3, 1]]);
        assert_eq!(c.layer(1), &[vec![1, 2], vec![2, 1]]);
        assert_eq!(c.layer_coefficient(0), 1);
        assert_eq!(c.layer_coefficient(1), -1);
        let c3 = build_combination_set(3, 4, 1).unwrap();
        assert_eq!(
            (0..3).map(|l| c3.layer_coefficient(l)).collect::<Vec<_>>(),
            vec![1, -2, 1]
        );
    }

    #[test]
    fn rejects_empty_sets() {
        assert_eq!(
            build_combination_set(2, 1, 2),
            Err(Error::EmptyIndexSet { n: 1, min: 2 })
        );
        assert!(build_hier_set(2, 2, 4).is_err());
    }

    #[test]
    fn small_hier_sets() {
        let h = build_hier_set(2, 3, 1).unwrap();
        assert_eq!(
            h.levels(),
            &[vec![1, 1], vec![1, 2], vec![2, 1], vec![1, 3], vec![2, 2], vec![3, 1]]
        );
        let h = build_hier_set(1, 5, 2).unwrap();
        assert_eq!(h.levels(), &[vec![2], vec![3], vec![4], vec![5]]);
        let h = build_hier_set(3, 4, 1).unwrap();
        assert_eq!(h.len(), 20);
        assert_eq!(BigInt::from(h.len()), hier_cardinality(h.rule()));
    }

    #[test]
    fn alternating_sum_examples() {
        assert!(alternating_binomial_sum(3, 1).is_zero());
        assert!(alternating_binomial_sum(2, 0).is_zero());
        assert!(alternating_sums_vanish(8));
        // i = d-1 no longer vanishes
        assert!(!alternating_binomial_sum(3, 2).is_zero());
    }

    #[test]
    fn layer_indicator_examples() {
        assert_eq!(layer_indicator_sum(3, 5, 1, 2, 0), BigInt::one());
        assert_eq!(layer_indicator_sum(3, 5, 1, 2, 1), BigInt::zero());
    }

    #[test]
    fn general_binomial() {
        assert_eq!(binomial_general(5, 2), BigInt::from(10));
        assert_eq!(binomial_general(-1, 2), BigInt::from(1));
        assert_eq!(binomial_general(-2, 3), BigInt::from(-4));
        assert_eq!(binomial_general(-3, 0), BigInt::one());
        assert_eq!(binomial_general(4, -1), BigInt::zero());
    }

    #[test]
    fn dimensions() {
        let r = LevelRule::new(2, 3, 1).unwrap();
        assert_eq!(sparse_dimension(&r), (49, 81));
        let r = LevelRule::new(1, 6, 3).unwrap();
        assert_eq!(sparse_dimension(&r), (67, 67));
    }

    #[test]
    fn constants() {
        assert!((TheoryConstants::c1(3, 1) - 2.0).abs() < 1e-15);
        assert!((TheoryConstants::c2(2) - 12.0).abs() < 1e-13);
        assert!((TheoryConstants::c10(2, 3, 0) - 1.0 / std::f64::consts::LN_2).abs() < 1e-13);
        for q in 1..=4 {
            assert!(TheoryConstants::c10(2, q, 0) > 0.0);
            assert!(TheoryConstants::c11(2, q) > 0.0);
        }
    }

    #[test]
    fn cancellation_constant_small() {
        // d = 2, k = 1: only l = 0 with C(0,0) C(0,0) = 1
        assert_eq!(cancellation_constant(2, 1, 0), BigInt::one());
        // d = 3, k = 1, l = 1: C(2,1) - 2 C(1,1) = 0
        assert_eq!(cancellation_constant(3, 1, 1), BigInt::zero());
    }
}
