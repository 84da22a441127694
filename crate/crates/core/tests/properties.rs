use num_bigint::BigInt;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sgspline::bspline::{constrained_orders, refinement_operator, vanishing_subspace, SplineSpace1D};
use sgspline::functions::{PlaneWaves, TargetFunction};
use sgspline::geometry::GeometryMap;
use sgspline::index::{layer_cardinality, layer_indicator_sum, lambda_eff, CombinationSet, LevelRule};
use sgspline::project::{project_1d, project_full, CoefficientTensor};
use sgspline::sparse::combination_project;
use sgspline::study::fit_rate;

fn coeffs(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// A tensor spline used as an analytic target.
struct SplineTarget(CoefficientTensor);

impl TargetFunction for SplineTarget {
    fn dim(&self) -> usize {
        self.0.levels().len()
    }

    fn deriv(&self, x: &[f64], alpha: &[usize]) -> f64 {
        self.0.eval_deriv(x, alpha).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partition_of_unity(p in 0usize..=5, level in 1u32..=8, x in 0.0f64..=1.0) {
        let s = SplineSpace1D::new(p, level).unwrap();
        let v = s.eval_basis(x, 0).unwrap();
        prop_assert_eq!(v.len(), s.dim());
        prop_assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(v.iter().all(|&b| b >= -1e-15));
        prop_assert!(v.iter().filter(|&&b| b != 0.0).count() <= p + 1);
    }

    #[test]
    fn refinement_reproduces(p in 0usize..=4, level in 1u32..=5, seed in any::<u64>()) {
        let coarse = SplineSpace1D::new(p, level).unwrap();
        let fine = SplineSpace1D::new(p, level + 1).unwrap();
        let r = refinement_operator(&coarse, &fine).unwrap();
        let c = coeffs(coarse.dim(), seed);
        let cf = &r * nalgebra::DVector::from_vec(c.clone());
        let cf: Vec<f64> = cf.iter().copied().collect();
        for i in 0..=16 {
            let x = i as f64 / 16.0 * 0.999 + 0.0003;
            let a = coarse.eval(&c, x, 0).unwrap();
            let b = fine.eval(&cf, x, 0).unwrap();
            prop_assert!((a - b).abs() < 1e-12, "x={} {} vs {}", x, a, b);
        }
    }

    #[test]
    fn projector_is_idempotent(p in 1usize..=4, level in 1u32..=4, r_raw in 0usize..=4, seed in any::<u64>()) {
        let r = r_raw.min(p);
        let s = SplineSpace1D::new(p, level).unwrap();
        let c = coeffs(s.dim(), seed);
        let again = project_1d(&s, |x, k| s.eval(&c, x, k).unwrap(), r).unwrap();
        let err = c.iter().zip(&again).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12, "err {}", err);
    }

    #[test]
    fn l2_projector_is_idempotent(p in 0usize..=5, level in 1u32..=8, seed in any::<u64>()) {
        let s = SplineSpace1D::new(p, level).unwrap();
        let c = coeffs(s.dim(), seed);
        let again = project_1d(&s, |x, k| s.eval(&c, x, k).unwrap(), 0).unwrap();
        let err = c.iter().zip(&again).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12, "err {}", err);
    }

    #[test]
    fn vanishing_constraints_hold(p in 0usize..=5, level in 1u32..=5, q_raw in 0usize..=5) {
        let q = q_raw.min(p);
        let s = SplineSpace1D::new(p, level).unwrap();
        let z = vanishing_subspace(&s, q).unwrap();
        let orders = constrained_orders(p, q);
        prop_assert_eq!(z.dim(), s.dim() - 2 * orders.len());
        for j in 0..z.dim() {
            let col: Vec<f64> = z.basis().column(j).iter().copied().collect();
            let scale = col.iter().fold(0.0f64, |m, v| m.max(v.abs())) * 2f64.powi((level as i32) * p as i32);
            for &o in &orders {
                for x in [0.0, 1.0] {
                    let v = s.eval(&col, x, o).unwrap();
                    prop_assert!(v.abs() <= 1e-10 * scale.max(1.0), "order {} at {}: {}", o, x, v);
                }
            }
        }
    }

    #[test]
    fn combination_coefficients_sum_to_one(d in 1usize..=5, extra in 0u32..=6, p in 1usize..=4) {
        let n = lambda_eff(p) + extra;
        let rule = LevelRule::new(d, n, p).unwrap();
        let set = CombinationSet::new(rule);
        prop_assert_eq!(set.coefficient_sum(), BigInt::from(1));
        for (l, layer) in set.layers().iter().enumerate() {
            prop_assert_eq!(BigInt::from(layer.len()), layer_cardinality(&rule, l as u32));
        }
    }

    #[test]
    fn layer_indicator(d in 1usize..=6, n in 0u32..=12, p in 1usize..=4, frac in 0.0f64..=1.0, k_raw in 0usize..6) {
        let level = (frac * n as f64).round() as u32;
        let k = k_raw % d;
        let want = BigInt::from(u8::from(k == 0));
        prop_assert_eq!(layer_indicator_sum(d, n, p, level, k), want);
    }

    #[test]
    fn fit_recovers_constructed_orders(order in 0.5f64..5.0, c in 0.1f64..10.0, lp in 0u32..=2) {
        let pairs: Vec<(f64, f64)> = (3..=9)
            .map(|k| {
                let h = 2f64.powi(-k);
                (h, c * h.powf(order) * (-h.ln()).powi(lp as i32))
            })
            .collect();
        prop_assert!((fit_rate(&pairs, lp).unwrap() - order).abs() < 1e-9);
    }

    #[test]
    fn newton_round_trip(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let g = GeometryMap::distorted_square();
        let xi = [a, b];
        let back = g.inverse(&g.eval(&xi).unwrap()).unwrap();
        prop_assert!((back[0] - a).abs() < 1e-10 && (back[1] - b).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn tensor_projection_reproduces_members(p in 1usize..=3, l1 in 1u32..=3, l2 in 1u32..=3, r_raw in 0usize..=1, seed in any::<u64>()) {
        let r = r_raw.min(p);
        let levels = [l1, l2];
        let mut u = CoefficientTensor::zeros(p, &levels);
        let c = coeffs(u.coeffs().len(), seed);
        u.coeffs_mut().data_mut().copy_from_slice(&c);
        let f = SplineTarget(u.clone());
        let v = project_full(&levels, p, &f, r).unwrap();
        let err = v.coeffs().data().iter().zip(u.coeffs().data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-11, "err {}", err);
    }

    #[test]
    fn combination_reproduces_coarsest_members(d in 2usize..=3, p in 1usize..=2, extra in 0u32..=2, seed in any::<u64>()) {
        let lambda = lambda_eff(p);
        let mut u = CoefficientTensor::zeros(p, &vec![lambda; d]);
        let c = coeffs(u.coeffs().len(), seed);
        u.coeffs_mut().data_mut().copy_from_slice(&c);
        let f = SplineTarget(u.clone());
        let rule = LevelRule::new(d, lambda + extra, p).unwrap();
        let s = combination_project(&f, &rule, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        for _ in 0..20 {
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..=1.0)).collect();
            prop_assert!((s.eval(&x).unwrap() - u.eval(&x).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn plane_waves_differentiate_consistently(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = PlaneWaves::random(2, 3, &mut rng);
        let x = [0.37, 0.61];
        let e = 1e-6;
        let fd = (f.value(&[x[0] + e, x[1]]) - f.value(&[x[0] - e, x[1]])) / (2.0 * e);
        prop_assert!((fd - f.deriv(&x, &[1, 0])).abs() < 1e-6 * (1.0 + fd.abs()));
    }
}
