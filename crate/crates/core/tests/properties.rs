use hedonic::conjugate::{double_conjugate, zeta_conjugate, GridFunction};
use hedonic::equilibrium::{simulate_market, GridSpec, MarketSpec, DEFAULT_BOUNDARY_THRESHOLD};
use hedonic::identify::{general_identify, IdentifyOptions};
use hedonic::measures::{
    empirical_cdf, empirical_cdf_quantile, partition_by_x, stream_rng, DiscreteMeasure, DistributionSpec, MarketDataset,
    PartitionScheme,
};
use hedonic::ot::{optimality_report, solve_exact, solve_exact_weights, surplus_matrix};
use hedonic::surplus::{Polynomial, ScalarFunction, StructuralSpec, SurplusFamily};
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::Rng;

fn points(seed: u64, n: usize, d: usize) -> Array2<f64> {
    let mut rng = stream_rng(seed, 9);
    Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..1.0))
}

fn weights(seed: u64, n: usize) -> Array1<f64> {
    let mut rng = stream_rng(seed, 10);
    let w = Array1::from_shape_fn(n, |_| rng.random_range(0.1..1.0));
    let s = w.sum();
    w / s
}

fn family(k: usize) -> SurplusFamily {
    match k % 3 {
        0 => SurplusFamily::Bilinear,
        1 => SurplusFamily::neg_quadratic(vec![vec![1.5, 0.3], vec![0.3, 0.8]]).unwrap(),
        _ => SurplusFamily::polynomial(0, 2, vec![(1.0, vec![1, 0, 1, 0]), (1.0, vec![0, 1, 0, 1]), (0.4, vec![1, 1, 0, 2])])
            .unwrap(),
    }
}

fn no_x() -> Array1<f64> {
    Array1::zeros(0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partition_ignores_row_order(seed in any::<u64>(), n in 2usize..40, shift in 1usize..40) {
        let mut rng = stream_rng(seed, 0);
        let x = Array2::from_shape_fn((n, 1), |_| rng.random_range(0..3) as f64);
        let z = points(seed, n, 2);
        let p = Array1::from_shape_fn(n, |_| rng.random_range(0.0..5.0));
        let data = MarketDataset::new(x.clone(), z.clone(), p.clone()).unwrap();
        let perm: Vec<usize> = (0..n).map(|r| (r + shift) % n).collect();
        let shuffled = MarketDataset::new(x.select(ndarray::Axis(0), &perm), z.select(ndarray::Axis(0), &perm), p.select(ndarray::Axis(0), &perm)).unwrap();
        let a = partition_by_x(&data, &PartitionScheme::Exact).unwrap();
        let b = partition_by_x(&shuffled, &PartitionScheme::Exact).unwrap();
        prop_assert_eq!(a.len(), b.len());
        let mut rows = 0;
        for (sa, sb) in a.iter().zip(&b) {
            prop_assert_eq!(&sa.x_value, &sb.x_value);
            let mut ra: Vec<usize> = sa.row_ids.clone();
            let mut rb: Vec<usize> = sb.row_ids.iter().map(|r| perm[*r]).collect();
            ra.sort_unstable();
            rb.sort_unstable();
            prop_assert_eq!(ra, rb);
            prop_assert!((sa.z_measure.weights().sum() - 1.0).abs() <= 1e-12);
            rows += sa.row_ids.len();
        }
        prop_assert_eq!(rows, n);
    }

    #[test]
    fn quantile_inverts_cdf(seed in any::<u64>(), n in 1usize..50) {
        let v: Vec<f64> = points(seed, n, 1).column(0).to_vec();
        let w = weights(seed, n).to_vec();
        for &x in &v {
            let q = empirical_cdf(&v, &w, x);
            prop_assert_eq!(empirical_cdf_quantile(&v, &w, q).unwrap(), x);
        }
        prop_assert!((empirical_cdf(&v, &w, f64::INFINITY) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn analytic_gradients_match_differences(seed in any::<u64>(), k in 0usize..3) {
        let f = family(k);
        let p = points(seed, 2, 2);
        let (e, z) = (p.row(0).to_vec(), p.row(1).to_vec());
        let g = f.grad_z_raw(&[], &e, &z);
        let h = 1e-5;
        for a in 0..2 {
            let (mut zp, mut zm) = (z.clone(), z.clone());
            zp[a] += h;
            zm[a] -= h;
            let fd = (f.value(&[], &e, &zp) - f.value(&[], &e, &zm)) / (2.0 * h);
            prop_assert!((g[a] - fd).abs() <= 1e-6 * g[a].abs().max(1.0));
        }
    }

    #[test]
    fn conjugate_envelope_involution_and_order(seed in any::<u64>(), n in 2usize..30, m in 2usize..30, k in 0usize..3, bump in 0.0f64..2.0) {
        let f = family(k);
        let zg = points(seed, n, 2);
        let eg = points(seed.wrapping_add(1), m, 2);
        let vals = points(seed.wrapping_add(2), n, 1).column(0).to_owned();
        let v = GridFunction::new(zg.clone(), vals.clone()).unwrap();
        let higher = GridFunction::new(zg, vals.mapv(|x| x + bump)).unwrap();
        let dd = double_conjugate(&v, &f, no_x().view(), &eg).unwrap();
        for (a, b) in dd.function.values.iter().zip(v.values.iter()) {
            prop_assert!(a <= &(b + 1e-12));
        }
        let first = zeta_conjugate(&v, &f, no_x().view(), &eg).unwrap();
        let third = zeta_conjugate(&dd.function, &f, no_x().view(), &eg).unwrap();
        for (a, b) in third.function.values.iter().zip(first.function.values.iter()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        let lower = zeta_conjugate(&higher, &f, no_x().view(), &eg).unwrap();
        for (a, b) in lower.function.values.iter().zip(first.function.values.iter()) {
            prop_assert!(a <= &(b + 1e-12));
        }
    }

    #[test]
    fn strong_duality(seed in any::<u64>(), n in 1usize..40, m in 1usize..40, k in 0usize..3) {
        let f = family(k);
        let mu = DiscreteMeasure::from_samples(points(seed, n, 2), Some(weights(seed, n))).unwrap();
        let nu = DiscreteMeasure::from_samples(points(seed.wrapping_add(7), m, 2), Some(weights(seed.wrapping_add(7), m))).unwrap();
        let s = surplus_matrix(&mu, &nu, &f, no_x().view()).unwrap();
        let (plan, duals) = solve_exact(&mu, &nu, &s).unwrap();
        let r = optimality_report(&plan, &duals, mu.weights(), nu.weights(), &s);
        prop_assert!(r.duality_gap <= 1e-9 * (1.0 + r.primal.abs()));
        prop_assert!(r.max_dual_violation <= 1e-9);
        prop_assert!(r.max_slackness_gap <= 1e-9);
        prop_assert!(r.marginal_error <= 1e-9);
    }

    #[test]
    fn one_dimensional_plans_are_comonotone(seed in any::<u64>(), n in 1usize..60) {
        let e = points(seed, n, 1);
        let z = points(seed.wrapping_add(3), n, 1);
        let u = Array1::from_elem(n, 1.0 / n as f64);
        let s = e.dot(&z.t());
        let (plan, _) = solve_exact_weights(&u, &u, &s, 0).unwrap();
        let rank = |col: &Array2<f64>| {
            let mut o: Vec<usize> = (0..n).collect();
            o.sort_by(|a, b| col[[*a, 0]].total_cmp(&col[[*b, 0]]));
            let mut r = vec![0; n];
            for (pos, i) in o.into_iter().enumerate() {
                r[i] = pos;
            }
            r
        };
        let (re, rz) = (rank(&e), rank(&z));
        for en in plan.entries() {
            prop_assert_eq!(re[en.source], rz[en.target]);
        }
    }

    #[test]
    fn price_shift_leaves_gradients(seed in any::<u64>(), n in 8usize..40, c in -50.0f64..50.0) {
        let z = points(seed, n, 2).mapv(|v| v + 2.0);
        let p = Array1::from_iter(z.rows().into_iter().map(|r| r[0] * r[0] + r[0] * r[1] + 0.5 * r[1]));
        let data = MarketDataset::new(Array2::zeros((n, 0)), z, p).unwrap();
        let eps = DiscreteMeasure::uniform(points(seed.wrapping_add(5), n, 2)).unwrap();
        let opts = IdentifyOptions::default();
        let a = general_identify(&partition_by_x(&data, &PartitionScheme::Exact).unwrap()[0], &eps, &SurplusFamily::Bilinear, &opts).unwrap();
        let shifted = data.with_price_shift(c);
        let b = general_identify(&partition_by_x(&shifted, &PartitionScheme::Exact).unwrap()[0], &eps, &SurplusFamily::Bilinear, &opts).unwrap();
        prop_assert_eq!(a.plan.entries(), b.plan.entries());
        for (x, y) in a.u_bar_grad.iter().zip(b.u_bar_grad.iter()) {
            prop_assert!((x.is_nan() && y.is_nan()) || (x - y).abs() <= 1e-7 * (1.0 + x.abs()), "{} vs {}", x, y);
        }
    }
}

fn tinbergen(n: usize, cost_shift: f64) -> MarketSpec {
    let cost = ScalarFunction::Polynomial { dw: 1, poly: Polynomial::new(2, vec![(0.5, vec![-1, 2])]).unwrap() };
    MarketSpec {
        structure: StructuralSpec { u_bar: ScalarFunction::Zero, zeta: SurplusFamily::Bilinear, cost: cost.shifted(cost_shift) },
        consumer_x: None,
        consumer_eps: DistributionSpec::UniformBox { lo: vec![1.0], hi: vec![2.0] },
        producers: DistributionSpec::UniformBox { lo: vec![1.0], hi: vec![2.0] },
        n_consumers: n,
        n_producers: n,
        z_grid: GridSpec { lo: vec![0.0], hi: vec![6.0], per_axis: 601 },
        boundary_threshold: DEFAULT_BOUNDARY_THRESHOLD,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn cost_shift_moves_prices_only(seed in any::<u64>(), n in 2usize..30, c in -4i32..4) {
        let c = c as f64 * 0.25;
        let a = simulate_market(&tinbergen(n, 0.0), seed).unwrap();
        let b = simulate_market(&tinbergen(n, c), seed).unwrap();
        // Matchings agree up to exact ties of the discrete problem.
        if a.matching.entries() != b.matching.entries() {
            let total = |m: &hedonic::ot::TransportPlan| m.entries().iter().map(|e| e.mass * a.surplus[[e.source, e.target]]).sum::<f64>();
            prop_assert!((total(&a.matching) - total(&b.matching)).abs() <= 1e-12);
        }
        prop_assert_eq!(&a.traded_z, &b.traded_z);
        for (pa, pb) in a.prices.iter().zip(b.prices.iter()) {
            prop_assert!((pb - pa - c).abs() <= 1e-9);
        }
    }
}
