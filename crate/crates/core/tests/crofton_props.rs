use otstab::crofton::{estimate_crossing_integral, flow_crossings, reverse_poincare_1d};
use otstab::lab::fit_loglog;
use otstab::manifold::{ManifoldSpec, Point, TangentVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;

/// Kolmogorov–Smirnov distance of a sample from U[0, 1).
fn ks_uniform(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).max((i + 1) as f64 / n - x))
        .fold(0.0, f64::max)
}

#[test]
fn torus_flow_preserves_uniform_samples() {
    let spec: ManifoldSpec<f64> = "torus:2".parse().unwrap();
    let n = 100_000;
    let xs = spec.sample_uniform(n, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let critical = 1.628 / (n as f64).sqrt();
    for s in [0.37, 2.9] {
        let moved: Vec<Point<f64>> = xs
            .iter()
            .map(|x| {
                let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let v = TangentVector::new(x.clone(), vec![s * th.cos(), s * th.sin()]);
                spec.exp_map(x, &v).unwrap()
            })
            .collect();
        for k in 0..2 {
            let d = ks_uniform(moved.iter().map(|p| p.coords[k]).collect());
            assert!(d < critical, "s {s}, coordinate {k}: KS {d} >= {critical}");
        }
    }
}

#[test]
fn standard_error_decays_like_inverse_root() {
    let spec: ManifoldSpec<f64> = "ball:2:1".parse().unwrap();
    let pairs: Vec<(f64, f64)> = [1_000usize, 10_000, 100_000]
        .iter()
        .map(|&n| (n as f64, estimate_crossing_integral(&spec, 0.5, n, 5).unwrap().std_error))
        .collect();
    let slope = fit_loglog(&pairs).unwrap().slope;
    assert!((slope + 0.5).abs() <= 0.1, "slope {slope}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Transversal counts do not move under a 1e-9 nudge of the base point.
    #[test]
    fn crossings_stable_off_tangency(seed in any::<u64>(), which in 0usize..3) {
        let dom = ["ball:2:1", "annulus:2:0.5:1:270", "box:2:0,0:1,0.6"][which];
        let spec: ManifoldSpec<f64> = dom.parse().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Point::new(vec![rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)]);
        let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let v = vec![th.cos(), th.sin()];
        let horizon = 1.0;
        let a = flow_crossings(&spec, &x, &v, horizon, 1e-6).unwrap();
        prop_assume!(a.grazes.is_empty());
        prop_assume!(a.crossing_params.iter().all(|&t| t > 1e-6 && t < horizon - 1e-6));
        let nudged = Point::new(vec![x.coords[0] + 1e-9, x.coords[1] - 1e-9]);
        let b = flow_crossings(&spec, &nudged, &v, horizon, 1e-6).unwrap();
        prop_assert_eq!(a.crossing_params.len(), b.crossing_params.len());
    }

    #[test]
    fn reverse_poincare_on_convex_pairs(seed in any::<u64>(), pu in 1usize..6, pv in 1usize..6, slope in 0.1f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = common::uniform_grid(0.0, 1.0, 401);
        let u = common::convex_pl(&mut rng, &grid, pu, slope);
        let v = common::convex_pl(&mut rng, &grid, pv, slope);
        prop_assert!(reverse_poincare_1d(&u, &v, &grid).unwrap().holds);
        prop_assert!(reverse_poincare_1d(&u, &u, &grid).unwrap().lhs == 0.0);
    }
}

#[test]
fn reverse_poincare_rejects_nonconvex() {
    let grid = common::uniform_grid(0.0, 1.0, 11);
    let u: Vec<f64> = grid.iter().map(|s| -(s * s)).collect();
    let err = reverse_poincare_1d(&u, &u, &grid).unwrap_err();
    assert!(matches!(err, otstab::Error::Precondition { index: 1, .. }), "{err}");
}
