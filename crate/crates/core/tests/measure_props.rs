mod common;

use otstab::manifold::{ManifoldSpec, Point};
use otstab::measure::{wasserstein1, DiscreteMeasure};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_measure(spec: &ManifoldSpec<f64>, n: usize, rng: &mut ChaCha8Rng) -> DiscreteMeasure<f64> {
    let pts = spec.sample_uniform(n, rng.random()).unwrap();
    let w = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    DiscreteMeasure::from_samples(spec, pts, Some(w)).unwrap()
}

const SPECS: [&str; 3] = ["sphere:2", "torus:2", "ball:2:1"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn w1_is_a_metric(seed in any::<u64>(), which in 0usize..3, n in 1usize..30, m in 1usize..30, k in 1usize..30) {
        let spec: ManifoldSpec<f64> = SPECS[which].parse().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, c) = (random_measure(&spec, n, &mut rng), random_measure(&spec, m, &mut rng), random_measure(&spec, k, &mut rng));
        let ab = wasserstein1(&a, &b).unwrap();
        prop_assert!((ab - wasserstein1(&b, &a).unwrap()).abs() <= 1e-10);
        prop_assert!(wasserstein1(&a, &a).unwrap().abs() <= 1e-12);
        let (bc, ac) = (wasserstein1(&b, &c).unwrap(), wasserstein1(&a, &c).unwrap());
        prop_assert!(ac <= ab + bc + 1e-9);
    }

    /// ⟨a − b, f⟩ ≤ W₁ for f(x) = min_k (g_k + dist(x, z_k)), which is 1-Lipschitz.
    #[test]
    fn kantorovich_rubinstein_lower_bound(seed in any::<u64>(), which in 0usize..3, n in 1usize..20, m in 1usize..20) {
        let spec: ManifoldSpec<f64> = SPECS[which].parse().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (random_measure(&spec, n, &mut rng), random_measure(&spec, m, &mut rng));
        let z = spec.sample_uniform(4, rng.random()).unwrap();
        let g: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = |x: &Point<f64>| z.iter().zip(&g).map(|(zk, gk)| gk + spec.dist(x, zk).unwrap()).fold(f64::INFINITY, f64::min);
        let pair: f64 = a.points.iter().zip(&a.weights).map(|(x, w)| w * f(x)).sum::<f64>()
            - b.points.iter().zip(&b.weights).map(|(x, w)| w * f(x)).sum::<f64>();
        prop_assert!(pair.abs() <= wasserstein1(&a, &b).unwrap() + 1e-9);
    }

    #[test]
    fn w1_matches_unit_atom_matching(seed in any::<u64>(), which in 0usize..3, na in 1usize..=6, nb in 1usize..=6) {
        let spec: ManifoldSpec<f64> = SPECS[which].parse().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (xa, xb) = (spec.sample_uniform(na, rng.random()).unwrap(), spec.sample_uniform(nb, rng.random()).unwrap());
        let (ka, kb) = (common::composition(&mut rng, 12, na), common::composition(&mut rng, 12, nb));
        let a = DiscreteMeasure::from_samples(&spec, xa.clone(), Some(ka.iter().map(|&k| k as f64).collect())).unwrap();
        let b = DiscreteMeasure::from_samples(&spec, xb.clone(), Some(kb.iter().map(|&k| k as f64).collect())).unwrap();
        let brute = common::brute_force_w1(&ka, &kb, &|i, j| spec.dist(&xa[i], &xb[j]).unwrap());
        prop_assert!((wasserstein1(&a, &b).unwrap() - brute).abs() <= 1e-9);
    }
}

#[test]
fn brute_force_oracle_sanity() {
    // two atoms each, crossing is never optimal on the line
    let d = |i: usize, j: usize| ((i as f64) - (j as f64) - 0.5).abs();
    assert!((common::brute_force_w1(&[1, 1], &[1, 1], &d) - 0.5).abs() < 1e-15);
    assert_eq!(common::composition(&mut ChaCha8Rng::seed_from_u64(1), 5, 5), vec![1; 5]);
}
