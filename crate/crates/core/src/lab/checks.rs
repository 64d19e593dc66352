//! Finite-difference checks of the derivative formulas and the weighted-ball
//! strong-concavity probe.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::entropic::{
    i_functional_eps, i_gradient, i_hessian_quadratic, kantorovich_eps, kantorovich_gradient,
    kantorovich_hessian_quadratic, strong_concavity_sides, CostMatrix, EntropicState,
};
use crate::error::Result;
use crate::manifold::{Domain, ManifoldSpec};
use crate::measure::{DiscreteMeasure, DensitySpec};
use crate::scalar::dot;
use crate::transport::{weighted_ball_k, weighted_ball_measure};

/// ρ samples per concavity instance. The inequality comes from a continuous
/// Prékopa–Leindler argument; a ball holding only a few atoms breaks it.
pub const CONCAVITY_SAMPLES: usize = 2000;

/// Below this magnitude the error is measured absolutely.
pub const REL_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct DerivativeCheck {
    pub instance: usize,
    pub n: usize,
    pub m: usize,
    pub eps: f64,
    pub k_grad: (f64, f64),
    pub k_hess: (f64, f64),
    pub i_grad: (f64, f64),
    pub i_hess: (f64, f64),
}

fn rel(pair: (f64, f64)) -> f64 {
    (pair.0 - pair.1).abs() / pair.1.abs().max(REL_FLOOR)
}

impl DerivativeCheck {
    /// Worst relative error of the four (finite difference, closed form) pairs.
    pub fn max_rel_error(&self) -> f64 {
        [self.k_grad, self.k_hess, self.i_grad, self.i_hess]
            .into_iter()
            .map(rel)
            .fold(0.0, f64::max)
    }
}

/// Richardson-extrapolated central first and second differences of f at 0.
fn differences(f: impl Fn(f64) -> Result<f64>, h: f64) -> Result<(f64, f64)> {
    let f0 = f(0.0)?;
    let at = |h: f64| -> Result<(f64, f64)> {
        let (p, q) = (f(h)?, f(-h)?);
        Ok(((p - q) / (2.0 * h), (p - 2.0 * f0 + q) / (h * h)))
    };
    let (d1, s1) = at(h)?;
    let (d2, s2) = at(h / 2.0)?;
    Ok(((4.0 * d2 - d1) / 3.0, (4.0 * s2 - s1) / 3.0))
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

fn positive(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// One instance: random points in the unit square, random ρ, σ, ψ and v.
pub fn derivative_check(instance: usize, eps: f64, seed: u64) -> Result<DerivativeCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(instance as u64));
    let n = rng.random_range(2..=8);
    let m = rng.random_range(2..=8);
    let spec = ManifoldSpec::<f64>::euclidean(2, None)?;
    let mut pts = |k: usize| -> Vec<_> {
        (0..k)
            .map(|_| crate::manifold::Point::new(vec![rng.random::<f64>(), rng.random::<f64>()]))
            .collect()
    };
    let xs = pts(n);
    let ys = pts(m);
    let cost = CostMatrix::from_points(&spec, &xs, &ys)?;
    let rho = positive(&mut rng, n);
    let sigma = positive(&mut rng, m);
    let psi = gaussian(&mut rng, m, 0.1);
    let v = gaussian(&mut rng, m, 1.0);

    let state = EntropicState::new(eps, psi.clone(), sigma.clone())?;
    let along = |t: f64| -> Result<EntropicState<f64>> {
        let p = psi.iter().zip(&v).map(|(a, b)| a + t * b).collect();
        EntropicState::new(eps, p, sigma.clone())
    };
    let h = 0.02 * eps;
    let (kd, kh) = differences(|t| kantorovich_eps(&along(t)?, &cost, &rho), h)?;
    let (id, ih) = differences(|t| Ok(i_functional_eps(&along(t)?, &cost, &rho)?.value), h)?;

    Ok(DerivativeCheck {
        instance,
        n,
        m,
        eps,
        k_grad: (kd, dot(&kantorovich_gradient(&state, &cost, &rho)?, &v)),
        k_hess: (kh, kantorovich_hessian_quadratic(&state, &cost, &rho, &v)?),
        i_grad: (id, dot(&i_gradient(&state, &cost, &rho)?, &v)),
        i_hess: (ih, i_hessian_quadratic(&state, &cost, &rho, &v)?),
    })
}

/// `count` instances alternating ε between the two given values.
pub fn derivative_suite(count: usize, eps: [f64; 2], seed: u64) -> Result<Vec<DerivativeCheck>> {
    (0..count).map(|i| derivative_check(i, eps[i % 2], seed)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ConcavityCheck {
    pub spec: String,
    pub instance: usize,
    pub eps: f64,
    pub radius: f64,
    pub k: f64,
    pub support: usize,
    pub comparable: bool,
    /// Largest hessian − bound over the directions.
    pub worst_margin: f64,
    pub violations: usize,
}

/// Weighted-ball instances on `spec`: ρ uniform samples, ρ^V around a random
/// support point, random targets and ψ, then `directions` random v.
pub fn concavity_suite(
    spec: &ManifoldSpec<f64>,
    instances: usize,
    directions: usize,
    slack: f64,
    seed: u64,
) -> Result<Vec<ConcavityCheck>> {
    let (_, r_cap) = spec.strong_convexity();
    let radius = r_cap.min(0.5);
    let k = weighted_ball_k(spec);
    let mut out = Vec::with_capacity(instances);
    for inst in 0..instances {
        let s = seed.wrapping_mul(1000).wrapping_add(inst as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let eps = if inst % 2 == 0 { 0.05 } else { 0.5 };
        let xs = spec.sample_uniform(CONCAVITY_SAMPLES, s)?;
        let ys = spec.sample_uniform(8, s ^ 0x5eed)?;
        let rho = DiscreteMeasure::from_samples(spec, xs.clone(), None)?;
        let center = rng.random_range(0..xs.len());
        let ball = weighted_ball_measure(&rho, center, radius, k, DensitySpec::<f64>::uniform().ratio())?;
        let cost = CostMatrix::from_points(&spec.ambient(), &xs, &ys)?;
        let state = EntropicState::uniform(eps, gaussian(&mut rng, ys.len(), 0.2))?;
        let mut worst = f64::NEG_INFINITY;
        let mut violations = 0;
        for _ in 0..directions {
            let v = gaussian(&mut rng, ys.len(), 1.0);
            let sides = strong_concavity_sides(&state, &cost, &ball.weights, &v)?;
            worst = worst.max(sides.hessian - sides.bound);
            if !sides.holds(slack) {
                violations += 1;
            }
        }
        out.push(ConcavityCheck {
            spec: spec.to_string(),
            instance: inst,
            eps,
            radius,
            k,
            support: ball.support.len(),
            comparable: ball.check_comparability(&rho.weights),
            worst_margin: worst,
            violations,
        });
    }
    Ok(out)
}

/// The three families used by the concavity suite.
pub fn concavity_families() -> Result<Vec<ManifoldSpec<f64>>> {
    Ok(vec![
        ManifoldSpec::euclidean(2, Some(Domain::Ball { center: vec![0.0, 0.0], radius: 1.0 }))?,
        ManifoldSpec::sphere(2)?,
        ManifoldSpec::torus(2)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finite_differences_match() {
        for c in derivative_suite(6, [0.05, 0.5], 3).unwrap() {
            assert!(c.max_rel_error() <= 1e-5, "{c:?}");
        }
    }

    #[test]
    fn concavity_holds_on_small_batch() {
        for spec in concavity_families().unwrap() {
            for c in concavity_suite(&spec, 2, 10, 1e-8, 1).unwrap() {
                assert_eq!(c.violations, 0, "{c:?}");
                assert!(c.comparable);
            }
        }
    }
}
