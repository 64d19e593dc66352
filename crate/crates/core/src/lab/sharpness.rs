//! The radial pair |x|, max(|x|, ε) on the unit disk/ball.

use serde::Serialize;

use super::report::ExponentReport;
use crate::entropic::{geometric_schedule, SolverConfig};
use crate::error::{Error, Result};
use crate::manifold::{ManifoldSpec, Point};
use crate::measure::{wasserstein1, weighted_variance, DiscreteMeasure};
use crate::transport::{potential_from_target, PotentialSolution};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SharpnessRecord {
    pub eps: f64,
    pub mean_diff: f64,
    pub second_moment: f64,
    pub variance: f64,
    pub w1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SharpnessInstance {
    pub d: usize,
    pub records: Vec<SharpnessRecord>,
}

/// (d+2)/(2d).
pub fn alpha(d: usize) -> f64 {
    (d as f64 + 2.0) / (2.0 * d as f64)
}

pub fn sharpness_closed_form(d: usize, eps: f64) -> Result<SharpnessRecord> {
    if d == 0 || !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidInput(format!("need d >= 1 and eps in (0,1), got d={d}, eps={eps}")));
    }
    let df = d as f64;
    let mean_diff = eps.powf(df + 1.0) / (df + 1.0);
    let second_moment = 2.0 * eps.powf(df + 2.0) / ((df + 1.0) * (df + 2.0));
    Ok(SharpnessRecord {
        eps,
        mean_diff,
        second_moment,
        variance: second_moment - mean_diff * mean_diff,
        w1: eps.powi(d as i32),
    })
}

pub fn sharpness_instance(d: usize, eps_values: &[f64]) -> Result<SharpnessInstance> {
    let records = eps_values.iter().map(|&e| sharpness_closed_form(d, e)).collect::<Result<_>>()?;
    Ok(SharpnessInstance { d, records })
}

/// Variance against w1 of the closed-form series.
pub fn closed_form_report(inst: &SharpnessInstance) -> Result<ExponentReport> {
    let pairs: Vec<(f64, f64)> = inst.records.iter().map(|r| (r.w1, r.variance)).collect();
    ExponentReport::new(pairs, 1.0)
}

/// n points of the unit disk on a golden-angle spiral, equal mass per annulus.
pub fn sunflower_disk(n: usize) -> Vec<Point<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let r = ((k as f64 + 0.5) / n as f64).sqrt();
            let t = k as f64 * golden;
            Point::new(vec![r * t.cos(), r * t.sin()])
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct NumericSharpness {
    pub report: ExponentReport,
    /// Per ε: (ε, numeric variance, closed-form variance, measured W₁).
    pub rows: Vec<(f64, f64, f64, f64)>,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct NumericConfig {
    pub n_rho: usize,
    pub grid_m: usize,
    pub eps_final: f64,
    pub schedule_ratio: f64,
    pub solver: SolverConfig<f64>,
}

impl Default for NumericConfig {
    fn default() -> Self {
        Self { n_rho: 2000, grid_m: 800, eps_final: 1e-3, schedule_ratio: 0.5, solver: SolverConfig::default() }
    }
}

/// Full pipeline at d = 2: μ uniform on the circle grid, ν moves mass ε² to
/// the origin; potentials from the annealed solver.
pub fn sharpness_numeric(eps_values: &[f64], cfg: &NumericConfig) -> Result<NumericSharpness> {
    if cfg.n_rho == 0 || cfg.n_rho > 10_000 || cfg.grid_m < 3 {
        return Err(Error::Config("need 0 < n_rho <= 10^4 and grid_m >= 3".into()));
    }
    let spec = ManifoldSpec::<f64>::euclidean(2, None)?;
    let rho = DiscreteMeasure::from_samples(&spec, sunflower_disk(cfg.n_rho), None)?;
    let k = cfg.grid_m - 1;
    let mut grid: Vec<Point<f64>> = (0..k)
        .map(|j| {
            let t = 2.0 * std::f64::consts::PI * j as f64 / k as f64;
            Point::new(vec![t.cos(), t.sin()])
        })
        .collect();
    grid.push(Point::new(vec![0.0, 0.0]));
    let schedule = geometric_schedule(1.0, cfg.eps_final, cfg.schedule_ratio)?;
    let weights = |core: f64| -> Vec<f64> {
        let mut w = vec![(1.0 - core) / k as f64; k];
        w.push(core);
        w
    };
    let mu = DiscreteMeasure::from_samples(&spec, grid.clone(), Some(weights(0.0)))?;
    let solve = |m: &DiscreteMeasure<f64>, eps: f64| -> Result<PotentialSolution<f64>> {
        potential_from_target(&rho, m, &schedule, &cfg.solver).map_err(|e| match e {
            Error::NonConvergence { iterations, residual, last_psi, .. } => {
                Error::NonConvergence { eps, iterations, residual, last_psi }
            }
            other => other,
        })
    };
    let base = solve(&mu, 0.0)?;
    let mut iterations = base.solver.levels.iter().map(|l| l.iterations).sum::<usize>();
    let mut rows = Vec::new();
    let mut pairs = Vec::new();
    for &eps in eps_values {
        let exact = sharpness_closed_form(2, eps)?;
        let nu = DiscreteMeasure::from_samples(&spec, grid.clone(), Some(weights(eps * eps)))?;
        let sol = solve(&nu, eps)?;
        iterations += sol.solver.levels.iter().map(|l| l.iterations).sum::<usize>();
        let diff: Vec<f64> = base.potential.phi.iter().zip(&sol.potential.phi).map(|(a, b)| a - b).collect();
        let var = weighted_variance(&diff, &rho.weights)?;
        let w1 = wasserstein1(&mu, &nu)?;
        rows.push((eps, var, exact.variance, w1));
        pairs.push((w1, var));
    }
    Ok(NumericSharpness { report: ExponentReport::new(pairs, 1.0)?, rows, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        let r = sharpness_closed_form(2, 0.5).unwrap();
        assert!((r.mean_diff - 0.0416667).abs() < 5e-8);
        assert!((r.second_moment - 0.0104167).abs() < 5e-8);
        assert!((r.variance - 0.0086806).abs() < 5e-8);
        assert_eq!(r.w1, 0.25);
        assert!((sharpness_closed_form(1, 1.0 - 1e-12).unwrap().w1 - 1.0).abs() < 1e-11);
        assert!(sharpness_closed_form(2, 1.0).is_err());
        assert!(sharpness_closed_form(0, 0.5).is_err());
    }

    #[test]
    fn closed_form_agrees_with_radial_quadrature() {
        // E f(|x|) for x uniform in the unit d-ball has density d r^{d−1}
        for d in [1usize, 2, 3, 5] {
            let eps = 0.4;
            let n = 200_000;
            let (mut m1, mut m2) = (0.0, 0.0);
            for k in 0..n {
                let r = (k as f64 + 0.5) / n as f64;
                let g = (eps - r).max(0.0);
                let w = d as f64 * r.powi(d as i32 - 1) / n as f64;
                m1 += w * g;
                m2 += w * g * g;
            }
            let c = sharpness_closed_form(d, eps).unwrap();
            assert!((m1 - c.mean_diff).abs() < 1e-9, "d={d}");
            assert!((m2 - c.second_moment).abs() < 1e-9, "d={d}");
        }
    }

    #[test]
    fn sunflower_is_in_disk() {
        let p = sunflower_disk(500);
        assert!(p.iter().all(|x| x.coords[0].hypot(x.coords[1]) < 1.0));
        let inner = p.iter().filter(|x| x.coords[0].hypot(x.coords[1]) < 0.5).count();
        assert_eq!(inner, 125);
    }
}
