//! Batches of target pairs (μ, ν) sliding a smooth bump over a fixed grid.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::report::ExponentReport;
use super::sharpness::sunflower_disk;
use crate::entropic::{geometric_schedule, SolverConfig};
use crate::error::{Error, Result};
use crate::manifold::{Domain, Family, ManifoldSpec, Point};
use crate::measure::{wasserstein1, DiscreteMeasure};
use crate::transport::{map_discrepancy, potential_discrepancy, potential_from_target};

#[derive(Clone, Debug)]
pub struct StabilityConfig {
    pub n_rho: usize,
    pub grid_m: usize,
    /// Targets live on the domain inflated by this factor (about its centre).
    pub grid_scale: f64,
    pub bump_width: f64,
    /// Offset of the bump centre from the domain centre.
    pub bump_offset: f64,
    /// Displacements of the ν bump, geometric between these.
    pub shift_min: f64,
    pub shift_max: f64,
    pub n_pairs: usize,
    pub seed: u64,
    pub eps_final: f64,
    pub schedule_ratio: f64,
    pub solver: SolverConfig<f64>,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            n_rho: 600,
            grid_m: 400,
            grid_scale: 1.2,
            bump_width: 0.25,
            bump_offset: 0.1,
            shift_min: 2.1e-3,
            shift_max: 0.195,
            n_pairs: 20,
            seed: 1,
            eps_final: 1e-3,
            schedule_ratio: 0.5,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityBatch {
    pub potentials: ExponentReport,
    pub maps: ExponentReport,
    /// Per pair: (shift, W₁, Var_ρ(φ_μ − φ_ν), map discrepancy).
    pub rows: Vec<(f64, f64, f64, f64)>,
}

/// Golden-angle lattice on the cap of radius r about `center`.
pub fn fibonacci_cap(center: &[f64], r: f64, n: usize) -> Vec<Point<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let h = 1.0 - r.cos();
    let pole: Vec<Point<f64>> = (0..n)
        .map(|k| {
            let z = 1.0 - (k as f64 + 0.5) / n as f64 * h;
            let s = (1.0 - z * z).max(0.0).sqrt();
            let t = k as f64 * golden;
            Point::new(vec![s * t.cos(), s * t.sin(), z])
        })
        .collect();
    // reflection swapping the north pole and the centre
    let w = [-center[0], -center[1], 1.0 - center[2]];
    let ww: f64 = w.iter().map(|a| a * a).sum();
    if ww < 1e-24 {
        return pole;
    }
    pole.into_iter()
        .map(|p| {
            let c = 2.0 * (p.coords[0] * w[0] + p.coords[1] * w[1] + p.coords[2] * w[2]) / ww;
            Point::new((0..3).map(|i| p.coords[i] - c * w[i]).collect())
        })
        .collect()
}

/// (ρ-points, target grid, domain centre).
type Lattices = (Vec<Point<f64>>, Vec<Point<f64>>, Vec<f64>);

/// ρ-points and target grid for a domain with a lattice rule.
fn lattices(spec: &ManifoldSpec<f64>, cfg: &StabilityConfig) -> Result<Lattices> {
    let dom = spec.domain.as_ref().ok_or_else(|| Error::Config("stability batches need a domain".into()))?;
    match (spec.family, spec.dim, dom) {
        (Family::Sphere, 2, Domain::Cap { center, radius }) => Ok((
            fibonacci_cap(center, *radius, cfg.n_rho),
            fibonacci_cap(center, (*radius * cfg.grid_scale).min(std::f64::consts::FRAC_PI_2), cfg.grid_m),
            center.clone(),
        )),
        (Family::Euclidean, 2, Domain::Ball { center, radius }) => {
            let place = |pts: Vec<Point<f64>>, r: f64| -> Vec<Point<f64>> {
                pts.into_iter()
                    .map(|p| Point::new(vec![center[0] + r * p.coords[0], center[1] + r * p.coords[1]]))
                    .collect()
            };
            Ok((
                place(sunflower_disk(cfg.n_rho), *radius),
                place(sunflower_disk(cfg.grid_m), *radius * cfg.grid_scale),
                center.clone(),
            ))
        }
        _ => Err(Error::Config("bump families exist for cap domains on sphere:2 and disks in euclidean:2".into())),
    }
}

fn bump_weights(spec: &ManifoldSpec<f64>, grid: &[Point<f64>], c: &Point<f64>, width: f64) -> Result<Vec<f64>> {
    grid.iter()
        .map(|y| {
            let d = spec.dist(y, c)?;
            Ok(0.2 + (-0.5 * d * d / (width * width)).exp())
        })
        .collect()
}

/// Potential-variance and map-discrepancy reports over `n_pairs` shifts.
pub fn stability_batch(spec: &ManifoldSpec<f64>, cfg: &StabilityConfig) -> Result<StabilityBatch> {
    if cfg.n_pairs < 3 {
        return Err(Error::Config("need at least 3 pairs".into()));
    }
    if !(cfg.shift_min >= 0.0 && cfg.shift_max >= cfg.shift_min) {
        return Err(Error::Config("shift range must satisfy 0 <= min <= max".into()));
    }
    let (xs, grid, center) = lattices(spec, cfg)?;
    let ambient = spec.ambient();
    let rho = DiscreteMeasure::from_samples(&ambient, xs, None)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let c0 = {
        let dir = ambient.random_unit_tangent(&center, &mut rng);
        let step: Vec<f64> = dir.iter().map(|d| d * cfg.bump_offset).collect();
        Point::new(ambient.exp_raw(&center, &step))
    };
    let schedule = geometric_schedule(1.0, cfg.eps_final, cfg.schedule_ratio)?;
    let mu = DiscreteMeasure::from_samples(&ambient, grid.clone(), Some(bump_weights(&ambient, &grid, &c0, cfg.bump_width)?))?;
    let base = potential_from_target(&rho, &mu, &schedule, &cfg.solver)?;
    let mut rows = Vec::with_capacity(cfg.n_pairs);
    for k in 0..cfg.n_pairs {
        let t = k as f64 / (cfg.n_pairs - 1) as f64;
        let shift = if cfg.shift_min > 0.0 {
            cfg.shift_min * (cfg.shift_max / cfg.shift_min).powf(t)
        } else {
            cfg.shift_min + (cfg.shift_max - cfg.shift_min) * t
        };
        let dir = ambient.random_unit_tangent(&c0.coords, &mut rng);
        let step: Vec<f64> = dir.iter().map(|d| d * shift).collect();
        let c1 = Point::new(ambient.exp_raw(&c0.coords, &step));
        let w = bump_weights(&ambient, &grid, &c1, cfg.bump_width)?;
        let nu = DiscreteMeasure::from_samples(&ambient, grid.clone(), Some(w))?;
        let sol = potential_from_target(&rho, &nu, &schedule, &cfg.solver)?;
        let var = potential_discrepancy(&base.potential.phi, &sol.potential.phi, &rho.weights)?;
        let maps = map_discrepancy(
            &base.assignment.target_index,
            &sol.assignment.target_index,
            &rho.weights,
            &grid,
            &ambient,
        )?;
        let w1 = wasserstein1(&mu, &nu)?;
        rows.push((shift, w1, var, maps));
    }
    let potentials = ExponentReport::new(rows.iter().map(|r| (r.1, r.2)).collect(), 1.0)?;
    let maps = ExponentReport::new(rows.iter().map(|r| (r.1, r.3)).collect(), 1.0 / 6.0)?;
    Ok(StabilityBatch { potentials, maps, rows })
}
