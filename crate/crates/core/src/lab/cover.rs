//! Boman cover runs: build, verify and glue random smooth functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::boman::{build_cover, gluing_check, verify_cover, BomanCover, CoverCheck, CoverParams, JohnDomain};
use crate::error::Result;
use crate::manifold::ManifoldSpec;
use crate::measure::DiscreteMeasure;

#[derive(Clone, Debug, Serialize)]
pub struct CoverRun {
    pub spec: String,
    pub seed: u64,
    pub samples: usize,
    pub radius: f64,
    pub params: CoverParams,
    pub eta: f64,
    pub balls: usize,
    pub check: CoverCheck,
    pub gluing_functions: usize,
    pub kappa_max: f64,
    #[serde(skip)]
    pub cover: Option<BomanCover<f64>>,
}

/// Cover of `samples` uniform points, verified on 4× as many fresh points,
/// then `functions` gluing checks with f(x) = a·sin(⟨w, x⟩ + b).
pub fn cover_run(
    spec: &ManifoldSpec<f64>,
    samples: usize,
    radius: f64,
    params: CoverParams,
    functions: usize,
    seed: u64,
) -> Result<CoverRun> {
    let domain = JohnDomain::new(spec)?;
    let pts = spec.sample_uniform(samples, seed)?;
    let rho = DiscreteMeasure::from_samples(spec, pts, None)?;
    let cover = build_cover(&domain, &rho, radius, params)?;
    let test = spec.sample_uniform(4 * samples, seed.wrapping_add(100))?;
    let check = verify_cover(&cover, &rho, &test)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(7));
    let k = spec.coord_len();
    let mut kappa_max: f64 = 0.0;
    for _ in 0..functions {
        let w: Vec<f64> = (0..k).map(|_| rng.random_range(-4.0..4.0)).collect();
        let (b, a) = (rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0));
        let f: Vec<f64> = rho
            .points
            .iter()
            .map(|x| a * (x.coords.iter().zip(&w).map(|(c, w)| c * w).sum::<f64>() + b).sin())
            .collect();
        kappa_max = kappa_max.max(gluing_check(&cover, &rho, &f)?.kappa_hat);
    }
    Ok(CoverRun {
        spec: spec.to_string(),
        seed,
        samples,
        radius,
        params,
        eta: domain.eta,
        balls: cover.balls.len(),
        check,
        gluing_functions: functions,
        kappa_max,
        cover: Some(cover),
    })
}

/// |a − b| ≤ tol·max(a, b).
pub fn within_relative(a: f64, b: f64, tol: f64) -> bool {
    a.is_finite() && b.is_finite() && (a - b).abs() <= tol * a.abs().max(b.abs())
}
