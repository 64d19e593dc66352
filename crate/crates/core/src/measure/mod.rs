//! Discrete probability measures, density-weighted sampling and exact W₁.

mod io;
mod w1;

pub use io::{read_measure_csv, write_measure_csv};
pub use w1::{wasserstein1, wasserstein1_with_report, W1Report, W1_SIZE_CAP};

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::manifold::{ManifoldSpec, Point};
use crate::scalar::{compensated_sum, Real};

const WEIGHT_SUM_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure<T> {
    pub spec: ManifoldSpec<T>,
    pub points: Vec<Point<T>>,
    pub weights: Vec<T>,
}

impl<T: Real> DiscreteMeasure<T> {
    /// Normalizes `weights` (uniform when absent). Zero weights are kept.
    pub fn from_samples(spec: &ManifoldSpec<T>, points: Vec<Point<T>>, weights: Option<Vec<T>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("measure needs at least one point".into()));
        }
        for p in &points {
            spec.validate(p)?;
        }
        let n = points.len();
        let raw = weights.unwrap_or_else(|| vec![T::one(); n]);
        if raw.len() != n {
            return Err(Error::InvalidInput(format!("{} weights for {} points", raw.len(), n)));
        }
        if let Some(i) = raw.iter().position(|w| !w.is_finite() || *w < T::zero()) {
            return Err(Error::InvalidInput(format!("weight {i} is negative or not finite")));
        }
        let total = compensated_sum(raw.iter().copied());
        if !(total > T::zero()) || !total.is_finite() {
            return Err(Error::InvalidInput("weights cannot be normalized".into()));
        }
        let weights = raw.into_iter().map(|w| w / total).collect();
        Ok(Self { spec: spec.clone(), points, weights })
    }

    pub fn dirac(spec: &ManifoldSpec<T>, x: Point<T>) -> Result<Self> {
        Self::from_samples(spec, vec![x], None)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Integral of `f` given pointwise.
    pub fn mean(&self, f: &[T]) -> Result<T> {
        check_len(f.len(), self.len())?;
        Ok(compensated_sum(self.weights.iter().zip(f).map(|(&w, &v)| w * v)))
    }

    /// Support points with positive weight, and their weights.
    pub fn positive_part(&self) -> (Vec<Point<T>>, Vec<T>) {
        self.points
            .iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w > T::zero())
            .map(|(p, &w)| (p.clone(), w))
            .unzip()
    }

    pub fn check_normalized(&self) -> Result<()> {
        let s = compensated_sum(self.weights.iter().copied());
        if (s - T::one()).abs() > T::lit(WEIGHT_SUM_TOL).max(T::epsilon() * T::lit(64.0)) {
            return Err(Error::InvalidInput(format!("weights sum to {s}")));
        }
        Ok(())
    }
}

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::InvalidInput(format!("length mismatch: {a} values for {b} points")));
    }
    Ok(())
}

/// Var_m(f) = Σw(f − Σwf)², evaluated in two passes.
pub fn variance<T: Real>(f: &[T], m: &DiscreteMeasure<T>) -> Result<T> {
    weighted_variance(f, &m.weights)
}

pub fn weighted_variance<T: Real>(f: &[T], w: &[T]) -> Result<T> {
    check_len(f.len(), w.len())?;
    let mean = compensated_sum(w.iter().zip(f).map(|(&a, &b)| a * b));
    let v = compensated_sum(w.iter().zip(f).map(|(&a, &b)| a * (b - mean) * (b - mean)));
    Ok(v.max(T::zero()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DensityKind {
    Uniform,
    BoundedRatio,
}

pub type DensityFn<T> = Arc<dyn Fn(&Point<T>) -> T + Send + Sync>;

/// Density w.r.t. normalized volume, bounded in [lower, upper].
#[derive(Clone)]
pub struct DensitySpec<T> {
    pub kind: DensityKind,
    pub lower: T,
    pub upper: T,
    pub evaluator: DensityFn<T>,
}

impl<T: Real> DensitySpec<T> {
    pub fn uniform() -> Self {
        Self { kind: DensityKind::Uniform, lower: T::one(), upper: T::one(), evaluator: Arc::new(|_| T::one()) }
    }

    pub fn bounded(lower: T, upper: T, f: impl Fn(&Point<T>) -> T + Send + Sync + 'static) -> Result<Self> {
        if !(lower > T::zero() && upper >= lower && upper.is_finite()) {
            return Err(Error::Config(format!("density bounds [{lower}, {upper}] are not a finite positive range")));
        }
        Ok(Self { kind: DensityKind::BoundedRatio, lower, upper, evaluator: Arc::new(f) })
    }

    pub fn ratio(&self) -> T {
        self.upper / self.lower
    }
}

impl<T: Real> std::fmt::Debug for DensitySpec<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DensitySpec")
            .field("kind", &self.kind)
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .finish_non_exhaustive()
    }
}

const MIN_ACCEPTANCE: f64 = 1e-4;
const ACCEPTANCE_PROBE: usize = 100_000;

/// Rejection sampling against the uniform volume sampler.
pub fn sample_density<T: Real>(
    spec: &ManifoldSpec<T>,
    density: &DensitySpec<T>,
    n: usize,
    seed: u64,
) -> Result<DiscreteMeasure<T>> {
    if n == 0 {
        return Err(Error::InvalidInput("sample count must be positive".into()));
    }
    if density.kind == DensityKind::Uniform {
        return DiscreteMeasure::from_samples(spec, spec.sample_uniform(n, seed)?, None);
    }
    if !density.ratio().is_finite() {
        return Err(Error::Config("density ratio is not finite".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    let mut proposed = 0usize;
    while points.len() < n {
        let x = Point::new(spec.sample_one(&mut rng)?);
        proposed += 1;
        let f = (density.evaluator)(&x);
        if !(f >= T::zero()) || f > density.upper * (T::one() + T::lit(1e-9)) {
            return Err(Error::Config(format!("density value {f} outside [0, {}]", density.upper)));
        }
        let u: f64 = rng.random();
        if T::lit(u) * density.upper < f {
            points.push(x);
        }
        if proposed >= ACCEPTANCE_PROBE && (points.len() as f64) < MIN_ACCEPTANCE * proposed as f64 {
            return Err(Error::Config(format!(
                "acceptance rate {:.2e} below {MIN_ACCEPTANCE:e}",
                points.len() as f64 / proposed as f64
            )));
        }
    }
    DiscreteMeasure::from_samples(spec, points, None)
}
