//! Closed-form Riemannian primitives on the unit sphere, the flat unit torus
//! and Euclidean domains.

mod domain;
mod parse;

pub use domain::Domain;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::{dot, norm, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Euclidean,
    Sphere,
    Torus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Point<T> {
    pub coords: Vec<T>,
}

impl<T: Real> Point<T> {
    pub fn new(coords: Vec<T>) -> Self {
        Self { coords }
    }

    pub fn from_f64(coords: &[f64]) -> Self {
        Self { coords: coords.iter().map(|&c| T::lit(c)).collect() }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

/// Tangent vector in ambient coordinates (sphere) or chart coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector<T> {
    pub base: Point<T>,
    pub components: Vec<T>,
}

impl<T: Real> TangentVector<T> {
    pub fn new(base: Point<T>, components: Vec<T>) -> Self {
        Self { base, components }
    }

    pub fn zero(base: &Point<T>) -> Self {
        Self { base: base.clone(), components: vec![T::zero(); base.len()] }
    }

    pub fn norm(&self) -> T {
        norm(&self.components)
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            base: self.base.clone(),
            components: self.components.iter().map(|&c| c * s).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldSpec<T> {
    pub family: Family,
    pub dim: usize,
    /// Euclidean domains require one; on the sphere an optional cap.
    pub domain: Option<Domain<T>>,
}

const SPHERE_NORM_TOL: f64 = 1e-12;

impl<T: Real> ManifoldSpec<T> {
    pub fn sphere(dim: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::Domain(format!("sphere dimension {dim} not supported (1 or 2)")));
        }
        Ok(Self { family: Family::Sphere, dim, domain: None })
    }

    pub fn torus(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("torus dimension must be positive".into()));
        }
        Ok(Self { family: Family::Torus, dim, domain: None })
    }

    pub fn euclidean(dim: usize, domain: Option<Domain<T>>) -> Result<Self> {
        if !(1..=4).contains(&dim) {
            return Err(Error::Domain(format!("euclidean dimension {dim} not supported (1..=4)")));
        }
        let spec = Self { family: Family::Euclidean, dim, domain };
        if let Some(d) = &spec.domain {
            d.validate(&spec)?;
        }
        Ok(spec)
    }

    pub fn with_domain(&self, domain: Domain<T>) -> Result<Self> {
        let spec = Self { family: self.family, dim: self.dim, domain: Some(domain) };
        spec.domain.as_ref().unwrap().validate(&spec)?;
        Ok(spec)
    }

    /// Same manifold, whole-space domain.
    pub fn ambient(&self) -> Self {
        Self { family: self.family, dim: self.dim, domain: None }
    }

    /// Length of a coordinate vector: d+1 on the sphere, d otherwise.
    pub fn coord_len(&self) -> usize {
        match self.family {
            Family::Sphere => self.dim + 1,
            _ => self.dim,
        }
    }

    pub fn injectivity_radius(&self) -> T {
        match self.family {
            Family::Sphere => T::PI(),
            Family::Torus => T::lit(0.5),
            Family::Euclidean => T::infinity(),
        }
    }

    /// Semi-concavity constant of c = dist²/2 used by the probe suites.
    pub fn semiconcavity_lambda(&self) -> T {
        match self.family {
            Family::Euclidean => T::lit(2.0),
            Family::Sphere | Family::Torus => T::lit(4.0),
        }
    }

    /// (θ, R): dist(·, x)² is θ-strongly convex on B(x, R).
    pub fn strong_convexity(&self) -> (T, T) {
        match self.family {
            Family::Sphere => (T::lit(0.5), T::FRAC_PI_4()),
            Family::Torus => (T::one(), T::lit(0.125)),
            Family::Euclidean => (T::lit(2.0), T::infinity()),
        }
    }

    pub fn ricci_lower(&self) -> T {
        match self.family {
            Family::Sphere => T::from_usize(self.dim - 1).unwrap(),
            _ => T::zero(),
        }
    }

    pub fn validate(&self, x: &Point<T>) -> Result<()> {
        if x.len() != self.coord_len() {
            return Err(Error::Domain(format!(
                "point has {} coordinates, expected {}",
                x.len(),
                self.coord_len()
            )));
        }
        if x.coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("point has non-finite coordinates".into()));
        }
        match self.family {
            Family::Sphere => {
                let n = norm(&x.coords);
                if (n - T::one()).abs() > T::lit(SPHERE_NORM_TOL).max(T::epsilon() * T::lit(8.0)) {
                    return Err(Error::Domain(format!("sphere point has norm {n}")));
                }
            }
            Family::Torus => {
                if x.coords.iter().any(|&c| c < T::zero() || c >= T::one()) {
                    return Err(Error::Domain("torus coordinates must lie in [0,1)".into()));
                }
            }
            Family::Euclidean => {}
        }
        Ok(())
    }

    fn validate_tangent(&self, v: &TangentVector<T>) -> Result<()> {
        self.validate(&v.base)?;
        if v.components.len() != self.coord_len() {
            return Err(Error::Domain("tangent vector has the wrong length".into()));
        }
        if self.family == Family::Sphere {
            let scale = T::one().max(v.norm());
            if dot(&v.base.coords, &v.components).abs() > T::lit(1e-10) * scale {
                return Err(Error::Domain("sphere tangent vector not orthogonal to its base".into()));
            }
        }
        Ok(())
    }

    pub fn dist(&self, x: &Point<T>, y: &Point<T>) -> Result<T> {
        self.validate(x)?;
        self.validate(y)?;
        Ok(self.dist_raw(&x.coords, &y.coords))
    }

    /// Distance on already validated coordinates.
    #[inline]
    pub(crate) fn dist_raw(&self, x: &[T], y: &[T]) -> T {
        match self.family {
            Family::Euclidean => {
                let mut s = T::zero();
                for (&a, &b) in x.iter().zip(y) {
                    s += (a - b) * (a - b);
                }
                s.sqrt()
            }
            Family::Torus => {
                let mut s = T::zero();
                for (&a, &b) in x.iter().zip(y) {
                    let d = wrap_disp(b - a);
                    s += d * d;
                }
                s.sqrt()
            }
            Family::Sphere => {
                // 2·atan2(|x−y|, |x+y|) is accurate at both ends of [0, π].
                let mut dm = T::zero();
                let mut dp = T::zero();
                for (&a, &b) in x.iter().zip(y) {
                    dm += (a - b) * (a - b);
                    dp += (a + b) * (a + b);
                }
                T::lit(2.0) * dm.sqrt().atan2(dp.sqrt())
            }
        }
    }

    /// Squared-distance cost c(x, y) = dist(x, y)²/2 on validated coordinates.
    #[inline]
    pub(crate) fn cost_raw(&self, x: &[T], y: &[T]) -> T {
        let d = self.dist_raw(x, y);
        T::lit(0.5) * d * d
    }

    pub fn exp_map(&self, x: &Point<T>, v: &TangentVector<T>) -> Result<Point<T>> {
        self.validate(x)?;
        if v.base.coords != x.coords {
            return Err(Error::Domain("tangent vector based at a different point".into()));
        }
        self.validate_tangent(v)?;
        Ok(Point::new(self.exp_raw(&x.coords, &v.components)))
    }

    pub(crate) fn exp_raw(&self, x: &[T], v: &[T]) -> Vec<T> {
        match self.family {
            Family::Euclidean => x.iter().zip(v).map(|(&a, &b)| a + b).collect(),
            Family::Torus => x.iter().zip(v).map(|(&a, &b)| wrap_unit(a + b)).collect(),
            Family::Sphere => {
                let t = norm(v);
                if t == T::zero() {
                    return x.to_vec();
                }
                let (s, c) = t.sin_cos();
                let mut out: Vec<T> = x.iter().zip(v).map(|(&a, &b)| a * c + b * (s / t)).collect();
                // Re-project to kill the O(eps) drift accumulated by long flows.
                let n = norm(&out);
                out.iter_mut().for_each(|o| *o /= n);
                out
            }
        }
    }

    pub fn log_map(&self, x: &Point<T>, y: &Point<T>) -> Result<TangentVector<T>> {
        self.validate(x)?;
        self.validate(y)?;
        Ok(TangentVector::new(x.clone(), self.log_raw(&x.coords, &y.coords)?))
    }

    pub(crate) fn log_raw(&self, x: &[T], y: &[T]) -> Result<Vec<T>> {
        match self.family {
            Family::Euclidean => Ok(y.iter().zip(x).map(|(&b, &a)| b - a).collect()),
            // Displacements live in (−1/2, 1/2]; a coordinate difference of
            // exactly 1/2 takes the + branch (smallest shift applied to x).
            Family::Torus => Ok(y.iter().zip(x).map(|(&b, &a)| wrap_disp(b - a)).collect()),
            Family::Sphere => {
                let theta = self.dist_raw(x, y);
                if theta == T::zero() {
                    return Ok(vec![T::zero(); x.len()]);
                }
                let c = dot(x, y);
                let w: Vec<T> = y.iter().zip(x).map(|(&b, &a)| b - c * a).collect();
                let wn = norm(&w);
                let sum_norm = norm(&x.iter().zip(y).map(|(&a, &b)| a + b).collect::<Vec<_>>());
                if sum_norm < T::lit(1e-12) || wn == T::zero() {
                    return Err(Error::CutLocus("antipodal points on the sphere".into()));
                }
                Ok(w.iter().map(|&wi| wi * (theta / wn)).collect())
            }
        }
    }

    pub fn geodesic_point(&self, x: &Point<T>, y: &Point<T>, t: T) -> Result<Point<T>> {
        if !(t >= T::zero() && t <= T::one()) {
            return Err(Error::InvalidInput(format!("geodesic parameter {t} outside [0,1]")));
        }
        let v = self.log_map(x, y)?;
        if t == T::one() {
            return Ok(y.clone());
        }
        Ok(Point::new(self.exp_raw(&x.coords, &v.scaled(t).components)))
    }

    /// Uniform unit tangent direction at `x`.
    pub(crate) fn random_unit_tangent<R: Rng>(&self, x: &[T], rng: &mut R) -> Vec<T> {
        loop {
            let mut v: Vec<T> = (0..self.coord_len())
                .map(|_| T::lit(rng.sample::<f64, _>(StandardNormal)))
                .collect();
            if self.family == Family::Sphere {
                let c = dot(&v, x);
                v.iter_mut().zip(x).for_each(|(vi, &xi)| *vi -= c * xi);
            }
            let n = norm(&v);
            if n > T::lit(1e-6) {
                v.iter_mut().for_each(|vi| *vi /= n);
                return v;
            }
        }
    }

    /// I.i.d. samples from the normalized volume of the domain.
    pub fn sample_uniform(&self, n: usize, seed: u64) -> Result<Vec<Point<T>>> {
        if n == 0 {
            return Err(Error::InvalidInput("sample count must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.sample_one(&mut rng).map(Point::new)).collect()
    }

    pub(crate) fn sample_one<R: Rng>(&self, rng: &mut R) -> Result<Vec<T>> {
        match (&self.domain, self.family) {
            (Some(d), _) => d.sample(self, rng),
            (None, Family::Sphere) => Ok(sample_sphere(self.dim + 1, rng)),
            (None, Family::Torus) => {
                Ok((0..self.dim).map(|_| wrap_unit(T::lit(rng.random::<f64>()))).collect())
            }
            (None, Family::Euclidean) => {
                Err(Error::Domain("cannot sample an unbounded euclidean space".into()))
            }
        }
    }

    pub fn contains(&self, x: &Point<T>) -> bool {
        match &self.domain {
            None => true,
            Some(d) => d.contains(self, &x.coords),
        }
    }

    /// dist(x, complement of the domain); +∞ when the domain is the whole manifold.
    pub fn boundary_dist(&self, x: &Point<T>) -> T {
        match &self.domain {
            None => T::infinity(),
            Some(d) => {
                if d.contains(self, &x.coords) {
                    d.dist_to_boundary(self, &x.coords)
                } else {
                    T::zero()
                }
            }
        }
    }

    /// Negative inside, positive outside, zero exactly on the boundary.
    pub(crate) fn signed_boundary_dist(&self, x: &[T]) -> Option<T> {
        self.domain.as_ref().map(|d| {
            let b = d.dist_to_boundary(self, x);
            if d.contains(self, x) {
                -b
            } else {
                b
            }
        })
    }

    /// Riemannian volume of the domain (or of the whole manifold).
    pub fn volume(&self) -> Option<T> {
        match &self.domain {
            Some(d) => d.volume(self),
            None => match self.family {
                Family::Torus => Some(T::one()),
                Family::Sphere => Some(sphere_area::<T>(self.dim)),
                Family::Euclidean => None,
            },
        }
    }
}

/// Surface measure of the unit sphere S^{k} embedded in R^{k+1}.
pub fn sphere_area<T: Real>(k: usize) -> T {
    match k {
        0 => T::lit(2.0),
        1 => T::lit(2.0) * T::PI(),
        2 => T::lit(4.0) * T::PI(),
        3 => T::lit(2.0) * T::PI() * T::PI(),
        _ => {
            // |S^k| = 2π/(k−1)·|S^{k−2}|
            let two_pi = T::lit(2.0) * T::PI();
            two_pi / T::from_usize(k - 1).unwrap() * sphere_area::<T>(k - 2)
        }
    }
}

/// Volume of the unit ball in R^d.
pub fn ball_volume<T: Real>(d: usize) -> T {
    sphere_area::<T>(d - 1) / T::from_usize(d).unwrap()
}

pub(crate) fn sample_sphere<T: Real, R: Rng>(len: usize, rng: &mut R) -> Vec<T> {
    loop {
        let v: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-12 {
            let out: Vec<T> = v.iter().map(|&a| T::lit(a / n)).collect();
            // One renormalization in T so f32 points also pass validation.
            let m = norm(&out);
            return out.into_iter().map(|a| a / m).collect();
        }
    }
}

/// Wrapped displacement in (−1/2, 1/2].
#[inline]
pub(crate) fn wrap_disp<T: Real>(d: T) -> T {
    d - (d - T::lit(0.5)).ceil()
}

#[inline]
pub(crate) fn wrap_unit<T: Real>(a: T) -> T {
    let w = a - a.floor();
    if w >= T::one() {
        T::zero()
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[f64]) -> Point<f64> {
        Point::from_f64(c)
    }

    #[test]
    fn sphere_quarter_circle() {
        let s = ManifoldSpec::<f64>::sphere(2).unwrap();
        let x = p(&[1.0, 0.0, 0.0]);
        let y = p(&[0.0, 1.0, 0.0]);
        assert!((s.dist(&x, &y).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        let v = TangentVector::new(x.clone(), vec![0.0, std::f64::consts::FRAC_PI_2, 0.0]);
        let e = s.exp_map(&x, &v).unwrap();
        for (a, b) in e.coords.iter().zip(&y.coords) {
            assert!((a - b).abs() < 1e-10);
        }
        let l = s.log_map(&x, &y).unwrap();
        assert!((l.components[1] - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!(l.components[0].abs() < 1e-15 && l.components[2].abs() < 1e-15);
        let m = s.geodesic_point(&x, &y, 0.5).unwrap();
        let h = 0.5f64.sqrt();
        assert!((m.coords[0] - h).abs() < 1e-12 && (m.coords[1] - h).abs() < 1e-12);
    }

    #[test]
    fn torus_wraps() {
        let t = ManifoldSpec::<f64>::torus(2).unwrap();
        let d = t.dist(&p(&[0.1, 0.9]), &p(&[0.9, 0.1])).unwrap();
        assert!((d - 0.08f64.sqrt()).abs() < 1e-12);
        let t1 = ManifoldSpec::<f64>::torus(1).unwrap();
        let x = p(&[0.9]);
        let e = t1.exp_map(&x, &TangentVector::new(x.clone(), vec![0.2])).unwrap();
        assert!((e.coords[0] - 0.1).abs() < 1e-12);
        let l = t1.log_map(&p(&[0.0]), &p(&[0.5])).unwrap();
        assert_eq!(l.components, vec![0.5]);
        let l = t1.log_map(&p(&[0.5]), &p(&[0.0])).unwrap();
        assert_eq!(l.components, vec![0.5]);
    }

    #[test]
    fn euclidean_basics() {
        let e = ManifoldSpec::<f64>::euclidean(3, None).unwrap();
        let x = p(&[0.3, -1.0, 2.0]);
        assert_eq!(e.dist(&x, &x).unwrap(), 0.0);
        let e2 = ManifoldSpec::<f64>::euclidean(2, None).unwrap();
        let g = e2.geodesic_point(&p(&[0.0, 0.0]), &p(&[2.0, 0.0]), 0.25).unwrap();
        assert_eq!(g.coords, vec![0.5, 0.0]);
        assert!(e2.sample_uniform(3, 1).is_err());
    }

    #[test]
    fn zero_vector_is_identity() {
        for s in [
            ManifoldSpec::<f64>::sphere(2).unwrap(),
            ManifoldSpec::torus(3).unwrap(),
            ManifoldSpec::euclidean(2, None).unwrap(),
        ] {
            let x = if s.family == Family::Euclidean {
                p(&[0.2, 0.4])
            } else {
                s.sample_uniform(1, 5).unwrap().remove(0)
            };
            assert_eq!(s.exp_map(&x, &TangentVector::zero(&x)).unwrap(), x);
            assert!(s.log_map(&x, &x).unwrap().norm() == 0.0);
            assert_eq!(s.geodesic_point(&x, &x, 0.0).unwrap(), x);
        }
    }

    #[test]
    fn antipodal_is_cut_locus() {
        let s = ManifoldSpec::<f64>::sphere(2).unwrap();
        let r = s.log_map(&p(&[0.0, 0.0, 1.0]), &p(&[0.0, 0.0, -1.0]));
        assert!(matches!(r, Err(Error::CutLocus(_))));
    }

    #[test]
    fn invalid_points_rejected() {
        let s = ManifoldSpec::<f64>::sphere(2).unwrap();
        assert!(s.dist(&p(&[1.0, 1.0, 0.0]), &p(&[1.0, 0.0, 0.0])).is_err());
        let t = ManifoldSpec::<f64>::torus(1).unwrap();
        assert!(t.dist(&p(&[1.0]), &p(&[0.0])).is_err());
        assert!(ManifoldSpec::<f64>::sphere(3).is_err());
    }

    #[test]
    fn sampling_moments() {
        let s = ManifoldSpec::<f64>::sphere(2).unwrap();
        let pts = s.sample_uniform(100_000, 11).unwrap();
        for k in 0..3 {
            let m = pts.iter().map(|q| q.coords[k]).sum::<f64>() / pts.len() as f64;
            assert!(m.abs() < 0.02, "axis {k}: {m}");
        }
        let b: ManifoldSpec<f64> = "ball:2:1.0".parse().unwrap();
        let pts = b.sample_uniform(100_000, 12).unwrap();
        let mr = pts.iter().map(|q| norm(&q.coords)).sum::<f64>() / pts.len() as f64;
        assert!((mr - 2.0 / 3.0).abs() < 0.01);
        let t = ManifoldSpec::<f64>::torus(2).unwrap();
        let one = t.sample_uniform(1, 0).unwrap();
        assert!(one[0].coords.iter().all(|&c| (0.0..1.0).contains(&c)));
        assert_eq!(s.sample_uniform(5, 99).unwrap(), s.sample_uniform(5, 99).unwrap());
    }

    #[test]
    fn f32_instantiation() {
        let s = ManifoldSpec::<f32>::sphere(2).unwrap();
        let pts = s.sample_uniform(10, 3).unwrap();
        let d = s.dist(&pts[0], &pts[1]).unwrap();
        assert!(d > 0.0 && d <= std::f32::consts::PI);
    }
}
