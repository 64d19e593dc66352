//! Boundary crossings of geodesic segments, Monte-Carlo kinematic integrals,
//! the 1D reverse Poincaré inequality and semiconcave traces of potentials.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::manifold::{ball_volume, sphere_area, Domain, Family, ManifoldSpec, Point};
use crate::scalar::{compensated_sum, dot, norm, KahanSum, Real};

/// Uniform grid of the sign scan along a segment.
pub const SCAN_STEPS: usize = 2048;
const BISECTION_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct FlowSample<T> {
    pub x: Point<T>,
    pub v: Vec<T>,
    pub horizon: T,
    /// Transversal crossings, strictly increasing.
    pub crossing_params: Vec<T>,
    /// Roots with |derivative| below the solver tolerance; not counted.
    pub grazes: Vec<T>,
    /// Number of maximal sub-intervals of [0, T] spent inside the domain.
    pub interval_count: usize,
}

fn check_horizon<T: Real>(spec: &ManifoldSpec<T>, t: T) -> Result<()> {
    if !(t > T::zero()) || t >= spec.injectivity_radius() {
        return Err(Error::InvalidInput(format!(
            "horizon {t} must lie in (0, {})",
            spec.injectivity_radius()
        )));
    }
    Ok(())
}

fn geodesic<T: Real>(spec: &ManifoldSpec<T>, x: &[T], v: &[T], t: T) -> Vec<T> {
    let tv: Vec<T> = v.iter().map(|&c| c * t).collect();
    spec.exp_raw(x, &tv)
}

/// Locates the boundary crossings of s ↦ exp_x(s v), s ∈ [0, T].
pub fn flow_crossings<T: Real>(spec: &ManifoldSpec<T>, x: &Point<T>, v: &[T], horizon: T, solver_tol: T) -> Result<FlowSample<T>> {
    check_horizon(spec, horizon)?;
    if spec.domain.is_none() {
        return Ok(FlowSample {
            x: x.clone(),
            v: v.to_vec(),
            horizon,
            crossing_params: Vec::new(),
            grazes: Vec::new(),
            interval_count: 1,
        });
    }
    let f = |t: T| spec.signed_boundary_dist(&geodesic(spec, &x.coords, v, t)).unwrap();
    let h = horizon / T::from_usize(SCAN_STEPS).unwrap();
    let mut crossings = Vec::new();
    let mut grazes = Vec::new();
    let mut entries = 0usize;
    let (mut t0, mut f0) = (T::zero(), f(T::zero()));
    let start_inside = f0 < T::zero();
    while t0 < horizon {
        // signed distance is 1-Lipschitz along unit-speed geodesics
        let t1 = (t0 + f0.abs().max(h)).min(horizon);
        let f1 = f(t1);
        if !f1.is_finite() {
            return Err(Error::RootFinding {
                lo: t0.to_f64_lossy(),
                hi: t1.to_f64_lossy(),
                message: "crossing function is not finite".into(),
            });
        }
        if (f0 < T::zero()) != (f1 < T::zero()) {
            let root = bisect(&f, t0, t1, f0)?;
            let dh = T::lit(1e-7) * horizon;
            let lo = (root - dh).max(T::zero());
            let hi = (root + dh).min(horizon);
            let slope = (f(hi) - f(lo)) / (hi - lo);
            if slope.abs() < solver_tol {
                grazes.push(root);
            } else {
                if f1 < T::zero() {
                    entries += 1;
                }
                crossings.push(root);
            }
        }
        t0 = t1;
        f0 = f1;
    }
    Ok(FlowSample {
        x: x.clone(),
        v: v.to_vec(),
        horizon,
        crossing_params: crossings,
        grazes,
        interval_count: entries + usize::from(start_inside),
    })
}

fn bisect<T: Real>(f: &impl Fn(T) -> T, mut lo: T, mut hi: T, flo: T) -> Result<T> {
    let neg_lo = flo < T::zero();
    let tol = T::lit(BISECTION_TOL);
    for _ in 0..200 {
        if hi - lo <= tol {
            return Ok(T::lit(0.5) * (lo + hi));
        }
        let mid = T::lit(0.5) * (lo + hi);
        let fm = f(mid);
        if !fm.is_finite() {
            break;
        }
        if (fm < T::zero()) == neg_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::RootFinding {
        lo: lo.to_f64_lossy(),
        hi: hi.to_f64_lossy(),
        message: "bisection did not shrink the bracket".into(),
    })
}

/// Uniform sample of the geodesic ball B(c, r) (r below the injectivity radius).
fn sample_ball<T: Real, R: Rng>(spec: &ManifoldSpec<T>, c: &[T], r: T, rng: &mut R) -> Vec<T> {
    match spec.family {
        Family::Euclidean | Family::Torus => {
            let dir = spec.random_unit_tangent(c, rng);
            let u: f64 = rng.random();
            let s = r * T::lit(u.powf(1.0 / spec.dim as f64));
            let step: Vec<T> = dir.iter().map(|&d| d * s).collect();
            spec.exp_raw(c, &step)
        }
        Family::Sphere => {
            let dir = spec.random_unit_tangent(c, rng);
            let u: f64 = rng.random();
            let s = if spec.dim == 1 {
                r * T::lit(u)
            } else {
                // area of the cap of radius s is 2π(1 − cos s)
                (T::one() - T::lit(u) * (T::one() - r.cos())).acos()
            };
            let step: Vec<T> = dir.iter().map(|&d| d * s).collect();
            spec.exp_raw(c, &step)
        }
    }
}

fn ball_measure<T: Real>(spec: &ManifoldSpec<T>, r: T) -> T {
    match spec.family {
        Family::Sphere if spec.dim == 1 => T::lit(2.0) * r,
        Family::Sphere => T::lit(2.0) * T::PI() * (T::one() - r.cos()),
        _ => ball_volume::<T>(spec.dim) * r.powi(spec.dim as i32),
    }
}

/// Sampler for the T-neighbourhood X_T with its measure.
struct Slab<T> {
    lo: Vec<T>,
    hi: Vec<T>,
    cap: Option<(Vec<T>, T)>,
    measure: Option<T>,
}

impl<T: Real> Slab<T> {
    fn new(spec: &ManifoldSpec<T>, dom: &Domain<T>, t: T) -> Result<Self> {
        let measure = dom.slab_volume(spec, t);
        if let Domain::Cap { center, radius } = dom {
            if *radius + t >= T::PI() {
                return Err(Error::InvalidInput("cap neighbourhood covers the sphere".into()));
            }
            return Ok(Self { lo: vec![], hi: vec![], cap: Some((center.clone(), *radius + t)), measure });
        }
        let (lo, hi) = dom
            .bounding_box(spec, t)
            .ok_or_else(|| Error::Domain("no bounding box for this domain".into()))?;
        Ok(Self { lo, hi, cap: None, measure })
    }

    /// Draws from X_T; returns the point and the number of proposals used.
    fn draw<R: Rng>(&self, spec: &ManifoldSpec<T>, t: T, rng: &mut R) -> Result<(Vec<T>, usize)> {
        for tries in 1..=1_000_000usize {
            let x: Vec<T> = match &self.cap {
                Some((c, r)) => return Ok((sample_ball(spec, c, *r, rng), 1)),
                None => self
                    .lo
                    .iter()
                    .zip(&self.hi)
                    .map(|(&a, &b)| a + (b - a) * T::lit(rng.random::<f64>()))
                    .collect(),
            };
            if spec.signed_boundary_dist(&x).unwrap() <= t {
                return Ok((x, tries));
            }
        }
        Err(Error::Config("rejection sampling of the slab failed".into()))
    }

    fn box_volume(&self) -> T {
        self.lo.iter().zip(&self.hi).map(|(&a, &b)| b - a).fold(T::one(), |p, w| p * w)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CrossingEstimate {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub n: usize,
    pub mean: f64,
    pub std_error: f64,
    /// mean × vol(X_T) × |S^{d−1}|.
    pub unnormalized_integral: f64,
    pub unnormalized_std_error: f64,
    pub grazes: usize,
}

/// Monte-Carlo mean of the crossing count over (x, v) uniform in X_T × S^{d−1}.
pub fn estimate_crossing_integral<T: Real>(spec: &ManifoldSpec<T>, horizon: T, n: usize, seed: u64) -> Result<CrossingEstimate> {
    if n == 0 {
        return Err(Error::InvalidInput("zero samples".into()));
    }
    check_horizon(spec, horizon)?;
    let zero = CrossingEstimate {
        horizon: horizon.to_f64_lossy(),
        n,
        mean: 0.0,
        std_error: 0.0,
        unnormalized_integral: 0.0,
        unnormalized_std_error: 0.0,
        grazes: 0,
    };
    let Some(dom) = spec.domain.as_ref() else {
        return Ok(zero);
    };
    let slab = Slab::new(spec, dom, horizon)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = T::lit(1e-9);
    let mut sum = KahanSum::<f64>::new();
    let mut sq = KahanSum::<f64>::new();
    let mut proposals = 0usize;
    let mut grazes = 0usize;
    for _ in 0..n {
        let (x, tries) = slab.draw(spec, horizon, &mut rng)?;
        proposals += tries;
        let v = spec.random_unit_tangent(&x, &mut rng);
        let fs = flow_crossings(spec, &Point::new(x), &v, horizon, tol)?;
        grazes += fs.grazes.len();
        let c = fs.crossing_params.len() as f64;
        sum.add(c);
        sq.add(c * c);
    }
    let nf = n as f64;
    let mean = sum.value() / nf;
    let var = ((sq.value() - nf * mean * mean) / (nf - 1.0).max(1.0)).max(0.0);
    let se = (var / nf).sqrt();
    let vol = match slab.measure {
        Some(m) => m.to_f64_lossy(),
        None => slab.box_volume().to_f64_lossy() * nf / proposals as f64,
    };
    let area = sphere_area::<f64>(spec.dim - 1);
    Ok(CrossingEstimate {
        mean,
        std_error: se,
        unnormalized_integral: mean * vol * area,
        unnormalized_std_error: se * vol * area,
        grazes,
        ..zero
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ZetaEstimate {
    pub zeta_hat: f64,
    pub std_error: f64,
    pub bound_ratio: f64,
}

/// Smallest distance from c to the segment s ↦ exp_x(s v), s ∈ [0, T].
fn segment_dist<T: Real>(spec: &ManifoldSpec<T>, x: &[T], v: &[T], t: T, c: &[T]) -> T {
    match spec.family {
        Family::Euclidean => {
            let d: Vec<T> = c.iter().zip(x).map(|(&a, &b)| a - b).collect();
            let s = dot(&d, v).max(T::zero()).min(t);
            let r: Vec<T> = d.iter().zip(v).map(|(&a, &b)| a - s * b).collect();
            norm(&r)
        }
        Family::Torus => {
            // nearest lattice copy of c relative to x, then every neighbouring copy
            let base: Vec<T> = c.iter().zip(x).map(|(&a, &b)| a - b - (a - b).round()).collect();
            let d = spec.dim;
            let mut best = T::infinity();
            for code in 0..3usize.pow(d as u32) {
                let mut k = code;
                let mut diff = base.clone();
                for di in diff.iter_mut() {
                    *di += T::from_usize(k % 3).unwrap() - T::one();
                    k /= 3;
                }
                let s = dot(&diff, v).max(T::zero()).min(t);
                let r: Vec<T> = diff.iter().zip(v).map(|(&a, &b)| a - s * b).collect();
                best = best.min(norm(&r));
            }
            best
        }
        Family::Sphere => {
            // ⟨b_s, c⟩ = cos s ⟨x,c⟩ + sin s ⟨v,c⟩ is maximal at s* or at an end
            let (a, b) = (dot(x, c), dot(v, c));
            let star = b.atan2(a);
            let mut best = a.max(t.cos() * a + t.sin() * b);
            if star >= T::zero() && star <= t {
                best = best.max((a * a + b * b).sqrt());
            }
            best.max(-T::one()).min(T::one()).acos()
        }
    }
}

/// Liouville measure of the (x, v) whose length-T segment meets B(c, r).
pub fn zeta_diameter_bound<T: Real>(
    spec: &ManifoldSpec<T>,
    center: &Point<T>,
    radius: T,
    horizon: T,
    n: usize,
    seed: u64,
) -> Result<ZetaEstimate> {
    if n == 0 {
        return Err(Error::InvalidInput("zero samples".into()));
    }
    spec.validate(center)?;
    check_horizon(spec, horizon)?;
    if !(radius > T::zero()) || T::lit(2.0) * radius >= horizon {
        return Err(Error::InvalidInput("need 0 < diam(S) < T".into()));
    }
    let reach = radius + horizon;
    if reach >= spec.injectivity_radius() {
        return Err(Error::InvalidInput("r + T must stay below the injectivity radius".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..n {
        let x = sample_ball(spec, &center.coords, reach, &mut rng);
        let v = spec.random_unit_tangent(&x, &mut rng);
        if segment_dist(spec, &x, &v, horizon, &center.coords) < radius {
            hits += 1;
        }
    }
    let p = hits as f64 / n as f64;
    let scale = ball_measure(spec, reach).to_f64_lossy() * sphere_area::<f64>(spec.dim - 1);
    let diam = 2.0 * radius.to_f64_lossy();
    let zeta_hat = p * scale;
    Ok(ZetaEstimate {
        zeta_hat,
        std_error: (p * (1.0 - p) / n as f64).sqrt() * scale,
        bound_ratio: zeta_hat / diam.powi(spec.dim as i32 - 1),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReversePoincare {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// ‖u′−v′‖²_{L²} ≤ 8(‖u′‖_∞+‖v′‖_∞)^{4/3}‖u−v‖^{2/3}_{L²} for convex u, v on a grid.
pub fn reverse_poincare_1d<T: Real>(u: &[T], v: &[T], grid: &[T]) -> Result<ReversePoincare> {
    let n = grid.len();
    if n < 2 || u.len() != n || v.len() != n {
        return Err(Error::InvalidInput("u, v and the grid need equal length ≥ 2".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("grid must be strictly increasing".into()));
    }
    for (name, f) in [("u", u), ("v", v)] {
        if let Some(k) = first_nonconvex(f, grid) {
            return Err(Error::Precondition { index: k, message: format!("{name} is not convex") });
        }
    }
    let slopes = |f: &[T]| -> Vec<T> { (0..n - 1).map(|k| (f[k + 1] - f[k]) / (grid[k + 1] - grid[k])).collect() };
    let (du, dv) = (slopes(u), slopes(v));
    let lhs = compensated_sum((0..n - 1).map(|k| (grid[k + 1] - grid[k]) * (du[k] - dv[k]).powi(2)));
    let sup = |d: &[T]| d.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    let diff2 = compensated_sum((0..n - 1).map(|k| {
        let a = (u[k] - v[k]).powi(2);
        let b = (u[k + 1] - v[k + 1]).powi(2);
        T::lit(0.5) * (grid[k + 1] - grid[k]) * (a + b)
    }));
    let rhs = T::lit(8.0) * (sup(&du) + sup(&dv)).powf(T::lit(4.0 / 3.0)) * diff2.sqrt().powf(T::lit(2.0 / 3.0));
    let (lhs, rhs) = (lhs.to_f64_lossy(), rhs.to_f64_lossy());
    Ok(ReversePoincare { lhs, rhs, holds: lhs <= rhs * (1.0 + 1e-6) + 1e-9 })
}

fn first_nonconvex<T: Real>(f: &[T], grid: &[T]) -> Option<usize> {
    (1..f.len() - 1).find(|&k| {
        let l = (f[k] - f[k - 1]) / (grid[k] - grid[k - 1]);
        let r = (f[k + 1] - f[k]) / (grid[k + 1] - grid[k]);
        r - l < T::lit(-1e-9)
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvexTrace<T> {
    pub grid: Vec<T>,
    pub u: Vec<T>,
    /// Smallest ζ ≥ 0 with u − ζs² concave on the grid.
    pub zeta: T,
    /// L + 2ζT with L the largest trace-to-target distance.
    pub modulus_bound: T,
    /// Largest |discrete derivative| of u − ζs².
    pub max_derivative: T,
}

impl<T: Real> ConvexTrace<T> {
    pub fn modulus_holds(&self) -> bool {
        self.max_derivative <= self.modulus_bound * (T::one() + T::lit(1e-9)) + T::lit(1e-9)
    }
}

/// u(s) = min_j (½ dist(exp_x(s v), y_j)² − ψ_j) on a uniform grid of [0, T].
pub fn geodesic_trace<T: Real>(
    spec: &ManifoldSpec<T>,
    targets: &[Point<T>],
    psi: &[T],
    x: &Point<T>,
    v: &[T],
    horizon: T,
    n_grid: usize,
) -> Result<ConvexTrace<T>> {
    if targets.is_empty() || targets.len() != psi.len() {
        return Err(Error::InvalidInput("targets and psi must be non-empty and of equal length".into()));
    }
    if n_grid < 3 {
        return Err(Error::InvalidInput("trace grid needs at least 3 points".into()));
    }
    check_horizon(spec, horizon)?;
    let h = horizon / T::from_usize(n_grid - 1).unwrap();
    let cut = T::lit(1e-9);
    let mut grid = Vec::with_capacity(n_grid);
    let mut u = Vec::with_capacity(n_grid);
    let mut lip = T::zero();
    for k in 0..n_grid {
        let s = h * T::from_usize(k).unwrap();
        let b = geodesic(spec, &x.coords, v, s);
        let mut best = T::infinity();
        for (y, &p) in targets.iter().zip(psi) {
            let d = spec.dist_raw(&b, &y.coords);
            if spec.family == Family::Sphere && d > T::PI() - cut {
                return Err(Error::CutLocus(format!("trace point {k} is antipodal to a target")));
            }
            lip = lip.max(d);
            best = best.min(T::lit(0.5) * d * d - p);
        }
        grid.push(s);
        u.push(best);
    }
    let h2 = h * h;
    let mut zeta = T::zero();
    for k in 1..n_grid - 1 {
        let d2 = u[k + 1] - T::lit(2.0) * u[k] + u[k - 1];
        zeta = zeta.max((d2 - T::lit(1e-9)) / (T::lit(2.0) * h2));
    }
    let max_derivative = (0..n_grid - 1)
        .map(|k| ((u[k + 1] - u[k]) / h - zeta * (grid[k + 1] + grid[k])).abs())
        .fold(T::zero(), T::max);
    Ok(ConvexTrace {
        grid,
        u,
        zeta,
        modulus_bound: lip + T::lit(2.0) * zeta * horizon,
        max_derivative,
    })
}

/// CSV `T,n,mean,std_error,unnormalized_integral`.
pub fn write_crofton_csv<W: Write>(rows: &[CrossingEstimate], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["T", "n", "mean", "std_error", "unnormalized_integral"])?;
    for r in rows {
        w.write_record([
            format!("{}", r.horizon),
            r.n.to_string(),
            format!("{:e}", r.mean),
            format!("{:e}", r.std_error),
            format!("{:e}", r.unnormalized_integral),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk() -> ManifoldSpec<f64> {
        "ball:2:1".parse().unwrap()
    }

    #[test]
    fn line_through_disk() {
        let fs = flow_crossings(&disk(), &Point::new(vec![2.0, 0.0]), &[-1.0, 0.0], 4.0, 1e-9).unwrap();
        assert_eq!(fs.crossing_params.len(), 2);
        assert!((fs.crossing_params[0] - 1.0).abs() < 1e-10);
        assert!((fs.crossing_params[1] - 3.0).abs() < 1e-10);
        assert_eq!(fs.interval_count, 1);
        let inside = flow_crossings(&disk(), &Point::new(vec![0.1, 0.0]), &[0.0, 1.0], 0.5, 1e-9).unwrap();
        assert!(inside.crossing_params.is_empty());
        assert_eq!(inside.interval_count, 1);
        let outside = flow_crossings(&disk(), &Point::new(vec![3.0, 0.0]), &[0.0, 1.0], 1.0, 1e-9).unwrap();
        assert_eq!(outside.interval_count, 0);
    }

    #[test]
    fn cap_crossings_through_pole() {
        let spec: ManifoldSpec<f64> = "cap:2:0,0,1:0.7853981633974483".parse().unwrap();
        // start on the equator, head north: enters at polar angle π/4 from the pole
        let x = Point::new(vec![1.0, 0.0, 0.0]);
        let fs = flow_crossings(&spec, &x, &[0.0, 0.0, 1.0], 3.0, 1e-9).unwrap();
        let q = std::f64::consts::FRAC_PI_4;
        assert_eq!(fs.crossing_params.len(), 2);
        assert!((fs.crossing_params[0] - q).abs() < 1e-9);
        assert!((fs.crossing_params[1] - 3.0 * q).abs() < 1e-9);
    }

    #[test]
    fn whole_torus_has_no_boundary() {
        let t = ManifoldSpec::<f64>::torus(2).unwrap();
        let e = estimate_crossing_integral(&t, 0.3, 100, 1).unwrap();
        assert_eq!(e.unnormalized_integral, 0.0);
        assert!(estimate_crossing_integral(&t, 0.3, 0, 1).is_err());
        assert!(estimate_crossing_integral(&t, 0.6, 10, 1).is_err());
    }

    #[test]
    fn disk_kinematic_integral() {
        let e = estimate_crossing_integral(&disk(), 0.5, 20_000, 3).unwrap();
        let target = 8.0 * std::f64::consts::PI * 0.5;
        assert!((e.unnormalized_integral - target).abs() < 3.0 * e.unnormalized_std_error, "{e:?}");
    }

    #[test]
    fn zeta_plane_oracle() {
        let e = ManifoldSpec::<f64>::euclidean(2, None).unwrap();
        let c = Point::new(vec![0.0, 0.0]);
        let (r, t) = (0.1, 1.0);
        let z = zeta_diameter_bound(&e, &c, r, t, 40_000, 5).unwrap();
        let exact = 2.0 * std::f64::consts::PI * (std::f64::consts::PI * r * r + 2.0 * r * t);
        assert!((z.zeta_hat - exact).abs() < 4.0 * z.std_error, "{z:?} vs {exact}");
        assert!(zeta_diameter_bound(&e, &c, 0.6, t, 10, 5).is_err());
    }

    #[test]
    fn segment_distance_on_sphere() {
        let s = ManifoldSpec::<f64>::sphere(2).unwrap();
        let x = [1.0, 0.0, 0.0];
        let v = [0.0, 1.0, 0.0];
        let c = [0.0, 1.0, 0.0];
        assert!(segment_dist(&s, &x, &v, 2.0, &c).abs() < 1e-12);
        assert!((segment_dist(&s, &x, &v, 1.0, &c) - (std::f64::consts::FRAC_PI_2 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn reverse_poincare_square() {
        let n = 20_001;
        let grid: Vec<f64> = (0..n).map(|k| k as f64 / (n - 1) as f64).collect();
        let u: Vec<f64> = grid.iter().map(|s| s * s).collect();
        let v = vec![0.0; n];
        let r = reverse_poincare_1d(&u, &v, &grid).unwrap();
        assert!((r.lhs - 4.0 / 3.0).abs() < 1e-3);
        let exact_rhs = 8.0 * 2f64.powf(4.0 / 3.0) * 5f64.powf(-1.0 / 3.0);
        assert!((r.rhs - exact_rhs).abs() < 1e-3);
        assert!(r.holds);
        let same = reverse_poincare_1d(&u, &u, &grid).unwrap();
        assert_eq!(same.lhs, 0.0);
        assert!(same.holds);
        let bad: Vec<f64> = grid.iter().map(|s| -s * s).collect();
        match reverse_poincare_1d(&bad, &v, &grid) {
            Err(Error::Precondition { index, .. }) => assert_eq!(index, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn trace_single_target_is_half_concave() {
        let e = ManifoldSpec::<f64>::euclidean(2, None).unwrap();
        let y = vec![Point::new(vec![0.3, 0.0])];
        let tr = geodesic_trace(&e, &y, &[0.2], &Point::new(vec![0.0, 0.0]), &[1.0, 0.0], 1.0, 201).unwrap();
        // the 1e-9 certificate slack shifts ζ by 1e-9/(2h²)
        assert!(tr.zeta <= 0.5 + 1e-6 && tr.zeta >= 0.5 - 1e-4);
        assert!(tr.modulus_holds());
        let ys: Vec<Point<f64>> = [[0.2, 0.1], [0.6, -0.2], [0.9, 0.3]].iter().map(|p| Point::new(p.to_vec())).collect();
        let tr = geodesic_trace(&e, &ys, &[0.0; 3], &Point::new(vec![0.0, 0.0]), &[1.0, 0.0], 1.0, 501).unwrap();
        assert!(tr.zeta.is_finite() && tr.zeta <= 0.5 + 1e-6);
        assert!(tr.modulus_holds());
    }

    #[test]
    fn crofton_csv_header() {
        let mut buf = Vec::new();
        write_crofton_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "T,n,mean,std_error,unnormalized_integral\n");
    }
}
