use rand::Rng;

use super::{ball_volume, sample_sphere, Family, ManifoldSpec};
use crate::error::{Error, Result};
use crate::scalar::{norm, Real};

/// Bounded region of a manifold.
#[derive(Clone, Debug, PartialEq)]
pub enum Domain<T> {
    Ball { center: Vec<T>, radius: T },
    Box { lo: Vec<T>, hi: Vec<T> },
    /// Planar sector {r0 < |x| < r1, 0 < arg x < angle}; non-convex once angle > π.
    AnnulusSector { r0: T, r1: T, angle: T },
    /// Geodesic ball on the sphere.
    Cap { center: Vec<T>, radius: T },
}

const MAX_REJECTIONS: usize = 1_000_000;

impl<T: Real> Domain<T> {
    pub(crate) fn validate(&self, spec: &ManifoldSpec<T>) -> Result<()> {
        let bad = |m: &str| Err(Error::Domain(m.to_string()));
        match (self, spec.family) {
            (Domain::Ball { center, radius }, Family::Euclidean) => {
                if center.len() != spec.dim || !(*radius > T::zero()) || !radius.is_finite() {
                    return bad("ball needs a center of length d and a positive finite radius");
                }
            }
            (Domain::Box { lo, hi }, Family::Euclidean) => {
                if lo.len() != spec.dim || hi.len() != spec.dim {
                    return bad("box corners must have length d");
                }
                if lo.iter().zip(hi).any(|(&a, &b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
                    return bad("box needs lo < hi in every coordinate");
                }
            }
            (Domain::AnnulusSector { r0, r1, angle }, Family::Euclidean) => {
                if spec.dim != 2 {
                    return bad("annulus sectors are planar");
                }
                let full = T::lit(2.0) * T::PI();
                if !(*r0 >= T::zero() && r0 < r1 && r1.is_finite()) || !(*angle > T::zero() && *angle <= full) {
                    return bad("annulus sector needs 0 <= r0 < r1 and 0 < angle <= 2π");
                }
            }
            (Domain::Cap { center, radius }, Family::Sphere) => {
                if center.len() != spec.dim + 1 || (norm(center) - T::one()).abs() > T::lit(1e-12) {
                    return bad("cap center must be a unit vector");
                }
                if !(*radius > T::zero() && *radius < T::PI()) {
                    return bad("cap radius must lie in (0, π)");
                }
            }
            _ => return bad("domain descriptor does not match the manifold family"),
        }
        Ok(())
    }

    pub(crate) fn contains(&self, spec: &ManifoldSpec<T>, x: &[T]) -> bool {
        match self {
            Domain::Ball { center, radius } => spec.dist_raw(x, center) < *radius,
            Domain::Box { lo, hi } => {
                x.iter().zip(lo.iter().zip(hi)).all(|(&c, (&a, &b))| c > a && c < b)
            }
            Domain::AnnulusSector { r0, r1, angle } => {
                let r = norm(x);
                let th = polar_angle(x);
                r > *r0 && r < *r1 && th > T::zero() && th < *angle
            }
            Domain::Cap { center, radius } => spec.dist_raw(x, center) < *radius,
        }
    }

    /// Distance from x to the boundary of the domain (either side).
    pub(crate) fn dist_to_boundary(&self, spec: &ManifoldSpec<T>, x: &[T]) -> T {
        match self {
            Domain::Ball { center, radius } | Domain::Cap { center, radius } => {
                (spec.dist_raw(x, center) - *radius).abs()
            }
            Domain::Box { lo, hi } => {
                let inside = self.contains(spec, x);
                if inside {
                    x.iter()
                        .zip(lo.iter().zip(hi))
                        .map(|(&c, (&a, &b))| (c - a).min(b - c))
                        .fold(T::infinity(), T::min)
                } else {
                    let mut s = T::zero();
                    let mut on_face = T::infinity();
                    for (&c, (&a, &b)) in x.iter().zip(lo.iter().zip(hi)) {
                        let e = (a - c).max(c - b).max(T::zero());
                        s += e * e;
                        on_face = on_face.min((c - a).abs().min((c - b).abs()));
                    }
                    if s == T::zero() {
                        on_face
                    } else {
                        s.sqrt()
                    }
                }
            }
            Domain::AnnulusSector { r0, r1, angle } => {
                let (cs, sn) = (angle.cos(), angle.sin());
                let e0 = [T::one(), T::zero()];
                let e1 = [cs, sn];
                let mut best = arc_dist(x, *r1, *angle).min(seg_dist(x, &e0, *r0, *r1)).min(seg_dist(
                    x,
                    &e1,
                    *r0,
                    *r1,
                ));
                if *r0 > T::zero() {
                    best = best.min(arc_dist(x, *r0, *angle));
                }
                best
            }
        }
    }

    pub(crate) fn volume(&self, spec: &ManifoldSpec<T>) -> Option<T> {
        match self {
            Domain::Ball { radius, .. } => Some(ball_volume::<T>(spec.dim) * radius.powi(spec.dim as i32)),
            Domain::Box { lo, hi } => Some(lo.iter().zip(hi).map(|(&a, &b)| b - a).fold(T::one(), |p, w| p * w)),
            Domain::AnnulusSector { r0, r1, angle } => Some(T::lit(0.5) * *angle * (*r1 * *r1 - *r0 * *r0)),
            Domain::Cap { radius, .. } => Some(cap_area(spec.dim, *radius)),
        }
    }

    /// Volume of the closed T-neighbourhood, when a closed form is available.
    pub(crate) fn slab_volume(&self, spec: &ManifoldSpec<T>, t: T) -> Option<T> {
        match self {
            Domain::Ball { radius, .. } => Some(ball_volume::<T>(spec.dim) * (*radius + t).powi(spec.dim as i32)),
            Domain::Box { lo, hi } if spec.dim == 2 => {
                let w = hi[0] - lo[0];
                let h = hi[1] - lo[1];
                Some(w * h + T::lit(2.0) * (w + h) * t + T::PI() * t * t)
            }
            Domain::Box { lo, hi } if spec.dim == 1 => Some(hi[0] - lo[0] + T::lit(2.0) * t),
            Domain::Cap { radius, .. } if *radius + t < T::PI() => Some(cap_area(spec.dim, *radius + t)),
            _ => None,
        }
    }

    /// Axis-aligned box containing the T-neighbourhood (euclidean domains).
    pub(crate) fn bounding_box(&self, spec: &ManifoldSpec<T>, t: T) -> Option<(Vec<T>, Vec<T>)> {
        match self {
            Domain::Ball { center, radius } => Some((
                center.iter().map(|&c| c - *radius - t).collect(),
                center.iter().map(|&c| c + *radius + t).collect(),
            )),
            Domain::Box { lo, hi } => {
                Some((lo.iter().map(|&a| a - t).collect(), hi.iter().map(|&b| b + t).collect()))
            }
            Domain::AnnulusSector { r1, .. } => {
                let r = *r1 + t;
                Some((vec![-r; spec.dim], vec![r; spec.dim]))
            }
            Domain::Cap { .. } => None,
        }
    }

    pub(crate) fn sample<R: Rng>(&self, spec: &ManifoldSpec<T>, rng: &mut R) -> Result<Vec<T>> {
        match self {
            Domain::Ball { center, radius } => {
                let dir: Vec<T> = sample_sphere(spec.dim, rng);
                let u: f64 = rng.random();
                let r = *radius * T::lit(u.powf(1.0 / spec.dim as f64));
                Ok(center.iter().zip(&dir).map(|(&c, &d)| c + r * d).collect())
            }
            Domain::Box { lo, hi } => Ok(lo
                .iter()
                .zip(hi)
                .map(|(&a, &b)| a + (b - a) * T::lit(rng.random::<f64>()))
                .collect()),
            Domain::AnnulusSector { r0, r1, angle } => {
                let u: f64 = rng.random();
                let a0 = (*r0 * *r0).to_f64_lossy();
                let a1 = (*r1 * *r1).to_f64_lossy();
                let r = T::lit((a0 + (a1 - a0) * u).sqrt());
                let th = *angle * T::lit(rng.random::<f64>());
                Ok(vec![r * th.cos(), r * th.sin()])
            }
            Domain::Cap { .. } => {
                for _ in 0..MAX_REJECTIONS {
                    let x: Vec<T> = sample_sphere(spec.dim + 1, rng);
                    if self.contains(spec, &x) {
                        return Ok(x);
                    }
                }
                Err(Error::Config("cap too small for rejection sampling".into()))
            }
        }
    }
}

pub(crate) fn cap_area<T: Real>(dim: usize, radius: T) -> T {
    match dim {
        1 => T::lit(2.0) * radius,
        _ => T::lit(2.0) * T::PI() * (T::one() - radius.cos()),
    }
}

/// Angle of a planar point in [0, 2π).
pub(crate) fn polar_angle<T: Real>(x: &[T]) -> T {
    let a = x[1].atan2(x[0]);
    if a < T::zero() {
        a + T::lit(2.0) * T::PI()
    } else {
        a
    }
}

fn arc_dist<T: Real>(x: &[T], r: T, angle: T) -> T {
    let th = polar_angle(x);
    if th <= angle {
        (norm(x) - r).abs()
    } else {
        let p0 = [r, T::zero()];
        let p1 = [r * angle.cos(), r * angle.sin()];
        norm(&[x[0] - p0[0], x[1] - p0[1]]).min(norm(&[x[0] - p1[0], x[1] - p1[1]]))
    }
}

fn seg_dist<T: Real>(x: &[T], dir: &[T; 2], r0: T, r1: T) -> T {
    let s = (x[0] * dir[0] + x[1] * dir[1]).max(r0).min(r1);
    norm(&[x[0] - s * dir[0], x[1] - s * dir[1]])
}
