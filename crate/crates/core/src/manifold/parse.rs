use std::fmt;
use std::str::FromStr;

use super::{Domain, Family, ManifoldSpec};
use crate::error::{Error, Result};
use crate::scalar::{norm, Real};

fn num<T: Real>(s: &str) -> Result<T> {
    s.trim()
        .parse::<f64>()
        .map(T::lit)
        .map_err(|_| Error::Config(format!("not a number: {s:?}")))
}

fn list<T: Real>(s: &str) -> Result<Vec<T>> {
    s.split(',').map(num).collect()
}

fn dim(s: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| Error::Config(format!("not a dimension: {s:?}")))
}

/// Spec strings: `sphere:2`, `torus:3`, `ball:2:1.0` (origin-centred),
/// `ball:2:c0,c1:r`, `box:2:0,0:1,1`, `annulus:2:r0:r1:degrees`,
/// `cap:2:radius` (about the last axis) or `cap:2:c0,c1,c2:radius`.
impl<T: Real> FromStr for ManifoldSpec<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let bad = || Error::Config(format!("malformed manifold spec {s:?}"));
        if parts.len() < 2 {
            return Err(bad());
        }
        let d = dim(parts[1])?;
        match (parts[0], parts.len()) {
            ("sphere", 2) => ManifoldSpec::sphere(d),
            ("torus", 2) => ManifoldSpec::torus(d),
            ("euclidean", 2) => ManifoldSpec::euclidean(d, None),
            ("ball", 3) => {
                ManifoldSpec::euclidean(d, Some(Domain::Ball { center: vec![T::zero(); d], radius: num(parts[2])? }))
            }
            ("ball", 4) => ManifoldSpec::euclidean(d, Some(Domain::Ball { center: list(parts[2])?, radius: num(parts[3])? })),
            ("box", 4) => ManifoldSpec::euclidean(d, Some(Domain::Box { lo: list(parts[2])?, hi: list(parts[3])? })),
            ("annulus", 5) => {
                let angle = num::<T>(parts[4])?.to_radians();
                ManifoldSpec::euclidean(d, Some(Domain::AnnulusSector { r0: num(parts[2])?, r1: num(parts[3])?, angle }))
            }
            ("cap", 3 | 4) => {
                let (center, radius) = if parts.len() == 3 {
                    let mut c = vec![T::zero(); d + 1];
                    c[d] = T::one();
                    (c, num(parts[2])?)
                } else {
                    let c: Vec<T> = list(parts[2])?;
                    let n = norm(&c);
                    (c.into_iter().map(|x| x / n).collect(), num(parts[3])?)
                };
                ManifoldSpec::sphere(d)?.with_domain(Domain::Cap { center, radius })
            }
            _ => Err(bad()),
        }
    }
}

fn join<T: Real>(v: &[T]) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",")
}

impl<T: Real> fmt::Display for ManifoldSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = self.dim;
        match (&self.domain, self.family) {
            (None, Family::Sphere) => write!(f, "sphere:{d}"),
            (None, Family::Torus) => write!(f, "torus:{d}"),
            (None, Family::Euclidean) => write!(f, "euclidean:{d}"),
            (Some(Domain::Ball { center, radius }), _) => {
                if center.iter().all(|c| c.is_zero()) {
                    write!(f, "ball:{d}:{radius}")
                } else {
                    write!(f, "ball:{d}:{}:{radius}", join(center))
                }
            }
            (Some(Domain::Box { lo, hi }), _) => write!(f, "box:{d}:{}:{}", join(lo), join(hi)),
            (Some(Domain::AnnulusSector { r0, r1, angle }), _) => {
                write!(f, "annulus:{d}:{r0}:{r1}:{}", angle.to_degrees())
            }
            (Some(Domain::Cap { center, radius }), _) => write!(f, "cap:{d}:{}:{radius}", join(center)),
        }
    }
}
