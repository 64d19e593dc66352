//! Floating point abstraction shared by every module.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Scalar type of the library: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics only for values the type cannot hold at all.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal not representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Exponent offset below which a term is negligible inside a log-sum-exp.
    #[inline]
    fn lse_cutoff() -> Self {
        -Self::epsilon().ln() + Self::lit(4.0)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub(crate) fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Neumaier compensated sum; keeps long accumulations independent of order to
/// well below the tolerances used by the experiments.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct KahanSum<T> {
    sum: T,
    comp: T,
}

impl<T: Real> KahanSum<T> {
    pub fn new() -> Self {
        Self { sum: T::zero(), comp: T::zero() }
    }

    #[inline]
    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum + self.comp
    }
}

pub(crate) fn compensated_sum<T: Real, I: IntoIterator<Item = T>>(it: I) -> T {
    let mut acc = KahanSum::new();
    for x in it {
        acc.add(x);
    }
    acc.value()
}
