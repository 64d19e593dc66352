//! Entropic optimal transport on simple Riemannian manifolds, stability of
//! Kantorovich potentials and maps, Boman chain covers and crossing counts.

// `!(x > 0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boman;
pub mod crofton;
pub mod entropic;
pub mod error;
pub mod lab;
pub mod manifold;
pub mod measure;
pub mod scalar;
pub mod transport;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double precision versions of the main types.
pub type Point64 = manifold::Point<f64>;
pub type ManifoldSpec64 = manifold::ManifoldSpec<f64>;
pub type Measure64 = measure::DiscreteMeasure<f64>;
pub type CostMatrix64 = entropic::CostMatrix<f64>;
pub type EntropicState64 = entropic::EntropicState<f64>;

/// Single precision versions.
pub type Point32 = manifold::Point<f32>;
pub type ManifoldSpec32 = manifold::ManifoldSpec<f32>;
pub type Measure32 = measure::DiscreteMeasure<f32>;
pub type CostMatrix32 = entropic::CostMatrix<f32>;
pub type EntropicState32 = entropic::EntropicState<f32>;
