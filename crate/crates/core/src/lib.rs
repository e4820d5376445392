//! Perception-limited smooth safety filtering for velocity-level control.
//!
//! The crate builds a go-to-goal controller around circular keep-out zones,
//! filtered either by a gated quadratic program (piecewise closed form) or
//! by a smooth penalty relaxation. The whole filter pipeline is generic
//! over the scalar type, so the same code evaluates on `f64` and on
//! forward-mode dual numbers; that is how the tracking feedforward terms
//! for the double integrator and the planar drone are produced.

pub mod autodiff;
pub mod config;
pub mod error;
pub mod filters;
pub mod linalg;
pub mod model;
pub mod pipeline;
pub mod report;
pub mod scalar;
pub mod scalarfuncs;
pub mod sim;

pub use error::FilterError;
pub use filters::{FilterConfig, FilterKind, FilterOutput, WeightMatrix};
pub use pipeline::SafetyPipeline;
pub use scalar::Scalar;

/// First-order dual number with a single seed direction.
pub type Dual1 = autodiff::Dual<1>;
/// Dual number carrying two independent seed directions.
pub type Dual2 = autodiff::Dual<2>;
/// Plain state vector in the default precision.
pub type StateVec = Vec<f64>;
/// Plain control vector in the default precision.
pub type ControlVec = Vec<f64>;
