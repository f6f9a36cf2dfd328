//! Certified invariant densities of piecewise expanding interval maps.
//!
//! The transfer operator is discretized (Ulam cells for the `L1` norm, hat
//! functions on the circle for the `L∞` norm), the discrete fixed point is
//! enclosed from observed contraction of the iterates, and the a-posteriori
//! error bound is assembled in interval arithmetic. The certified density also
//! yields an enclosure of the Lyapunov exponent.
//!
//! Numerics are generic over a binary [`scalar::Scalar`]; exact map data and
//! oracles use [`ExactRational`].

pub mod bounds;
pub mod certify;
pub mod cli;
pub mod enclosure;
pub mod hat;
pub mod interval;
pub mod map;
pub mod matrix;
pub mod pipeline;
pub mod rational;
pub mod report;
pub mod scalar;
pub mod ulam;

pub use certify::{Certificate, LyapunovResult};
pub use interval::Interval;
pub use map::PiecewiseMap;
pub use matrix::{NormKind, TransitionMatrix};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineError, RunResult};
pub use rational::ExactRational;

pub type Interval64 = Interval<f64>;
pub type Interval32 = Interval<f32>;
pub type PiecewiseMap64 = PiecewiseMap<f64>;
pub type TransitionMatrix64 = TransitionMatrix<f64>;
pub type EnclosedDensity64 = enclosure::EnclosedDensity<f64>;
pub type RunResult64 = RunResult<f64>;
