//! Decentralized learning of interference-aware analog beam codebooks.
//!
//! Each base station (BS) learns its own codebook of quantized-phase beams
//! from received-power measurements only: it never sees a channel matrix or
//! another BS's codebook. Interference from a neighbour is treated as a
//! random quantity whose mean is estimated by averaging measurements while
//! the neighbour sweeps its own beams.
//!
//! The core is generic over the scalar type (`f32` or `f64`, see
//! [`scalar::Real`]); the aliases below fix it to `f64`.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod cli;
pub mod codebook;
pub mod config;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod learning;
pub mod linalg;
pub mod measurement;
pub mod orchestrator;
pub mod scalar;
pub mod scenario;
pub mod theory;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Beam = codebook::QuantizedBeam<f64>;
pub type Codebook64 = codebook::Codebook<f64>;
pub type Scenario64 = scenario::Scenario<f64>;
pub type Geometry = geometry::ArrayGeometry<f64>;
pub type InterferenceChannel64 = geometry::InterferenceChannel<f64>;
pub type Matrix = linalg::CMatrix<f64>;
