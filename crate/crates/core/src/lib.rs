//! Cross far-/near-field channel modelling, compressive channel estimation and
//! widely-spaced multi-subarray hybrid beamforming for ultra-large arrays.

pub mod beamforming;
pub mod channel;
pub mod error;
pub mod estimation;
pub mod experiments;
pub mod geometry;
pub mod linalg;
pub mod metrics;

pub use error::{Error, Result};
