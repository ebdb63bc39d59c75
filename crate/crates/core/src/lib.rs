//! Lie and Strang product formulas for `-Δ ± c/r`, sector by sector.

pub mod bounds;
pub mod cutoff;
pub mod error;
pub mod norms;
pub mod oracle;
pub mod quadrature;
pub mod ratefit;
pub mod spectral;
pub mod states;
pub mod trotter;

pub use error::{Error, Result};
