//! Skills-based automation exposure: occupation exposure scores, wage-weighted
//! regional indices, industry concentration, validation and synthetic data.

pub mod capability;
pub mod concentration;
mod csvio;
pub mod econdata;
pub mod error;
pub mod index;
pub mod pipeline;
pub mod sum;
pub mod synth;
pub mod taxonomy;
pub mod validation;

pub use error::{Error, Result};
