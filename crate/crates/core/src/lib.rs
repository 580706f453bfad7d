//! Numerical toolkit for the spectral theory of rescaled sample correlation
//! matrices: limiting spectral distributions, CLTs for linear spectral
//! statistics, and the derived hypothesis tests.

pub mod clt;
pub mod correlation;
pub mod density;
pub mod hypothesis;
pub mod io;
pub mod error;
pub mod population;
pub mod probability;
pub mod quad;
pub mod scalar;
pub mod stieltjes;
pub mod testfn;
pub mod support;

pub use error::{Error, Result};

/// f64 aliases for the generic core types.
pub type PopulationSpec64 = population::PopulationSpec<f64>;
pub type SampleBatch64 = population::SampleBatch<f64>;
pub type RescaledSpec64 = correlation::RescaledSpec<f64>;
pub type Spectrum64 = correlation::Spectrum<f64>;
pub type SpectralMeasure64 = stieltjes::SpectralMeasure<f64>;
pub type StieltjesEval64 = stieltjes::StieltjesEval<f64>;
pub type SupportInfo64 = support::SupportInfo<f64>;
pub type ContourSpec64 = quad::ContourSpec<f64>;
