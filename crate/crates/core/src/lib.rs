//! Locating the many-body-localization transition of the disordered
//! Heisenberg chain: exact diagonalization, adversarial domain
//! adaptation, and finite-size data collapse.

pub mod chain;
pub mod dataset;
pub mod linalg;
pub mod nn;
pub mod real;
pub mod scaling;
pub mod spectrum;

pub use real::Real;

/// Concrete scalar aliases; f64 drives spectra and fits, f32 the
/// network and record storage.
pub type Hamiltonian64 = chain::SparseHamiltonian<f64>;
pub type Spectrum64 = spectrum::SpectrumResult<f64>;
pub type DannModel32 = nn::DannModel<f32>;
