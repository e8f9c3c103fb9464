//! Scalar abstraction for the numerical kernels.
//!
//! All heavy math (Hamiltonian assembly, eigensolver, network layers,
//! collapse fits) is generic over [`Real`] so the same code runs in f64
//! (oracle checks, spectra) and f32 (network storage, record files).

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating-point scalar used by the numerical kernels.
pub trait Real:
    Float + NumAssign + FromPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an f64 constant.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to any Real")
    }

    fn as_f64(self) -> f64;
    fn as_f32(self) -> f32;
}

impl Real for f32 {
    fn as_f64(self) -> f64 {
        self as f64
    }
    fn as_f32(self) -> f32 {
        self
    }
}

impl Real for f64 {
    fn as_f64(self) -> f64 {
        self
    }
    fn as_f32(self) -> f32 {
        self as f32
    }
}
