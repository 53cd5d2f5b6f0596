//! Shared numerical kernels: float extensions, compensated summation,
//! quadrature, root bracketing, monotone cubic interpolation, and a
//! fixed-step fourth-order integrator.

pub mod fmath;
pub mod kahan;
pub mod pchip;
pub mod quad;
pub mod rng;
pub mod roots;
pub mod special;

pub use fmath::FloatExt;
pub use kahan::KahanSum;
pub use pchip::Pchip;
pub use quad::{adaptive_simpson, CumulativeTable};
pub use roots::bisect;
