//! Implicit repeated squaring (IRS) and explicit squaring (ES) of `A^{-1} B`
//! for dense complex matrix pencils, together with the conditioning and QR
//! perturbation machinery that governs their stability, a scaling-and-squaring
//! matrix exponential with a pluggable final squaring step, and an experiment
//! harness comparing the two squaring routes.

pub mod conditioning;
pub mod error;
pub mod expm;
pub mod harness;
pub mod kernels;
pub mod qrperturb;
pub mod squaring;

pub use error::{Error, Result};
pub use kernels::{ComplexMatrix, Precision, Real};
