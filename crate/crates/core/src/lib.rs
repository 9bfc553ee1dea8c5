//! Non-linear reservoir engineering of a spin-coupled harmonic oscillator
//! outside the Lamb-Dicke regime.
//!
//! The crate covers the truncated Fock-space model ([`fock`]), Lindblad
//! dynamics and dark states ([`dynamics`]), the stabilization analysis layer
//! ([`nlre`]), maximum-likelihood tomography ([`tomography`]) and non-linear
//! parity readout ([`readout`]). Energies are in units of a reference
//! coupling `g = 1`; time is `τ = g·t`.

pub mod dynamics;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod nlre;
pub mod readout;
pub mod special;
pub mod tomography;
pub mod sparse;

pub use error::{NlreError, Result};
pub use fock::{CMatrix, FockSpace, OperatorMatrix, SidebandDrive, Spin};
pub use num_complex::Complex64;
