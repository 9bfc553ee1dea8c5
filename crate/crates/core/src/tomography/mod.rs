//! Motional-state tomography from state-dependent displacement scans and
//! sideband flops.

pub mod bootstrap;
pub mod fockfit;
pub mod mle;
pub mod overlap;
pub mod record;

pub use crate::linalg::fidelity;
pub use bootstrap::{bootstrap, BootstrapOptions, FidelityStats, MLEResult, Resampling};
pub use fockfit::{fock_fit, FockFit, FockFitOptions};
pub use mle::{mle_reconstruct, Likelihood, MleOptions, MleOutcome, StepSchedule};
pub use overlap::{char_function, overlap_matrix, CharFunction, OverlapTable, SddGrid};
pub use record::{
    simulate_flops, simulate_sdd, FlopData, FlopPoint, FlopSettings, MeasurementRecord, SddData,
    SddPoint,
};
