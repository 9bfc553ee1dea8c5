//! Parameter sets used by the acceptance suite and the CLI presets.
//!
//! Each set fixes `(r, l, η)` and a target crossing `n*`; the ratio
//! `g_l/g_r` follows from [`NLREConfig::with_crossing_at`].

use serde::{Deserialize, Serialize};

use crate::dynamics::NLREConfig;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSet {
    pub r: usize,
    pub l: usize,
    pub eta: f64,
    pub n_star: f64,
}

impl ReferenceSet {
    pub const fn new(r: usize, l: usize, eta: f64, n_star: f64) -> Self {
        Self { r, l, eta, n_star }
    }

    pub fn config(&self) -> NLREConfig {
        NLREConfig::new(self.r, self.l, self.eta, 1.0).with_crossing_at(self.n_star)
    }
}

/// One stabilization setting per `(r, l)` with the population peak near `n*`.
pub const STABILIZATION_SETS: [ReferenceSet; 4] = [
    ReferenceSet::new(0, 2, 0.3, 5.0),
    ReferenceSet::new(1, 2, 0.5, 6.0),
    ReferenceSet::new(1, 3, 0.5, 5.0),
    ReferenceSet::new(2, 3, 0.6, 7.5),
];

/// Five `(1,2)` settings that move `n̄` and the Mandel `Q` independently,
/// evaluated after [`TUNING_PUMP_TIME`] of pumping from the thermal start.
pub const TUNING_SWEEP: [ReferenceSet; 5] = [
    ReferenceSet::new(1, 2, 0.30, 4.0),
    ReferenceSet::new(1, 2, 0.50, 6.0),
    ReferenceSet::new(1, 2, 0.60, 5.0),
    ReferenceSet::new(1, 2, 0.40, 9.0),
    ReferenceSet::new(1, 2, 0.45, 10.0),
];

/// Pumping duration for [`TUNING_SWEEP`] in units of `1/g_r`. Longer runs
/// let population tunnel past the node of the raising coupling.
pub const TUNING_PUMP_TIME: f64 = 1000.0;

/// Steady states used for tomography round trips. `(2,3)` uses a setting
/// whose steady state stays inside the truncation guard at `dim = 60`.
pub const TOMOGRAPHY_SETS: [ReferenceSet; 4] = [
    STABILIZATION_SETS[0],
    STABILIZATION_SETS[1],
    STABILIZATION_SETS[2],
    ReferenceSet::new(2, 3, 0.45, 5.0),
];

/// `(1,2)` dark states at `n̄ ≈ 6.4` used for the fourth-order parity
/// readout; the readout sideband shares this `η`.
pub const READOUT_SET: ReferenceSet = ReferenceSet::new(1, 2, 0.55, 5.5);

/// Order of the readout sideband.
pub const READOUT_ORDER: i32 = 4;
