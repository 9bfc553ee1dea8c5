//! Benchmark fixtures shared by the criterion targets.

use nlre::dynamics::{initial_state, jump_only_model, LindbladModel, NLREConfig, INITIAL_NBAR};
use nlre::nlre::{stabilize, StabilizeOptions, STABILIZATION_SETS};
use nlre::tomography::{simulate_sdd, MeasurementRecord, SddGrid};
use nlre::OperatorMatrix;

/// `(1,2)` reference configuration at the default truncation.
pub fn reference_config() -> NLREConfig {
    STABILIZATION_SETS[1].config()
}

pub fn jump_model() -> (LindbladModel, OperatorMatrix) {
    let model = jump_only_model(&reference_config()).expect("reference config is valid");
    let rho = initial_state(model.layout, INITIAL_NBAR);
    (model, rho)
}

/// Synthetic SDD record of the reference steady state on an `m × m` grid.
pub fn sdd_record(m: usize) -> MeasurementRecord {
    let cfg = reference_config();
    let rho = stabilize(&cfg, &StabilizeOptions::default())
        .expect("reference config stabilizes")
        .rho_osc;
    MeasurementRecord {
        seed: Some(1),
        sdd: Some(simulate_sdd(&rho, cfg.eta, &SddGrid::square(4.0, m, 300), 1).expect("valid grid")),
        flops: None,
    }
}
