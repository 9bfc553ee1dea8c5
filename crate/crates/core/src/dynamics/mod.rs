//! Lindblad dynamics of the spin⊗oscillator system, the adiabatically
//! eliminated jump operator, its dark states and steady-state solvers.

mod config;
mod integrate;
mod jump;
mod model;
mod steady;

pub use config::NLREConfig;
pub use integrate::{evolve, Diagnostics, StepControl, Trajectory, TruncationGuard};
pub use jump::{
    dark_states, dark_states_in, interference_operator, jump_operator,
    jump_operator_from_couplings, stabilization_band, DarkStateBasis, KERNEL_TOL,
};
pub use model::{full_model, jump_only_model, pumping_operator, Layout, LindbladModel};
pub use steady::{null_space, steady_state, SteadyBackend, SteadyCriteria, SteadyState};

use crate::fock::{thermal_state, with_spin, OperatorMatrix, Spin};

/// Default initial oscillator occupation after cooling.
pub const INITIAL_NBAR: f64 = 0.007;

/// Thermal oscillator state for a model's layout, spin in `|g⟩` if present.
pub fn initial_state(layout: Layout, nbar: f64) -> OperatorMatrix {
    let osc = thermal_state(layout.oscillator_dim(), nbar);
    match layout {
        Layout::Oscillator { .. } => osc,
        Layout::SpinOscillator { .. } => with_spin(&osc, Spin::G),
    }
}
