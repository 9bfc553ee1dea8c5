//! Experiment layer: crossing points, steady-state statistics, manifold
//! projections, stabilization traces and parameter sweeps.

mod crossing;
pub mod reference;
mod report;

pub use crossing::{crossing_point, Crossing};
pub use reference::{
    ReferenceSet, READOUT_ORDER, READOUT_SET, STABILIZATION_SETS, TOMOGRAPHY_SETS, TUNING_PUMP_TIME, TUNING_SWEEP,
};
pub use report::{
    analyze_steady_state, class_contrast, class_weights, fock_moments, manifold_projection,
    ManifoldProjection, SteadyStateReport, WignerSamples,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    dark_states, evolve, full_model, initial_state, jump_only_model, steady_state,
    DarkStateBasis, Diagnostics, LindbladModel, NLREConfig, StepControl, SteadyCriteria,
    SteadyState, INITIAL_NBAR,
};
use crate::error::Result;
use crate::fock::wigner::square_grid;
use crate::fock::{spin_population, OperatorMatrix, Spin};

/// Which dynamical model drives the stabilization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Oscillator only, evolving under the eliminated jump operator.
    #[default]
    JumpOnly,
    /// Spin⊗oscillator with both sidebands and optical pumping.
    Full,
}

pub fn build_model(cfg: &NLREConfig, kind: ModelKind) -> Result<LindbladModel> {
    match kind {
        ModelKind::JumpOnly => jump_only_model(cfg),
        ModelKind::Full => full_model(cfg),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilizeOptions {
    pub model: ModelKind,
    pub initial_nbar: f64,
    pub criteria: SteadyCriteria,
    /// Half-width and points per axis of an optional Wigner grid.
    pub wigner: Option<(f64, usize)>,
}

impl Default for StabilizeOptions {
    fn default() -> Self {
        Self {
            model: ModelKind::JumpOnly,
            initial_nbar: INITIAL_NBAR,
            criteria: SteadyCriteria::default(),
            wigner: None,
        }
    }
}

/// Output of one stabilization run.
#[derive(Clone, Debug)]
pub struct Stabilized {
    pub config: NLREConfig,
    pub steady: SteadyState,
    pub rho_osc: OperatorMatrix,
    pub basis: DarkStateBasis,
    pub crossing: Crossing,
    pub report: SteadyStateReport,
}

/// Drives the reservoir from a thermal state until the steady-state rule fires.
pub fn stabilize(cfg: &NLREConfig, opts: &StabilizeOptions) -> Result<Stabilized> {
    let crossing = crossing_point(cfg)?;
    let basis = dark_states(cfg)?;
    let model = build_model(cfg, opts.model)?;
    let rho0 = initial_state(model.layout, opts.initial_nbar);
    let steady = steady_state(&model, &rho0, &opts.criteria)?;
    let rho_osc = model.layout.oscillator(&steady.rho);
    let mut report = analyze_steady_state(&rho_osc)?
        .with_crossing(crossing.n_star)
        .with_manifold(&rho_osc, &basis);
    if let Some((extent, points)) = opts.wigner {
        report = report.with_wigner(&rho_osc, square_grid(extent, points));
    }
    Ok(Stabilized {
        config: *cfg,
        steady,
        rho_osc,
        basis,
        crossing,
        report,
    })
}

/// Manifold weights and spin population along a trajectory.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilizationTrace {
    pub times: Vec<f64>,
    /// Excited-spin population; empty for the oscillator-only model.
    pub spin_excited: Vec<f64>,
    pub manifold_weights_t: Vec<Vec<f64>>,
    pub total_weight_t: Vec<f64>,
    pub diagnostics: Diagnostics,
}

pub fn stabilization_trace(
    cfg: &NLREConfig,
    kind: ModelKind,
    rho0: &OperatorMatrix,
    times: &[f64],
    control: &StepControl,
) -> Result<StabilizationTrace> {
    let basis = dark_states(cfg)?;
    let model = build_model(cfg, kind)?;
    let traj = evolve(&model, rho0, times, control)?;
    let mut trace = StabilizationTrace {
        times: traj.times.clone(),
        spin_excited: Vec::new(),
        manifold_weights_t: Vec::with_capacity(times.len()),
        total_weight_t: Vec::with_capacity(times.len()),
        diagnostics: traj.diagnostics,
    };
    for rho in &traj.states {
        if kind == ModelKind::Full {
            trace.spin_excited.push(spin_population(rho, Spin::E));
        }
        let p = manifold_projection(&model.layout.oscillator(rho), &basis);
        trace.manifold_weights_t.push(p.weights);
        trace.total_weight_t.push(p.total);
    }
    Ok(trace)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepPoint {
    pub config: NLREConfig,
    pub crossing: Option<Crossing>,
    pub report: Option<SteadyStateReport>,
    pub time: Option<f64>,
    pub diagnostics: Option<Diagnostics>,
    pub error: Option<String>,
}

/// Stabilizes every configuration in parallel; failures are recorded per
/// point and the rows keep the input order.
pub fn parameter_sweep(configs: &[NLREConfig], opts: &StabilizeOptions) -> Vec<SweepPoint> {
    configs
        .par_iter()
        .map(|cfg| match stabilize(cfg, opts) {
            Ok(s) => SweepPoint {
                config: *cfg,
                crossing: Some(s.crossing),
                report: Some(s.report),
                time: Some(s.steady.time),
                diagnostics: Some(s.steady.diagnostics),
                error: None,
            },
            Err(e) => SweepPoint {
                config: *cfg,
                crossing: crossing_point(cfg).ok(),
                report: None,
                time: None,
                diagnostics: None,
                error: Some(e.to_string()),
            },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::fidelity;

    fn small(r: usize, l: usize, eta: f64, n_star: f64) -> NLREConfig {
        NLREConfig {
            dim: 40,
            ..NLREConfig::new(r, l, eta, 1.0).with_crossing_at(n_star)
        }
    }

    #[test]
    fn empty_sweep() {
        assert!(parameter_sweep(&[], &StabilizeOptions::default()).is_empty());
    }

    #[test]
    fn single_point_sweep_matches_direct_run() {
        let cfg = small(0, 2, 0.3, 4.0);
        let opts = StabilizeOptions::default();
        let sweep = parameter_sweep(&[cfg], &opts);
        let direct = stabilize(&cfg, &opts).unwrap();
        assert_eq!(sweep[0].report.as_ref().unwrap(), &direct.report);
    }

    #[test]
    fn sweep_records_failures() {
        let bad = NLREConfig::new(1, 2, 0.5, 50.0);
        let pts = parameter_sweep(&[bad], &StabilizeOptions::default());
        assert!(pts[0].report.is_none() && pts[0].error.is_some());
    }

    #[test]
    fn dark_state_is_stationary_and_symmetric() {
        let cfg = small(1, 2, 0.5, 6.0);
        let basis = dark_states(&cfg).unwrap();
        let model = jump_only_model(&cfg).unwrap();
        for m in basis.protected_classes() {
            let rho = basis.projector(m);
            let traj = evolve(&model, &rho, &[200.0], &StepControl::default()).unwrap();
            let out = &traj.states[0];
            assert!(fidelity(out, &rho).unwrap() > 0.99);
            let rot = crate::fock::rotate(out, 2.0 * std::f64::consts::PI / 3.0);
            assert!(fidelity(&rot, out).unwrap() > 1.0 - 1e-6);
        }
    }

    #[test]
    fn trace_starts_near_vacuum_overlap() {
        let cfg = small(1, 2, 0.5, 6.0);
        let basis = dark_states(&cfg).unwrap();
        let rho0 = initial_state(crate::dynamics::Layout::Oscillator { dim: 40 }, 0.0);
        let tr = stabilization_trace(&cfg, ModelKind::JumpOnly, &rho0, &[0.0], &StepControl::default())
            .unwrap();
        let want: Vec<f64> = basis.states.iter().map(|s| s[0] * s[0]).collect();
        for (a, b) in tr.manifold_weights_t[0].iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(tr.spin_excited.is_empty());
    }
}
