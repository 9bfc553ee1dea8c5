use nalgebra::SVD;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::integrate::{evolve, Diagnostics, StepControl};
use super::LindbladModel;
use crate::error::{NlreError, Result};
use crate::fock::{CMatrix, OperatorMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SteadyBackend {
    /// Long-time integration from the given initial state.
    Integrate,
    /// Null space of the dense vectorized Liouvillian.
    NullSpace,
}

/// Stopping rule for the steady-state search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyCriteria {
    pub backend: SteadyBackend,
    /// Stop once `‖ρ̇‖_max < rel_tol · rate_scale`.
    pub rel_tol: f64,
    /// Interval between convergence checks, in units of `1/rate_scale`.
    pub check_interval: f64,
    /// Give up after this time (dimensionless τ).
    pub max_time: f64,
    /// Integrate for exactly this long instead of testing convergence.
    pub fixed_time: Option<f64>,
    pub control: StepControl,
}

impl Default for SteadyCriteria {
    fn default() -> Self {
        Self {
            backend: SteadyBackend::Integrate,
            rel_tol: 1e-6,
            check_interval: 200.0,
            max_time: 1e6,
            fixed_time: None,
            control: StepControl::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SteadyState {
    pub rho: OperatorMatrix,
    pub time: f64,
    /// `‖ρ̇‖_max / rate_scale` at the returned state.
    pub residual: f64,
    pub backend: SteadyBackend,
    /// Number of near-zero Liouvillian singular values (null-space backend).
    pub kernel_dim: Option<usize>,
    pub diagnostics: Diagnostics,
}

fn relative_residual(model: &LindbladModel, rho: &OperatorMatrix) -> f64 {
    model.derivative(rho).max_abs() / model.rate_scale()
}

pub fn steady_state(
    model: &LindbladModel,
    rho0: &OperatorMatrix,
    criteria: &SteadyCriteria,
) -> Result<SteadyState> {
    match criteria.backend {
        SteadyBackend::Integrate => integrate_to_steady(model, rho0, criteria),
        SteadyBackend::NullSpace => null_space(model),
    }
}

fn integrate_to_steady(
    model: &LindbladModel,
    rho0: &OperatorMatrix,
    criteria: &SteadyCriteria,
) -> Result<SteadyState> {
    if let Some(t) = criteria.fixed_time {
        let traj = evolve(model, rho0, &[t], &criteria.control)?;
        let rho = traj.states.into_iter().next_back().unwrap_or_else(|| rho0.clone());
        return Ok(SteadyState {
            residual: relative_residual(model, &rho),
            rho,
            time: t,
            backend: SteadyBackend::Integrate,
            kernel_dim: None,
            diagnostics: traj.diagnostics,
        });
    }
    let interval = criteria.check_interval / model.rate_scale();
    let mut control = criteria.control;
    let mut rho = rho0.clone();
    let mut t = 0.0;
    let mut diagnostics = Diagnostics {
        min_eigenvalue: f64::INFINITY,
        ..Default::default()
    };
    loop {
        let residual = relative_residual(model, &rho);
        if residual < criteria.rel_tol {
            return Ok(SteadyState {
                rho,
                time: t,
                residual,
                backend: SteadyBackend::Integrate,
                kernel_dim: None,
                diagnostics,
            });
        }
        if t >= criteria.max_time {
            return Err(NlreError::NotConverged { time: t, residual });
        }
        let span = interval.min(criteria.max_time - t);
        let traj = evolve(model, &rho, &[span], &control)?;
        control.dt_initial = traj.last_dt * model.rate_scale();
        diagnostics.merge(&traj.diagnostics);
        rho = traj.states.into_iter().next_back().expect("one output time");
        t += span;
    }
}

/// Null space of the vectorized Liouvillian via dense SVD.
pub fn null_space(model: &LindbladModel) -> Result<SteadyState> {
    let n = model.dim();
    if n > 40 {
        log::warn!("dense Liouvillian SVD on {}x{} entries", n * n, n * n);
    }
    let l = model.liouvillian();
    let scale = l.iter().fold(0.0_f64, |a, b| a.max(b.norm())).max(f64::MIN_POSITIVE);
    let svd = SVD::new(l, false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| NlreError::Numerical("SVD returned no right singular vectors".into()))?;
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let kernel_dim = idx
        .iter()
        .filter(|&&k| svd.singular_values[k] < 1e-10 * scale)
        .count();
    if kernel_dim != 1 {
        log::warn!("Liouvillian kernel dimension {kernel_dim}: steady state is not unique");
    }
    let row = v_t.row(idx[0]);
    let mut rho = CMatrix::from_fn(n, n, |i, j| row[j * n + i].conj());
    let adj = rho.adjoint();
    rho = (rho + adj) * Complex64::new(0.5, 0.0);
    let tr = rho.trace();
    if tr.norm() < 1e-14 {
        return Err(NlreError::Numerical("null vector has zero trace".into()));
    }
    rho /= tr;
    let rho = OperatorMatrix::new(rho);
    Ok(SteadyState {
        residual: relative_residual(model, &rho),
        rho,
        time: f64::INFINITY,
        backend: SteadyBackend::NullSpace,
        kernel_dim: Some(kernel_dim),
        diagnostics: Diagnostics::default(),
    })
}
