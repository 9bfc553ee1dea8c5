use serde::{Deserialize, Serialize};

use super::LindbladModel;
use crate::error::{NlreError, Result};
use crate::fock::{top_population, CMatrix, OperatorMatrix};
use crate::linalg::min_eigenvalue;

/// Truncation check applied to the reduced oscillator state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationGuard {
    pub levels: usize,
    pub threshold: f64,
}

impl Default for TruncationGuard {
    fn default() -> Self {
        Self {
            levels: 10,
            threshold: 1e-6,
        }
    }
}

impl TruncationGuard {
    pub fn disabled() -> Self {
        Self {
            levels: 0,
            threshold: f64::INFINITY,
        }
    }

    pub fn check(&self, rho_osc: &OperatorMatrix) -> Result<()> {
        if self.levels == 0 {
            return Ok(());
        }
        let population = top_population(rho_osc, self.levels);
        if population > self.threshold {
            return Err(NlreError::TruncationBreach {
                population,
                levels: self.levels,
                threshold: self.threshold,
            });
        }
        Ok(())
    }
}

/// Adaptive RK4 with step doubling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    /// Initial step in units of `1/rate_scale`.
    pub dt_initial: f64,
    /// Largest accepted local error (max-norm) per step.
    pub tol: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub guard: TruncationGuard,
    /// Compute the minimum eigenvalue at every output time.
    pub check_positivity: bool,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            dt_initial: 0.1,
            tol: 1e-10,
            dt_min: 1e-12,
            dt_max: f64::INFINITY,
            guard: TruncationGuard::default(),
            check_positivity: true,
        }
    }
}

/// Worst-case invariant violations along a trajectory.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    /// `+∞` when positivity was not checked.
    pub min_eigenvalue: f64,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

impl Diagnostics {
    pub fn merge(&mut self, other: &Diagnostics) {
        self.max_trace_error = self.max_trace_error.max(other.max_trace_error);
        self.max_hermiticity_error = self.max_hermiticity_error.max(other.max_hermiticity_error);
        self.min_eigenvalue = self.min_eigenvalue.min(other.min_eigenvalue);
        self.steps_accepted += other.steps_accepted;
        self.steps_rejected += other.steps_rejected;
    }

    /// Trace within 1e-9, Hermitian within 1e-12, eigenvalues above −1e-8.
    pub fn within_tolerances(&self) -> bool {
        self.max_trace_error < 1e-9 && self.max_hermiticity_error < 1e-12 && self.min_eigenvalue > -1e-8
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<OperatorMatrix>,
    pub diagnostics: Diagnostics,
    /// Last accepted step size, useful for continuing the integration.
    pub last_dt: f64,
}

struct Workspace {
    k: [CMatrix; 4],
    tmp: CMatrix,
    scratch: CMatrix,
}

impl Workspace {
    fn new(n: usize) -> Self {
        let z = || CMatrix::zeros(n, n);
        Self {
            k: [z(), z(), z(), z()],
            tmp: z(),
            scratch: z(),
        }
    }
}

fn rk4_step(model: &LindbladModel, y: &CMatrix, h: f64, ws: &mut Workspace, out: &mut CMatrix) {
    let Workspace { k, tmp, scratch } = ws;
    model.rhs(y, &mut k[0], scratch);
    tmp.copy_from(y);
    axpy(tmp, 0.5 * h, &k[0]);
    model.rhs(tmp, &mut k[1], scratch);
    tmp.copy_from(y);
    axpy(tmp, 0.5 * h, &k[1]);
    model.rhs(tmp, &mut k[2], scratch);
    tmp.copy_from(y);
    axpy(tmp, h, &k[2]);
    model.rhs(tmp, &mut k[3], scratch);
    out.copy_from(y);
    axpy(out, h / 6.0, &k[0]);
    axpy(out, h / 3.0, &k[1]);
    axpy(out, h / 3.0, &k[2]);
    axpy(out, h / 6.0, &k[3]);
}

fn axpy(out: &mut CMatrix, a: f64, x: &CMatrix) {
    for (o, v) in out.as_mut_slice().iter_mut().zip(x.as_slice()) {
        *o += v * a;
    }
}

fn hermitize(m: &mut CMatrix) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)].im = 0.0;
        for j in i + 1..n {
            let a = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            m[(i, j)] = a;
            m[(j, i)] = a.conj();
        }
    }
}

/// Integrates `ρ̇ = 𝓛ρ` from `t = 0`, recording the state at each of `times`.
///
/// Each step compares one full RK4 step against two half steps; accepted
/// steps use the Richardson-extrapolated result and are re-Hermitized.
pub fn evolve(
    model: &LindbladModel,
    rho0: &OperatorMatrix,
    times: &[f64],
    control: &StepControl,
) -> Result<Trajectory> {
    let n = model.dim();
    if rho0.dim() != n {
        return Err(NlreError::InvalidInput(format!(
            "initial state dimension {} does not match model dimension {n}",
            rho0.dim()
        )));
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(NlreError::InvalidInput("output times must be non-negative and sorted".into()));
    }
    let trace0 = rho0.trace().re;
    let mut ws = Workspace::new(n);
    let (mut full, mut half, mut two) = (
        CMatrix::zeros(n, n),
        CMatrix::zeros(n, n),
        CMatrix::zeros(n, n),
    );
    let mut y = rho0.matrix().clone();
    hermitize(&mut y);
    let mut t = 0.0;
    let rate = model.rate_scale();
    let mut h = (control.dt_initial / rate).min(control.dt_max);
    let mut diag = Diagnostics {
        min_eigenvalue: f64::INFINITY,
        ..Default::default()
    };
    let mut out_times = Vec::with_capacity(times.len());
    let mut states = Vec::with_capacity(times.len());

    for &target in times {
        while t < target {
            let last = target - t <= h * (1.0 + 1e-12);
            let step = if last { target - t } else { h };
            rk4_step(model, &y, step, &mut ws, &mut full);
            rk4_step(model, &y, 0.5 * step, &mut ws, &mut half);
            rk4_step(model, &half, 0.5 * step, &mut ws, &mut two);
            let err = two
                .iter()
                .zip(full.iter())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max)
                / 15.0;
            let ok = err <= control.tol || step <= control.dt_min;
            if ok {
                // Richardson: y = two + (two − full)/15
                for ((o, a), b) in y.iter_mut().zip(two.iter()).zip(full.iter()) {
                    *o = a + (a - b) / 15.0;
                }
                hermitize(&mut y);
                t = if last { target } else { t + step };
                diag.steps_accepted += 1;
            } else {
                diag.steps_rejected += 1;
            }
            let factor = if err == 0.0 {
                4.0
            } else {
                (0.9 * (control.tol / err).powf(0.2)).clamp(0.2, 4.0)
            };
            if !(ok && last) {
                h = (step * factor).min(control.dt_max);
            }
            if h < control.dt_min && !ok {
                return Err(NlreError::Numerical(format!(
                    "step size underflow at t = {t:.3e} (h = {h:.2e})"
                )));
            }
        }
        let state = OperatorMatrix::new(y.clone());
        diag.max_trace_error = diag.max_trace_error.max((state.trace().re - trace0).abs());
        diag.max_hermiticity_error = diag.max_hermiticity_error.max(state.hermiticity_error());
        if control.check_positivity {
            diag.min_eigenvalue = diag.min_eigenvalue.min(min_eigenvalue(&state));
        }
        control.guard.check(&model.layout.oscillator(&state))?;
        out_times.push(t);
        states.push(state);
    }
    Ok(Trajectory {
        times: out_times,
        states,
        diagnostics: diag,
        last_dt: h,
    })
}
