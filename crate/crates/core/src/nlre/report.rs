use serde::{Deserialize, Serialize};

use crate::dynamics::{DarkStateBasis, TruncationGuard};
use crate::error::{NlreError, Result};
use crate::fock::wigner::wigner;
use crate::fock::{fock_distribution, OperatorMatrix};

/// Fock statistics of an oscillator state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateReport {
    pub fock_dist: Vec<f64>,
    pub nbar: f64,
    pub var_n: f64,
    pub mandel_q: f64,
    pub crossing_n: Option<f64>,
    pub manifold_weights: Vec<f64>,
    pub manifold_total: Option<f64>,
    pub wigner: Option<WignerSamples>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WignerSamples {
    pub points: Vec<(f64, f64)>,
    pub values: Vec<f64>,
}

/// Weights of a state on each dark state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifoldProjection {
    pub weights: Vec<f64>,
    pub total: f64,
}

/// `n̄`, `Var(n)` and `Q = Var(n)/n̄ − 1` of a Fock distribution.
pub fn fock_moments(p: &[f64]) -> (f64, f64, f64) {
    let nbar: f64 = p.iter().enumerate().map(|(n, x)| n as f64 * x).sum();
    let var: f64 = p
        .iter()
        .enumerate()
        .map(|(n, x)| (n as f64 - nbar).powi(2) * x)
        .sum();
    let q = if nbar > 0.0 { var / nbar - 1.0 } else { f64::NAN };
    (nbar, var, q)
}

/// Fock-distribution statistics with the default truncation check.
pub fn analyze_steady_state(rho_osc: &OperatorMatrix) -> Result<SteadyStateReport> {
    TruncationGuard::default().check(rho_osc)?;
    let p = fock_distribution(rho_osc);
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(NlreError::InvalidInput(format!("trace {total} differs from 1")));
    }
    if let Some((n, &v)) = p.iter().enumerate().find(|(_, &v)| v < -1e-12) {
        return Err(NlreError::InvalidInput(format!("negative population {v:.3e} at n = {n}")));
    }
    let (nbar, var_n, mandel_q) = fock_moments(&p);
    Ok(SteadyStateReport {
        fock_dist: p,
        nbar,
        var_n,
        mandel_q,
        crossing_n: None,
        manifold_weights: Vec::new(),
        manifold_total: None,
        wigner: None,
    })
}

impl SteadyStateReport {
    pub fn with_crossing(mut self, n_star: f64) -> Self {
        self.crossing_n = Some(n_star);
        self
    }

    pub fn with_manifold(mut self, rho_osc: &OperatorMatrix, basis: &DarkStateBasis) -> Self {
        let proj = manifold_projection(rho_osc, basis);
        self.manifold_weights = proj.weights;
        self.manifold_total = Some(proj.total);
        self
    }

    pub fn with_wigner(mut self, rho_osc: &OperatorMatrix, points: Vec<(f64, f64)>) -> Self {
        let values = wigner(rho_osc, &points);
        self.wigner = Some(WignerSamples { points, values });
        self
    }

    /// Index of the most populated Fock state.
    pub fn mode(&self) -> usize {
        self.fock_dist
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map_or(0, |(n, _)| n)
    }

    pub fn class_weights(&self, d: usize) -> Vec<f64> {
        class_weights(&self.fock_dist, d)
    }
}

/// Population of each modular class `{m + dk}`.
pub fn class_weights(p: &[f64], d: usize) -> Vec<f64> {
    let mut w = vec![0.0; d];
    for (n, &x) in p.iter().enumerate() {
        w[n % d] += x;
    }
    w
}

/// `1 − min_m W_m / max_m W_m` over the class weights: 1 when at least one
/// class is empty, 0 for a distribution without mod-`d` structure.
pub fn class_contrast(p: &[f64], d: usize) -> f64 {
    let w = class_weights(p, d);
    let max = w.iter().copied().fold(0.0, f64::max);
    let min = w.iter().copied().fold(f64::INFINITY, f64::min);
    if max <= 0.0 {
        0.0
    } else {
        1.0 - min.max(0.0) / max
    }
}

/// `w_m = ⟨ψ_m|ρ|ψ_m⟩` and their sum.
pub fn manifold_projection(rho_osc: &OperatorMatrix, basis: &DarkStateBasis) -> ManifoldProjection {
    let dim = rho_osc.dim().min(basis.dim);
    let weights: Vec<f64> = basis
        .states
        .iter()
        .map(|psi| {
            let mut acc = 0.0;
            for i in 0..dim {
                if psi[i] == 0.0 {
                    continue;
                }
                for j in 0..dim {
                    acc += psi[i] * psi[j] * rho_osc.get(i, j).re;
                }
            }
            acc
        })
        .collect();
    let total = weights.iter().sum();
    ManifoldProjection { weights, total }
}
