//! Fock populations from sideband-flop data.
//!
//! With the nuisance parameters fixed the flop signal `2P(↑) − 1` is linear
//! in the populations, so the fit is a least-squares problem on the
//! probability simplex. `(g₀, γ)` are refined by profiling that residual.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::record::{flop_frequency, FlopData};
use crate::error::{NlreError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FockFitOptions {
    /// Number of fitted populations `P(0..n_max)`.
    pub n_max: usize,
    pub fit_nuisance: bool,
    /// Relative search window for `g₀` around the record value.
    pub g0_window: f64,
    /// Smallest accepted singular-value ratio of the design matrix.
    pub rank_tol: f64,
}

impl Default for FockFitOptions {
    fn default() -> Self {
        Self {
            n_max: 20,
            fit_nuisance: true,
            g0_window: 0.1,
            rank_tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FockFit {
    pub populations: Vec<f64>,
    pub uncertainties: Vec<f64>,
    pub g0: f64,
    pub gamma_decay: f64,
    pub residual_rms: f64,
}

/// Rows `e^{−γt} cos(ω_n t)`, one per time.
fn design(data: &FlopData, n_max: usize, g0: f64, gamma: f64) -> DMatrix<f64> {
    let omegas: Vec<f64> = (0..n_max)
        .map(|n| flop_frequency(n, data.order, data.eta, g0))
        .collect();
    DMatrix::from_fn(data.points.len(), n_max, |i, n| {
        let t = data.points[i].time;
        (-gamma * t).exp() * (omegas[n] * t).cos()
    })
}

fn signal(data: &FlopData) -> DVector<f64> {
    DVector::from_iterator(
        data.points.len(),
        data.points.iter().map(|p| 2.0 * p.up as f64 / p.shots as f64 - 1.0),
    )
}

/// Euclidean projection onto `{p ≥ 0, Σp = 1}`.
pub fn project_simplex(v: &mut [f64]) {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

/// `min ‖Ap − y‖²` over the simplex by accelerated projected gradient.
fn simplex_lsq(a: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let ata = a.transpose() * a;
    let aty = a.transpose() * y;
    let lip = ata.symmetric_eigenvalues().max().max(1e-300);
    let step = 1.0 / lip;
    let mut p = DVector::from_element(n, 1.0 / n as f64);
    let mut z = p.clone();
    let mut t = 1.0f64;
    for _ in 0..20_000 {
        let grad = &ata * &z - &aty;
        let mut next = &z - grad * step;
        project_simplex(next.as_mut_slice());
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let moved = (&next - &p).amax();
        z = &next + (&next - &p) * ((t - 1.0) / t_next);
        p = next;
        t = t_next;
        if moved < 1e-13 {
            break;
        }
    }
    p
}

fn residual(a: &DMatrix<f64>, y: &DVector<f64>, p: &DVector<f64>) -> f64 {
    (a * p - y).norm_squared()
}

fn profile(data: &FlopData, y: &DVector<f64>, n_max: usize, g0: f64, gamma: f64) -> f64 {
    let a = design(data, n_max, g0, gamma);
    residual(&a, y, &simplex_lsq(&a, y))
}

fn golden<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Fit populations `P(0..n_max)` to flop data.
///
/// Fails with `RankDeficient` when two flop frequencies are not resolved by
/// the sampled times, and with `InvalidInput` on too few times or a flat
/// signal.
pub fn fock_fit(data: &FlopData, opts: &FockFitOptions) -> Result<FockFit> {
    let n_max = opts.n_max;
    let t_count = data.points.len();
    if n_max == 0 || t_count < 2 * n_max {
        return Err(NlreError::InvalidInput(format!(
            "{t_count} flop times cannot resolve {n_max} populations"
        )));
    }
    let y = signal(data);
    let mean = y.mean();
    if y.iter().all(|v| (v - mean).abs() < 1e-12) {
        return Err(NlreError::InvalidInput("flat flop signal".into()));
    }

    let (mut g0, mut gamma) = (data.g0, data.gamma_decay);
    if opts.fit_nuisance {
        let t_max = data.points.last().map(|p| p.time).unwrap_or(1.0).max(1e-12);
        let g_lo = g0 * (1.0 - opts.g0_window);
        let g_hi = g0 * (1.0 + opts.g0_window);
        let gamma_hi = (5.0 * gamma).max(2.0 / t_max);
        // coarse scan over g0 avoids locking onto a beat alias
        let coarse = 41;
        let best = (0..coarse)
            .map(|k| g_lo + (g_hi - g_lo) * k as f64 / (coarse - 1) as f64)
            .map(|g| (g, profile(data, &y, n_max, g, gamma)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(g, _)| g)
            .unwrap_or(g0);
        g0 = best;
        let dg = (g_hi - g_lo) / (coarse - 1) as f64;
        for _ in 0..3 {
            gamma = golden(|c| profile(data, &y, n_max, g0, c), 0.0, gamma_hi, 1e-4 * gamma_hi);
            g0 = golden(|g| profile(data, &y, n_max, g, gamma), g0 - dg, g0 + dg, 1e-7 * g0.abs());
        }
    }

    let a = design(data, n_max, g0, gamma);
    let sv = a.clone().svd(false, false).singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    if !(smin > opts.rank_tol * smax) {
        return Err(NlreError::RankDeficient(format!(
            "flop design matrix condition {:.3e} (two Fock frequencies unresolved)",
            smax / smin.max(f64::MIN_POSITIVE)
        )));
    }
    let p = simplex_lsq(&a, &y);
    let rss = residual(&a, &y, &p);
    let dof = (t_count.saturating_sub(n_max)).max(1) as f64;
    let sigma2 = rss / dof;
    let cov = (a.transpose() * &a)
        .try_inverse()
        .ok_or_else(|| NlreError::RankDeficient("singular normal matrix".into()))?;
    let uncertainties = (0..n_max).map(|i| (sigma2 * cov[(i, i)]).max(0.0).sqrt()).collect();
    Ok(FockFit {
        populations: p.iter().copied().collect(),
        uncertainties,
        g0,
        gamma_decay: gamma,
        residual_rms: (rss / t_count as f64).sqrt(),
    })
}
