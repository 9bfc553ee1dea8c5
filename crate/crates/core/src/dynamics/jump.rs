use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::NLREConfig;
use crate::error::{NlreError, Result};
use crate::fock::{CMatrix, OperatorMatrix};
use crate::linalg::real_null_space;

/// Singular-value threshold below which a kernel direction is accepted.
pub const KERNEL_TOL: f64 = 1e-9;

/// Adiabatically eliminated jump operator
/// `L = γ^{-1/2} Σ_n |n⟩(Ω_r(n−r)⟨n−r| − Ω_l(n)⟨n+l|)`.
///
/// Rows `n < r` keep only the lowering term; rows with `n + l ≥ dim` are zero.
pub fn jump_operator(cfg: &NLREConfig) -> Result<OperatorMatrix> {
    cfg.validate()?;
    let dim = cfg.dim;
    let omega_r: Vec<f64> = (0..dim).map(|k| cfg.omega_r(k)).collect();
    let omega_l: Vec<f64> = (0..dim).map(|k| cfg.omega_l(k)).collect();
    for n in cfg.r..dim.saturating_sub(cfg.l) {
        if omega_r[n - cfg.r] == 0.0 {
            return Err(NlreError::CouplingNode { n });
        }
    }
    Ok(jump_operator_from_couplings(
        dim, cfg.r, cfg.l, &omega_r, &omega_l, cfg.gamma,
    ))
}

/// Jump operator built from explicit coupling tables.
pub fn jump_operator_from_couplings(
    dim: usize,
    r: usize,
    l: usize,
    omega_r: &[f64],
    omega_l: &[f64],
    gamma: f64,
) -> OperatorMatrix {
    let s = 1.0 / gamma.sqrt();
    let mut m = CMatrix::zeros(dim, dim);
    for n in 0..dim {
        if n + l >= dim {
            continue;
        }
        if n >= r {
            m[(n, n - r)] += Complex64::new(s * omega_r[n - r], 0.0);
        }
        m[(n, n + l)] -= Complex64::new(s * omega_l[n], 0.0);
    }
    OperatorMatrix::new(m)
}

/// The interference rows of the jump operator (`r ≤ n`, `n + l < window`),
/// as a real matrix on the first `window` Fock states.
pub fn interference_operator(cfg: &NLREConfig, window: usize) -> DMatrix<f64> {
    let s = 1.0 / cfg.gamma.sqrt();
    let mut m = DMatrix::zeros(window, window);
    for n in cfg.r..window {
        if n + cfg.l >= window {
            break;
        }
        m[(n, n - cfg.r)] = s * cfg.omega_r(n - cfg.r);
        m[(n, n + cfg.l)] = -s * cfg.omega_l(n);
    }
    m
}

/// Upper edge of the stabilization band.
///
/// Above the stabilizing crossing the ratio `Ω_r/Ω_l` stays below one until
/// either coupling passes a Bessel node; the band ends there. Without a
/// discrete crossing the whole truncation is used.
pub fn stabilization_band(cfg: &NLREConfig) -> usize {
    let dim = cfg.dim;
    let a: Vec<f64> = (0..dim).map(|k| cfg.omega_r(k)).collect();
    let b: Vec<f64> = (0..dim).map(|k| cfg.omega_l(k)).collect();
    let Some(nstar) = (1..dim).find(|&j| a[j - 1] - b[j - 1] > 0.0 && a[j] - b[j] <= 0.0) else {
        return dim;
    };
    let flips = |v: &[f64], j: usize| v[j].signum() != v[j - 1].signum();
    (nstar.max(1)..dim)
        .find(|&j| flips(&a, j) || flips(&b, j))
        .map(|j| (j + 1).min(dim))
        .unwrap_or(dim)
        .max(cfg.d() + 1)
}

/// Kernel of the jump operator, one vector per modular class.
#[derive(Clone, Debug, Serialize)]
pub struct DarkStateBasis {
    pub d: usize,
    pub dim: usize,
    /// Fock window `[0, window)` the kernel was computed in.
    pub window: usize,
    /// Normalized kernel vectors `|ψ_m⟩`, zero-padded to `dim`.
    pub states: Vec<Vec<f64>>,
    /// Normalized analytic recursion `c_{j+d} = Ω_r(j)/Ω_l(j+r) c_j`.
    pub recursion: Vec<Vec<f64>>,
    /// `‖L_int ψ_m‖` on the window's interference rows.
    pub residuals: Vec<f64>,
    /// Norm of the leak rows `n < r` of the jump operator applied to `ψ_m`.
    pub leak_residuals: Vec<f64>,
    /// `‖L ψ_m‖` for the full truncated jump operator.
    pub full_residuals: Vec<f64>,
    /// Second-smallest singular value per class block.
    pub gaps: Vec<f64>,
}

impl DarkStateBasis {
    pub fn state(&self, m: usize) -> Vec<Complex64> {
        self.states[m].iter().map(|&c| Complex64::new(c, 0.0)).collect()
    }

    pub fn projector(&self, m: usize) -> OperatorMatrix {
        OperatorMatrix::projector(&self.state(m))
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    /// Largest componentwise difference between kernel and recursion vectors.
    pub fn recursion_mismatch(&self) -> f64 {
        self.states
            .iter()
            .zip(&self.recursion)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    /// Classes `m` left invariant by the leak rows.
    pub fn protected_classes(&self) -> Vec<usize> {
        (0..self.d)
            .filter(|&m| self.leak_residuals[m] < KERNEL_TOL)
            .collect()
    }
}

/// Dark states in the stabilization band.
pub fn dark_states(cfg: &NLREConfig) -> Result<DarkStateBasis> {
    cfg.validate()?;
    dark_states_in(cfg, stabilization_band(cfg))
}

/// Dark states of the interference rows restricted to `[0, window)`.
pub fn dark_states_in(cfg: &NLREConfig, window: usize) -> Result<DarkStateBasis> {
    cfg.validate()?;
    let d = cfg.d();
    let dim = cfg.dim;
    if window <= d || window > dim {
        return Err(NlreError::InvalidInput(format!(
            "window {window} must lie in ({d}, {dim}]"
        )));
    }
    let full = jump_operator(cfg)?;
    let lint = interference_operator(cfg, window);
    let mut states = Vec::with_capacity(d);
    let mut recursion = Vec::with_capacity(d);
    let mut residuals = Vec::with_capacity(d);
    let mut leak_residuals = Vec::with_capacity(d);
    let mut full_residuals = Vec::with_capacity(d);
    let mut gaps = Vec::with_capacity(d);
    for m in 0..d {
        let cols: Vec<usize> = (m..window).step_by(d).collect();
        let rows: Vec<usize> = cols
            .iter()
            .map(|&j| j + cfg.r)
            .filter(|&n| n + cfg.l < window)
            .collect();
        let block = DMatrix::from_fn(rows.len(), cols.len(), |i, j| lint[(rows[i], cols[j])]);
        let (sv, vecs) = real_null_space(&block);
        let scale = block.iter().fold(0.0_f64, |a, &b| a.max(b.abs())).max(1.0);
        let null_count = sv.iter().filter(|&&s| s < KERNEL_TOL * scale).count();
        if null_count != 1 {
            return Err(NlreError::KernelDimension {
                found: null_count,
                expected: 1,
            });
        }
        gaps.push(sv.get(1).copied().unwrap_or(f64::INFINITY));

        let mut rec = vec![0.0; dim];
        rec[m] = 1.0;
        let mut j = m;
        while j + d < window {
            let den = cfg.omega_l(j + cfg.r);
            if den == 0.0 {
                return Err(NlreError::CouplingNode { n: j + cfg.r });
            }
            rec[j + d] = cfg.omega_r(j) / den * rec[j];
            j += d;
        }
        normalize(&mut rec);

        let mut psi = vec![0.0; dim];
        for (k, &c) in cols.iter().enumerate() {
            psi[c] = vecs[0][k];
        }
        normalize(&mut psi);
        let overlap: f64 = psi.iter().zip(&rec).map(|(a, b)| a * b).sum();
        if overlap < 0.0 {
            psi.iter_mut().for_each(|x| *x = -*x);
        }

        let res = {
            let v = nalgebra::DVector::from_iterator(window, psi[..window].iter().copied());
            (&lint * v).norm()
        };
        let lpsi = {
            let v: Vec<Complex64> = psi.iter().map(|&c| Complex64::new(c, 0.0)).collect();
            full.apply(&v)
        };
        let leak = lpsi[..cfg.r].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        residuals.push(res);
        leak_residuals.push(leak);
        full_residuals.push(lpsi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt());
        states.push(psi);
        recursion.push(rec);
    }
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    if worst > KERNEL_TOL {
        return Err(NlreError::Numerical(format!(
            "dark-state residual {worst:.2e} exceeds {KERNEL_TOL:.0e}"
        )));
    }
    if window < dim {
        let tail: f64 = (0..d)
            .map(|m| states[m][window - d.min(window)..window].iter().map(|c| c * c).sum::<f64>())
            .fold(0.0, f64::max);
        if tail > 1e-3 {
            log::warn!("dark states carry weight {tail:.2e} near the band edge {window}");
        }
    }
    Ok(DarkStateBasis {
        d,
        dim,
        window,
        states,
        recursion,
        residuals,
        leak_residuals,
        full_residuals,
        gaps,
    })
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}
