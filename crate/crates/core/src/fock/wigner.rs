//! Wigner function via displaced parity and rotated quadrature marginals.

use num_complex::Complex64;
use rayon::prelude::*;

use super::OperatorMatrix;
use crate::special::ln_factorial;

/// Square grid of phase-space points `α = x + ip`, row-major with `p` outer.
pub fn square_grid(extent: f64, points: usize) -> Vec<(f64, f64)> {
    let axis = linspace(-extent, extent, points);
    let mut out = Vec::with_capacity(points * points);
    for &p in &axis {
        for &x in &axis {
            out.push((x, p));
        }
    }
    out
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (a + b)],
        _ => (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Displacement matrix elements `⟨m|D(β)|n⟩` for `m, n < dim`.
fn displacement_elements(dim: usize, beta: Complex64) -> Vec<Complex64> {
    let x = beta.norm_sqr();
    let r = beta.norm();
    let mut out = vec![Complex64::new(0.0, 0.0); dim * dim];
    let base = -0.5 * x;
    for k in 0..dim {
        // L_n^{(k)}(x) for n = 0.. by recurrence
        let mut lm1 = 0.0;
        let mut l = 1.0;
        for n in 0..dim - k {
            if n > 0 {
                let nf = n as f64;
                let kf = k as f64;
                let next = if n == 1 {
                    1.0 + kf - x
                } else {
                    ((2.0 * nf - 1.0 + kf - x) * l - (nf - 1.0 + kf) * lm1) / nf
                };
                lm1 = l;
                l = next;
            }
            let m = n + k;
            let mag = if k == 0 {
                base.exp()
            } else if r == 0.0 {
                0.0
            } else {
                (base + k as f64 * r.ln() + 0.5 * (ln_factorial(n) - ln_factorial(m))).exp()
            };
            let val = mag * l;
            // m ≥ n: β^k ; m < n: (−β*)^k
            let up = Complex64::from_polar(1.0, k as f64 * beta.arg()) * val;
            out[m * dim + n] = up;
            if k > 0 {
                let down = Complex64::from_polar(1.0, k as f64 * (-beta.conj()).arg()) * val;
                out[n * dim + m] = down;
            }
        }
    }
    out
}

/// `W(α) = (2/π) Tr[D†(α) ρ D(α) Π]` with the standard parity `(−1)^n`.
///
/// Returns the real part; the discarded imaginary part is below 1e-10 for
/// Hermitian input.
pub fn wigner(rho: &OperatorMatrix, grid: &[(f64, f64)]) -> Vec<f64> {
    let dim = rho.dim();
    let tail = super::top_population(rho, 10);
    if dim > 10 && tail > 1e-6 {
        log::warn!("wigner: population {tail:.2e} in the top 10 levels; truncation may distort W");
    }
    grid.par_iter()
        .map(|&(x, p)| {
            let beta = Complex64::new(2.0 * x, 2.0 * p);
            let d = displacement_elements(dim, beta);
            let mut acc = Complex64::new(0.0, 0.0);
            for n in 0..dim {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                for m in 0..dim {
                    acc += rho.get(n, m) * d[m * dim + n] * sign;
                }
            }
            debug_assert!(acc.im.abs() < 1e-8);
            std::f64::consts::FRAC_2_PI * acc.re
        })
        .collect()
}

/// Hermite functions `ψ_n(q)` for `n < dim`.
fn hermite_functions(dim: usize, q: f64) -> Vec<f64> {
    let mut psi = vec![0.0; dim];
    psi[0] = std::f64::consts::PI.powf(-0.25) * (-0.5 * q * q).exp();
    if dim > 1 {
        psi[1] = 2f64.sqrt() * q * psi[0];
    }
    for n in 1..dim.saturating_sub(1) {
        let nf = n as f64;
        psi[n + 1] = (2.0 / (nf + 1.0)).sqrt() * q * psi[n] - (nf / (nf + 1.0)).sqrt() * psi[n - 1];
    }
    psi
}

/// Probability density of the quadrature `(a e^{−iθ} + a† e^{iθ})/√2`.
pub fn marginal(rho: &OperatorMatrix, theta: f64, qs: &[f64]) -> Vec<f64> {
    let dim = rho.dim();
    qs.iter()
        .map(|&q| {
            let psi = hermite_functions(dim, q);
            let mut acc = Complex64::new(0.0, 0.0);
            for n in 0..dim {
                for m in 0..dim {
                    let ph = Complex64::from_polar(1.0, -theta * (n as f64 - m as f64));
                    acc += rho.get(n, m) * ph * psi[n] * psi[m];
                }
            }
            acc.re
        })
        .collect()
}
