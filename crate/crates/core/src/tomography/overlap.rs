use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{NlreError, Result};
use crate::fock::wigner::linspace;
use crate::fock::{CMatrix, FockSpace, OperatorMatrix, SddGenerator};

/// Drive areas of an SDD scan with the shots taken at each point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SddGrid {
    pub alphas: Vec<Complex64>,
    pub shots: u32,
}

impl SddGrid {
    /// `m` real areas symmetric about zero.
    pub fn line(extent: f64, m: usize, shots: u32) -> Self {
        Self {
            alphas: linspace(-extent, extent, m)
                .into_iter()
                .map(|a| Complex64::new(a, 0.0))
                .collect(),
            shots,
        }
    }

    /// `m × m` grid `α = x + ip`; the phase of `α` is the motional phase of
    /// the drive.
    pub fn square(extent: f64, m: usize, shots: u32) -> Self {
        let axis = linspace(-extent, extent, m);
        let mut alphas = Vec::with_capacity(m * m);
        for &p in &axis {
            for &x in &axis {
                alphas.push(Complex64::new(x, p));
            }
        }
        Self { alphas, shots }
    }

    pub fn max_abs(&self) -> f64 {
        self.alphas.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }
}

/// `ξ_{j,k}(α) = ⟨j|Ô(α/2)Ô(α/2)|k⟩` on the oscillator.
///
/// For complex `α = |α|e^{iφ}` the drive carries motional phase `φ`, giving
/// `ξ_{j,k}(α) = e^{iφ(j−k)} ⟨j|e^{i|α|G}|k⟩`.
pub fn overlap_matrix(space: &FockSpace, alpha: Complex64) -> CMatrix {
    overlap_with(&SddGenerator::new(space), alpha)
}

fn overlap_with(gen: &SddGenerator, alpha: Complex64) -> CMatrix {
    let base = gen.exp_i(alpha.norm());
    let phi = alpha.arg();
    if phi == 0.0 {
        return base;
    }
    CMatrix::from_fn(base.nrows(), base.ncols(), |j, k| {
        base[(j, k)] * Complex64::from_polar(1.0, phi * (j as f64 - k as f64))
    })
}

/// Real coordinates of a Hermitian `ρ`: `ρ_ii`, then `Re ρ_ij` at `(i, j)`
/// and `Im ρ_ij` at `(j, i)` for `i < j`, row-major.
pub fn density_features(rho: &CMatrix) -> Vec<f64> {
    let n = rho.nrows();
    let mut x = vec![0.0; n * n];
    for i in 0..n {
        x[i * n + i] = rho[(i, i)].re;
        for j in i + 1..n {
            x[i * n + j] = rho[(i, j)].re;
            x[j * n + i] = rho[(i, j)].im;
        }
    }
    x
}

/// Coefficients `a` with `tr(ρH) = a · density_features(ρ)` for Hermitian `H`.
pub fn hermitian_coefficients(h: &CMatrix) -> Vec<f64> {
    let n = h.nrows();
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        a[i * n + i] = h[(i, i)].re;
        for j in i + 1..n {
            a[i * n + j] = 2.0 * h[(i, j)].re;
            a[j * n + i] = 2.0 * h[(i, j)].im;
        }
    }
    a
}

/// Inverse of [`hermitian_coefficients`].
pub fn coefficients_to_hermitian(a: &[f64], n: usize) -> CMatrix {
    let mut h = CMatrix::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = Complex64::new(a[i * n + i], 0.0);
        for j in i + 1..n {
            let v = Complex64::new(0.5 * a[i * n + j], 0.5 * a[j * n + i]);
            h[(i, j)] = v;
            h[(j, i)] = v.conj();
        }
    }
    h
}

const TAIL_LEVELS: usize = 10;
const TAIL_THRESHOLD: f64 = 1e-6;
const MAX_PADDED_DIM: usize = 400;

/// Generator on `dim + pad` levels with `pad` grown until `e^{iaG}|k⟩`
/// keeps its top-level weight below threshold for every `k < dim` and
/// `|a| ≤ a_max`.
fn padded_generator(eta: f64, dim: usize, a_max: f64) -> Result<SddGenerator> {
    let mut pad = 20;
    loop {
        let big = dim + pad;
        let gen = SddGenerator::new(&FockSpace::new(big, eta)?);
        let probe = linspace(0.0, a_max, 9);
        let tail = probe
            .iter()
            .map(|&a| {
                let u = gen.exp_i(a);
                (0..dim)
                    .map(|k| (big - TAIL_LEVELS..big).map(|j| u[(j, k)].norm_sqr()).sum::<f64>())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if tail < TAIL_THRESHOLD {
            return Ok(gen);
        }
        if big >= MAX_PADDED_DIM {
            return Err(NlreError::TruncationBreach {
                population: tail,
                levels: TAIL_LEVELS,
                threshold: TAIL_THRESHOLD,
            });
        }
        pad *= 2;
    }
}

/// Precomputed overlap matrices on the first `dim` Fock states, stored as
/// the real coefficients of `(ξ + ξ†)/2` so that `Re ξ(α) = a_α · x(ρ)`.
#[derive(Clone, Debug)]
pub struct OverlapTable {
    pub eta: f64,
    pub dim: usize,
    pub alphas: Vec<Complex64>,
    coefficients: DMatrix<f64>,
}

impl OverlapTable {
    pub fn new(eta: f64, dim: usize, alphas: &[Complex64]) -> Result<Self> {
        let a_max = alphas.iter().map(|a| a.norm()).fold(0.0, f64::max);
        let gen = padded_generator(eta, dim, a_max)?;
        let rows: Vec<Vec<f64>> = alphas
            .par_iter()
            .map(|&alpha| {
                let full = overlap_with(&gen, alpha);
                let xi = full.view((0, 0), (dim, dim));
                let h = (xi + xi.adjoint()) * Complex64::new(0.5, 0.0);
                hermitian_coefficients(&h)
            })
            .collect();
        let coefficients = DMatrix::from_fn(alphas.len(), dim * dim, |i, j| rows[i][j]);
        Ok(Self {
            eta,
            dim,
            alphas: alphas.to_vec(),
            coefficients,
        })
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    /// Matrix whose rows are the coefficient vectors `a_α`.
    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coefficients
    }

    /// `Re ξ(α_k)` for the state with features `x`.
    pub fn re_xi(&self, k: usize, x: &[f64]) -> f64 {
        self.coefficients.row(k).iter().zip(x).map(|(a, b)| a * b).sum()
    }
}

/// Characteristic function `ξ(α) = Σ ρ_{i,j} ξ_{j,i}(α)` of a fixed state,
/// evaluated through the eigenbasis of the generator.
pub struct CharFunction {
    gen: SddGenerator,
    rho: CMatrix,
}

impl CharFunction {
    pub fn new(rho: &OperatorMatrix, eta: f64, a_max: f64) -> Result<Self> {
        let gen = padded_generator(eta, rho.dim(), a_max)?;
        let rho = rho.embed(gen.dim()).into_inner();
        Ok(Self { gen, rho })
    }

    /// `ξ(α)` at every point; each point costs one basis change.
    pub fn eval(&self, alphas: &[Complex64]) -> Vec<Complex64> {
        let n = self.gen.dim();
        let v = self.gen.eigenvectors().map(|x| Complex64::new(x, 0.0));
        let vt = v.transpose();
        let lambda = self.gen.eigenvalues();
        alphas
            .par_iter()
            .map(|&alpha| {
                let phi = alpha.arg();
                // ξ = tr(R†ρR e^{i|α|G}), R = e^{iφn}
                let rot = CMatrix::from_fn(n, n, |j, k| {
                    self.rho[(j, k)] * Complex64::from_polar(1.0, -phi * (j as f64 - k as f64))
                });
                let w = &vt * rot * &v;
                (0..n)
                    .map(|m| w[(m, m)] * Complex64::from_polar(1.0, alpha.norm() * lambda[m]))
                    .sum()
            })
            .collect()
    }
}

/// `ξ(α)` for a single point.
pub fn char_function(rho: &OperatorMatrix, eta: f64, alpha: Complex64) -> Result<Complex64> {
    Ok(CharFunction::new(rho, eta, alpha.norm())?.eval(&[alpha])[0])
}

/// Spin-up probability after the SDD, `½(1 + Re ξ)`.
pub fn p_up(xi: Complex64) -> f64 {
    0.5 * (1.0 + xi.re)
}
