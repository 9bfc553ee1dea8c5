//! Maximum-likelihood reconstruction with `ρ = DD†/tr(DD†)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::overlap::{coefficients_to_hermitian, density_features, OverlapTable};
use super::record::{flop_frequency, FlopData, MeasurementRecord, SddData};
use crate::error::{NlreError, Result};
use crate::fock::{CMatrix, OperatorMatrix};

pub const P_MIN: f64 = 1e-9;
pub const P_MAX: f64 = 1.0 - 1e-9;

/// Learning-rate schedule of the optimizer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum StepSchedule {
    Constant,
    /// `lr · final_factor^{k/iterations}`.
    Exponential { final_factor: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MleOptions {
    pub dim: usize,
    /// Modularity `d` of the coherence sign constraint; `None` disables it.
    pub symmetry_d: Option<usize>,
    /// Penalty weight per unit of constraint violation.
    pub symmetry_weight: f64,
    /// Restrict `ρ` to states invariant under `2π/d` rotations, i.e. no
    /// coherence between different classes `n mod d`.
    pub rotation_d: Option<usize>,
    pub iterations: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub schedule: StepSchedule,
    /// Stop once the relative NLL decrease over `window` steps is below this.
    pub tolerance: f64,
    pub window: usize,
    pub seed: u64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            dim: 24,
            symmetry_d: None,
            symmetry_weight: 1000.0,
            rotation_d: None,
            iterations: 20_000,
            learning_rate: 1e-2,
            beta1: 0.9,
            beta2: 0.999,
            schedule: StepSchedule::Exponential { final_factor: 0.05 },
            tolerance: 1e-10,
            window: 500,
            seed: 0,
        }
    }
}

/// Flop data reduced to linear coefficients on the populations.
#[derive(Clone, Debug)]
struct FlopTable {
    coefficients: DMatrix<f64>,
    up: Vec<f64>,
    shots: Vec<f64>,
}

impl FlopTable {
    fn new(data: &FlopData, dim: usize) -> Self {
        let omegas: Vec<f64> = (0..dim)
            .map(|n| flop_frequency(n, data.order, data.eta, data.g0))
            .collect();
        let coefficients = DMatrix::from_fn(data.points.len(), dim, |i, n| {
            let t = data.points[i].time;
            0.5 * (1.0 + (-data.gamma_decay * t).exp() * (omegas[n] * t).cos())
        });
        Self {
            coefficients,
            up: data.points.iter().map(|p| p.up as f64).collect(),
            shots: data.points.iter().map(|p| p.shots as f64).collect(),
        }
    }
}

/// Precomputed measurement model for one record at a fixed dimension.
#[derive(Clone, Debug)]
pub struct Likelihood {
    pub dim: usize,
    sdd: Option<(OverlapTable, Vec<f64>, Vec<f64>)>,
    flops: Option<FlopTable>,
    symmetry: Option<(usize, f64)>,
}

fn binomial_term(up: f64, shots: f64, p: f64) -> (f64, f64) {
    let pc = p.clamp(P_MIN, P_MAX);
    let value = -(up * pc.ln() + (shots - up) * (1.0 - pc).ln());
    let slope = if p == pc { -(up / pc - (shots - up) / (1.0 - pc)) } else { 0.0 };
    (value, slope)
}

impl Likelihood {
    pub fn new(record: &MeasurementRecord, dim: usize) -> Result<Self> {
        record.validate()?;
        let sdd = record
            .sdd
            .as_ref()
            .map(|s| -> Result<_> {
                let alphas: Vec<Complex64> = s.points.iter().map(|p| p.alpha()).collect();
                let table = OverlapTable::new(s.eta, dim, &alphas)?;
                Ok((
                    table,
                    s.points.iter().map(|p| p.up as f64).collect(),
                    s.points.iter().map(|p| p.shots as f64).collect(),
                ))
            })
            .transpose()?;
        Ok(Self {
            dim,
            sdd,
            flops: record.flops.as_ref().map(|f| FlopTable::new(f, dim)),
            symmetry: None,
        })
    }

    /// Same tables with new counts; the grid and flop times must match.
    pub fn with_counts(&self, record: &MeasurementRecord) -> Result<Self> {
        let mut out = self.clone();
        match (&mut out.sdd, &record.sdd) {
            (Some((t, up, shots)), Some(s)) if s.points.len() == t.len() => {
                *up = s.points.iter().map(|p| p.up as f64).collect();
                *shots = s.points.iter().map(|p| p.shots as f64).collect();
            }
            (None, None) => {}
            _ => return Err(NlreError::InvalidInput("SDD layout differs from the table".into())),
        }
        match (&mut out.flops, &record.flops) {
            (Some(t), Some(f)) if f.points.len() == t.up.len() => {
                t.up = f.points.iter().map(|p| p.up as f64).collect();
                t.shots = f.points.iter().map(|p| p.shots as f64).collect();
            }
            (None, None) => {}
            _ => return Err(NlreError::InvalidInput("flop layout differs from the table".into())),
        }
        Ok(out)
    }

    pub fn with_symmetry(mut self, d: Option<usize>, weight: f64) -> Self {
        self.symmetry = d.filter(|&d| d > 0 && d < self.dim).map(|d| (d, weight));
        self
    }

    pub fn sdd_data(&self) -> Option<&OverlapTable> {
        self.sdd.as_ref().map(|s| &s.0)
    }

    /// NLL and `G = ∂NLL/∂ρ` (Hermitian, `δNLL = tr(G δρ)`).
    pub fn value_and_density_gradient(&self, rho: &CMatrix) -> (f64, CMatrix) {
        let n = self.dim;
        let x = density_features(rho);
        let mut value = 0.0;
        let mut coef = vec![0.0; n * n];
        if let Some((table, up, shots)) = &self.sdd {
            let c = table.coefficients();
            let re_xi = c * nalgebra::DVector::from_column_slice(&x);
            let mut w = nalgebra::DVector::zeros(table.len());
            for k in 0..table.len() {
                let (v, s) = binomial_term(up[k], shots[k], 0.5 * (1.0 + re_xi[k]));
                value += v;
                w[k] = 0.5 * s;
            }
            let g = c.transpose() * w;
            for (a, b) in coef.iter_mut().zip(g.iter()) {
                *a += b;
            }
        }
        if let Some(f) = &self.flops {
            let pops: Vec<f64> = (0..n).map(|i| x[i * n + i]).collect();
            let probs = &f.coefficients * nalgebra::DVector::from_column_slice(&pops);
            for k in 0..f.up.len() {
                let (v, s) = binomial_term(f.up[k], f.shots[k], probs[k]);
                value += v;
                for i in 0..n {
                    coef[i * n + i] += s * f.coefficients[(k, i)];
                }
            }
        }
        let mut g = coefficients_to_hermitian(&coef, n);
        if let Some((d, mu)) = self.symmetry {
            for a in 0..n - d {
                let b = a + d;
                let (paa, pbb) = (rho[(a, a)].re.max(1e-300), rho[(b, b)].re.max(1e-300));
                value += mu * ((paa * pbb).sqrt() - rho[(a, b)].re);
                g[(a, a)] += 0.5 * mu * (pbb / paa).sqrt();
                g[(b, b)] += 0.5 * mu * (paa / pbb).sqrt();
                g[(a, b)] -= 0.5 * mu;
                g[(b, a)] -= 0.5 * mu;
            }
        }
        (value, g)
    }

    /// NLL at the Cholesky factor `D` and its gradient, packed like `D`.
    pub fn value_and_gradient(&self, d: &CMatrix) -> (f64, CMatrix) {
        let m = d * d.adjoint();
        let tr = m.trace().re;
        let rho = m / Complex64::new(tr, 0.0);
        let (value, g) = self.value_and_density_gradient(&rho);
        let shift = (rho.clone() * &g).trace().re;
        let mut k = g;
        for i in 0..self.dim {
            k[(i, i)] -= Complex64::new(shift, 0.0);
        }
        let grad = (k * d) * Complex64::new(2.0 / tr, 0.0);
        (value, lower(grad))
    }

    pub fn nll(&self, rho: &OperatorMatrix) -> f64 {
        self.value_and_density_gradient(rho.matrix()).0
    }
}

fn lower(mut m: CMatrix) -> CMatrix {
    for j in 1..m.ncols() {
        for i in 0..j {
            m[(i, j)] = Complex64::new(0.0, 0.0);
        }
    }
    m
}

/// `DD†/tr(DD†)`.
pub fn cholesky_density(d: &CMatrix) -> OperatorMatrix {
    let m = d * d.adjoint();
    let tr = m.trace().re;
    let mut rho = OperatorMatrix::new(m / Complex64::new(tr, 0.0));
    rho.hermitize();
    rho
}

/// Lower-triangular `D` with `DD† ∝ ρ + ε·I`.
pub fn cholesky_factor(rho: &OperatorMatrix, floor: f64) -> CMatrix {
    let n = rho.dim();
    let m = rho.matrix() + CMatrix::identity(n, n) * Complex64::new(floor, 0.0);
    nalgebra::Cholesky::new(m)
        .map(|c| c.l())
        .unwrap_or_else(|| CMatrix::identity(n, n) / Complex64::new((n as f64).sqrt(), 0.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MleOutcome {
    pub rho: OperatorMatrix,
    pub nll: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn keep(i: usize, j: usize, rotation_d: Option<usize>) -> bool {
    j <= i && rotation_d.map_or(true, |d| d == 0 || (i - j) % d == 0)
}

/// Adam descent from `start`; returns the best iterate seen.
pub fn optimize(lik: &Likelihood, start: &CMatrix, opts: &MleOptions) -> MleOutcome {
    let n = lik.dim;
    let mut d = start.clone();
    for j in 0..n {
        for i in 0..n {
            if !keep(i, j, opts.rotation_d) {
                d[(i, j)] = Complex64::new(0.0, 0.0);
            }
        }
    }
    let mut m1 = CMatrix::zeros(n, n);
    let mut m2 = DMatrix::<f64>::zeros(n, n * 2);
    let (b1, b2) = (opts.beta1, opts.beta2);
    let mut history = Vec::with_capacity(opts.iterations + 1);
    let mut best = (f64::INFINITY, d.clone());
    let mut converged = false;
    let mut steps = 0;
    for it in 0..opts.iterations {
        let (value, grad) = lik.value_and_gradient(&d);
        if !value.is_finite() {
            break;
        }
        if value < best.0 {
            best = (value, d.clone());
        }
        history.push(value);
        if it >= opts.window {
            let old = history[it - opts.window];
            if (old - value) <= opts.tolerance * old.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        let lr = match opts.schedule {
            StepSchedule::Constant => opts.learning_rate,
            StepSchedule::Exponential { final_factor } => {
                opts.learning_rate * final_factor.powf(it as f64 / opts.iterations as f64)
            }
        };
        let t = (it + 1) as i32;
        let c1 = 1.0 - b1.powi(t);
        let c2 = 1.0 - b2.powi(t);
        for j in 0..n {
            for i in j..n {
                if !keep(i, j, opts.rotation_d) {
                    continue;
                }
                let g = grad[(i, j)];
                m1[(i, j)] = m1[(i, j)] * b1 + g * (1.0 - b1);
                let v_re = b2 * m2[(i, 2 * j)] + (1.0 - b2) * g.re * g.re;
                let v_im = b2 * m2[(i, 2 * j + 1)] + (1.0 - b2) * g.im * g.im;
                m2[(i, 2 * j)] = v_re;
                m2[(i, 2 * j + 1)] = v_im;
                let mh = m1[(i, j)] / c1;
                let step = Complex64::new(
                    mh.re / ((v_re / c2).sqrt() + 1e-12),
                    mh.im / ((v_im / c2).sqrt() + 1e-12),
                );
                d[(i, j)] -= step * lr;
            }
        }
        steps = it + 1;
    }
    let (value, _) = lik.value_and_gradient(&d);
    if value < best.0 {
        best = (value, d);
    }
    if !converged {
        log::warn!("MLE stopped at the iteration cap ({steps} steps) before the NLL plateaued");
    }
    MleOutcome {
        rho: cholesky_density(&best.1),
        nll: best.0,
        iterations: steps,
        converged,
    }
}

/// Seeded starting factor near the maximally mixed state, or near `guess`.
pub fn initial_factor(dim: usize, guess: Option<&OperatorMatrix>, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = match guess {
        Some(rho) => cholesky_factor(&rho.truncate(dim), 1e-3),
        None => CMatrix::identity(dim, dim) / Complex64::new((dim as f64).sqrt(), 0.0),
    };
    let scale = 1e-3 / (dim as f64).sqrt();
    for j in 0..dim {
        for i in j..dim {
            d[(i, j)] += Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * scale;
        }
    }
    d
}

/// Population guess for the starting point from flop data, when present.
fn flop_guess(record: &MeasurementRecord, dim: usize) -> Option<OperatorMatrix> {
    let flops = record.flops.as_ref()?;
    let opts = super::fockfit::FockFitOptions {
        n_max: dim.min(flops.points.len() / 2),
        fit_nuisance: false,
        ..Default::default()
    };
    let fit = super::fockfit::fock_fit(flops, &opts).ok()?;
    let mut p = vec![0.0; dim];
    p[..fit.populations.len()].copy_from_slice(&fit.populations);
    Some(OperatorMatrix::from_diagonal(&p))
}

/// Reconstruct `ρ` from a record.
pub fn mle_reconstruct(record: &MeasurementRecord, opts: &MleOptions) -> Result<MleOutcome> {
    let lik = Likelihood::new(record, opts.dim)?.with_symmetry(opts.symmetry_d, opts.symmetry_weight);
    let guess = flop_guess(record, opts.dim);
    let start = initial_factor(opts.dim, guess.as_ref(), opts.seed);
    Ok(optimize(&lik, &start, opts))
}

/// Binomial-entropy floor `−Σ[S ln(S/N) + (N−S) ln(1−S/N)]` of SDD counts.
pub fn entropy_floor(data: &SddData) -> f64 {
    data.points
        .iter()
        .map(|p| {
            let (s, n) = (p.up as f64, p.shots as f64);
            let f = |k: f64| if k > 0.0 { k * (k / n).ln() } else { 0.0 };
            -(f(s) + f(n - s))
        })
        .sum()
}
