//! Bootstrap resampling of a measurement record.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mle::{cholesky_factor, initial_factor, optimize, Likelihood, MleOptions, MleOutcome};
use super::record::MeasurementRecord;
use crate::error::{NlreError, Result};
use crate::fock::{CMatrix, OperatorMatrix};
use crate::linalg::fidelity;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Resampling {
    /// Draw all shots of a section with replacement from the pooled outcomes.
    #[default]
    Pooled,
    /// Reuse the original counts in every sample.
    Identity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapOptions {
    pub samples: usize,
    pub seed: u64,
    pub resampling: Resampling,
    pub mle: MleOptions,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self {
            samples: 100,
            seed: 0,
            resampling: Resampling::Pooled,
            mle: MleOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityStats {
    pub mean: f64,
    pub std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MLEResult {
    /// Reconstruction from the original counts.
    pub estimate: MleOutcome,
    pub rho_mean: OperatorMatrix,
    pub bootstrap_rhos: Vec<OperatorMatrix>,
    /// Covariance of row-major `vec(ρ)` over the samples.
    pub covariance: OperatorMatrix,
    pub fidelity_vs_reference: Option<FidelityStats>,
    pub failed_samples: usize,
}

/// Multinomial draw of `total` items over `weights` by sequential binomials.
fn multinomial(rng: &mut ChaCha8Rng, total: u64, weights: &[f64]) -> Vec<u64> {
    let mut left = total;
    let mut mass: f64 = weights.iter().sum();
    let mut out = Vec::with_capacity(weights.len());
    for &w in weights {
        let p = if mass > 0.0 { (w / mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = if left == 0 || p == 0.0 {
            0
        } else {
            Binomial::new(left, p).expect("p in [0, 1]").sample(rng)
        };
        out.push(k);
        left -= k;
        mass -= w;
    }
    out
}

fn resample_counts(rng: &mut ChaCha8Rng, counts: &[(u32, u32)]) -> Vec<(u32, u32)> {
    let total: u64 = counts.iter().map(|c| c.1 as u64).sum();
    let weights: Vec<f64> = counts.iter().map(|c| c.1 as f64).collect();
    let draws = multinomial(rng, total, &weights);
    counts
        .iter()
        .zip(draws)
        .map(|(&(up, shots), n)| {
            let p = up as f64 / shots as f64;
            let k = if n == 0 { 0 } else { Binomial::new(n, p).expect("p in [0, 1]").sample(rng) };
            (k as u32, n as u32)
        })
        .collect()
}

/// One pooled bootstrap resample of both record sections.
pub fn resample_record(record: &MeasurementRecord, rng: &mut ChaCha8Rng) -> MeasurementRecord {
    let mut out = record.clone();
    if let Some(s) = &mut out.sdd {
        let counts: Vec<(u32, u32)> = s.points.iter().map(|p| (p.up, p.shots)).collect();
        for (p, (up, shots)) in s.points.iter_mut().zip(resample_counts(rng, &counts)) {
            p.up = up;
            p.shots = shots;
        }
    }
    if let Some(f) = &mut out.flops {
        let counts: Vec<(u32, u32)> = f.points.iter().map(|p| (p.up, p.shots)).collect();
        for (p, (up, shots)) in f.points.iter_mut().zip(resample_counts(rng, &counts)) {
            p.up = up;
            p.shots = shots;
        }
    }
    out
}

fn vectorize(rho: &OperatorMatrix) -> Vec<Complex64> {
    let n = rho.dim();
    (0..n * n).map(|k| rho.get(k / n, k % n)).collect()
}

/// Reference truncated to `dim` and renormalized.
pub fn truncated_reference(rho: &OperatorMatrix, dim: usize) -> OperatorMatrix {
    let t = rho.truncate(dim);
    let tr = t.trace().re;
    t.scale(1.0 / tr)
}

/// Bootstrap mean, covariance and fidelity spread of the reconstruction.
pub fn bootstrap(
    record: &MeasurementRecord,
    opts: &BootstrapOptions,
    reference: Option<&OperatorMatrix>,
) -> Result<MLEResult> {
    if opts.samples < 2 {
        return Err(NlreError::InvalidInput("bootstrap needs at least 2 samples".into()));
    }
    let mle = &opts.mle;
    let base = Likelihood::new(record, mle.dim)?.with_symmetry(mle.symmetry_d, mle.symmetry_weight);
    let estimate = optimize(&base, &initial_factor(mle.dim, None, mle.seed), mle);
    let warm = cholesky_factor(&estimate.rho, 1e-4);

    let outcomes: Vec<Option<OperatorMatrix>> = (0..opts.samples)
        .into_par_iter()
        .map(|i| {
            let counts = match opts.resampling {
                Resampling::Pooled => {
                    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                    rng.set_stream(i as u64);
                    resample_record(record, &mut rng)
                }
                Resampling::Identity => record.clone(),
            };
            let lik = base.with_counts(&counts).ok()?;
            let out = optimize(&lik, &warm, mle);
            out.nll.is_finite().then_some(out.rho)
        })
        .collect();
    let failed_samples = outcomes.iter().filter(|o| o.is_none()).count();
    let rhos: Vec<OperatorMatrix> = outcomes.into_iter().flatten().collect();
    if rhos.len() < 2 {
        return Err(NlreError::Numerical(format!(
            "{failed_samples} of {} bootstrap samples failed",
            opts.samples
        )));
    }
    if failed_samples > 0 {
        log::warn!("{failed_samples} bootstrap samples failed and were skipped");
    }

    let b = rhos.len() as f64;
    let n = mle.dim;
    let mut mean = CMatrix::zeros(n, n);
    for r in &rhos {
        mean += r.matrix();
    }
    let rho_mean = OperatorMatrix::new(mean / Complex64::new(b, 0.0));
    let mu = vectorize(&rho_mean);
    let mut cov = CMatrix::zeros(n * n, n * n);
    for r in &rhos {
        let v: Vec<Complex64> = vectorize(r).iter().zip(&mu).map(|(a, m)| a - m).collect();
        for i in 0..n * n {
            for j in 0..n * n {
                cov[(i, j)] += v[i] * v[j].conj();
            }
        }
    }
    let covariance = OperatorMatrix::new(cov / Complex64::new(b, 0.0));

    let fidelity_vs_reference = match reference {
        Some(r) => {
            let r = truncated_reference(r, n);
            let fs = rhos.iter().map(|x| fidelity(x, &r)).collect::<Result<Vec<_>>>()?;
            let mean = fs.iter().sum::<f64>() / b;
            let var = fs.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / b;
            Some(FidelityStats { mean, std: var.sqrt() })
        }
        None => None,
    };

    Ok(MLEResult {
        estimate,
        rho_mean,
        bootstrap_rhos: rhos,
        covariance,
        fidelity_vs_reference,
        failed_samples,
    })
}
