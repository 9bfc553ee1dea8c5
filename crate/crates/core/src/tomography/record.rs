//! Binary-outcome measurement records, their simulation and a versioned
//! plain-text serialization.
//!
//! File layout (`#` starts a comment, fields are whitespace separated):
//!
//! ```text
//! format nlre-record
//! version 1
//! seed 42
//! [sdd]
//! eta 0.5
//! # alpha_re alpha_im up shots
//! -2.5 0 171 300
//! [flops]
//! order 4
//! eta 0.5
//! g0 1
//! gamma_decay 0.001
//! # time up shots
//! 0 300 300
//! ```
//!
//! Either section may be absent. Header keys precede the data rows of their
//! section.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::overlap::{p_up, CharFunction, SddGrid};
use crate::error::{NlreError, Result};
use crate::fock::{bessel_coupling, fock_distribution, OperatorMatrix};

pub const RECORD_FORMAT: &str = "nlre-record";
pub const RECORD_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SddPoint {
    pub alpha_re: f64,
    pub alpha_im: f64,
    pub up: u32,
    pub shots: u32,
}

impl SddPoint {
    pub fn alpha(&self) -> Complex64 {
        Complex64::new(self.alpha_re, self.alpha_im)
    }
}

/// Spin-up counts after the state-dependent displacement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SddData {
    pub eta: f64,
    pub points: Vec<SddPoint>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlopPoint {
    pub time: f64,
    pub up: u32,
    pub shots: u32,
}

/// Spin-up counts while driving a single sideband of order `order`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlopData {
    pub order: i32,
    pub eta: f64,
    /// Rabi scale of the flop drive.
    pub g0: f64,
    /// Decay rate of the Rabi oscillation.
    pub gamma_decay: f64,
    pub points: Vec<FlopPoint>,
}

impl FlopData {
    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.time).collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub seed: Option<u64>,
    pub sdd: Option<SddData>,
    pub flops: Option<FlopData>,
}

fn check_counts(up: u32, shots: u32) -> Result<()> {
    if shots == 0 || up > shots {
        return Err(NlreError::Format(format!("counts {up}/{shots} out of range")));
    }
    Ok(())
}

impl MeasurementRecord {
    pub fn validate(&self) -> Result<()> {
        if self.sdd.is_none() && self.flops.is_none() {
            return Err(NlreError::InvalidInput("record has no data".into()));
        }
        if let Some(s) = &self.sdd {
            if s.points.is_empty() {
                return Err(NlreError::InvalidInput("empty SDD section".into()));
            }
            for p in &s.points {
                check_counts(p.up, p.shots)?;
            }
        }
        if let Some(f) = &self.flops {
            if f.points.is_empty() {
                return Err(NlreError::InvalidInput("empty flop section".into()));
            }
            for p in &f.points {
                check_counts(p.up, p.shots)?;
            }
            if f.points.windows(2).any(|w| w[1].time <= w[0].time) {
                return Err(NlreError::InvalidInput("flop times must increase strictly".into()));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "format {RECORD_FORMAT}");
        let _ = writeln!(s, "version {RECORD_VERSION}");
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "seed {seed}");
        }
        if let Some(sdd) = &self.sdd {
            let _ = writeln!(s, "[sdd]");
            let _ = writeln!(s, "eta {}", sdd.eta);
            let _ = writeln!(s, "# alpha_re alpha_im up shots");
            for p in &sdd.points {
                let _ = writeln!(s, "{} {} {} {}", p.alpha_re, p.alpha_im, p.up, p.shots);
            }
        }
        if let Some(f) = &self.flops {
            let _ = writeln!(s, "[flops]");
            let _ = writeln!(s, "order {}", f.order);
            let _ = writeln!(s, "eta {}", f.eta);
            let _ = writeln!(s, "g0 {}", f.g0);
            let _ = writeln!(s, "gamma_decay {}", f.gamma_decay);
            let _ = writeln!(s, "# time up shots");
            for p in &f.points {
                let _ = writeln!(s, "{} {} {}", p.time, p.up, p.shots);
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        #[derive(PartialEq)]
        enum Section {
            Head,
            Sdd,
            Flops,
        }
        let mut section = Section::Head;
        let mut rec = MeasurementRecord::default();
        let mut version = None;
        let mut format_ok = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: &str| NlreError::Format(format!("line {}: {m}: `{raw}`", lineno + 1));
            match line {
                "[sdd]" => {
                    section = Section::Sdd;
                    rec.sdd = Some(SddData {
                        eta: f64::NAN,
                        points: Vec::new(),
                    });
                    continue;
                }
                "[flops]" => {
                    section = Section::Flops;
                    rec.flops = Some(FlopData {
                        order: 0,
                        eta: f64::NAN,
                        g0: f64::NAN,
                        gamma_decay: 0.0,
                        points: Vec::new(),
                    });
                    continue;
                }
                _ => {}
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let num = |i: usize| -> Result<f64> {
                fields
                    .get(i)
                    .ok_or_else(|| err("missing field"))?
                    .parse::<f64>()
                    .map_err(|_| err("bad number"))
            };
            let count = |i: usize| -> Result<u32> {
                fields
                    .get(i)
                    .ok_or_else(|| err("missing field"))?
                    .parse::<u32>()
                    .map_err(|_| err("bad count"))
            };
            let is_key = fields[0].starts_with(|c: char| c.is_ascii_alphabetic());
            match (&section, is_key) {
                (Section::Head, true) => match fields[0] {
                    "format" => format_ok = fields.get(1) == Some(&RECORD_FORMAT),
                    "version" => version = Some(count(1)?),
                    "seed" => {
                        rec.seed = Some(
                            fields
                                .get(1)
                                .and_then(|v| v.parse().ok())
                                .ok_or_else(|| err("bad seed"))?,
                        )
                    }
                    _ => return Err(err("unknown header key")),
                },
                (Section::Sdd, true) => match fields[0] {
                    "eta" => rec.sdd.as_mut().expect("section open").eta = num(1)?,
                    _ => return Err(err("unknown sdd key")),
                },
                (Section::Flops, true) => {
                    let f = rec.flops.as_mut().expect("section open");
                    match fields[0] {
                        "order" => {
                            f.order = fields
                                .get(1)
                                .and_then(|v| v.parse().ok())
                                .ok_or_else(|| err("bad order"))?
                        }
                        "eta" => f.eta = num(1)?,
                        "g0" => f.g0 = num(1)?,
                        "gamma_decay" => f.gamma_decay = num(1)?,
                        _ => return Err(err("unknown flops key")),
                    }
                }
                (Section::Sdd, false) => {
                    if fields.len() != 4 {
                        return Err(err("expected 4 fields"));
                    }
                    rec.sdd.as_mut().expect("section open").points.push(SddPoint {
                        alpha_re: num(0)?,
                        alpha_im: num(1)?,
                        up: count(2)?,
                        shots: count(3)?,
                    });
                }
                (Section::Flops, false) => {
                    if fields.len() != 3 {
                        return Err(err("expected 3 fields"));
                    }
                    rec.flops.as_mut().expect("section open").points.push(FlopPoint {
                        time: num(0)?,
                        up: count(1)?,
                        shots: count(2)?,
                    });
                }
                (Section::Head, false) => return Err(err("data row outside a section")),
            }
        }
        if !format_ok {
            return Err(NlreError::Format(format!("missing `format {RECORD_FORMAT}` header")));
        }
        match version {
            Some(RECORD_VERSION) => {}
            Some(v) => return Err(NlreError::Format(format!("unsupported record version {v}"))),
            None => return Err(NlreError::Format("missing version".into())),
        }
        if rec.sdd.as_ref().is_some_and(|s| !s.eta.is_finite())
            || rec.flops.as_ref().is_some_and(|f| !f.eta.is_finite() || !f.g0.is_finite())
        {
            return Err(NlreError::Format("section header incomplete".into()));
        }
        rec.validate()?;
        Ok(rec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

fn sample(rng: &mut ChaCha8Rng, shots: u32, p: f64) -> u32 {
    let p = p.clamp(0.0, 1.0);
    Binomial::new(shots as u64, p)
        .expect("probability clamped to [0, 1]")
        .sample(rng) as u32
}

/// Exact spin-up probabilities of the SDD scan.
pub fn sdd_probabilities(rho: &OperatorMatrix, eta: f64, alphas: &[Complex64]) -> Result<Vec<f64>> {
    let a_max = alphas.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let cf = CharFunction::new(rho, eta, a_max)?;
    Ok(cf.eval(alphas).into_iter().map(p_up).collect())
}

/// Binomial spin-up counts for every grid point.
pub fn simulate_sdd(rho: &OperatorMatrix, eta: f64, grid: &SddGrid, seed: u64) -> Result<SddData> {
    let probs = sdd_probabilities(rho, eta, &grid.alphas)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = grid
        .alphas
        .iter()
        .zip(&probs)
        .map(|(a, &p)| SddPoint {
            alpha_re: a.re,
            alpha_im: a.im,
            up: sample(&mut rng, grid.shots, p),
            shots: grid.shots,
        })
        .collect();
    Ok(SddData { eta, points })
}

/// Flop frequency `g₀ J_Δn(2η√(n + (Δn+1)/2))` of Fock state `n`.
pub fn flop_frequency(n: usize, order: i32, eta: f64, g0: f64) -> f64 {
    g0 * bessel_coupling(n, order, eta)
}

/// `½ Σ_n P(n)[1 + e^{−γt} cos(ω_n t)]`.
pub fn flop_probability(pops: &[f64], order: i32, eta: f64, g0: f64, gamma_decay: f64, t: f64) -> f64 {
    let damp = (-gamma_decay * t).exp();
    0.5 * pops
        .iter()
        .enumerate()
        .map(|(n, p)| p * (1.0 + damp * (flop_frequency(n, order, eta, g0) * t).cos()))
        .sum::<f64>()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlopSettings {
    pub order: i32,
    pub eta: f64,
    pub times: Vec<f64>,
    pub shots: u32,
    pub g0: f64,
    pub gamma_decay: f64,
}

pub fn simulate_flops(rho: &OperatorMatrix, settings: &FlopSettings, seed: u64) -> FlopData {
    let pops = fock_distribution(rho);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = settings
        .times
        .iter()
        .map(|&t| {
            let p = flop_probability(&pops, settings.order, settings.eta, settings.g0, settings.gamma_decay, t);
            FlopPoint {
                time: t,
                up: sample(&mut rng, settings.shots, p),
                shots: settings.shots,
            }
        })
        .collect();
    FlopData {
        order: settings.order,
        eta: settings.eta,
        g0: settings.g0,
        gamma_decay: settings.gamma_decay,
        points,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{fock_state, thermal_state};
    use crate::fock::wigner::linspace;

    #[test]
    fn sampler_within_binomial_bounds() {
        let rho = thermal_state(20, 1.2);
        let grid = SddGrid::line(3.0, 25, 100_000);
        let data = simulate_sdd(&rho, 0.5, &grid, 9).unwrap();
        let probs = sdd_probabilities(&rho, 0.5, &grid.alphas).unwrap();
        for (pt, p) in data.points.iter().zip(&probs) {
            let n = pt.shots as f64;
            let sigma = (p * (1.0 - p) / n).sqrt().max(1.0 / n);
            assert!((pt.up as f64 / n - p).abs() < 5.0 * sigma);
        }
    }

    #[test]
    fn deterministic_counts_at_extremes() {
        let rho = fock_state(10, 0);
        let grid = SddGrid::line(0.0, 1, 50);
        let data = simulate_sdd(&rho, 0.5, &grid, 1).unwrap();
        assert_eq!(data.points[0].up, 50);
        let s = FlopSettings {
            order: 1,
            eta: 0.5,
            times: vec![0.0],
            shots: 77,
            g0: 1.0,
            gamma_decay: 0.0,
        };
        assert_eq!(simulate_flops(&rho, &s, 3).points[0].up, 77);
    }

    #[test]
    fn vacuum_flop_is_single_tone() {
        let pops = [1.0, 0.0, 0.0];
        let w = flop_frequency(0, 2, 0.4, 1.3);
        for t in linspace(0.0, 30.0, 31) {
            let p = flop_probability(&pops, 2, 0.4, 1.3, 0.0, t);
            assert!((p - 0.5 * (1.0 + (w * t).cos())).abs() < 1e-15);
        }
    }

    #[test]
    fn same_seed_same_counts() {
        let rho = thermal_state(12, 0.5);
        let grid = SddGrid::square(2.0, 4, 200);
        let a = simulate_sdd(&rho, 0.5, &grid, 5).unwrap();
        let b = simulate_sdd(&rho, 0.5, &grid, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn text_round_trip() {
        let rho = thermal_state(12, 0.5);
        let sdd = simulate_sdd(&rho, 0.5, &SddGrid::square(1.7, 3, 200), 5).unwrap();
        let flops = simulate_flops(
            &rho,
            &FlopSettings {
                order: 4,
                eta: 0.5,
                times: linspace(0.0, 10.0, 6),
                shots: 300,
                g0: 1.0 / 3.0,
                gamma_decay: 1e-3,
            },
            6,
        );
        let rec = MeasurementRecord {
            seed: Some(5),
            sdd: Some(sdd),
            flops: Some(flops),
        };
        let back = MeasurementRecord::from_text(&rec.to_text()).unwrap();
        assert_eq!(back, rec);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(MeasurementRecord::from_text("version 1\n").is_err());
        assert!(MeasurementRecord::from_text("format nlre-record\nversion 2\n[sdd]\neta 0.5\n0 0 1 2\n").is_err());
        assert!(MeasurementRecord::from_text("format nlre-record\nversion 1\n[sdd]\neta 0.5\n0 0 3 2\n").is_err());
        assert!(MeasurementRecord::from_text("format nlre-record\nversion 1\n[sdd]\neta 0.5\n0 0 1 2\n").is_ok());
    }
}
