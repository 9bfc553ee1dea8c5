use serde::{Deserialize, Serialize};

use crate::error::{NlreError, Result};
use crate::fock::{bessel_coupling, bessel_coupling_at, FockSpace};

/// Experiment descriptor: raising order `r`, lowering order `l`, drive
/// strengths, pumping rate, Lamb-Dicke parameter and truncation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NLREConfig {
    pub r: usize,
    pub l: usize,
    pub g_r: f64,
    pub g_l: f64,
    pub gamma: f64,
    pub eta: f64,
    pub dim: usize,
}

impl Default for NLREConfig {
    fn default() -> Self {
        Self {
            r: 1,
            l: 2,
            g_r: 1.0,
            g_l: 1.0,
            gamma: 10.0,
            eta: 0.5,
            dim: 60,
        }
    }
}

impl NLREConfig {
    pub fn new(r: usize, l: usize, eta: f64, g_l_over_g_r: f64) -> Self {
        Self {
            r,
            l,
            eta,
            g_l: g_l_over_g_r,
            ..Self::default()
        }
    }

    pub fn d(&self) -> usize {
        self.r + self.l
    }

    pub fn space(&self) -> FockSpace {
        FockSpace {
            dim: self.dim,
            eta: self.eta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(NlreError::InvalidConfig(m));
        if self.l < 1 {
            return fail(format!("l must be >= 1 (got r={}, l={})", self.r, self.l));
        }
        if self.d() < 2 {
            return fail(format!("d = r + l must be >= 2 (got {})", self.d()));
        }
        for (name, v) in [("g_r", self.g_r), ("g_l", self.g_l), ("gamma", self.gamma), ("eta", self.eta)] {
            if !(v.is_finite() && v > 0.0) {
                return fail(format!("{name} must be positive and finite (got {v})"));
            }
        }
        if self.dim < 2 || self.dim <= self.d() {
            return fail(format!("dim {} must exceed d = {}", self.dim, self.d()));
        }
        if self.g_r >= self.gamma || self.g_l >= self.gamma {
            log::warn!(
                "drive strengths (g_r={}, g_l={}) not below gamma={}: outside the adiabatic regime",
                self.g_r,
                self.g_l,
                self.gamma
            );
        }
        Ok(())
    }

    /// `Ω_r(k) = g_r J_r(2η√(k + (r+1)/2))`, raising `|k⟩ → |k+r⟩`.
    pub fn omega_r(&self, k: usize) -> f64 {
        self.g_r * bessel_coupling(k, self.r as i32, self.eta)
    }

    /// `Ω_l(k) = g_l J_l(2η√(k + (l+1)/2))`, lowering `|k+l⟩ → |k⟩`.
    pub fn omega_l(&self, k: usize) -> f64 {
        self.g_l * bessel_coupling(k, self.l as i32, self.eta)
    }

    pub fn omega_r_at(&self, k: f64) -> f64 {
        self.g_r * bessel_coupling_at(k, self.r as i32, self.eta)
    }

    pub fn omega_l_at(&self, k: f64) -> f64 {
        self.g_l * bessel_coupling_at(k, self.l as i32, self.eta)
    }

    /// Copy with `g_l/g_r` chosen so that `Ω_r(n*) = Ω_l(n*)` at `target`.
    pub fn with_crossing_at(mut self, target: f64) -> Self {
        let jr = bessel_coupling_at(target, self.r as i32, self.eta);
        let jl = bessel_coupling_at(target, self.l as i32, self.eta);
        self.g_l = self.g_r * jr / jl;
        self
    }
}
