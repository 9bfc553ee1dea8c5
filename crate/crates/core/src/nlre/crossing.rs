use serde::{Deserialize, Serialize};

use crate::dynamics::NLREConfig;
use crate::error::{NlreError, Result};

/// Stabilizing crossing of the raising and lowering couplings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub n_star: f64,
    /// `dΩ_r/dn` at `n*`.
    pub slope_r: f64,
    /// `dΩ_l/dn` at `n*`.
    pub slope_l: f64,
}

impl Crossing {
    /// Rate at which the two couplings separate; a larger value pins the
    /// population more tightly around `n*`.
    pub fn divergence(&self) -> f64 {
        self.slope_l - self.slope_r
    }
}

const SCAN_STEP: f64 = 0.01;
const ROOT_TOL: f64 = 1e-6;

/// First root of `Ω_r(n) − Ω_l(n)` in continuous `n ∈ [0, dim−1]` where the
/// difference changes from positive to negative.
pub fn crossing_point(cfg: &NLREConfig) -> Result<Crossing> {
    cfg.validate()?;
    let f = |n: f64| cfg.omega_r_at(n) - cfg.omega_l_at(n);
    let upper = (cfg.dim - 1) as f64;
    let steps = (upper / SCAN_STEP).ceil() as usize;
    let mut a = 0.0;
    let mut fa = f(a);
    for i in 1..=steps {
        let b = (i as f64 * SCAN_STEP).min(upper);
        let fb = f(b);
        if fa > 0.0 && fb <= 0.0 {
            let n_star = bisect(&f, a, b);
            let h = 1e-4;
            let lo = (n_star - h).max(0.0);
            let hi = n_star + h;
            let slope = |g: &dyn Fn(f64) -> f64| (g(hi) - g(lo)) / (hi - lo);
            return Ok(Crossing {
                n_star,
                slope_r: slope(&|n| cfg.omega_r_at(n)),
                slope_l: slope(&|n| cfg.omega_l_at(n)),
            });
        }
        a = b;
        fa = fb;
    }
    Err(NlreError::NoCrossing(format!(
        "Ω_r − Ω_l never changes from positive to negative on [0, {upper}] \
         (r={}, l={}, η={}, g_l/g_r={:.4})",
        cfg.r,
        cfg.l,
        cfg.eta,
        cfg.g_l / cfg.g_r
    )))
}

fn bisect(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    while b - a > ROOT_TOL {
        let m = 0.5 * (a + b);
        if f(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
