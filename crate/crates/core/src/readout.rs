//! Parity-style readout with a single non-linear sideband.
//!
//! A sideband of order `l` drives `|k,↓⟩ ↔ |k+l,↑⟩` at rate `g f̃(k)`, so a
//! state starting in `↓` returns with probability
//! `P(t) = Σ_k P(k) cos²(g f̃(k) t)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{NlreError, Result};
use crate::fock::{
    bessel_coupling, reduce_oscillator, sideband_hamiltonian, spin_block, FockSpace,
    OperatorMatrix, SidebandDrive, Spin,
};
use crate::linalg::unitary_evolution;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum CouplingSource {
    Analytic,
    Fitted { order: i32, eta: f64, residual: f64 },
}

/// `f̃(k) = slope·k + offset` on `range`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearCouplingModel {
    pub slope: f64,
    pub offset: f64,
    pub range: (usize, usize),
    pub source: CouplingSource,
}

impl LinearCouplingModel {
    pub fn analytic(slope: f64, offset: f64, range: (usize, usize)) -> Result<Self> {
        if range.1 < range.0 {
            return Err(NlreError::InvalidInput(format!("empty range {range:?}")));
        }
        Ok(Self {
            slope,
            offset,
            range,
            source: CouplingSource::Analytic,
        })
    }

    /// Least-squares line through the sideband couplings on `range`.
    /// `residual` is the largest deviation relative to the largest coupling.
    pub fn fit(order: i32, eta: f64, range: (usize, usize)) -> Result<Self> {
        let (a, b) = range;
        if b <= a {
            return Err(NlreError::InvalidInput(format!("fit needs two points, got {range:?}")));
        }
        let ks: Vec<f64> = (a..=b).map(|k| k as f64).collect();
        let fs: Vec<f64> = (a..=b).map(|k| bessel_coupling(k, order, eta)).collect();
        let n = ks.len() as f64;
        let km = ks.iter().sum::<f64>() / n;
        let fm = fs.iter().sum::<f64>() / n;
        let sxy: f64 = ks.iter().zip(&fs).map(|(k, f)| (k - km) * (f - fm)).sum();
        let sxx: f64 = ks.iter().map(|k| (k - km).powi(2)).sum();
        let slope = sxy / sxx;
        let offset = fm - slope * km;
        let scale = fs.iter().map(|f| f.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let residual = ks
            .iter()
            .zip(&fs)
            .map(|(k, f)| (f - slope * k - offset).abs())
            .fold(0.0, f64::max)
            / scale;
        Ok(Self {
            slope,
            offset,
            range,
            source: CouplingSource::Fitted { order, eta, residual },
        })
    }

    pub fn rate(&self, k: usize) -> f64 {
        self.slope * k as f64 + self.offset
    }
}

/// Per-Fock sideband rates `f̃(k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Couplings {
    Linear(LinearCouplingModel),
    /// Bessel sideband elements of the given order.
    Exact { order: i32, eta: f64 },
}

impl Couplings {
    pub fn rate(&self, k: usize) -> f64 {
        match self {
            Couplings::Linear(m) => m.rate(k),
            Couplings::Exact { order, eta } => bessel_coupling(k, *order, *eta),
        }
    }
}

/// `Σ_k P(k) cos²(g f̃(k) t)`.
pub fn spin_return_probability(fock_dist: &[f64], couplings: &Couplings, g: f64, t: f64) -> f64 {
    fock_dist
        .iter()
        .enumerate()
        .map(|(k, p)| p * (g * couplings.rate(k) * t).cos().powi(2))
        .sum()
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RevivalPlan {
    pub t_star: f64,
    pub m: u64,
    pub d: u64,
    /// `N(m,d) = gcd(m + d·k | k ∈ [k_a, k_b])`.
    pub n_md: u64,
    /// `gcd` over every Fock number in `[d·k_a, d·k_b + d − 1]`.
    pub n_tot: u64,
    pub k_a: u64,
    pub k_b: u64,
    /// Smallest and largest single-Fock return probability of each class
    /// at `t_star` under the linear model.
    pub class_return: Vec<(f64, f64)>,
}

/// Revival time `t* = π/(g|s_f|N(m,d))` of class `m`.
///
/// An offset is accepted only when `f₀/s_f` is an integer, which shifts the
/// Fock labels; otherwise the signal never revives exactly.
pub fn revival_time(m: u64, d: u64, k_a: u64, k_b: u64, slope: f64, offset: f64, g: f64) -> Result<RevivalPlan> {
    if d == 0 || m >= d || k_b < k_a {
        return Err(NlreError::InvalidInput(format!("bad class m={m}, d={d}, k∈[{k_a},{k_b}]")));
    }
    if slope == 0.0 || g == 0.0 {
        return Err(NlreError::InvalidInput("zero coupling slope".into()));
    }
    let ratio = offset / slope;
    if (ratio - ratio.round()).abs() > 1e-12 || ratio.round() < 0.0 {
        return Err(NlreError::Incommensurable(format!(
            "offset/slope = {ratio} is not a non-negative integer"
        )));
    }
    let shift = ratio.round() as u64;
    let n_md = gcd(m + shift + d * k_a, d).max(1);
    let lo = d * k_a + shift;
    let hi = d * k_b + d - 1 + shift;
    let n_tot = (lo..=hi).fold(0, gcd).max(1);
    let t_star = std::f64::consts::PI / (g * slope.abs() * n_md as f64);
    let class_return = (0..d)
        .map(|c| {
            (k_a..=k_b)
                .map(|k| (g * (slope * (c + d * k) as f64 + offset) * t_star).cos().powi(2))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p), hi.max(p)))
        })
        .collect();
    Ok(RevivalPlan {
        t_star,
        m,
        d,
        n_md,
        n_tot,
        k_a,
        k_b,
        class_return,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discrimination {
    pub t_rev: f64,
    pub probabilities: Vec<f64>,
    /// `|P_a − P_b|` for two states, the smallest pairwise gap otherwise.
    pub margin: f64,
}

fn margin(ps: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..ps.len() {
        for j in i + 1..ps.len() {
            best = best.min((ps[i] - ps[j]).abs());
        }
    }
    best
}

/// Default search window `[0, 4π/(g|s_f|)]`.
pub fn default_window(slope: f64, g: f64) -> (f64, f64) {
    (0.0, 4.0 * std::f64::consts::PI / (g * slope.abs()))
}

pub const DISCRIMINATION_GRID: usize = 2000;

/// Time in `window` that best separates the return probabilities of
/// `states`: grid search followed by golden-section refinement.
pub fn optimize_discrimination(
    states: &[Vec<f64>],
    couplings: &Couplings,
    g: f64,
    window: (f64, f64),
) -> Result<Discrimination> {
    if states.len() < 2 {
        return Err(NlreError::InvalidInput("need at least two states".into()));
    }
    let (t0, t1) = window;
    if !(t1 > t0) {
        return Err(NlreError::InvalidInput(format!("empty window {window:?}")));
    }
    let probs = |t: f64| -> Vec<f64> {
        states
            .iter()
            .map(|p| spin_return_probability(p, couplings, g, t))
            .collect()
    };
    let objective = |t: f64| margin(&probs(t));
    let dt = (t1 - t0) / (DISCRIMINATION_GRID - 1) as f64;
    let scores: Vec<f64> = (0..DISCRIMINATION_GRID)
        .into_par_iter()
        .map(|i| objective(t0 + dt * i as f64))
        .collect();
    let best = scores
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let (mut a, mut b) = (
        (t0 + dt * best.saturating_sub(1) as f64).max(t0),
        (t0 + dt * (best + 1) as f64).min(t1),
    );
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    while b - a > 1e-12 * (1.0 + t1.abs()) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = objective(d);
        }
    }
    let grid_t = t0 + dt * best as f64;
    let refined = 0.5 * (a + b);
    let t_rev = if objective(refined) >= scores[best] { refined } else { grid_t };
    let probabilities = probs(t_rev);
    Ok(Discrimination {
        t_rev,
        margin: margin(&probabilities),
        probabilities,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Postselected {
    /// Conditional oscillator state of the selected branch.
    pub rho: OperatorMatrix,
    pub probability: f64,
}

/// Apply the order-`order` sideband at rate `g` for `t_rev`, optionally flip
/// the spin, and project on `branch`.
///
/// `rho_joint` lives on spin⊗oscillator with `dim` oscillator levels.
pub fn postselect(
    rho_joint: &OperatorMatrix,
    eta: f64,
    order: i32,
    g: f64,
    t_rev: f64,
    branch: Spin,
    pre_measure_flip: bool,
) -> Result<Postselected> {
    let branches = postselect_branches(rho_joint, eta, order, g, t_rev, pre_measure_flip)?;
    let [down, up] = branches;
    let sel = match branch {
        Spin::G => down,
        Spin::E => up,
    };
    let p = sel.trace().re;
    if p <= 1e-14 {
        return Err(NlreError::Numerical(format!("branch {branch:?} has probability {p:.3e}")));
    }
    let mut rho = sel.scale(1.0 / p);
    rho.hermitize();
    Ok(Postselected { rho, probability: p })
}

/// Unnormalized oscillator states of the `↓` and `↑` outcomes.
pub fn postselect_branches(
    rho_joint: &OperatorMatrix,
    eta: f64,
    order: i32,
    g: f64,
    t_rev: f64,
    pre_measure_flip: bool,
) -> Result<[OperatorMatrix; 2]> {
    let n = rho_joint.dim();
    if n % 2 != 0 {
        return Err(NlreError::InvalidInput("joint state must be spin⊗oscillator".into()));
    }
    let dim = n / 2;
    let space = FockSpace::new(dim, eta)?;
    let h = sideband_hamiltonian(&space, &SidebandDrive::new(order, 2.0 * g))?;
    let u = unitary_evolution(h.matrix(), t_rev);
    let evolved = OperatorMatrix::new(&u * rho_joint.matrix() * u.adjoint());
    let (down, up) = (spin_block(&evolved, Spin::G), spin_block(&evolved, Spin::E));
    Ok(if pre_measure_flip { [up, down] } else { [down, up] })
}

/// `(Σ √(P_E(n) P_S(n)))²`.
pub fn fock_fidelity(p_e: &[f64], p_s: &[f64]) -> Result<f64> {
    for p in [p_e, p_s] {
        if p.iter().any(|&x| x < -1e-9) {
            return Err(NlreError::InvalidInput("negative population".into()));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > 1e-6 {
            return Err(NlreError::InvalidInput(format!("distribution sums to {s}")));
        }
    }
    let n = p_e.len().max(p_s.len());
    let get = |p: &[f64], i: usize| p.get(i).copied().unwrap_or(0.0).max(0.0);
    let bc: f64 = (0..n).map(|i| (get(p_e, i) * get(p_s, i)).sqrt()).sum();
    Ok((bc * bc).min(1.0))
}

/// Weight of `dist` on Fock states with `n mod d == class`.
pub fn class_purity(dist: &[f64], d: usize, class: usize) -> f64 {
    dist.iter().enumerate().filter(|(n, _)| n % d == class).map(|(_, p)| p).sum()
}

/// Joint state `ρ_osc ⊗ |↓⟩⟨↓|` used as readout input.
pub fn readout_input(rho_osc: &OperatorMatrix) -> OperatorMatrix {
    crate::fock::with_spin(rho_osc, Spin::G)
}

/// Oscillator marginal of a joint state.
pub fn oscillator_marginal(rho_joint: &OperatorMatrix) -> OperatorMatrix {
    reduce_oscillator(rho_joint)
}
