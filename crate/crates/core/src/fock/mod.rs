//! Truncated Fock space, non-linear sideband couplings, the non-linear
//! state-dependent displacement and standard oscillator operators.
//!
//! Joint spin⊗oscillator operators use the index `s·dim + n` with the spin
//! index slowest; `s = 0` is the pumped state `|g⟩`, `s = 1` is `|e⟩`.

mod operator;
pub mod wigner;

pub use operator::{CMatrix, OperatorMatrix};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{NlreError, Result};
use crate::special::{bessel_j, laguerre, ln_factorial};

/// Truncated oscillator Hilbert space with its Lamb-Dicke parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FockSpace {
    pub dim: usize,
    pub eta: f64,
}

impl FockSpace {
    pub fn new(dim: usize, eta: f64) -> Result<Self> {
        if dim < 2 {
            return Err(NlreError::InvalidConfig(format!("dim must be >= 2, got {dim}")));
        }
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(NlreError::InvalidConfig(format!("eta must be >= 0, got {eta}")));
        }
        Ok(Self { dim, eta })
    }

    /// Dimension of the joint spin⊗oscillator space.
    pub fn joint_dim(&self) -> usize {
        2 * self.dim
    }
}

/// Spin level of the two-level system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    /// Pumped level, identified with the post-stabilization "up" outcome.
    G,
    E,
}

impl Spin {
    pub fn index(self) -> usize {
        match self {
            Spin::G => 0,
            Spin::E => 1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Spin::G => Spin::E,
            Spin::E => Spin::G,
        }
    }
}

/// A resonant sideband drive of signed order `Δn`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SidebandDrive {
    pub order: i32,
    pub strength: f64,
    #[serde(default)]
    pub spin_phase: f64,
    #[serde(default)]
    pub motional_phase: f64,
}

impl SidebandDrive {
    pub fn new(order: i32, strength: f64) -> Self {
        Self {
            order,
            strength,
            spin_phase: 0.0,
            motional_phase: 0.0,
        }
    }
}

/// Coupling of the pair `(n, n+|Δn|)`: `J_|Δn|(2η√(n + (|Δn|+1)/2))`.
pub fn bessel_coupling(n: usize, dn: i32, eta: f64) -> f64 {
    bessel_coupling_at(n as f64, dn, eta)
}

/// Continuous-`n` extension of [`bessel_coupling`] used for root finding.
pub fn bessel_coupling_at(n: f64, dn: i32, eta: f64) -> f64 {
    let k = dn.unsigned_abs() as f64;
    let arg = n + 0.5 * (k + 1.0);
    bessel_j(dn.abs(), 2.0 * eta * arg.max(0.0).sqrt())
}

/// Exact displacement matrix element `⟨n|e^{iη(a+a†)}|n+|Δn|⟩` up to the
/// phase `i^{|Δn|}`.
pub fn exact_coupling(n: usize, dn: i32, eta: f64) -> f64 {
    let k = dn.unsigned_abs() as usize;
    if eta == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let lo = n;
    let hi = n + k;
    let log_mag = -0.5 * eta * eta + k as f64 * eta.ln() + 0.5 * (ln_factorial(lo) - ln_factorial(hi));
    log_mag.exp() * laguerre(lo, k as f64, eta * eta)
}

fn joint_index(spin: Spin, n: usize, dim: usize) -> usize {
    spin.index() * dim + n
}

/// Resonant sideband Hamiltonian on spin⊗oscillator.
///
/// Couples `|n, g⟩ ↔ |n+Δn, e⟩` with element `(strength/2)·coupling·e^{iφ}`,
/// where `φ = φ_s + φ_m` for blue (`Δn > 0`) and `φ_s − φ_m` for red drives.
pub fn sideband_hamiltonian(space: &FockSpace, drive: &SidebandDrive) -> Result<OperatorMatrix> {
    let dim = space.dim;
    let k = drive.order.unsigned_abs() as usize;
    if k >= dim {
        return Err(NlreError::InvalidInput(format!(
            "sideband order {} incompatible with dim {dim}",
            drive.order
        )));
    }
    let phase = if drive.order >= 0 {
        drive.spin_phase + drive.motional_phase
    } else {
        drive.spin_phase - drive.motional_phase
    };
    let rot = Complex64::from_polar(0.5 * drive.strength, phase);
    let mut h = CMatrix::zeros(2 * dim, 2 * dim);
    for lower in 0..dim - k {
        let c = bessel_coupling(lower, drive.order, space.eta);
        let (n_g, n_e) = if drive.order >= 0 {
            (lower, lower + k)
        } else {
            (lower + k, lower)
        };
        let row = joint_index(Spin::E, n_e, dim);
        let col = joint_index(Spin::G, n_g, dim);
        h[(row, col)] += rot * c;
        h[(col, row)] += (rot * c).conj();
    }
    Ok(OperatorMatrix::new(h))
}

/// Oscillator generator `G = Σ J₁(2η√(n+1)) (|n+1⟩⟨n| + |n⟩⟨n+1|)` of the
/// state-dependent displacement, kept in eigen-decomposed form.
#[derive(Clone, Debug)]
pub struct SddGenerator {
    dim: usize,
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl SddGenerator {
    pub fn new(space: &FockSpace) -> Self {
        let g = Self::generator(space);
        let eig = SymmetricEigen::new(g);
        Self {
            dim: space.dim,
            values: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        }
    }

    pub fn generator(space: &FockSpace) -> DMatrix<f64> {
        let dim = space.dim;
        let mut g = DMatrix::zeros(dim, dim);
        for n in 0..dim - 1 {
            let c = bessel_coupling(n, 1, space.eta);
            g[(n + 1, n)] = c;
            g[(n, n + 1)] = c;
        }
        g
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    /// Orthonormal eigenvectors of `G` as columns.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    /// `f(G)` for a complex spectral function.
    fn apply<F: Fn(f64) -> Complex64>(&self, f: F) -> CMatrix {
        let n = self.dim;
        let mut out = CMatrix::zeros(n, n);
        let fk: Vec<Complex64> = self.values.iter().map(|&e| f(e)).collect();
        for j in 0..n {
            for i in j..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    acc += fk[k] * (self.vectors[(i, k)] * self.vectors[(j, k)]);
                }
                out[(i, j)] = acc;
                out[(j, i)] = acc;
            }
        }
        out
    }

    /// Oscillator factor `e^{iaG}`.
    pub fn exp_i(&self, a: f64) -> CMatrix {
        self.apply(|e| Complex64::from_polar(1.0, a * e))
    }

    /// `cos(aG)` and `sin(aG)`.
    pub fn cos_sin(&self, a: f64) -> (CMatrix, CMatrix) {
        (
            self.apply(|e| Complex64::new((a * e).cos(), 0.0)),
            self.apply(|e| Complex64::new((a * e).sin(), 0.0)),
        )
    }
}

/// Non-linear state-dependent displacement `Ô(αX̂) = exp(iα X̂⊗G)`.
pub fn sdd_operator(space: &FockSpace, alpha: f64) -> OperatorMatrix {
    sdd_operator_with(&SddGenerator::new(space), alpha)
}

pub fn sdd_operator_with(gen: &SddGenerator, alpha: f64) -> OperatorMatrix {
    let dim = gen.dim();
    let (c, s) = gen.cos_sin(alpha);
    let i = Complex64::new(0.0, 1.0);
    let mut u = CMatrix::zeros(2 * dim, 2 * dim);
    u.view_mut((0, 0), (dim, dim)).copy_from(&c);
    u.view_mut((dim, dim), (dim, dim)).copy_from(&c);
    let is = s * i;
    u.view_mut((0, dim), (dim, dim)).copy_from(&is);
    u.view_mut((dim, 0), (dim, dim)).copy_from(&is);
    OperatorMatrix::new(u)
}

/// Parity `exp(iπ a a†)`, diagonal `−(−1)^n`.
pub fn parity_operator(space: &FockSpace) -> OperatorMatrix {
    let d: Vec<f64> = (0..space.dim)
        .map(|n| if n % 2 == 0 { -1.0 } else { 1.0 })
        .collect();
    OperatorMatrix::from_diagonal(&d)
}

pub fn number_operator(space: &FockSpace) -> OperatorMatrix {
    let d: Vec<f64> = (0..space.dim).map(|n| n as f64).collect();
    OperatorMatrix::from_diagonal(&d)
}

pub fn annihilation_operator(space: &FockSpace) -> OperatorMatrix {
    let dim = space.dim;
    let mut a = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    OperatorMatrix::new(a)
}

/// Projectors onto the modular classes `{m + d·k}`, `m = 0..d`.
pub fn mod_class_projectors(space: &FockSpace, d: usize) -> Result<Vec<OperatorMatrix>> {
    if d == 0 {
        return Err(NlreError::InvalidInput("modulus d must be >= 1".into()));
    }
    Ok((0..d)
        .map(|m| {
            let diag: Vec<f64> = (0..space.dim)
                .map(|n| if n % d == m { 1.0 } else { 0.0 })
                .collect();
            OperatorMatrix::from_diagonal(&diag)
        })
        .collect())
}

/// Phase-space rotation `e^{iθ n̂} ρ e^{−iθ n̂}`.
pub fn rotate(rho: &OperatorMatrix, theta: f64) -> OperatorMatrix {
    let n = rho.dim();
    let m = CMatrix::from_fn(n, n, |i, j| {
        rho.get(i, j) * Complex64::from_polar(1.0, theta * (i as f64 - j as f64))
    });
    OperatorMatrix::new(m)
}

/// Thermal state with mean occupation `nbar`, renormalized on the truncation.
pub fn thermal_state(dim: usize, nbar: f64) -> OperatorMatrix {
    let mut p: Vec<f64> = if nbar <= 0.0 {
        (0..dim).map(|n| if n == 0 { 1.0 } else { 0.0 }).collect()
    } else {
        let q = nbar / (1.0 + nbar);
        (0..dim).map(|n| q.powi(n as i32)).collect()
    };
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    OperatorMatrix::from_diagonal(&p)
}

pub fn fock_state(dim: usize, n: usize) -> OperatorMatrix {
    let mut p = vec![0.0; dim];
    p[n] = 1.0;
    OperatorMatrix::from_diagonal(&p)
}

/// Coherent-state amplitudes on the truncation, renormalized.
pub fn coherent_amplitudes(dim: usize, beta: Complex64) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..dim)
        .map(|n| {
            let mag = (-0.5 * beta.norm_sqr() + n as f64 * beta.norm().ln() - 0.5 * ln_factorial(n)).exp();
            if beta.norm() == 0.0 {
                if n == 0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            } else {
                Complex64::from_polar(mag, n as f64 * beta.arg())
            }
        })
        .collect();
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|c| *c /= norm);
    v
}

/// `ρ_osc ⊗ |s⟩⟨s|` in the joint index convention.
pub fn with_spin(rho_osc: &OperatorMatrix, spin: Spin) -> OperatorMatrix {
    let dim = rho_osc.dim();
    let mut m = CMatrix::zeros(2 * dim, 2 * dim);
    let o = spin.index() * dim;
    m.view_mut((o, o), (dim, dim)).copy_from(rho_osc.matrix());
    OperatorMatrix::new(m)
}

/// Partial trace over the spin.
pub fn reduce_oscillator(rho_joint: &OperatorMatrix) -> OperatorMatrix {
    let dim = rho_joint.dim() / 2;
    let m = rho_joint.matrix();
    let r = m.view((0, 0), (dim, dim)) + m.view((dim, dim), (dim, dim));
    OperatorMatrix::new(r.into_owned())
}

/// Unnormalized oscillator block `⟨s|ρ|s⟩`.
pub fn spin_block(rho_joint: &OperatorMatrix, spin: Spin) -> OperatorMatrix {
    let dim = rho_joint.dim() / 2;
    let o = spin.index() * dim;
    OperatorMatrix::new(rho_joint.matrix().view((o, o), (dim, dim)).into_owned())
}

pub fn spin_population(rho_joint: &OperatorMatrix, spin: Spin) -> f64 {
    spin_block(rho_joint, spin).trace().re
}

/// Fock populations `P(n)` of an oscillator state.
pub fn fock_distribution(rho_osc: &OperatorMatrix) -> Vec<f64> {
    rho_osc.diagonal_real()
}

/// Population in the `levels` highest Fock states of an oscillator state.
pub fn top_population(rho_osc: &OperatorMatrix, levels: usize) -> f64 {
    let p = rho_osc.diagonal_real();
    let start = p.len().saturating_sub(levels);
    p[start..].iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(dim: usize, eta: f64) -> FockSpace {
        FockSpace::new(dim, eta).unwrap()
    }

    // Independent power-series Bessel oracle.
    fn series_j(n: u32, x: f64) -> f64 {
        let mut sum = 0.0;
        let mut fact_k = 1.0;
        for k in 0..60u32 {
            if k > 0 {
                fact_k *= k as f64;
            }
            let fact_nk: f64 = (1..=(n + k)).map(|v| v as f64).product();
            let term = (-1.0f64).powi(k as i32) * (x / 2.0).powi((2 * k + n) as i32) / (fact_k * fact_nk);
            sum += term;
        }
        sum
    }

    #[test]
    fn coupling_trivial_and_lamb_dicke() {
        assert_eq!(bessel_coupling(0, 0, 0.0), 1.0);
        let c = bessel_coupling(0, 1, 0.05);
        assert!((c - series_j(1, 0.1)).abs() < 1e-14);
        assert!((c - 0.049_938).abs() < 1e-6);
        assert!((c / 0.05 - 1.0).abs() < 2e-3);
    }

    #[test]
    fn fourth_order_is_large_outside_lamb_dicke() {
        let x = 2.0 * 0.5 * 10.5f64.sqrt();
        let c = bessel_coupling(8, 4, 0.5);
        assert!((c - series_j(4, x)).abs() < 1e-12);
        assert!(c > 0.15 && c < 0.17);
    }

    #[test]
    fn exact_coupling_closed_forms() {
        assert_eq!(exact_coupling(0, 0, 0.0), 1.0);
        let want = (-0.125f64).exp() * 0.25 / 2f64.sqrt();
        assert!((exact_coupling(0, 2, 0.5) - want).abs() < 1e-14);
        assert!((exact_coupling(0, 2, 0.5) - 0.1561).abs() < 1e-4);
    }

    #[test]
    fn exact_matches_displacement_matrix() {
        // ⟨n|e^{iη(a+a†)}|n+k⟩ from diagonalizing x = a + a† in a large space
        let eta = 0.3;
        let big = space(80, eta);
        let a = annihilation_operator(&big);
        let x = a.matrix() + a.matrix().adjoint();
        let u = crate::linalg::unitary_evolution(&x, -eta);
        for n in 0..6 {
            for k in 0..4usize {
                let elem = u[(n, n + k)];
                let phase = Complex64::new(0.0, 1.0).powi(k as i32);
                let want = exact_coupling(n, k as i32, eta);
                assert!((elem - phase * want).norm() < 1e-10, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn bessel_and_exact_agree_in_lamb_dicke_limit() {
        for &eta in &[0.01, 0.03, 0.05] {
            for n in 0..=10 {
                for dn in [-1, 0, 1] {
                    let b = bessel_coupling(n, dn, eta);
                    let e = exact_coupling(n, dn, eta);
                    assert!((b - e).abs() <= 0.01 * e.abs(), "eta={eta} n={n} dn={dn}");
                }
            }
        }
    }

    #[test]
    fn carrier_hamiltonian_is_half_sigma_x() {
        let s = space(4, 0.0);
        let h = sideband_hamiltonian(&s, &SidebandDrive::new(0, 1.0)).unwrap();
        let sx = OperatorMatrix::new(CMatrix::from_row_slice(
            2,
            2,
            &[0.0, 1.0, 1.0, 0.0].map(|v| Complex64::new(v, 0.0)),
        ));
        let want = sx.kron(&OperatorMatrix::identity(4)).scale(0.5);
        assert!(h.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn blue_sideband_element() {
        let s = space(5, 0.05);
        let h = sideband_hamiltonian(&s, &SidebandDrive::new(1, 1.0)).unwrap();
        let e = h.get(5 + 1, 0);
        assert!((e.re - 0.5 * series_j(1, 0.1)).abs() < 1e-15);
        assert!(h.is_hermitian(1e-15));
    }

    #[test]
    fn red_sideband_structure() {
        let s = space(8, 0.4);
        let mut d = SidebandDrive::new(-2, 0.7);
        d.spin_phase = 0.3;
        d.motional_phase = 1.1;
        let h = sideband_hamiltonian(&s, &d).unwrap();
        assert!(h.is_hermitian(1e-14));
        for row in 0..16 {
            for col in 0..16 {
                let v = h.get(row, col);
                if v.norm() == 0.0 {
                    continue;
                }
                let (sr, nr) = (row / 8, row % 8);
                let (sc, nc) = (col / 8, col % 8);
                assert_ne!(sr, sc);
                let (ne, ng) = if sr == 1 { (nr, nc) } else { (nc, nr) };
                assert_eq!(ng, ne + 2);
            }
        }
        let e = h.get(8, 2);
        let want = Complex64::from_polar(0.35 * bessel_coupling(0, 2, 0.4), 0.3 - 1.1);
        assert!((e - want).norm() < 1e-15);
    }

    #[test]
    fn order_too_large_is_rejected() {
        let s = space(4, 0.5);
        assert!(sideband_hamiltonian(&s, &SidebandDrive::new(4, 1.0)).is_err());
    }

    #[test]
    fn sdd_identities() {
        let s = space(30, 0.5);
        let gen = SddGenerator::new(&s);
        let id = OperatorMatrix::identity(60);
        assert!(sdd_operator_with(&gen, 0.0).max_abs_diff(&id) < 1e-13);
        let p = parity_operator(&s);
        let pj = OperatorMatrix::identity(2).kron(&p);
        for &a in &[0.5, 2.0, 5.0] {
            let u = sdd_operator_with(&gen, a);
            let uu = &u.dagger() * &u;
            assert!(uu.max_abs_diff(&id) < 1e-10);
            let um = sdd_operator_with(&gen, -a);
            assert!(u.dagger().max_abs_diff(&um) < 1e-12);
            let conj = &(&pj * &u) * &pj;
            assert!(conj.max_abs_diff(&um) < 1e-10);
        }
    }

    #[test]
    fn parity_and_projectors() {
        let s = space(9, 0.5);
        let p = parity_operator(&s);
        assert!((&p * &p).max_abs_diff(&OperatorMatrix::identity(9)) < 1e-15);
        assert_eq!(p.get(0, 0).re, -1.0);
        assert_eq!(p.get(1, 1).re, 1.0);
        let one = mod_class_projectors(&s, 1).unwrap();
        assert_eq!(one.len(), 1);
        assert!(one[0].max_abs_diff(&OperatorMatrix::identity(9)) < 1e-15);
        let three = mod_class_projectors(&s, 3).unwrap();
        assert_eq!(three[0].trace().re, 3.0);
        let mut sum = OperatorMatrix::zeros(9);
        for (i, a) in three.iter().enumerate() {
            sum = &sum + a;
            for (j, b) in three.iter().enumerate() {
                let prod = a * b;
                let want = if i == j { a.clone() } else { OperatorMatrix::zeros(9) };
                assert!(prod.max_abs_diff(&want) < 1e-15);
            }
        }
        assert!(sum.max_abs_diff(&OperatorMatrix::identity(9)) < 1e-15);
        assert!(mod_class_projectors(&s, 0).is_err());
    }

    #[test]
    fn spin_helpers_round_trip() {
        let rho = thermal_state(6, 0.5);
        let joint = with_spin(&rho, Spin::E);
        assert!((spin_population(&joint, Spin::E) - 1.0).abs() < 1e-14);
        assert!(reduce_oscillator(&joint).max_abs_diff(&rho) < 1e-15);
    }
}
