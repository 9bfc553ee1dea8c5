use num_complex::Complex64;

use super::{jump_operator, NLREConfig};
use crate::error::{NlreError, Result};
use crate::fock::{reduce_oscillator, sideband_hamiltonian, CMatrix, OperatorMatrix, SidebandDrive};
use crate::sparse::SparseOperator;

/// Hilbert-space layout of a model, used for truncation checks and reduction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    Oscillator { dim: usize },
    SpinOscillator { dim: usize },
}

impl Layout {
    pub fn total_dim(self) -> usize {
        match self {
            Layout::Oscillator { dim } => dim,
            Layout::SpinOscillator { dim } => 2 * dim,
        }
    }

    pub fn oscillator_dim(self) -> usize {
        match self {
            Layout::Oscillator { dim } | Layout::SpinOscillator { dim } => dim,
        }
    }

    /// Reduced oscillator state.
    pub fn oscillator(self, rho: &OperatorMatrix) -> OperatorMatrix {
        match self {
            Layout::Oscillator { .. } => rho.clone(),
            Layout::SpinOscillator { .. } => reduce_oscillator(rho),
        }
    }
}

/// `ρ̇ = −i[H, ρ] + Σ_k (L_k ρ L_k† − ½{L_k†L_k, ρ})`.
#[derive(Clone, Debug)]
pub struct LindbladModel {
    pub hamiltonian: OperatorMatrix,
    pub collapse_ops: Vec<OperatorMatrix>,
    pub layout: Layout,
    effective: SparseOperator,
    jumps: Vec<SparseOperator>,
    rate_scale: f64,
}

impl LindbladModel {
    pub fn new(
        hamiltonian: OperatorMatrix,
        collapse_ops: Vec<OperatorMatrix>,
        layout: Layout,
    ) -> Result<Self> {
        let n = layout.total_dim();
        if hamiltonian.dim() != n || collapse_ops.iter().any(|c| c.dim() != n) {
            return Err(NlreError::InvalidInput(format!(
                "operator dimensions do not match layout dimension {n}"
            )));
        }
        let herm = hamiltonian.hermiticity_error();
        if herm > 1e-12 {
            return Err(NlreError::InvalidInput(format!(
                "Hamiltonian not Hermitian (error {herm:.2e})"
            )));
        }
        let mut k = hamiltonian.matrix() * Complex64::new(0.0, -1.0);
        for c in &collapse_ops {
            let ldl = c.matrix().adjoint() * c.matrix();
            k -= ldl * Complex64::new(0.5, 0.0);
        }
        let rate_scale = (0..n)
            .map(|i| k.row(i).iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        Ok(Self {
            effective: SparseOperator::from_dense(&k),
            jumps: collapse_ops.iter().map(SparseOperator::from_operator).collect(),
            hamiltonian,
            collapse_ops,
            layout,
            rate_scale,
        })
    }

    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    /// Row-sum norm of the effective non-Hermitian generator; sets the
    /// natural rate of the model.
    pub fn rate_scale(&self) -> f64 {
        self.rate_scale
    }

    /// `ρ̇` for Hermitian `ρ`.
    pub fn rhs(&self, rho: &CMatrix, out: &mut CMatrix, scratch: &mut CMatrix) {
        self.effective.mul_dense_into(rho, scratch);
        out.copy_from(scratch);
        *out += scratch.adjoint();
        for l in &self.jumps {
            l.mul_dense_into(rho, scratch);
            let lr_dag = scratch.adjoint();
            l.mul_dense_into(&lr_dag, scratch);
            *out += &*scratch;
        }
    }

    pub fn derivative(&self, rho: &OperatorMatrix) -> OperatorMatrix {
        let n = self.dim();
        let mut out = CMatrix::zeros(n, n);
        let mut scratch = CMatrix::zeros(n, n);
        self.rhs(rho.matrix(), &mut out, &mut scratch);
        OperatorMatrix::new(out)
    }

    /// Dense vectorized Liouvillian acting on column-stacked `ρ`.
    pub fn liouvillian(&self) -> CMatrix {
        let n = self.dim();
        let id = CMatrix::identity(n, n);
        let h = self.hamiltonian.matrix();
        let i = Complex64::new(0.0, 1.0);
        // vec(AρB) = (Bᵀ ⊗ A) vec(ρ)
        let mut l = (id.kronecker(h) - h.transpose().kronecker(&id)) * (-i);
        for c in &self.collapse_ops {
            let a = c.matrix();
            let ldl = a.adjoint() * a;
            l += a.conjugate().kronecker(a);
            l -= (id.kronecker(&ldl) + ldl.transpose().kronecker(&id)) * Complex64::new(0.5, 0.0);
        }
        l
    }
}

/// Oscillator-only model with the single engineered jump operator.
pub fn jump_only_model(cfg: &NLREConfig) -> Result<LindbladModel> {
    let l = jump_operator(cfg)?;
    LindbladModel::new(
        OperatorMatrix::zeros(cfg.dim),
        vec![l],
        Layout::Oscillator { dim: cfg.dim },
    )
}

/// Spin⊗oscillator model: blue sideband of order `r` and red sideband of
/// order `l` (relative spin phase π) with optical pumping `|e⟩ → |g⟩` at rate γ.
pub fn full_model(cfg: &NLREConfig) -> Result<LindbladModel> {
    cfg.validate()?;
    let space = cfg.space();
    let raise = sideband_hamiltonian(&space, &SidebandDrive::new(cfg.r as i32, cfg.g_r))?;
    let mut lower = SidebandDrive::new(-(cfg.l as i32), cfg.g_l);
    lower.spin_phase = std::f64::consts::PI;
    let lower = sideband_hamiltonian(&space, &lower)?;
    let mut h = &raise + &lower;
    h.hermitize();
    LindbladModel::new(
        h,
        vec![pumping_operator(cfg.dim, cfg.gamma)],
        Layout::SpinOscillator { dim: cfg.dim },
    )
}

/// `√γ |g⟩⟨e| ⊗ 𝟙`.
pub fn pumping_operator(dim: usize, gamma: f64) -> OperatorMatrix {
    let mut c = CMatrix::zeros(2 * dim, 2 * dim);
    for n in 0..dim {
        c[(n, dim + n)] = Complex64::new(gamma.sqrt(), 0.0);
    }
    OperatorMatrix::new(c)
}
