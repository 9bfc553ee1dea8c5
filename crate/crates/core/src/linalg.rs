//! Dense Hermitian linear algebra helpers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{NlreError, Result};
use crate::fock::{CMatrix, OperatorMatrix};

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(m: &CMatrix) -> Self {
        let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let n = m.nrows();
        let mut vectors = CMatrix::zeros(n, n);
        let mut values = Vec::with_capacity(n);
        for (k, &src) in order.iter().enumerate() {
            values.push(eig.eigenvalues[src]);
            vectors.set_column(k, &eig.eigenvectors.column(src));
        }
        Self { values, vectors }
    }

    /// `V f(Λ) V†` with a complex-valued spectral function.
    pub fn apply_fn<F: Fn(f64) -> Complex64>(&self, f: F) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for k in 0..n {
            let fk = f(self.values[k]);
            for i in 0..n {
                scaled[(i, k)] *= fk;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

/// `exp(-i H t)` for Hermitian `H`.
pub fn unitary_evolution(h: &CMatrix, t: f64) -> CMatrix {
    HermitianEigen::new(h).apply_fn(|e| Complex64::from_polar(1.0, -e * t))
}

/// Principal square root of a positive semidefinite matrix.
pub fn sqrt_psd(m: &CMatrix) -> CMatrix {
    HermitianEigen::new(m).apply_fn(|e| Complex64::new(e.max(0.0).sqrt(), 0.0))
}

pub fn eigenvalues_hermitian(m: &CMatrix) -> Vec<f64> {
    HermitianEigen::new(m).values
}

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`.
pub fn fidelity(rho: &OperatorMatrix, sigma: &OperatorMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(NlreError::InvalidInput(format!(
            "fidelity dimension mismatch: {} vs {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    let s = sqrt_psd(rho.matrix());
    let inner = &s * sigma.matrix() * &s;
    let root: f64 = eigenvalues_hermitian(&inner)
        .into_iter()
        .map(|e| e.max(0.0).sqrt())
        .sum();
    Ok((root * root).min(1.0))
}

/// Trace distance `½ Σ |λ(ρ - σ)|`.
pub fn trace_distance(rho: &OperatorMatrix, sigma: &OperatorMatrix) -> f64 {
    let diff = rho.matrix() - sigma.matrix();
    0.5 * eigenvalues_hermitian(&diff).iter().map(|e| e.abs()).sum::<f64>()
}

pub fn min_eigenvalue(m: &OperatorMatrix) -> f64 {
    eigenvalues_hermitian(m.matrix())[0]
}

/// Checks unit trace, Hermiticity and positivity within `tol`.
pub fn validate_density(rho: &OperatorMatrix, tol: f64) -> Result<()> {
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
        return Err(NlreError::InvalidInput(format!("trace {tr} differs from 1")));
    }
    let herm = rho.hermiticity_error();
    if herm > tol {
        return Err(NlreError::InvalidInput(format!(
            "operator not Hermitian (error {herm:.2e})"
        )));
    }
    let lmin = min_eigenvalue(rho);
    if lmin < -tol {
        return Err(NlreError::InvalidInput(format!(
            "negative eigenvalue {lmin:.3e}"
        )));
    }
    Ok(())
}

/// Largest singular value via the Hermitian eigenproblem of `A†A`.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    let ata = m.adjoint() * m;
    eigenvalues_hermitian(&ata)
        .last()
        .copied()
        .unwrap_or(0.0)
        .max(0.0)
        .sqrt()
}

/// Smallest singular values and right singular vectors of a real matrix,
/// ascending. The matrix is zero-padded to square so the full right basis
/// is available.
pub fn real_null_space(m: &DMatrix<f64>) -> (Vec<f64>, Vec<DVector<f64>>) {
    let cols = m.ncols();
    let rows = m.nrows().max(cols);
    let mut sq = DMatrix::zeros(rows, cols);
    sq.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
    let svd = nalgebra::SVD::new(sq, false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let values = order.iter().map(|&k| svd.singular_values[k]).collect();
    let vectors = order
        .iter()
        .map(|&k| v_t.row(k).transpose().into_owned())
        .collect();
    (values, vectors)
}
