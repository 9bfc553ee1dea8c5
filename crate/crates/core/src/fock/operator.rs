use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Dense complex matrix.
pub type CMatrix = DMatrix<Complex64>;

/// Dense complex operator on a truncated Hilbert space.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix(CMatrix);

impl OperatorMatrix {
    pub fn new(m: CMatrix) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "operator must be square");
        Self(m)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(CMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(CMatrix::identity(dim, dim))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        Self(m)
    }

    /// Projector `|ψ⟩⟨ψ|`.
    pub fn projector(psi: &[Complex64]) -> Self {
        let n = psi.len();
        Self(CMatrix::from_fn(n, n, |i, j| psi[i] * psi[j].conj()))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn matrix_mut(&mut self) -> &mut CMatrix {
        &mut self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn dagger(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn diagonal_real(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.0[(i, i)].re).collect()
    }

    /// Largest entry of `|A - A†|`.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    /// Replaces the matrix by `(A + A†)/2`.
    pub fn hermitize(&mut self) {
        let adj = self.0.adjoint();
        self.0 += adj;
        self.0 *= Complex64::new(0.5, 0.0);
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(&self.0 * Complex64::new(s, 0.0))
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        Self(self.0.kronecker(&other.0))
    }

    /// `⟨ψ|A|ψ⟩`.
    pub fn expectation(&self, psi: &[Complex64]) -> Complex64 {
        let n = self.dim();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let mut row = Complex64::new(0.0, 0.0);
            for j in 0..n {
                row += self.0[(i, j)] * psi[j];
            }
            acc += psi[i].conj() * row;
        }
        acc
    }

    /// `A ψ`.
    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.0[(i, j)] * psi[j]).sum())
            .collect()
    }

    /// Upper-left `dim × dim` block.
    pub fn truncate(&self, dim: usize) -> Self {
        Self(self.0.view((0, 0), (dim, dim)).into_owned())
    }

    /// Zero-padded embedding into a larger space.
    pub fn embed(&self, dim: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        let n = self.dim().min(dim);
        m.view_mut((0, 0), (n, n))
            .copy_from(&self.0.view((0, 0), (n, n)));
        Self(m)
    }
}

impl From<CMatrix> for OperatorMatrix {
    fn from(m: CMatrix) -> Self {
        Self::new(m)
    }
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: Self) -> OperatorMatrix {
        OperatorMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: Self) -> OperatorMatrix {
        OperatorMatrix(&self.0 - &rhs.0)
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: Self) -> OperatorMatrix {
        OperatorMatrix(&self.0 * &rhs.0)
    }
}

/// Row-major real and imaginary parts.
#[derive(serde::Serialize, serde::Deserialize)]
struct OperatorRepr {
    dim: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl serde::Serialize for OperatorMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.dim();
        let mut re = Vec::with_capacity(n * n);
        let mut im = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                re.push(self.0[(i, j)].re);
                im.push(self.0[(i, j)].im);
            }
        }
        OperatorRepr { dim: n, re, im }.serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for OperatorMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = OperatorRepr::deserialize(d)?;
        let n = r.dim;
        if r.re.len() != n * n || r.im.len() != n * n {
            return Err(serde::de::Error::custom("operator entries do not match dim"));
        }
        Ok(Self(CMatrix::from_fn(n, n, |i, j| Complex64::new(r.re[i * n + j], r.im[i * n + j]))))
    }
}
