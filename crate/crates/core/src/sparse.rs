//! Compressed-row complex operators for fast products with dense matrices.

use num_complex::Complex64;

use crate::fock::{CMatrix, OperatorMatrix};

#[derive(Clone, Debug)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl SparseOperator {
    pub fn from_dense(m: &CMatrix) -> Self {
        let dim = m.nrows();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..dim {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v.re != 0.0 || v.im != 0.0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn from_operator(op: &OperatorMatrix) -> Self {
        Self::from_dense(op.matrix())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `out = self · x` for square dense `x`.
    pub fn mul_dense_into(&self, x: &CMatrix, out: &mut CMatrix) {
        let n = x.ncols();
        out.fill(Complex64::new(0.0, 0.0));
        // column-major storage: iterate columns outermost
        for c in 0..n {
            let xc = x.column(c);
            let mut oc = out.column_mut(c);
            for i in 0..self.dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    acc += self.vals[k] * xc[self.cols[k]];
                }
                oc[i] = acc;
            }
        }
    }

    pub fn mul_dense(&self, x: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, x.ncols());
        self.mul_dense_into(x, &mut out);
        out
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.dim)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .map(|k| self.vals[k] * x[self.cols[k]])
                    .sum()
            })
            .collect()
    }
}
