//! Sparse and dense linear-algebra kernels.
//!
//! Everything is 64-bit floating point. Sparse matrices use compressed rows
//! with full symmetric storage; the dense routines are meant for element,
//! macro-element and coarsest-level sizes.

mod block_lu;
mod dense;
mod ilu;
mod sparse;

pub use block_lu::{block_diag_lu, BlockDiagLu};
pub use dense::{dense_gen_sym_eig, gen_sym_eig_vectors, spd_condition, sym_eig, Cholesky, DenseLu, DenseMatrix};
pub use ilu::{ilu0, IluFactors};
pub use sparse::{CsrBuilder, SparseMatrix};

use crate::error::Result;

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "dot: length mismatch");
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `y += a x`
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    assert_eq!(x.len(), y.len(), "axpy: length mismatch");
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Exact solver for the coarsest level (dense Cholesky).
#[derive(Clone, Debug)]
pub struct DirectSolver {
    chol: Cholesky,
}

impl DirectSolver {
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        assert_eq!(a.n_rows(), a.n_cols(), "direct solve needs a square matrix");
        Ok(Self {
            chol: a.to_dense().cholesky()?,
        })
    }

    pub fn dim(&self) -> usize {
        self.chol.dim()
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        self.chol.solve_in_place(x);
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.chol.solve(b)
    }
}

/// Solves `A x = b` for a small SPD matrix.
pub fn direct_solve(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    Ok(DirectSolver::new(a)?.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn one_by_one_direct_solve() {
        let a = SparseMatrix::from_triplets(1, 1, &[(0, 0, 5.0)]);
        assert_eq!(direct_solve(&a, &[10.0]).unwrap(), vec![2.0]);
    }

    #[test]
    fn direct_solve_rejects_indefinite() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, -1.0)]);
        assert!(matches!(direct_solve(&a, &[1.0, 1.0]), Err(Error::NotSpd { .. })));
    }
}
