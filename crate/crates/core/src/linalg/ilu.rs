use super::sparse::SparseMatrix;
use crate::error::{Error, Result};

/// Incomplete LU factorization with zero fill.
///
/// `L` (unit lower, diagonal implicit) and `U` share the sparsity pattern of
/// the input matrix and are stored together in one CSR array.
#[derive(Clone, Debug)]
pub struct IluFactors {
    lu: SparseMatrix,
    diag: Vec<usize>,
}

impl IluFactors {
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        let n = a.n_rows();
        assert_eq!(n, a.n_cols(), "ILU(0) of a non-square matrix");
        let mut lu = a.clone();
        let offsets = lu.row_offsets().to_vec();
        let cols = lu.col_indices().to_vec();
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            for p in offsets[i]..offsets[i + 1] {
                if cols[p] == i {
                    diag[i] = p;
                }
            }
            if diag[i] == usize::MAX {
                return Err(Error::ZeroPivot { row: i });
            }
        }
        let vals = lu.values_mut();
        let mut position = vec![usize::MAX; n];
        for i in 0..n {
            for p in offsets[i]..offsets[i + 1] {
                position[cols[p]] = p;
            }
            for p in offsets[i]..diag[i] {
                let k = cols[p];
                let pivot = vals[diag[k]];
                let lik = vals[p] / pivot;
                vals[p] = lik;
                if lik == 0.0 {
                    continue;
                }
                for q in diag[k] + 1..offsets[k + 1] {
                    let pos = position[cols[q]];
                    if pos != usize::MAX {
                        vals[pos] -= lik * vals[q];
                    }
                }
            }
            for p in offsets[i]..offsets[i + 1] {
                position[cols[p]] = usize::MAX;
            }
            let d = vals[diag[i]];
            if d == 0.0 || !d.is_finite() {
                return Err(Error::ZeroPivot { row: i });
            }
        }
        Ok(Self { lu, diag })
    }

    pub fn dim(&self) -> usize {
        self.lu.n_rows()
    }

    /// Solves `L U x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.dim();
        assert_eq!(x.len(), n, "ILU solve: wrong vector length");
        let offsets = self.lu.row_offsets();
        let cols = self.lu.col_indices();
        let vals = self.lu.values();
        for i in 0..n {
            let mut s = x[i];
            for p in offsets[i]..self.diag[i] {
                s -= vals[p] * x[cols[p]];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for p in self.diag[i] + 1..offsets[i + 1] {
                s -= vals[p] * x[cols[p]];
            }
            x[i] = s / vals[self.diag[i]];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Unit lower factor with explicit unit diagonal.
    pub fn lower(&self) -> SparseMatrix {
        let n = self.dim();
        let mut t = Vec::new();
        for i in 0..n {
            let (cols, vals) = self.lu.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                if c < i {
                    t.push((i, c, v));
                }
            }
            t.push((i, i, 1.0));
        }
        SparseMatrix::from_triplets(n, n, &t)
    }

    pub fn upper(&self) -> SparseMatrix {
        let n = self.dim();
        let mut t = Vec::new();
        for i in 0..n {
            let (cols, vals) = self.lu.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                if c >= i {
                    t.push((i, c, v));
                }
            }
        }
        SparseMatrix::from_triplets(n, n, &t)
    }

    /// The product `L U` as a dense matrix (test and diagnostic use).
    pub fn product_dense(&self) -> super::DenseMatrix {
        self.lower().to_dense().matmul(&self.upper().to_dense())
    }
}

pub fn ilu0(a: &SparseMatrix) -> Result<IluFactors> {
    IluFactors::new(a)
}
