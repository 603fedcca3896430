use super::dense::{DenseLu, DenseMatrix};
use super::sparse::SparseMatrix;
use crate::error::{Error, Result};

/// Exact LU factors of a block-diagonal matrix with equally sized dense blocks.
///
/// Used for the macro-element interior block, whose blocks never couple
/// across macro-elements.
#[derive(Clone, Debug)]
pub struct BlockDiagLu {
    block_size: usize,
    blocks: Vec<DenseLu>,
}

impl BlockDiagLu {
    /// Factors `a11`; `level` is only used to label a singular block.
    ///
    /// Panics if `a11` has an entry outside its diagonal blocks.
    pub fn new(a11: &SparseMatrix, block_size: usize, level: usize) -> Result<Self> {
        let n = a11.n_rows();
        assert_eq!(n, a11.n_cols(), "interior block must be square");
        assert!(block_size > 0 && n % block_size == 0, "dimension {n} not a multiple of {block_size}");
        let n_blocks = n / block_size;
        let mut blocks = Vec::with_capacity(n_blocks);
        for b in 0..n_blocks {
            let start = b * block_size;
            let mut dense = DenseMatrix::zeros(block_size, block_size);
            for i in 0..block_size {
                let (cols, vals) = a11.row(start + i);
                for (&c, &v) in cols.iter().zip(vals) {
                    assert!(
                        c >= start && c < start + block_size,
                        "entry ({}, {c}) lies outside diagonal block {b}",
                        start + i
                    );
                    dense[(i, c - start)] = v;
                }
            }
            let lu = dense.lu().map_err(|_| Error::SingularBlock { level, block: b })?;
            blocks.push(lu);
        }
        Ok(Self { block_size, blocks })
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn dim(&self) -> usize {
        self.block_size * self.blocks.len()
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.dim(), "block solve: wrong vector length");
        for (chunk, lu) in x.chunks_mut(self.block_size).zip(&self.blocks) {
            lu.solve_in_place(chunk);
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Factors the block-diagonal interior matrix.
pub fn block_diag_lu(a11: &SparseMatrix, block_size: usize) -> Result<BlockDiagLu> {
    BlockDiagLu::new(a11, block_size, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_spd_block() {
        let d = DenseMatrix::from_rows(&[
            [4.0, 1.0, 0.0, 0.5],
            [1.0, 5.0, 1.0, 0.0],
            [0.0, 1.0, 3.0, 0.2],
            [0.5, 0.0, 0.2, 2.0],
        ]);
        let a = SparseMatrix::from_dense(&d);
        let f = block_diag_lu(&a, 4).unwrap();
        let b = [1.0, 2.0, -1.0, 0.5];
        let x = f.solve(&b);
        let r: f64 = a.spmv(&x).iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        assert!(r <= 1e-12 * 2.5);
    }

    #[test]
    fn singular_block_is_reported() {
        let a = SparseMatrix::from_triplets(4, 4, &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0), (2, 3, 1.0), (3, 2, 1.0), (3, 3, 1.0)]);
        let err = BlockDiagLu::new(&a, 2, 3).unwrap_err();
        assert_eq!(err, Error::SingularBlock { level: 3, block: 1 });
    }

    #[test]
    #[should_panic(expected = "outside diagonal block")]
    fn off_block_entry_panics() {
        let a = SparseMatrix::from_triplets(4, 4, &[(0, 0, 1.0), (0, 2, 1.0), (1, 1, 1.0), (2, 2, 1.0), (3, 3, 1.0)]);
        let _ = block_diag_lu(&a, 2);
    }
}
