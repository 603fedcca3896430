use std::ops::Range;

use super::dense::DenseMatrix;

/// Compressed sparse row matrix with full (not half) storage.
///
/// Column indices are strictly increasing inside each row. The `symmetric`
/// flag is informational; it is set by constructors that know the matrix is
/// symmetric and is checked by [`SparseMatrix::is_symmetric`].
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl SparseMatrix {
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        assert_eq!(row_offsets.len(), n_rows + 1, "row_offsets length");
        assert_eq!(col_indices.len(), values.len(), "index/value length");
        assert_eq!(*row_offsets.last().unwrap(), values.len(), "row_offsets end");
        for i in 0..n_rows {
            let cols = &col_indices[row_offsets[i]..row_offsets[i + 1]];
            assert!(
                cols.windows(2).all(|w| w[0] < w[1]),
                "column indices of row {i} not strictly increasing"
            );
            assert!(cols.iter().all(|&c| c < n_cols), "column index out of range in row {i}");
        }
        Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
            symmetric: false,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
            symmetric: true,
        }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_offsets: vec![0; n_rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
            symmetric: n_rows == n_cols,
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets; duplicates are summed
    /// in insertion order.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; n_rows + 1];
        for &(r, c, _) in triplets {
            assert!(r < n_rows && c < n_cols, "triplet ({r},{c}) out of range");
            counts[r + 1] += 1;
        }
        for i in 0..n_rows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut slots = vec![(0usize, 0.0f64); triplets.len()];
        for &(r, c, v) in triplets {
            slots[next[r]] = (c, v);
            next[r] += 1;
        }
        let mut builder = CsrBuilder::new(n_cols);
        for i in 0..n_rows {
            let row = &mut slots[counts[i]..counts[i + 1]];
            // stable: duplicates keep insertion order, so the sum is deterministic
            row.sort_by_key(|&(c, _)| c);
            for &(c, v) in row.iter() {
                builder.add(c, v);
            }
            builder.finish_row();
        }
        builder.build()
    }

    pub fn from_dense(dense: &DenseMatrix) -> Self {
        let mut builder = CsrBuilder::new(dense.n_cols());
        for i in 0..dense.n_rows() {
            for j in 0..dense.n_cols() {
                let v = dense[(i, j)];
                if v != 0.0 {
                    builder.add(j, v);
                }
            }
            builder.finish_row();
        }
        builder.build()
    }

    pub fn with_symmetry(mut self, symmetric: bool) -> Self {
        self.symmetric = symmetric;
        self
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn symmetric_flag(&self) -> bool {
        self.symmetric
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        (&self.col_indices[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn spmv(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.spmv_into(x, &mut y);
        y
    }

    /// `y = A x`.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols, "spmv: x has wrong length");
        assert_eq!(y.len(), self.n_rows, "spmv: y has wrong length");
        for (i, yi) in y.iter_mut().enumerate() {
            let r = self.row_offsets[i]..self.row_offsets[i + 1];
            *yi = self.col_indices[r.clone()]
                .iter()
                .zip(&self.values[r])
                .map(|(&c, &v)| v * x[c])
                .sum();
        }
    }

    /// `y = Aᵀ x`.
    pub fn spmv_transpose_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_rows, "spmv_transpose: x has wrong length");
        assert_eq!(y.len(), self.n_cols, "spmv_transpose: y has wrong length");
        y.iter_mut().for_each(|v| *v = 0.0);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let r = self.row_offsets[i]..self.row_offsets[i + 1];
            for (&c, &v) in self.col_indices[r.clone()].iter().zip(&self.values[r]) {
                y[c] += v * xi;
            }
        }
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_indices {
            counts[c + 1] += 1;
        }
        for j in 0..self.n_cols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; self.nnz()];
        let mut vals = vec![0.0; self.nnz()];
        for i in 0..self.n_rows {
            let (rc, rv) = self.row(i);
            for (&c, &v) in rc.iter().zip(rv) {
                cols[next[c]] = i;
                vals[next[c]] = v;
                next[c] += 1;
            }
        }
        Self {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_offsets: counts,
            col_indices: cols,
            values: vals,
            symmetric: self.symmetric,
        }
    }

    /// Returns `(A + Aᵀ)/2`; the result is symmetric bit for bit.
    pub fn symmetrized(&self) -> Self {
        assert_eq!(self.n_rows, self.n_cols, "symmetrized: matrix must be square");
        let t = self.transpose();
        let mut builder = CsrBuilder::new(self.n_cols);
        for i in 0..self.n_rows {
            let (ac, av) = self.row(i);
            let (tc, tv) = t.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ac.len() || q < tc.len() {
                let cp = ac.get(p).copied().unwrap_or(usize::MAX);
                let cq = tc.get(q).copied().unwrap_or(usize::MAX);
                if cp == cq {
                    builder.add(cp, 0.5 * av[p] + 0.5 * tv[q]);
                    p += 1;
                    q += 1;
                } else if cp < cq {
                    builder.add(cp, 0.5 * av[p]);
                    p += 1;
                } else {
                    builder.add(cq, 0.5 * tv[q]);
                    q += 1;
                }
            }
            builder.finish_row();
        }
        builder.build().with_symmetry(true)
    }

    /// Exact symmetry check: every stored `(i,j)` has a bitwise-equal `(j,i)`.
    pub fn is_symmetric(&self) -> bool {
        if self.n_rows != self.n_cols {
            return false;
        }
        (0..self.n_rows).all(|i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).all(|(&j, &v)| self.get(j, i) == v)
        })
    }

    /// Drops off-diagonal entries with `|a_ij| ≤ tol·√|a_ii a_jj|`, e.g.
    /// round-off left over from exact cancellation. Square matrices only.
    pub fn pruned(&self, tol: f64) -> Self {
        assert_eq!(self.n_rows, self.n_cols, "pruned: matrix must be square");
        let diag = self.diagonal();
        let mut builder = CsrBuilder::new(self.n_cols);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if i == j || v.abs() > tol * (diag[i] * diag[j]).abs().sqrt() {
                    builder.add(j, v);
                }
            }
            builder.finish_row();
        }
        builder.build().with_symmetry(self.symmetric)
    }

    /// Extracts the block `rows × cols` with re-based indices.
    pub fn submatrix(&self, rows: Range<usize>, cols: Range<usize>) -> Self {
        let mut builder = CsrBuilder::new(cols.len());
        for i in rows.clone() {
            let (rc, rv) = self.row(i);
            let lo = rc.partition_point(|&c| c < cols.start);
            let hi = rc.partition_point(|&c| c < cols.end);
            for k in lo..hi {
                builder.add(rc[k] - cols.start, rv[k]);
            }
            builder.finish_row();
        }
        let symmetric = self.symmetric && rows == cols;
        builder.build().with_symmetry(symmetric)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                d[(i, j)] = v;
            }
        }
        d
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let ay = self.spmv(y);
        super::dot(x, &ay)
    }
}

/// Row-by-row CSR construction with a dense column accumulator.
///
/// Entries added to the current row may arrive in any column order and may
/// repeat; `finish_row` sorts and merges them.
#[derive(Debug)]
pub struct CsrBuilder {
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
    marker: Vec<usize>,
    accum: Vec<f64>,
    touched: Vec<usize>,
}

impl CsrBuilder {
    pub fn new(n_cols: usize) -> Self {
        Self {
            n_cols,
            row_offsets: vec![0],
            col_indices: Vec::new(),
            values: Vec::new(),
            marker: vec![usize::MAX; n_cols],
            accum: vec![0.0; n_cols],
            touched: Vec::new(),
        }
    }

    pub fn add(&mut self, col: usize, value: f64) {
        let row = self.row_offsets.len() - 1;
        if self.marker[col] != row {
            self.marker[col] = row;
            self.accum[col] = value;
            self.touched.push(col);
        } else {
            self.accum[col] += value;
        }
    }

    pub fn finish_row(&mut self) {
        self.touched.sort_unstable();
        for &c in &self.touched {
            self.col_indices.push(c);
            self.values.push(self.accum[c]);
        }
        self.touched.clear();
        self.row_offsets.push(self.col_indices.len());
    }

    pub fn build(self) -> SparseMatrix {
        let n_rows = self.row_offsets.len() - 1;
        SparseMatrix {
            n_rows,
            n_cols: self.n_cols,
            row_offsets: self.row_offsets,
            col_indices: self.col_indices,
            values: self.values,
            symmetric: false,
        }
    }
}
