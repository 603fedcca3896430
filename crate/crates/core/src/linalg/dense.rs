use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Row-major dense matrix for the small local problems (element, macro-element
/// and coarsest-level matrices).
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            data: vec![0.0; n_rows * n_cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), n_cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Self { n_rows, n_cols, data }
    }

    pub fn from_fn(n_rows: usize, n_cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n_rows, n_cols);
        for i in 0..n_rows {
            for j in 0..n_cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n_cols, self.n_rows, |i, j| self[(j, i)])
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        Self {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(-1.0))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n_cols, other.n_rows, "matmul: inner dimensions differ");
        let mut out = Self::zeros(self.n_rows, other.n_cols);
        for i in 0..self.n_rows {
            for k in 0..self.n_cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.n_cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols, "matvec: wrong vector length");
        (0..self.n_rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Block with the given row and column index lists.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn symmetrized(&self) -> Self {
        assert_eq!(self.n_rows, self.n_cols);
        Self::from_fn(self.n_rows, self.n_cols, |i, j| 0.5 * self[(i, j)] + 0.5 * self[(j, i)])
    }

    pub fn lu(&self) -> Result<DenseLu> {
        DenseLu::new(self)
    }

    pub fn cholesky(&self) -> Result<Cholesky> {
        Cholesky::new(self)
    }

    /// `self⁻¹ · rhs` for a square `self`, column by column.
    pub fn solve_matrix(&self, rhs: &Self) -> Result<Self> {
        let lu = self.lu()?;
        let mut out = Self::zeros(rhs.n_rows, rhs.n_cols);
        let mut col = vec![0.0; rhs.n_rows];
        for j in 0..rhs.n_cols {
            for i in 0..rhs.n_rows {
                col[i] = rhs[(i, j)];
            }
            lu.solve_in_place(&mut col);
            for i in 0..rhs.n_rows {
                out[(i, j)] = col[i];
            }
        }
        Ok(out)
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.n_rows && j < self.n_cols);
        &self.data[i * self.n_cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.n_rows && j < self.n_cols);
        &mut self.data[i * self.n_cols + j]
    }
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Clone, Debug)]
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl DenseLu {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        assert_eq!(a.n_rows, a.n_cols, "LU of a non-square matrix");
        let n = a.n_rows;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[i * n + k].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax <= scale * 1e-300 || pmax == 0.0 {
                return Err(Error::SingularMatrix { column: k });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu[i * n + j] -= f * lu[k * n + j];
                    }
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        assert_eq!(x.len(), n);
        let b: Vec<f64> = self.perm.iter().map(|&p| x[p]).collect();
        x.copy_from_slice(&b);
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Cholesky factor `A = L Lᵀ` of a symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        assert_eq!(a.n_rows, a.n_cols, "Cholesky of a non-square matrix");
        let n = a.n_rows;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) {
                return Err(Error::NotSpd { index: j });
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        Ok(Self { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn factor(&self) -> DenseMatrix {
        DenseMatrix {
            n_rows: self.n,
            n_cols: self.n,
            data: self.l.clone(),
        }
    }

    /// Solves `L y = b` in place.
    pub fn forward_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.l[i * n + k] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
    }

    /// Solves `Lᵀ y = b` in place.
    pub fn backward_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n, "Cholesky solve: wrong vector length");
        self.forward_in_place(x);
        self.backward_in_place(x);
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors as the
/// columns of the second matrix.
pub fn sym_eig(a: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    assert_eq!(a.n_rows, a.n_cols, "sym_eig of a non-square matrix");
    let n = a.n_rows;
    let mut m = a.symmetrized();
    let mut v = DenseMatrix::identity(n);
    let total = m.norm().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-16 * total {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Generalized symmetric-definite eigenproblem `S v = λ B v`.
///
/// `B` is reduced to the identity through its Cholesky factor and the
/// resulting standard problem is solved by Jacobi rotations. Eigenvalues are
/// ascending; eigenvectors are the columns of the returned matrix.
pub fn gen_sym_eig_vectors(s: &DenseMatrix, b: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    assert_eq!(s.n_rows, b.n_rows, "eigenproblem sizes differ");
    let n = s.n_rows;
    let chol = b.cholesky()?;
    // C = L⁻¹ S L⁻ᵀ
    let mut tmp = DenseMatrix::zeros(n, n);
    let mut col = vec![0.0; n];
    for j in 0..n {
        for i in 0..n {
            col[i] = s[(i, j)];
        }
        chol.forward_in_place(&mut col);
        for i in 0..n {
            tmp[(i, j)] = col[i];
        }
    }
    let mut c = DenseMatrix::zeros(n, n);
    for i in 0..n {
        col.copy_from_slice(tmp.row(i));
        chol.forward_in_place(&mut col);
        for j in 0..n {
            c[(i, j)] = col[j];
        }
    }
    let (values, y) = sym_eig(&c);
    let mut vectors = DenseMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            col[i] = y[(i, j)];
        }
        chol.backward_in_place(&mut col);
        for i in 0..n {
            vectors[(i, j)] = col[i];
        }
    }
    Ok((values, vectors))
}

/// Eigenvalues of `S v = λ B v`, ascending.
pub fn dense_gen_sym_eig(s: &DenseMatrix, b: &DenseMatrix) -> Result<Vec<f64>> {
    gen_sym_eig_vectors(s, b).map(|(v, _)| v)
}

/// Spectral condition number of a symmetric positive definite matrix.
pub fn spd_condition(a: &DenseMatrix) -> f64 {
    let (values, _) = sym_eig(a);
    values[values.len() - 1] / values[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd4() -> DenseMatrix {
        DenseMatrix::from_rows(&[
            [4.0, 1.0, 0.5, 0.0],
            [1.0, 3.0, 0.0, 0.2],
            [0.5, 0.0, 2.0, 0.1],
            [0.0, 0.2, 0.1, 1.5],
        ])
    }

    #[test]
    fn lu_solves_spd_block() {
        let a = spd4();
        let b = [1.0, -2.0, 0.5, 3.0];
        let x = a.lu().unwrap().solve(&b);
        let r: f64 = a
            .matvec(&x)
            .iter()
            .zip(&b)
            .map(|(p, q)| (p - q).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(r <= 1e-12 * b.iter().map(|v| v * v).sum::<f64>().sqrt());
    }

    #[test]
    fn lu_reports_singular_column() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]);
        assert_eq!(a.lu().unwrap_err(), Error::SingularMatrix { column: 1 });
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]);
        assert_eq!(a.cholesky().unwrap_err(), Error::NotSpd { index: 1 });
    }

    #[test]
    fn jacobi_diagonalizes() {
        let a = spd4();
        let (vals, vecs) = sym_eig(&a);
        for (k, &lam) in vals.iter().enumerate() {
            let v: Vec<f64> = (0..4).map(|i| vecs[(i, k)]).collect();
            let av = a.matvec(&v);
            for i in 0..4 {
                assert!((av[i] - lam * v[i]).abs() < 1e-12);
            }
        }
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn generalized_with_equal_matrices_gives_ones() {
        let a = spd4();
        let vals = dense_gen_sym_eig(&a, &a).unwrap();
        assert!(vals.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn generalized_rejects_indefinite_b() {
        let s = DenseMatrix::identity(2);
        let b = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, -1.0]]);
        assert!(matches!(dense_gen_sym_eig(&s, &b), Err(Error::NotSpd { .. })));
    }
}
