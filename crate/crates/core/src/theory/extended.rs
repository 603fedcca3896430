//! Double-double evaluation of the macro-element eigenproblem.
//!
//! For small `e` the local matrices approach the rank-deficient curl / div
//! limit and the `O(e)` mass contributions fall below double-precision
//! resolution, so a dense solve in `f64` loses about `1e−16/e` absolute
//! accuracy. Repeating the whole chain (sequences, assembly, transform,
//! condensation, generalized eigensolve) in ~32-digit arithmetic gives an
//! oracle that is independent of the closed forms.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::hierarchy::{local_transform, HbTransform};
use crate::mesh::{Dimension, Grid, MacroTopology};

/// Field operations needed by the dense routines below.
pub trait Scalar:
    Copy
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
}

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2` (about 32 digits).
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub fn new(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Self { hi, lo }
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        // two Newton-style correction steps on the quotient
        let q1 = self.hi / o.hi;
        let r = self - o * Self::new(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Self::new(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Self { hi, lo } + Self::new(q3)
    }
}

impl Scalar for DoubleDouble {
    fn from_f64(x: f64) -> Self {
        Self::new(x)
    }
    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
    fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Self::new(0.0);
        }
        let x = self.hi.sqrt();
        // one Newton step: x + (a − x²)/(2x)
        let (p, e) = two_prod(x, x);
        let r = (self - Self { hi: p, lo: e }).hi / (2.0 * x);
        let (hi, lo) = quick_two_sum(x, r);
        Self { hi, lo }
    }
    fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }
}

/// Row-major square matrix over `T`.
#[derive(Clone, Debug)]
struct Mat<T> {
    n: usize,
    m: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    fn zeros(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            data: vec![T::from_f64(0.0); n * m],
        }
    }

    fn at(&self, i: usize, j: usize) -> T {
        self.data[i * self.m + j]
    }

    fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.m + j] = v;
    }

    fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut out = Self::zeros(rows.len(), cols.len());
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                out.set(a, b, self.at(i, j));
            }
        }
        out
    }

    fn matmul(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.n, other.m);
        for i in 0..self.n {
            for k in 0..self.m {
                let a = self.at(i, k);
                for j in 0..other.m {
                    let v = out.at(i, j) + a * other.at(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.m, self.n);
        for i in 0..self.n {
            for j in 0..self.m {
                out.set(j, i, self.at(i, j));
            }
        }
        out
    }

    fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (o, &b) in out.data.iter_mut().zip(&other.data) {
            *o = *o - b;
        }
        out
    }

    /// `self⁻¹ rhs` by Gaussian elimination with partial pivoting.
    fn solve(&self, rhs: &Self) -> Self {
        let n = self.n;
        let mut a = self.clone();
        let mut b = rhs.clone();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a.at(i, k).abs().partial_cmp(&a.at(j, k).abs()).unwrap())
                .unwrap();
            if p != k {
                for j in 0..n {
                    let t = a.at(k, j);
                    a.set(k, j, a.at(p, j));
                    a.set(p, j, t);
                }
                for j in 0..b.m {
                    let t = b.at(k, j);
                    b.set(k, j, b.at(p, j));
                    b.set(p, j, t);
                }
            }
            let piv = a.at(k, k);
            for i in k + 1..n {
                let f = a.at(i, k) / piv;
                for j in k..n {
                    a.set(i, j, a.at(i, j) - f * a.at(k, j));
                }
                for j in 0..b.m {
                    b.set(i, j, b.at(i, j) - f * b.at(k, j));
                }
            }
        }
        for k in (0..n).rev() {
            for j in 0..b.m {
                let mut s = b.at(k, j);
                for i in k + 1..n {
                    s = s - a.at(k, i) * b.at(i, j);
                }
                b.set(k, j, s / a.at(k, k));
            }
        }
        b
    }

    fn schur(&self, first: usize) -> Self {
        let n = self.n;
        let i1: Vec<usize> = (0..first).collect();
        let i2: Vec<usize> = (first..n).collect();
        let a12 = self.select(&i1, &i2);
        let corr = a12.transpose().matmul(&self.select(&i1, &i1).solve(&a12));
        self.select(&i2, &i2).sub(&corr)
    }
}

/// Eigenvalues of `S v = λ B v` (both symmetric, `B` positive definite).
fn gen_eigenvalues<T: Scalar>(s: &Mat<T>, b: &Mat<T>) -> Vec<f64> {
    let n = b.n;
    let zero = T::from_f64(0.0);
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = b.at(j, j);
        for k in 0..j {
            d = d - l.at(j, k) * l.at(j, k);
        }
        let d = d.sqrt();
        l.set(j, j, d);
        for i in j + 1..n {
            let mut v = b.at(i, j);
            for k in 0..j {
                v = v - l.at(i, k) * l.at(j, k);
            }
            l.set(i, j, v / d);
        }
    }
    // C = L⁻¹ S L⁻ᵀ
    let linv_s = lower_solve(&l, s);
    let mut c = lower_solve(&l, &linv_s.transpose());
    for i in 0..n {
        for j in 0..i {
            let v = (c.at(i, j) + c.at(j, i)) * T::from_f64(0.5);
            c.set(i, j, v);
            c.set(j, i, v);
        }
    }
    // cyclic Jacobi
    let scale: f64 = (0..n).map(|i| c.at(i, i).to_f64().abs()).fold(0.0, f64::max);
    for _sweep in 0..100 {
        let mut off = zero;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off = off + c.at(i, j) * c.at(i, j);
                }
            }
        }
        if off.to_f64().sqrt() <= 1e-34 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = c.at(p, q);
                if apq.to_f64().abs() <= 1e-36 * scale {
                    continue;
                }
                let theta = (c.at(q, q) - c.at(p, p)) / (T::from_f64(2.0) * apq);
                let sign = if theta.to_f64() >= 0.0 { 1.0 } else { -1.0 };
                let t = T::from_f64(sign) / (theta.abs() + (theta * theta + T::from_f64(1.0)).sqrt());
                let cs = T::from_f64(1.0) / (t * t + T::from_f64(1.0)).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let ckp = c.at(k, p);
                    let ckq = c.at(k, q);
                    c.set(k, p, cs * ckp - sn * ckq);
                    c.set(k, q, sn * ckp + cs * ckq);
                }
                for k in 0..n {
                    let cpk = c.at(p, k);
                    let cqk = c.at(q, k);
                    c.set(p, k, cs * cpk - sn * cqk);
                    c.set(q, k, sn * cpk + cs * cqk);
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| c.at(i, i).to_f64()).collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

fn lower_solve<T: Scalar>(l: &Mat<T>, rhs: &Mat<T>) -> Mat<T> {
    let mut x = rhs.clone();
    for j in 0..x.m {
        for i in 0..l.n {
            let mut v = x.at(i, j);
            for k in 0..i {
                v = v - l.at(i, k) * x.at(k, j);
            }
            x.set(i, j, v / l.at(i, i));
        }
    }
    x
}

/// `(a_ℓ, b_ℓ)` for `ℓ ≤ max_level` from the textbook recursion
/// `b_{ℓ+1} = −b_ℓ²/a_ℓ`, `a_{ℓ+1} = 2a_ℓ + b_{ℓ+1}`, evaluated in `T`.
pub fn sequences_direct_in<T: Scalar>(e: f64, max_level: usize) -> Vec<(T, T)> {
    let e = T::from_f64(e);
    let mut out = Vec::with_capacity(max_level + 1);
    let mut a = T::from_f64(2.0) * e + T::from_f64(6.0);
    let mut b = e - T::from_f64(6.0);
    out.push((a, b));
    for _ in 0..max_level {
        b = -(b * b) / a;
        a = T::from_f64(2.0) * a + b;
        out.push((a, b));
    }
    out
}

/// `γ²_G` on level `L−ℓ`, computed end to end in precision `T`.
pub fn gamma2_dense_in<T: Scalar>(dim: Dimension, e: f64, level: usize) -> f64 {
    let six = T::from_f64(6.0);
    let e_t = T::from_f64(e);
    let mut u = T::from_f64(2.0) * e_t;
    let mut v = T::from_f64(3.0) * e_t;
    for _ in 0..level {
        let a = six + u;
        let amb = T::from_f64(12.0) + T::from_f64(2.0) * u - v;
        let nu = u + T::from_f64(2.0) * v - v * v / a;
        v = T::from_f64(2.0) * v * amb / a;
        u = nu;
    }
    let a = six + u;
    let b = v - six - u;

    let grid = Grid::new(dim, 2);
    let stencil = grid.x_stencil();
    let ne = dim.element_dofs();
    let transform = HbTransform::new(MacroTopology::new(grid));
    let fine = transform.macro_fine_dofs(0);
    let mut position = vec![0; grid.n_dofs()];
    for (local, &f) in fine.iter().enumerate() {
        position[f] = local;
    }
    let n = fine.len();
    let mut a_g = Mat::<T>::zeros(n, n);
    for cell in 0..grid.n_elements() {
        let dofs = grid.element_dofs(cell);
        for i in 0..ne {
            for j in 0..ne {
                let v = if i == j {
                    a
                } else if i / 2 == j / 2 {
                    b
                } else {
                    T::from_f64(6.0 * stencil[i] * stencil[j])
                };
                let (pi, pj) = (position[dofs[i]], position[dofs[j]]);
                a_g.set(pi, pj, a_g.at(pi, pj) + v);
            }
        }
    }
    let jd = local_transform(dim);
    let mut j = Mat::<T>::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            j.set(r, c, T::from_f64(jd[(r, c)]));
        }
    }
    let a_hat = j.matmul(&a_g).matmul(&j.transpose());
    let b_full = a_hat.schur(dim.interior_per_macro());
    let nd = ne * dim.diffs_per_entity();
    let agg: Vec<usize> = (nd..b_full.n).collect();
    let b22 = b_full.select(&agg, &agg);
    let s = b_full.schur(nd);
    let ev = gen_eigenvalues(&s, &b22);
    1.0 - ev[0]
}

/// `γ²_G` on level `L−ℓ` in double-double arithmetic.
pub fn gamma2_dense_extended(dim: Dimension, e: f64, level: usize) -> f64 {
    gamma2_dense_in::<DoubleDouble>(dim, e, level)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn double_double_keeps_extra_digits() {
        let third = DoubleDouble::new(1.0) / DoubleDouble::new(3.0);
        let r = third * DoubleDouble::new(3.0) - DoubleDouble::new(1.0);
        assert!(r.to_f64().abs() < 1e-31);
        let s = DoubleDouble::new(2.0).sqrt();
        assert!((s * s - DoubleDouble::new(2.0)).to_f64().abs() < 1e-31);
        let tiny = DoubleDouble::new(6.0) + DoubleDouble::new(2e-12) - DoubleDouble::new(6.0);
        assert_eq!(tiny.to_f64(), 2e-12);
    }
}
