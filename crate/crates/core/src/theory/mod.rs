//! Closed-form two-level analysis on uniform meshes.
//!
//! With `e = κh²` (`κ = α/β`) every element matrix on level `L−ℓ` of the
//! recursion is `β/(6(2^ℓh)^d)` times an integer-pattern matrix with
//! diagonal `a_ℓ`, partner entry `b_ℓ` and `±6` elsewhere, where
//! `a₀ = 2e+6`, `b₀ = e−6`, `b_{ℓ+1} = −b_ℓ²/a_ℓ`, `a_{ℓ+1} = 2a_ℓ + b_{ℓ+1}`.
//!
//! For small `e` the pair `(a_ℓ, b_ℓ)` sits next to the fixed point
//! `(6, −6)`, so the sequences are carried as `u = a − 6` and `v = a + b`:
//! `u_{ℓ+1} = u + 2v − v²/(6+u)`, `v_{ℓ+1} = 2v(a−b)/a`. Every closed form
//! below is written in these variables and stays accurate to a few ulps
//! for `e` down to `1e−12`. `b` itself is carried by its own recursion so
//! that `r = b/a` keeps full relative accuracy once `b` becomes tiny.

mod extended;

pub use extended::{gamma2_dense_extended, gamma2_dense_in, sequences_direct_in, DoubleDouble, Scalar};

use std::fmt::Write as _;

use crate::error::Result;
use crate::fem::ElementMatrix;
use crate::hierarchy::{local_condense, local_transform, LocalBlocks};
use crate::linalg::{dense_gen_sym_eig, ilu0, DenseMatrix, SparseMatrix};
use crate::mesh::{Dimension, Grid, MacroTopology};

/// Default recursion depth for the sequence tables.
pub const DEFAULT_MAX_LEVEL: usize = 30;

/// The sequences `a_ℓ, b_ℓ` (stored via `u_ℓ = a_ℓ − 6`, `v_ℓ = a_ℓ + b_ℓ`).
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceState {
    pub e: f64,
    u: Vec<f64>,
    v: Vec<f64>,
    b: Vec<f64>,
}

impl SequenceState {
    pub fn max_level(&self) -> usize {
        self.u.len() - 1
    }

    pub fn a(&self, l: usize) -> f64 {
        6.0 + self.u[l]
    }

    pub fn b(&self, l: usize) -> f64 {
        self.b[l]
    }

    pub fn r(&self, l: usize) -> f64 {
        self.b(l) / self.a(l)
    }

    /// `a_ℓ − 6`, computed without cancellation.
    pub fn a_minus_6(&self, l: usize) -> f64 {
        self.u[l]
    }

    /// `a_ℓ + b_ℓ`, computed without cancellation.
    pub fn a_plus_b(&self, l: usize) -> f64 {
        self.v[l]
    }

    /// `a_ℓ − b_ℓ`.
    pub fn a_minus_b(&self, l: usize) -> f64 {
        12.0 + 2.0 * self.u[l] - self.v[l]
    }
}

pub fn sequences(e: f64, max_level: usize) -> SequenceState {
    assert!(e > 0.0 && e.is_finite(), "e must be positive");
    let mut u = Vec::with_capacity(max_level + 1);
    let mut v = Vec::with_capacity(max_level + 1);
    let mut b = Vec::with_capacity(max_level + 1);
    u.push(2.0 * e);
    v.push(3.0 * e);
    b.push(e - 6.0);
    // relative error bound of b in units of ε: squaring doubles it, while
    // v − a costs about a/|b| times the (slowly growing) error of u and v
    let mut b_err = 2.0;
    for l in 0..max_level {
        let (ul, vl, bl) = (u[l], v[l], b[l]);
        let a = 6.0 + ul;
        let amb = 12.0 + 2.0 * ul - vl;
        let (un, vn) = (ul + 2.0 * vl - vl * vl / a, 2.0 * vl * amb / a);
        u.push(un);
        v.push(vn);
        let squared = -bl * bl / a;
        let squared_err = 2.0 * b_err + 3.0;
        let diff_err = 4.0 * (l + 2) as f64 * (6.0 + un) / squared.abs();
        if diff_err < squared_err {
            b.push(vn - (6.0 + un));
            b_err = diff_err;
        } else {
            b.push(squared);
            b_err = squared_err;
        }
    }
    SequenceState { e, u, v, b }
}

/// Squared CBS constant of one level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CbsValue {
    pub dim: Dimension,
    pub level: usize,
    pub c2: f64,
}

impl CbsValue {
    pub fn gamma(&self) -> f64 {
        self.c2.sqrt()
    }
}

/// `36(a+b)/((a²−36)(a−b))`.
pub fn cbs_curl(state: &SequenceState, l: usize) -> CbsValue {
    let u = state.a_minus_6(l);
    let c2 = 36.0 * state.a_plus_b(l) / (u * (12.0 + u) * state.a_minus_b(l));
    CbsValue { dim: Dimension::Two, level: l, c2 }
}

/// `72(a+b)/((a+12)(a−6)(a−b))`.
pub fn cbs_div(state: &SequenceState, l: usize) -> CbsValue {
    let u = state.a_minus_6(l);
    let c2 = 72.0 * state.a_plus_b(l) / ((18.0 + u) * u * state.a_minus_b(l));
    CbsValue { dim: Dimension::Three, level: l, c2 }
}

pub fn cbs(dim: Dimension, state: &SequenceState, l: usize) -> CbsValue {
    match dim {
        Dimension::Two => cbs_curl(state, l),
        Dimension::Three => cbs_div(state, l),
    }
}

/// Integer-pattern element matrix with diagonal `a`, partner `b`, `±6`
/// elsewhere (signs from the curl / div stencil).
pub fn recursion_stencil(dim: Dimension, a: f64, b: f64) -> DenseMatrix {
    let s = Grid::new(dim, 1).x_stencil();
    let n = s.len();
    DenseMatrix::from_fn(n, n, |i, j| {
        if i == j {
            a
        } else if i / 2 == j / 2 {
            b
        } else {
            6.0 * s[i] * s[j]
        }
    })
}

/// Element matrix of level `L−ℓ` for constant coefficients:
/// `β/(6(2^ℓh)^d)` times [`recursion_stencil`] with `a_ℓ, b_ℓ`.
pub fn recursion_element_matrix(dim: Dimension, beta: f64, h: f64, e: f64, l: usize) -> ElementMatrix {
    let state = sequences(e, l);
    let hl = h * (1u64 << l) as f64;
    let scale = beta / (6.0 * hl.powi(dim.as_usize() as i32));
    ElementMatrix {
        matrix: recursion_stencil(dim, state.a(l), state.b(l)).scaled(scale),
        alpha: e * beta / (h * h),
        beta,
        h: hl,
    }
}

/// `B_G,22` and `S_G` of one macro-element on the finest level, in units of
/// `β/(6h^d)`.
pub fn local_schur_closed_form(dim: Dimension, e: f64) -> (DenseMatrix, DenseMatrix) {
    let st = sequences(e, 0);
    let (a0, b0) = (st.a(0), st.b(0));
    let (u, v) = (st.a_minus_6(0), st.a_plus_b(0));
    let w = (u - v) * (u - v);
    let (p, q, s, t, off) = match dim {
        Dimension::Two => {
            let q = -b0 * b0 / (4.0 * a0);
            // t₀ = (36a + 72b + ab²)/(144 − 4a²) rewritten in u, v
            let num = u * (w + 18.0 * u - 24.0 * v + 72.0) + 6.0 * v * v;
            let t = num / (-4.0 * u * (12.0 + u));
            (a0 / 2.0 + q, q, a0 / 2.0 + t, t, 1.5)
        }
        Dimension::Three => {
            let q = -b0 * b0 / (8.0 * a0);
            // t₀ = (−72a − 144b − 6b² − ab²)/(8(a−6)(a+12)) rewritten in u, v
            let num = -(u * (w + 24.0 * u - 36.0 * v + 108.0) + 12.0 * v * v);
            let t = num / (8.0 * u * (18.0 + u));
            (a0 / 4.0 + q, q, a0 / 4.0 + t, t, 0.75)
        }
    };
    let pattern = |diag: f64, partner: f64| {
        let unit = recursion_stencil(dim, 0.0, 0.0);
        DenseMatrix::from_fn(unit.n_rows(), unit.n_cols(), |i, j| {
            if i == j {
                diag
            } else if i / 2 == j / 2 {
                partner
            } else {
                unit[(i, j)] / 6.0 * off
            }
        })
    };
    (pattern(p, q), pattern(s, t))
}

/// Smallest eigenvalue of `S_G v = λ B_G,22 v` on level `L−ℓ` and
/// `γ²_G = 1 − λ`, from the closed forms.
pub fn eigen_closed_form_level(dim: Dimension, state: &SequenceState, l: usize) -> (f64, f64) {
    let u = state.a_minus_6(l);
    let v = state.a_plus_b(l);
    let amb = state.a_minus_b(l);
    let a = 6.0 + u;
    let lambda = match dim {
        // a(a² − ab − 72) / ((a² − 36)(a − b))
        Dimension::Two => a * (u * (24.0 + 2.0 * u - v) - 6.0 * v) / (u * (12.0 + u) * amb),
        // a(a² − ab + 6a − 6b − 144) / ((a+12)(a−6)(a−b))
        Dimension::Three => a * (u * (36.0 + 2.0 * u - v) - 12.0 * v) / ((18.0 + u) * u * amb),
    };
    (lambda, 1.0 - lambda)
}

pub fn eigen_closed_form(dim: Dimension, e: f64) -> (f64, f64) {
    eigen_closed_form_level(dim, &sequences(e, 0), 0)
}

/// Condensed blocks of one macro-element assembled from the recursion
/// element matrix of level `L−ℓ` (unit prefactor).
pub fn macro_blocks(dim: Dimension, state: &SequenceState, l: usize) -> Result<LocalBlocks> {
    let element = recursion_stencil(dim, state.a(l), state.b(l));
    macro_blocks_from_element(dim, &element)
}

/// Condensed blocks of one macro-element built from four (2D) or eight
/// (3D) copies of `element`.
pub fn macro_blocks_from_element(dim: Dimension, element: &DenseMatrix) -> Result<LocalBlocks> {
    let grid = Grid::new(dim, 2);
    let a = crate::fem::assemble_with(&grid, |_| element.clone()).to_dense();
    let transform = crate::hierarchy::HbTransform::new(MacroTopology::new(grid));
    let fine = transform.macro_fine_dofs(0);
    let a_g = a.select(&fine, &fine);
    let j = local_transform(dim);
    let a_hat = j.matmul(&a_g).matmul(&j.transpose());
    local_condense(&a_hat, dim.interior_per_macro(), dim.element_dofs() * dim.diffs_per_entity())
}

/// `γ²_G` from a dense generalized eigensolve of the condensed blocks.
pub fn eigen_dense_level(dim: Dimension, state: &SequenceState, l: usize) -> Result<f64> {
    let blocks = macro_blocks(dim, state, l)?;
    let ev = dense_gen_sym_eig(&blocks.s, &blocks.b22)?;
    Ok(1.0 - ev[0])
}

/// Spectral condition number of the macro-element difference block
/// `B_G,11`, raw and preconditioned by its own ILU(0) factors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct B11Condition {
    pub raw: f64,
    pub ilu: f64,
}

pub fn b11_condition(dim: Dimension, e: f64) -> Result<B11Condition> {
    let blocks = macro_blocks(dim, &sequences(e, 0), 0)?;
    let b11 = blocks.b11;
    let ones = DenseMatrix::identity(b11.n_rows());
    let raw = dense_gen_sym_eig(&b11, &ones)?;
    let ilu = ilu0(&SparseMatrix::from_dense(&b11).pruned(1e-13))?;
    // ILU(0) of a symmetric matrix is L·D·Lᵀ; symmetrize against round-off
    let m = ilu.product_dense().symmetrized();
    let pre = dense_gen_sym_eig(&b11, &m)?;
    Ok(B11Condition {
        raw: raw[raw.len() - 1] / raw[0],
        ilu: pre[pre.len() - 1] / pre[0],
    })
}

/// One row of the sequence table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SequenceRow {
    pub e: f64,
    pub level: usize,
    pub a: f64,
    pub b: f64,
    pub r: f64,
    pub c2_curl: f64,
    pub c2_div: f64,
}

/// Sequence values and CBS constants for every `e` and `ℓ ≤ max_level`.
///
/// Panics if a constant fails to decrease in `ℓ` or exceeds its bound.
pub fn emit_sequence_tables(es: &[f64], max_level: usize) -> Vec<SequenceRow> {
    let mut rows = Vec::with_capacity(es.len() * (max_level + 1));
    for &e in es {
        let st = sequences(e, max_level);
        let mut prev: Option<(f64, f64)> = None;
        for l in 0..=max_level {
            let (c, d) = (cbs_curl(&st, l).c2, cbs_div(&st, l).c2);
            assert!(c < 0.375 && d < 0.5, "CBS bound violated at e={e}, level {l}");
            if let Some((pc, pd)) = prev {
                assert!(c < pc && d < pd, "CBS constant not decreasing at e={e}, level {l}");
            }
            prev = Some((c, d));
            rows.push(SequenceRow {
                e,
                level: l,
                a: st.a(l),
                b: st.b(l),
                r: st.r(l),
                c2_curl: c,
                c2_div: d,
            });
        }
    }
    rows
}

/// CSV with columns `e,level,a,b,r,c2_curl,c2_div,gamma_curl,gamma_div`.
pub fn sequence_csv(rows: &[SequenceRow]) -> String {
    let mut out = String::from("e,level,a,b,r,c2_curl,c2_div,gamma_curl,gamma_div\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{:e},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            r.e,
            r.level,
            r.a,
            r.b,
            r.r,
            r.c2_curl,
            r.c2_div,
            r.c2_curl.sqrt(),
            r.c2_div.sqrt()
        );
    }
    out
}

/// `e = 10^m` for `m = lo..=hi`.
pub fn decade_grid(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|m| 10f64.powi(m)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn e_six_is_a_fixed_point_of_b() {
        let s = sequences(6.0, 5);
        for l in 0..=5 {
            assert_eq!(s.b(l), 0.0);
            assert_eq!(s.a(l), 18.0 * (1u64 << l) as f64);
        }
    }

    #[test]
    fn e_one_first_levels() {
        let s = sequences(1.0, 1);
        assert_eq!((s.a(0), s.b(0)), (8.0, -5.0));
        assert!((s.b(1) + 25.0 / 8.0).abs() < 1e-15);
        assert!((s.a(1) - 103.0 / 8.0).abs() < 1e-14);
        assert!((s.r(1) + 25.0 / 103.0).abs() < 1e-15);
    }

    #[test]
    fn level_zero_constants() {
        let s = sequences(1.0, 0);
        assert!((cbs_curl(&s, 0).c2 - 27.0 / 91.0).abs() < 1e-15);
        assert!((cbs_div(&s, 0).c2 - 54.0 / 130.0).abs() < 1e-15);
    }

    #[test]
    fn closed_form_schur_e_one() {
        let (b22, _) = local_schur_closed_form(Dimension::Two, 1.0);
        assert!((b22[(0, 1)] + 25.0 / 32.0).abs() < 1e-15);
        assert!((b22[(0, 0)] - 103.0 / 32.0).abs() < 1e-15);
        let (b22, _) = local_schur_closed_form(Dimension::Three, 1.0);
        assert!((b22[(0, 1)] + 25.0 / 64.0).abs() < 1e-15);
        assert!((b22[(0, 0)] - (2.0 - 25.0 / 64.0)).abs() < 1e-15);
    }

    #[test]
    fn eigenvalue_e_one() {
        let (lambda, g2) = eigen_closed_form(Dimension::Two, 1.0);
        assert!((lambda - 256.0 / 364.0).abs() < 1e-15);
        assert!((g2 - 108.0 / 364.0).abs() < 1e-15);
    }

    #[test]
    fn condensed_macro_matches_closed_form() {
        for dim in [Dimension::Two, Dimension::Three] {
            for e in [1e-4, 1.0, 6.0, 1e3] {
                let blocks = macro_blocks(dim, &sequences(e, 0), 0).unwrap();
                let (b22, s) = local_schur_closed_form(dim, e);
                let scale = b22.max_abs();
                assert!(blocks.b22.max_abs_diff(&b22) < 1e-12 * scale, "{dim} e={e}");
                assert!(blocks.s.max_abs_diff(&s) < 1e-10 * scale, "{dim} e={e}");
            }
        }
    }

    #[test]
    fn recursion_level_zero_is_the_element_matrix() {
        let (beta, h, kappa) = (2.0, 0.125, 3.0);
        let e = kappa * h * h;
        for dim in [Dimension::Two, Dimension::Three] {
            let r = recursion_element_matrix(dim, beta, h, e, 0).matrix;
            let a = crate::fem::element_matrix(dim, kappa * beta, beta, h).matrix;
            assert!(r.max_abs_diff(&a) < 1e-12 * a.max_abs());
        }
    }

    #[test]
    fn b11_is_well_conditioned() {
        let c = b11_condition(Dimension::Two, 6.0).unwrap();
        assert!(c.raw > 1.0 && c.raw.is_finite());
        assert!(c.ilu >= 1.0 - 1e-12);
    }
}
