//! Named numerical checks, each reporting a measured error against a
//! tolerance. Used by the `verify` subcommand and the acceptance tests.

use std::fmt;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::amli::{
    best_approx_coeffs, chebyshev_coeffs, chebyshev_coeffs_long_form, optimality_window, Amli, AmliConfig, Cycle,
    Form, Variant,
};
use crate::error::Result;
use crate::fem::{assemble, assemble_with, x_incidence};
use crate::hierarchy::{build_level_stack_with, LevelStack};
use crate::linalg::{dense_gen_sym_eig, dot, sym_eig, DenseMatrix};
use crate::mesh::{CoefficientField, Dimension, Grid, MeshHierarchy};
use crate::theory::{
    cbs, cbs_curl, cbs_div, decade_grid, eigen_closed_form_level, gamma2_dense_extended, recursion_element_matrix,
    sequences, sequences_direct_in, DoubleDouble, Scalar,
};

/// How a measured value is compared with its tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bound {
    AtMost,
    Below,
    Above,
}

impl Bound {
    fn holds(self, measured: f64, tolerance: f64) -> bool {
        match self {
            Self::AtMost => measured <= tolerance,
            Self::Below => measured < tolerance,
            Self::Above => measured > tolerance,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Self::AtMost => "<=",
            Self::Below => "<",
            Self::Above => ">",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub bound: Bound,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, measured: f64, bound: Bound, tolerance: f64) -> Self {
        // NaN never passes
        let passed = !measured.is_nan() && bound.holds(measured, tolerance);
        Self {
            name: name.into(),
            measured,
            tolerance,
            bound,
            passed,
        }
    }

    pub fn at_most(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self::new(name, measured, Bound::AtMost, tolerance)
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} measured={:.3e} {} {:.3e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.bound.symbol(),
            self.tolerance
        )
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

/// `name,measured,relation,tolerance,status` rows.
pub fn checks_csv(checks: &[Check]) -> String {
    let mut out = String::from("name,measured,relation,tolerance,status\n");
    for c in checks {
        out.push_str(&format!(
            "{},{:e},{},{:e},{}\n",
            c.name,
            c.measured,
            c.bound.symbol(),
            c.tolerance,
            if c.passed { "pass" } else { "fail" }
        ));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyConfig {
    /// `e = 10^m` for `m` in this range.
    pub m_lo: i32,
    pub m_hi: i32,
    pub max_level: usize,
    /// Relative perturbation of the aggregate stencil; nonzero values must
    /// make the coarse-matrix comparison fail.
    pub perturbation: f64,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            m_lo: -12,
            m_hi: 6,
            max_level: 30,
            perturbation: 0.0,
            seed: 2024,
        }
    }
}

/// Runs every check.
pub fn run(config: &VerifyConfig) -> Result<Vec<Check>> {
    let es = decade_grid(config.m_lo, config.m_hi);
    let mut checks = vec![
        sequence_identities(&es, config.max_level),
        sequence_agreement(&es, config.max_level),
        sequence_bounds(&es, config.max_level),
    ];
    checks.extend(cbs_bounds(&es, config.max_level));
    for dim in [Dimension::Two, Dimension::Three] {
        checks.push(eigen_identity_closed_form(dim, &es, config.max_level));
        checks.push(eigen_identity_dense(dim, &es, config.max_level));
    }
    for (dim, n) in [(Dimension::Two, 8), (Dimension::Three, 4)] {
        checks.push(coarse_recursion(dim, n, config.perturbation)?);
    }
    for dim in [Dimension::Two, Dimension::Three] {
        checks.push(two_level_spectrum(dim, 4)?);
    }
    for (dim, n) in [(Dimension::Two, 16), (Dimension::Three, 8)] {
        checks.extend(preconditioner_spd(dim, n, config.seed)?);
    }
    checks.extend(kernel_dimensions());
    checks.push(polynomial_long_form());
    checks.push(optimality_window_check());
    Ok(checks)
}

/// Magnitudes below this count as zero: the tail of `b_ℓ` underflows and
/// double-double loses its low word long before `f64::MIN_POSITIVE`.
const NEGLIGIBLE: f64 = 1e-250;

fn relative(x: f64, y: f64) -> f64 {
    let scale = x.abs().max(y.abs());
    if scale < NEGLIGIBLE {
        0.0
    } else {
        (x - y).abs() / scale
    }
}

/// Step identities between consecutive `(a_ℓ, b_ℓ)`, evaluated in
/// double-double on the direct recursion.
pub fn sequence_identities(es: &[f64], max_level: usize) -> Check {
    type T = DoubleDouble;
    let two = T::from_f64(2.0);
    let one = T::from_f64(1.0);
    let rel = rel_dd;
    let mut worst = 0.0f64;
    for &e in es {
        let seq = sequences_direct_in::<T>(e, max_level);
        for w in seq.windows(2) {
            let ((a, b), (an, bn)) = (w[0], w[1]);
            let r = b / a;
            let r2 = r * r;
            let residuals = [
                rel(bn / a, -r2),
                rel(an / a, two - r2),
                rel(bn / an, -r2 / (two - r2)),
                rel(an - bn, two * a),
                rel(an + bn, two * a * (one - r2)),
                rel((an + bn) / (an - bn), one - r2),
            ];
            worst = residuals.into_iter().fold(worst, f64::max);
        }
    }
    Check::at_most("sequence-step-identities", worst, 1e-12)
}

fn rel_dd(x: DoubleDouble, y: DoubleDouble) -> f64 {
    let scale = x.abs().to_f64().max(y.abs().to_f64());
    if scale < NEGLIGIBLE {
        0.0
    } else {
        (x - y).abs().to_f64() / scale
    }
}

/// The cancellation-free `f64` sequences against the direct recursion in
/// double-double.
pub fn sequence_agreement(es: &[f64], max_level: usize) -> Check {
    let mut worst = 0.0f64;
    for &e in es {
        let st = sequences(e, max_level);
        let direct = sequences_direct_in::<DoubleDouble>(e, max_level);
        let six = DoubleDouble::new(6.0);
        for (l, &(a, b)) in direct.iter().enumerate() {
            let pairs = [
                (st.a(l), a.to_f64()),
                (st.b(l), b.to_f64()),
                (st.r(l), (b / a).to_f64()),
                (st.a_minus_6(l), (a - six).to_f64()),
                (st.a_plus_b(l), (a + b).to_f64()),
                (st.a_minus_b(l), (a - b).to_f64()),
            ];
            worst = pairs.into_iter().map(|(x, y)| relative(x, y)).fold(worst, f64::max);
        }
    }
    Check::at_most("sequence-stable-vs-extended", worst, 1e-12)
}

/// Counts violations of `−1 < r₀ < 1/2`, `−1 < r_ℓ ≤ 0` (`ℓ ≥ 1`),
/// `a_ℓ > 6` increasing and `r_ℓ²` non-increasing.
pub fn sequence_bounds(es: &[f64], max_level: usize) -> Check {
    let mut violations = 0usize;
    for &e in es {
        let st = sequences(e, max_level);
        for l in 0..=max_level {
            let r = st.r(l);
            let upper_ok = if l == 0 { r < 0.5 } else { r <= 0.0 };
            violations += usize::from(!(r > -1.0 && upper_ok));
            violations += usize::from(st.a_minus_6(l) <= 0.0);
            if l > 0 {
                violations += usize::from(st.a(l) <= st.a(l - 1));
                violations += usize::from(r * r > st.r(l - 1).powi(2));
            }
        }
    }
    Check::at_most("sequence-bounds-violations", violations as f64, 0.0)
}

/// Largest CBS constant (strictly below the uniform bound) and the number
/// of levels where it fails to decrease, for both problems.
pub fn cbs_bounds(es: &[f64], max_level: usize) -> Vec<Check> {
    let mut out = Vec::new();
    for dim in [Dimension::Two, Dimension::Three] {
        let mut max_c2 = 0.0f64;
        let mut not_decreasing = 0usize;
        for &e in es {
            let st = sequences(e, max_level);
            let c2: Vec<f64> = (0..=max_level)
                .map(|l| match dim {
                    Dimension::Two => cbs_curl(&st, l).c2,
                    Dimension::Three => cbs_div(&st, l).c2,
                })
                .collect();
            max_c2 = c2.iter().copied().fold(max_c2, f64::max);
            not_decreasing += c2.windows(2).filter(|w| w[1] >= w[0]).count();
        }
        let tag = dim_tag(dim);
        out.push(Check::new(format!("cbs-{tag}-below-bound"), max_c2, Bound::Below, dim.theta()));
        out.push(Check::at_most(
            format!("cbs-{tag}-decreasing-violations"),
            not_decreasing as f64,
            0.0,
        ));
    }
    out
}

fn dim_tag(dim: Dimension) -> &'static str {
    match dim {
        Dimension::Two => "curl",
        Dimension::Three => "div",
    }
}

/// `γ²_G` from the closed-form eigenvalue against the CBS formula.
pub fn eigen_identity_closed_form(dim: Dimension, es: &[f64], max_level: usize) -> Check {
    let mut worst = 0.0f64;
    for &e in es {
        let st = sequences(e, max_level);
        for l in 0..=max_level {
            let (_, g2) = eigen_closed_form_level(dim, &st, l);
            worst = worst.max((g2 - cbs(dim, &st, l).c2).abs());
        }
    }
    Check::at_most(format!("eigen-identity-closed-form-{}", dim_tag(dim)), worst, 1e-10)
}

/// `γ²_G` from a dense double-double eigensolve of the assembled and
/// condensed macro-element against the CBS formula.
pub fn eigen_identity_dense(dim: Dimension, es: &[f64], max_level: usize) -> Check {
    let mut worst = 0.0f64;
    for &e in es {
        let st = sequences(e, max_level);
        for l in 0..=max_level {
            let dense = gamma2_dense_extended(dim, e, l);
            worst = worst.max((dense - cbs(dim, &st, l).c2).abs());
        }
    }
    Check::at_most(format!("eigen-identity-dense-{}", dim_tag(dim)), worst, 1e-10)
}

fn constant_stack(dim: Dimension, n: usize, alpha: f64, beta: f64, eps: f64) -> Result<(MeshHierarchy, LevelStack)> {
    // refine from the smallest admissible coarsest mesh (2 cells per side)
    let levels = (n.trailing_zeros() as usize).saturating_sub(1);
    let hierarchy = MeshHierarchy::new(dim, n >> levels, levels);
    let coeffs = CoefficientField::constant(hierarchy.n_elements(levels), alpha, beta);
    let a = assemble(&hierarchy, levels, &coeffs);
    let stack = build_level_stack_with(&hierarchy, a, eps)?;
    Ok((hierarchy, stack))
}

/// Every level matrix of the stack against direct assembly of the
/// recursion element matrix, for several coefficient ratios.
pub fn coarse_recursion(dim: Dimension, n: usize, perturbation: f64) -> Result<Check> {
    let mut worst = 0.0f64;
    for (alpha, beta) in [(1.0, 1.0), (1e-3, 1.0), (1.0, 1e-3), (7.0, 0.5)] {
        let (hierarchy, stack) = constant_stack(dim, n, alpha, beta, perturbation)?;
        let big_l = hierarchy.finest();
        let h = hierarchy.h(big_l);
        let e = alpha / beta * h * h;
        for l in 0..=big_l {
            let element = recursion_element_matrix(dim, beta, h, e, big_l - l).matrix;
            let expected = assemble_with(&hierarchy.grid(l), |_| element.clone()).to_dense();
            let got = stack.matrix(l).to_dense();
            worst = worst.max(got.max_abs_diff(&expected) / expected.max_abs());
        }
    }
    Ok(Check::at_most(format!("coarse-matrix-recursion-{}-n{n}", dim_tag(dim)), worst, 1e-12))
}

/// Two-level method with exact solves for `B₁₁` and `B₂₂`: distance of the
/// spectrum of the preconditioned condensed matrix from `[1 − γ², 1]`.
pub fn two_level_spectrum(dim: Dimension, n: usize) -> Result<Check> {
    let mut worst = 0.0f64;
    for (alpha, beta) in [(1.0, 1.0), (1e-4, 1.0), (1.0, 1e-4), (3.0, 2.0)] {
        let levels = 1;
        let hierarchy = MeshHierarchy::new(dim, n / 2, levels);
        let coeffs = CoefficientField::constant(hierarchy.n_elements(levels), alpha, beta);
        let stack = build_level_stack_with(&hierarchy, assemble(&hierarchy, levels, &coeffs), 0.0)?;
        let level = stack.level(1);
        let b11 = level.b11.to_dense();
        let b12 = level.b12.to_dense();
        let b22 = stack.matrix(0).to_dense();
        let (nd, nc) = (b11.n_rows(), b22.n_rows());
        let b11_inv_b12 = b11.solve_matrix(&b12)?;
        let corr = b12.transpose().matmul(&b11_inv_b12);
        let block = |i: usize, j: usize, with_corr: bool| match (i < nd, j < nd) {
            (true, true) => b11[(i, j)],
            (true, false) => b12[(i, j - nd)],
            (false, true) => b12[(j, i - nd)],
            (false, false) => b22[(i - nd, j - nd)] + if with_corr { corr[(i - nd, j - nd)] } else { 0.0 },
        };
        let b = DenseMatrix::from_fn(nd + nc, nd + nc, |i, j| block(i, j, false));
        let c = DenseMatrix::from_fn(nd + nc, nd + nc, |i, j| block(i, j, true)).symmetrized();
        let ev = dense_gen_sym_eig(&b, &c)?;
        let h = hierarchy.h(levels);
        let g2 = cbs(dim, &sequences(alpha / beta * h * h, 0), 0).c2;
        let below = (1.0 - g2) - ev[0];
        let above = ev[ev.len() - 1] - 1.0;
        worst = worst.max(below).max(above);
    }
    Ok(Check::at_most(format!("two-level-spectrum-{}-n{n}", dim_tag(dim)), worst.max(0.0), 1e-8))
}

fn random_vector(rng: &mut StdRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Smallest Rayleigh quotient `rᵀM⁻¹r / rᵀr` over random `r` and the
/// largest relative asymmetry `|⟨r₁, M⁻¹r₂⟩ − ⟨M⁻¹r₁, r₂⟩|`, over every
/// linear configuration.
pub fn preconditioner_spd(dim: Dimension, n: usize, seed: u64) -> Result<Vec<Check>> {
    let (hierarchy, stack) = constant_stack(dim, n, 1.0, 1.0, 0.0)?;
    let h = hierarchy.h(hierarchy.finest());
    let nn = stack.matrix(hierarchy.finest()).n_rows();
    let mut rng = StdRng::seed_from_u64(seed);
    let mut min_rayleigh = f64::INFINITY;
    let mut asym = 0.0f64;
    for variant in [Variant::LinearT, Variant::LinearX] {
        for form in [Form::Multiplicative, Form::Additive] {
            for cycle in [Cycle::V, Cycle::W] {
                let amli = Amli::new(&stack, AmliConfig::new(variant, form, cycle), Some(h * h))?;
                for _ in 0..100 {
                    let r = random_vector(&mut rng, nn);
                    let z = amli.apply(&r)?;
                    min_rayleigh = min_rayleigh.min(dot(&r, &z) / dot(&r, &r));
                }
                for _ in 0..5 {
                    let (r1, r2) = (random_vector(&mut rng, nn), random_vector(&mut rng, nn));
                    let (z1, z2) = (amli.apply(&r1)?, amli.apply(&r2)?);
                    let (x, y) = (dot(&r1, &z2), dot(&z1, &r2));
                    asym = asym.max((x - y).abs() / x.abs().max(y.abs()));
                }
            }
        }
    }
    let tag = dim_tag(dim);
    Ok(vec![
        Check::new(format!("preconditioner-positive-{tag}-n{n}"), min_rayleigh, Bound::Above, 0.0),
        Check::at_most(format!("preconditioner-symmetric-{tag}-n{n}"), asym, 1e-10),
    ])
}

/// `dim ker X = n_dofs − n_cells` on small grids, with the rank taken from
/// the eigenvalues of `X Xᵀ`.
pub fn kernel_dimensions() -> Vec<Check> {
    [Dimension::Two, Dimension::Three]
        .into_iter()
        .map(|dim| {
            let mut mismatch = 0usize;
            for n in 1..=3 {
                let grid = Grid::new(dim, n);
                let x = x_incidence(&grid).to_dense();
                let (ev, _) = sym_eig(&x.matmul(&x.transpose()));
                let top = ev.iter().copied().fold(0.0, f64::max);
                let rank = ev.iter().filter(|&&v| v > 1e-10 * top).count();
                let kernel = grid.n_dofs() - rank;
                mismatch += kernel.abs_diff(grid.n_dofs() - grid.n_elements());
            }
            Check::at_most(format!("kernel-dimension-{}", dim_tag(dim)), mismatch as f64, 0.0)
        })
        .collect()
}

/// Short and long forms of the Chebyshev coefficients on a `(γ², b)` grid.
pub fn polynomial_long_form() -> Check {
    let mut worst = 0.0f64;
    for i in 0..=50 {
        let g2 = 0.5 * i as f64 / 50.0;
        for j in 0..=70 {
            let b = -0.2 + 0.7 * j as f64 / 70.0;
            match (chebyshev_coeffs(g2, b), chebyshev_coeffs_long_form(g2, b)) {
                (Ok(s), Ok(l)) => worst = worst.max(relative(s.q0, l.q0)).max(relative(s.q1, l.q1)),
                _ => worst = f64::INFINITY,
            }
        }
    }
    Check::at_most("polynomial-short-vs-long-form", worst, 1e-14)
}

/// `ν = 2` inside the multiplicative optimality window at the uniform bound,
/// and the best-approximation polynomial interpolating `1/x` at its ends.
pub fn optimality_window_check() -> Check {
    let mut violations = 0usize;
    for dim in [Dimension::Two, Dimension::Three] {
        let (lo, hi) = optimality_window(dim, dim.theta(), Form::Multiplicative);
        violations += usize::from(!(lo < 2.0 && 2.0 < hi));
        let at_one = best_approx_coeffs(dim.theta()).map_or(f64::NAN, |q| q.eval(1.0));
        violations += usize::from(!((at_one - 1.0).abs() <= 1e-14));
    }
    Check::at_most("w-cycle-optimality-violations", violations as f64, 0.0)
}
