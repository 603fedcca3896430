//! Algebraic multilevel iteration: the block-triangular solves on one level,
//! the linear cycle stabilized by a polynomial, and the nonlinear cycle with
//! inner flexible-CG steps on the coarse levels.

mod coeffs;

pub use coeffs::{best_approx_coeffs, chebyshev_coeffs, chebyshev_coeffs_long_form, PolyCoeffs};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::hierarchy::{LevelData, LevelStack};
use crate::linalg::{axpy, dot};
use crate::mesh::Dimension;
use crate::theory::{cbs, sequences};

/// Linear cycle with a Chebyshev or best-approximation polynomial, or the
/// parameter-free nonlinear cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    LinearT,
    LinearX,
    Nonlinear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Form {
    Multiplicative,
    Additive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cycle {
    V,
    W,
}

/// Where the CBS constant for the polynomial coefficients comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GammaMode {
    /// The uniform bound `Θ` of the dimension.
    Bound,
    /// The per-level value for constant coefficients.
    Level,
}

macro_rules! string_enum {
    ($ty:ty, $what:literal, [$($variant:path => $name:literal $(| $alias:literal)*),+ $(,)?]) => {
        impl $ty {
            pub fn name(self) -> &'static str {
                match self {
                    $($variant => $name,)+
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.to_ascii_lowercase().as_str() {
                    $($name $(| $alias)* => Ok($variant),)+
                    other => Err(Error::InvalidConfig(format!(concat!("unknown ", $what, " `{}`"), other))),
                }
            }
        }
    };
}

string_enum!(Variant, "variant", [
    Variant::LinearT => "linear-t" | "t" | "linear_t",
    Variant::LinearX => "linear-x" | "x" | "linear_x",
    Variant::Nonlinear => "nonlinear" | "n",
]);
string_enum!(Form, "form", [
    Form::Multiplicative => "mult" | "multiplicative",
    Form::Additive => "add" | "additive",
]);
string_enum!(Cycle, "cycle", [Cycle::V => "v", Cycle::W => "w"]);
string_enum!(GammaMode, "gamma mode", [GammaMode::Bound => "bound", GammaMode::Level => "level"]);

impl Cycle {
    /// Polynomial degree + 1, or number of inner iterations.
    pub fn nu(self) -> usize {
        match self {
            Self::V => 1,
            Self::W => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmliConfig {
    pub variant: Variant,
    pub form: Form,
    pub cycle: Cycle,
    pub gamma: GammaMode,
    /// Shift `b` of the Chebyshev polynomial.
    pub b: f64,
}

impl Default for AmliConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Nonlinear,
            form: Form::Multiplicative,
            cycle: Cycle::W,
            gamma: GammaMode::Bound,
            b: 0.0,
        }
    }
}

impl AmliConfig {
    pub fn new(variant: Variant, form: Form, cycle: Cycle) -> Self {
        Self {
            variant,
            form,
            cycle,
            ..Self::default()
        }
    }

    pub fn additive(&self) -> bool {
        self.form == Form::Additive
    }

    /// Polynomial used on the coarse levels for a given `γ²`.
    pub fn poly_coeffs(&self, gamma2: f64) -> Result<PolyCoeffs> {
        if gamma2 >= 1.0 || gamma2 < 0.0 {
            return Err(Error::InvalidConfig(format!("γ² = {gamma2} outside [0, 1)")));
        }
        match (self.cycle, self.variant) {
            (Cycle::V, _) | (_, Variant::Nonlinear) => Ok(PolyCoeffs::V_CYCLE),
            (Cycle::W, Variant::LinearT) => chebyshev_coeffs(gamma2, self.b),
            (Cycle::W, Variant::LinearX) => best_approx_coeffs(gamma2),
        }
    }

    /// Whether `ν` lies in the window that keeps the cycle of optimal order.
    pub fn optimality_holds(&self, dim: Dimension, gamma2: f64) -> bool {
        let (lower, upper) = optimality_window(dim, gamma2, self.form);
        let nu = self.cycle.nu() as f64;
        lower < nu && nu < upper
    }
}

/// Open interval of admissible `ν`: lower end from the CBS constant, upper
/// end from the coarsening factor `τ` (4 in 2D, 8 in 3D).
pub fn optimality_window(dim: Dimension, gamma2: f64, form: Form) -> (f64, f64) {
    let tau = dim.children_per_cell() as f64;
    let lower = match form {
        Form::Multiplicative => 1.0 / (1.0 - gamma2).sqrt(),
        Form::Additive => {
            let g = gamma2.sqrt();
            ((1.0 + g) / (1.0 - g)).sqrt()
        }
    };
    (lower, tau)
}

/// Outputs of the lower block-triangular solve.
#[derive(Clone, Debug, PartialEq)]
pub struct LowerSolve {
    pub y1: Vec<f64>,
    pub t1: Vec<f64>,
    pub wc: Vec<f64>,
}

/// Forward sweep on one level; `r` is already in hierarchical ordering.
pub fn solve_lower(level: &LevelData, r: &[f64], additive: bool) -> LowerSolve {
    let ni = level.n_interior();
    let nd = level.n_differences();
    let (r1, r2) = r.split_at(ni);
    let y1 = level.a11.solve(r1);
    let mut w = r2.to_vec();
    let a21y = level.a21.spmv(&y1);
    axpy(-1.0, &a21y, &mut w);
    let t1 = level.b11_ilu.solve(&w[..nd]);
    let mut wc = w[nd..].to_vec();
    if !additive {
        let b21t = level.b21.spmv(&t1);
        axpy(-1.0, &b21t, &mut wc);
    }
    LowerSolve { y1, t1, wc }
}

/// Backward sweep on one level, returning `z` in hierarchical ordering.
pub fn solve_upper(level: &LevelData, v2: &[f64], t1: &[f64], y1: &[f64], additive: bool) -> Vec<f64> {
    let mut v1 = t1.to_vec();
    if !additive {
        let c = level.b11_ilu.solve(&level.b12.spmv(v2));
        axpy(-1.0, &c, &mut v1);
    }
    let z2: Vec<f64> = v1.into_iter().chain(v2.iter().copied()).collect();
    let mut z = y1.to_vec();
    let c = level.a11.solve(&level.a12.spmv(&z2));
    axpy(-1.0, &c, &mut z);
    z.extend(z2);
    z
}

/// `Â x = J A Jᵀ x` without forming `Â`.
pub fn apply_hat(level: &LevelData, x: &[f64]) -> Vec<f64> {
    let y = level.transform.apply_transpose(x);
    level.transform.apply(&level.a.spmv(&y))
}

/// The multilevel preconditioner over a level stack.
#[derive(Clone, Debug)]
pub struct Amli<'a> {
    stack: &'a LevelStack,
    config: AmliConfig,
    /// Polynomial of the coarse correction on each level, index `ℓ`.
    coeffs: Vec<PolyCoeffs>,
}

impl<'a> Amli<'a> {
    /// `finest_e = κ h²` on the finest mesh is required for
    /// [`GammaMode::Level`] and ignored otherwise.
    pub fn new(stack: &'a LevelStack, config: AmliConfig, finest_e: Option<f64>) -> Result<Self> {
        let dim = stack.hierarchy().dim();
        let big_l = stack.finest();
        let gammas: Vec<f64> = match config.gamma {
            GammaMode::Bound => vec![dim.theta(); big_l + 1],
            GammaMode::Level => {
                let e = finest_e.ok_or_else(|| {
                    Error::InvalidConfig("level-resolved γ needs constant coefficients".into())
                })?;
                let state = sequences(e, big_l + 1);
                // the polynomial on level ℓ smooths the preconditioner of
                // level ℓ−1, whose splitting sits L−ℓ+1 steps above the finest
                (0..=big_l).map(|l| cbs(dim, &state, big_l + 1 - l.min(big_l)).c2).collect()
            }
        };
        let coeffs = gammas.iter().map(|&g2| config.poly_coeffs(g2)).collect::<Result<_>>()?;
        Ok(Self { stack, config, coeffs })
    }

    pub fn config(&self) -> &AmliConfig {
        &self.config
    }

    pub fn stack(&self) -> &LevelStack {
        self.stack
    }

    /// Polynomial used on level `ℓ < L`.
    pub fn coeffs(&self, level: usize) -> PolyCoeffs {
        self.coeffs[level]
    }

    /// `z = M⁻¹ r` on the finest level.
    pub fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        let l = self.stack.finest();
        match self.config.variant {
            Variant::Nonlinear => self.namli(r, l),
            _ => Ok(self.lamli(r, l)),
        }
    }

    fn additive(&self) -> bool {
        self.config.additive()
    }

    fn lamli(&self, r: &[f64], l: usize) -> Vec<f64> {
        let level = self.stack.level(l);
        let rh = level.transform.apply(r);
        let LowerSolve { y1, t1, wc } = solve_lower(level, &rh, self.additive());
        let v2 = if l == self.stack.finest() {
            self.lamli_coarse(&wc, l)
        } else {
            let nu = self.config.cycle.nu();
            let q = self.coeffs[l];
            let b22 = self.stack.matrix(l - 1);
            let mut rc: Vec<f64> = wc.iter().map(|w| q.coeff(nu - 1) * w).collect();
            let mut v2 = self.lamli_coarse(&rc, l);
            for sigma in 2..=nu {
                rc = b22.spmv(&v2);
                axpy(q.coeff(nu - sigma), &wc, &mut rc);
                v2 = self.lamli_coarse(&rc, l);
            }
            v2
        };
        let z = solve_upper(level, &v2, &t1, &y1, self.additive());
        level.transform.apply_transpose(&z)
    }

    fn lamli_coarse(&self, rc: &[f64], l: usize) -> Vec<f64> {
        if l == 1 {
            self.stack.coarsest_solver().solve(rc)
        } else {
            self.lamli(rc, l - 1)
        }
    }

    fn namli_coarse(&self, rc: &[f64], l: usize) -> Result<Vec<f64>> {
        if l == 1 {
            Ok(self.stack.coarsest_solver().solve(rc))
        } else {
            self.namli(rc, l - 1)
        }
    }

    fn namli(&self, r: &[f64], l: usize) -> Result<Vec<f64>> {
        let level = self.stack.level(l);
        let additive = self.additive();
        let mut r = level.transform.apply(r);
        let mut z = vec![0.0; r.len()];
        let LowerSolve { y1, t1, wc } = solve_lower(level, &r, additive);
        let v2 = self.namli_coarse(&wc, l)?;
        let p1 = solve_upper(level, &v2, &t1, &y1, additive);
        if l == self.stack.finest() {
            axpy(1.0, &p1, &mut z);
        } else {
            let mut ps: Vec<Vec<f64>> = Vec::with_capacity(self.config.cycle.nu());
            let mut qs: Vec<Vec<f64>> = Vec::with_capacity(self.config.cycle.nu());
            let mut taus: Vec<f64> = Vec::with_capacity(self.config.cycle.nu());
            let mut p = p1;
            for sigma in 1..=self.config.cycle.nu() {
                if sigma > 1 {
                    let LowerSolve { y1, t1, wc } = solve_lower(level, &r, additive);
                    let v2 = self.namli_coarse(&wc, l)?;
                    p = solve_upper(level, &v2, &t1, &y1, additive);
                    let mut s = vec![0.0; p.len()];
                    for ((pj, qj), tau) in ps.iter().zip(&qs).zip(&taus) {
                        axpy(-dot(&p, qj) / tau, pj, &mut s);
                    }
                    axpy(1.0, &s, &mut p);
                }
                let q = apply_hat(level, &p);
                let tau = dot(&p, &q);
                if tau == 0.0 && p.iter().all(|&x| x == 0.0) {
                    // residual already annihilated
                    break;
                }
                if !(tau > 0.0) {
                    return Err(Error::NonPositiveCurvature { level: l, tau });
                }
                let alpha = dot(&r, &p) / tau;
                axpy(alpha, &p, &mut z);
                axpy(-alpha, &q, &mut r);
                ps.push(std::mem::take(&mut p));
                qs.push(q);
                taus.push(tau);
            }
        }
        Ok(level.transform.apply_transpose(&z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assemble;
    use crate::hierarchy::build_level_stack;
    use crate::mesh::{CoefficientField, MeshHierarchy};

    fn stack(dim: Dimension, n0: usize, levels: usize) -> LevelStack {
        let h = MeshHierarchy::new(dim, n0, levels);
        let f = CoefficientField::constant(h.n_elements(levels), 1.0, 1.0);
        build_level_stack(&h, assemble(&h, levels, &f)).unwrap()
    }

    fn ramp(n: usize) -> Vec<f64> {
        (0..n).map(|i| ((i * 7 + 3) % 11) as f64 - 5.0).collect()
    }

    #[test]
    fn zero_residual_gives_zero_sweeps() {
        let s = stack(Dimension::Two, 2, 2);
        let level = s.level(2);
        let n = level.n();
        for additive in [false, true] {
            let lo = solve_lower(level, &vec![0.0; n], additive);
            assert!(lo.y1.iter().chain(&lo.t1).chain(&lo.wc).all(|&x| x == 0.0));
            let z = solve_upper(level, &vec![0.0; level.n_coarse()], &lo.t1, &lo.y1, additive);
            assert!(z.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn forms_differ_only_in_coarse_residual() {
        let s = stack(Dimension::Three, 2, 1);
        let level = s.level(1);
        let r = ramp(level.n());
        let m = solve_lower(level, &r, false);
        let a = solve_lower(level, &r, true);
        assert_eq!(m.y1, a.y1);
        assert_eq!(m.t1, a.t1);
        // w_c(mult) = w_c(add) − B₂₁ t₁
        let b21t = level.b21.spmv(&m.t1);
        for ((wm, wa), c) in m.wc.iter().zip(&a.wc).zip(&b21t) {
            assert!((wm - (wa - c)).abs() <= 1e-13 * wa.abs().max(1.0));
        }
    }

    #[test]
    fn w_cycle_inside_window_at_uniform_bound() {
        let cfg = AmliConfig::new(Variant::LinearT, Form::Multiplicative, Cycle::W);
        assert!(cfg.optimality_holds(Dimension::Two, 3.0 / 8.0));
        assert!(cfg.optimality_holds(Dimension::Three, 0.5));
        let (lo, hi) = optimality_window(Dimension::Two, 3.0 / 8.0, Form::Multiplicative);
        assert!((lo - 1.2649).abs() < 1e-4 && hi == 4.0);
        let v = AmliConfig::new(Variant::LinearT, Form::Multiplicative, Cycle::V);
        assert!(!v.optimality_holds(Dimension::Two, 3.0 / 8.0));
    }

    #[test]
    fn names_round_trip() {
        for v in ["linear-t", "linear-x", "nonlinear"] {
            assert_eq!(v.parse::<Variant>().unwrap().to_string(), v);
        }
        assert_eq!("add".parse::<Form>().unwrap(), Form::Additive);
        assert_eq!("w".parse::<Cycle>().unwrap().nu(), 2);
        assert!("x".parse::<Cycle>().is_err());
    }

    #[test]
    fn level_gamma_needs_constant_coefficients() {
        let s = stack(Dimension::Two, 2, 2);
        let cfg = AmliConfig {
            gamma: GammaMode::Level,
            ..AmliConfig::new(Variant::LinearT, Form::Multiplicative, Cycle::W)
        };
        assert!(Amli::new(&s, cfg, None).is_err());
        let amli = Amli::new(&s, cfg, Some(1.0 / 64.0)).unwrap();
        // level-resolved constants are below the uniform bound
        let bound = chebyshev_coeffs(3.0 / 8.0, 0.0).unwrap();
        assert!(amli.coeffs(1).q0 < bound.q0);
    }
}
