//! Outer Krylov iterations: preconditioned CG for fixed linear
//! preconditioners and flexible CG for preconditioners that change from one
//! call to the next.

use std::collections::VecDeque;

use crate::amli::Amli;
use crate::error::Result;
use crate::linalg::{axpy, dot, norm2, SparseMatrix};

/// Default relative residual reduction.
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_IT: usize = 500;
/// Directions kept for re-orthogonalization in [`fcg`].
pub const DEFAULT_FCG_WINDOW: usize = 2;

/// Action `z = M⁻¹ r`.
pub trait Preconditioner {
    fn apply(&self, r: &[f64]) -> Result<Vec<f64>>;
}

/// `M = I`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Identity;

impl Preconditioner for Identity {
    fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        Ok(r.to_vec())
    }
}

impl<F: Fn(&[f64]) -> Vec<f64>> Preconditioner for F {
    fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        Ok(self(r))
    }
}

impl Preconditioner for Amli<'_> {
    fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        Amli::apply(self, r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_it: usize,
    /// Stop on `‖f − A u_k‖` recomputed every iteration instead of the
    /// updated residual. For nearly singular `A` (tiny `α/β` or `h`) the true
    /// residual stalls near `ε_mach·‖A‖·‖u‖/‖f‖`, which can exceed `tol`.
    pub true_residual: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_it: DEFAULT_MAX_IT,
            true_residual: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub n_it: usize,
    /// Residual norms for `k = 0..=n_it`, as seen by the stopping rule.
    pub residual_norms: Vec<f64>,
    /// `‖f − A u‖ / ‖f‖` of the returned iterate.
    pub true_relative_residual: f64,
    pub converged: bool,
    pub seconds: f64,
}

impl SolveReport {
    /// `ε = ‖r_n‖ / ‖r_0‖`.
    pub fn epsilon(&self) -> f64 {
        match (self.residual_norms.first(), self.residual_norms.last()) {
            (Some(&r0), Some(&rn)) if r0 > 0.0 => rn / r0,
            _ => 0.0,
        }
    }

    pub fn rho(&self) -> f64 {
        reduction_factor(self)
    }
}

/// Average reduction per iteration `ε^(1/n_it)`; 0 when nothing was iterated.
pub fn reduction_factor(report: &SolveReport) -> f64 {
    if report.n_it == 0 {
        return 0.0;
    }
    report.epsilon().powf(1.0 / report.n_it as f64)
}

struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Stopwatch {
    fn start() -> Self {
        Self {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    fn seconds(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.start.elapsed().as_secs_f64()
        }
        #[cfg(target_arch = "wasm32")]
        {
            0.0
        }
    }
}

/// Residual bookkeeping shared by both iterations.
struct Monitor<'a> {
    a: &'a SparseMatrix,
    f: &'a [f64],
    options: SolveOptions,
    scratch: Vec<f64>,
    history: Vec<f64>,
    clock: Stopwatch,
}

impl<'a> Monitor<'a> {
    fn new(a: &'a SparseMatrix, f: &'a [f64], options: SolveOptions) -> Self {
        Self {
            a,
            f,
            options,
            scratch: vec![0.0; f.len()],
            history: vec![norm2(f)],
            clock: Stopwatch::start(),
        }
    }

    fn r0(&self) -> f64 {
        self.history[0]
    }

    fn true_residual(&mut self, u: &[f64]) -> f64 {
        self.a.spmv_into(u, &mut self.scratch);
        self.scratch.iter().zip(self.f).map(|(au, fi)| (fi - au) * (fi - au)).sum::<f64>().sqrt()
    }

    /// Records the residual after one iteration; true once `tol` is met.
    fn converged(&mut self, u: &[f64], r: &[f64]) -> bool {
        let res = if self.options.true_residual {
            self.true_residual(u)
        } else {
            norm2(r)
        };
        self.history.push(res);
        res <= self.options.tol * self.r0()
    }

    fn finish(mut self, u: Vec<f64>, converged: bool) -> (Vec<f64>, SolveReport) {
        let r0 = self.r0();
        let true_res = self.true_residual(&u);
        let report = SolveReport {
            n_it: self.history.len() - 1,
            true_relative_residual: if r0 > 0.0 { true_res / r0 } else { 0.0 },
            residual_norms: self.history,
            converged,
            seconds: self.clock.seconds(),
        };
        (u, report)
    }
}

/// Preconditioned conjugate gradients from a zero initial guess.
pub fn pcg(
    a: &SparseMatrix,
    f: &[f64],
    m: &impl Preconditioner,
    options: SolveOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    pcg_observed(a, f, m, options, |_, _| {})
}

/// [`pcg`] calling `observe(k, u_k)` after every iteration.
pub fn pcg_observed(
    a: &SparseMatrix,
    f: &[f64],
    m: &impl Preconditioner,
    options: SolveOptions,
    mut observe: impl FnMut(usize, &[f64]),
) -> Result<(Vec<f64>, SolveReport)> {
    let n = f.len();
    let mut monitor = Monitor::new(a, f, options);
    let mut u = vec![0.0; n];
    if monitor.r0() == 0.0 {
        return Ok(monitor.finish(u, true));
    }
    let mut r = f.to_vec();
    let mut z = m.apply(&r)?;
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for k in 1..=options.max_it {
        a.spmv_into(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        axpy(alpha, &p, &mut u);
        axpy(-alpha, &ap, &mut r);
        observe(k, &u);
        if monitor.converged(&u, &r) {
            return Ok(monitor.finish(u, true));
        }
        z = m.apply(&r)?;
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Ok(monitor.finish(u, false))
}

/// Flexible CG: each new direction is A-orthogonalized against the last
/// `window` directions, so the preconditioner may vary between calls.
pub fn fcg(
    a: &SparseMatrix,
    f: &[f64],
    m: &impl Preconditioner,
    options: SolveOptions,
    window: usize,
) -> Result<(Vec<f64>, SolveReport)> {
    fcg_observed(a, f, m, options, window, |_, _| {})
}

/// [`fcg`] calling `observe(k, u_k)` after every iteration.
pub fn fcg_observed(
    a: &SparseMatrix,
    f: &[f64],
    m: &impl Preconditioner,
    options: SolveOptions,
    window: usize,
    mut observe: impl FnMut(usize, &[f64]),
) -> Result<(Vec<f64>, SolveReport)> {
    let n = f.len();
    let mut monitor = Monitor::new(a, f, options);
    let mut u = vec![0.0; n];
    if monitor.r0() == 0.0 {
        return Ok(monitor.finish(u, true));
    }
    let mut r = f.to_vec();
    // (p_j, A p_j, p_jᵀ A p_j) of the most recent directions
    let mut kept: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(window + 1);
    for k in 1..=options.max_it {
        let z = m.apply(&r)?;
        let mut p = z.clone();
        for (pj, apj, dj) in &kept {
            axpy(-dot(&z, apj) / dj, pj, &mut p);
        }
        let ap = a.spmv(&p);
        let d = dot(&p, &ap);
        let alpha = dot(&r, &p) / d;
        axpy(alpha, &p, &mut u);
        axpy(-alpha, &ap, &mut r);
        observe(k, &u);
        if monitor.converged(&u, &r) {
            return Ok(monitor.finish(u, true));
        }
        if window > 0 {
            if kept.len() == window {
                kept.pop_front();
            }
            kept.push_back((p, ap, d));
        }
    }
    Ok(monitor.finish(u, false))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(eps: f64, n_it: usize) -> SolveReport {
        SolveReport {
            n_it,
            residual_norms: vec![1.0, eps],
            true_relative_residual: eps,
            converged: true,
            seconds: 0.0,
        }
    }

    #[test]
    fn reduction_factor_examples() {
        assert!((reduction_factor(&report(1e-8, 8)) - 0.1).abs() < 1e-15);
        assert!((reduction_factor(&report(1e-8, 7)) - 0.0720).abs() < 5e-5);
        assert_eq!(reduction_factor(&report(1.0, 0)), 0.0);
    }

    #[test]
    fn identity_system_converges_in_one_step() {
        let a = SparseMatrix::identity(5);
        let f = [1.0, -2.0, 3.0, 0.5, 4.0];
        let (u, rep) = pcg(&a, &f, &Identity, SolveOptions::default()).unwrap();
        assert_eq!(rep.n_it, 1);
        assert!(rep.converged);
        assert!(u.iter().zip(&f).all(|(x, y)| (x - y).abs() < 1e-15));
        let (_, rep) = fcg(&a, &f, &Identity, SolveOptions::default(), 2).unwrap();
        assert_eq!(rep.n_it, 1);
    }

    #[test]
    fn zero_rhs_is_pre_converged() {
        let a = SparseMatrix::identity(3);
        let (u, rep) = pcg(&a, &[0.0; 3], &Identity, SolveOptions::default()).unwrap();
        assert_eq!((rep.n_it, rep.converged), (0, true));
        assert_eq!(u, vec![0.0; 3]);
        assert_eq!(rep.rho(), 0.0);
    }

    #[test]
    fn max_it_reports_non_convergence() {
        let a = SparseMatrix::from_dense(&crate::linalg::DenseMatrix::from_fn(6, 6, |i, j| {
            if i == j {
                (i + 1) as f64
            } else {
                0.0
            }
        }));
        let opts = SolveOptions {
            max_it: 2,
            ..SolveOptions::default()
        };
        let (_, rep) = pcg(&a, &[1.0; 6], &Identity, opts).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.n_it, 2);
        assert_eq!(rep.residual_norms.len(), 3);
    }
}
