//! Outer iterations against a textbook CG and against each other.

use amli::amli::{Amli, AmliConfig, Cycle, Form, Variant};
use amli::fem::assemble;
use amli::hierarchy::build_level_stack;
use amli::krylov::{fcg, fcg_observed, pcg, pcg_observed, Identity, SolveOptions};
use amli::linalg::{direct_solve, SparseMatrix};
use amli::mesh::{CoefficientField, Dimension, MeshHierarchy};

fn problem(dim: Dimension, levels: usize) -> (MeshHierarchy, SparseMatrix, Vec<f64>) {
    let h = MeshHierarchy::new(dim, 2, levels);
    let f = CoefficientField::constant(h.n_elements(levels), 1.0, 1.0);
    let a = assemble(&h, levels, &f);
    let rhs = (0..a.n_rows()).map(|i| 1.0 + (i as f64 * 0.37).sin()).collect();
    (h, a, rhs)
}

/// Unpreconditioned CG written out in its usual `rᵀr` form.
fn textbook_cg(a: &SparseMatrix, f: &[f64], steps: usize) -> Vec<Vec<f64>> {
    let mut x = vec![0.0; f.len()];
    let mut r = f.to_vec();
    let mut p = r.clone();
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    let mut iterates = Vec::new();
    for _ in 0..steps {
        let ap = a.spmv(&p);
        let pap: f64 = p.iter().zip(&ap).map(|(x, y)| x * y).sum();
        let alpha = rr / pap;
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        iterates.push(x.clone());
        let rr_new: f64 = r.iter().map(|v| v * v).sum();
        for i in 0..p.len() {
            p[i] = r[i] + rr_new / rr * p[i];
        }
        rr = rr_new;
    }
    iterates
}

fn max_diff(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn energy_error(a: &SparseMatrix, u: &[f64], exact: &[f64]) -> f64 {
    let e: Vec<f64> = u.iter().zip(exact).map(|(x, y)| x - y).collect();
    a.bilinear(&e, &e).sqrt()
}

#[test]
fn identity_preconditioner_reproduces_textbook_cg() {
    let (_, a, f) = problem(Dimension::Two, 1);
    let mut ours = Vec::new();
    let opts = SolveOptions {
        tol: 1e-14,
        max_it: 12,
        ..SolveOptions::default()
    };
    pcg_observed(&a, &f, &Identity, opts, |_, u| ours.push(u.to_vec())).unwrap();
    let reference = textbook_cg(&a, &f, ours.len());
    let scale = reference.last().unwrap().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (k, (x, y)) in ours.iter().zip(&reference).enumerate() {
        assert!(max_diff(x, y) <= 1e-12 * scale, "iterate {k}");
    }
}

#[test]
fn energy_error_decreases_every_iteration() {
    let (h, a, f) = problem(Dimension::Two, 1);
    let exact = direct_solve(&a, &f).unwrap();
    let stack = build_level_stack(&h, a.clone()).unwrap();
    let amli = Amli::new(&stack, AmliConfig::new(Variant::LinearT, Form::Multiplicative, Cycle::W), None).unwrap();
    let mut errors = vec![energy_error(&a, &vec![0.0; f.len()], &exact)];
    let (_, rep) = pcg_observed(&a, &f, &amli, SolveOptions::default(), |_, u| {
        errors.push(energy_error(&a, u, &exact))
    })
    .unwrap();
    assert!(rep.converged);
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
}

#[test]
fn flexible_cg_reproduces_pcg_for_linear_preconditioners() {
    let (h, a, f) = problem(Dimension::Two, 3);
    let stack = build_level_stack(&h, a.clone()).unwrap();
    let amli = Amli::new(&stack, AmliConfig::new(Variant::LinearX, Form::Multiplicative, Cycle::W), None).unwrap();
    let mut reference = Vec::new();
    let (u_ref, rep) = pcg_observed(&a, &f, &amli, SolveOptions::default(), |_, u| reference.push(u.to_vec())).unwrap();
    let scale = u_ref.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for window in [1, 2, 5] {
        let mut ours = Vec::new();
        let (_, frep) =
            fcg_observed(&a, &f, &amli, SolveOptions::default(), window, |_, u| ours.push(u.to_vec())).unwrap();
        assert_eq!(frep.n_it, rep.n_it, "window {window}");
        for (x, y) in ours.iter().zip(&reference) {
            assert!(max_diff(x, y) <= 1e-10 * scale, "window {window}");
        }
    }
}

#[test]
fn orthogonalization_window_does_not_hurt() {
    let (h, a, f) = problem(Dimension::Two, 4);
    let stack = build_level_stack(&h, a.clone()).unwrap();
    let amli = Amli::new(&stack, AmliConfig::default(), None).unwrap();
    let counts: Vec<usize> = [0, 1, 2, 4]
        .iter()
        .map(|&w| fcg(&a, &f, &amli, SolveOptions::default(), w).unwrap().1.n_it)
        .collect();
    eprintln!("fcg iterations for windows 0, 1, 2, 4: {counts:?}");
    assert!(counts[1..].iter().all(|&c| c <= counts[0]));
}

#[test]
fn true_residual_rule_meets_tolerance_on_regular_problems() {
    let (h, a, f) = problem(Dimension::Three, 2);
    let stack = build_level_stack(&h, a.clone()).unwrap();
    let amli = Amli::new(&stack, AmliConfig::new(Variant::LinearT, Form::Multiplicative, Cycle::V), None).unwrap();
    let opts = SolveOptions {
        true_residual: true,
        ..SolveOptions::default()
    };
    let (_, rep) = pcg(&a, &f, &amli, opts).unwrap();
    assert!(rep.converged);
    assert!(rep.true_relative_residual <= 1e-8);
    assert!(rep.residual_norms.iter().all(|&r| r > 0.0));
    assert!(rep.epsilon() <= 1e-8);
}
