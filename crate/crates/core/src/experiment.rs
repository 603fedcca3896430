//! One solve per configuration: assemble, build the level stack, iterate,
//! and report iteration counts, reduction factors and discretization errors.

use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::amli::{Amli, AmliConfig, Variant};
use crate::error::{Error, Result};
use crate::fem::{assemble, assemble_rhs, relative_x_error, ManufacturedProblem, Source};
use crate::hierarchy::build_level_stack;
use crate::krylov::{fcg, pcg, SolveOptions, SolveReport, DEFAULT_FCG_WINDOW};
use crate::mesh::{CoefficientField, CoefficientPattern, Dimension, MeshHierarchy};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExperimentCase {
    pub dim: Dimension,
    pub coarsest: usize,
    pub levels: usize,
    pub alpha: f64,
    pub beta: f64,
    pub pattern: CoefficientPattern,
    pub kappa: f64,
    pub amli: AmliConfig,
    pub rhs: Source,
    pub options: SolveOptions,
    pub fcg_window: usize,
}

impl ExperimentCase {
    /// Constant unit coefficients with the manufactured source.
    pub fn new(dim: Dimension, levels: usize, amli: AmliConfig) -> Self {
        Self {
            dim,
            coarsest: dim.default_coarsest(),
            levels,
            alpha: 1.0,
            beta: 1.0,
            pattern: CoefficientPattern::Constant,
            kappa: 1.0,
            amli,
            rhs: Source::Manufactured,
            options: SolveOptions::default(),
            fcg_window: DEFAULT_FCG_WINDOW,
        }
    }

    /// Number of refinements giving `1/h = inv_h`, if it is reachable.
    pub fn levels_for(dim: Dimension, coarsest: usize, inv_h: usize) -> Result<usize> {
        let mut n = coarsest;
        let mut levels = 0;
        while n < inv_h {
            n *= 2;
            levels += 1;
        }
        if n != inv_h || levels == 0 {
            return Err(Error::InvalidConfig(format!(
                "1/h = {inv_h} is not {coarsest}·2^L with L ≥ 1 in dimension {dim}"
            )));
        }
        Ok(levels)
    }

    pub fn inv_h(&self) -> usize {
        self.coarsest << self.levels
    }

    pub fn hierarchy(&self) -> MeshHierarchy {
        MeshHierarchy::new(self.dim, self.coarsest, self.levels)
    }

    pub fn coefficients(&self, hierarchy: &MeshHierarchy) -> Result<CoefficientField> {
        CoefficientField::new(hierarchy, self.pattern, self.alpha, self.beta, self.kappa)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRow {
    pub case: ExperimentCase,
    pub report: SolveReport,
    /// Relative error of `X u_h`; only for the manufactured source.
    pub err_x: Option<f64>,
    /// Setup plus solve.
    pub seconds: f64,
}

impl ExperimentRow {
    pub fn n_it(&self) -> usize {
        self.report.n_it
    }

    pub fn rho(&self) -> f64 {
        self.report.rho()
    }
}

/// Runs a single case. Non-convergence is reported in the row, not as error.
pub fn run_case(case: &ExperimentCase) -> Result<ExperimentRow> {
    #[cfg(not(target_arch = "wasm32"))]
    let start = std::time::Instant::now();
    let hierarchy = case.hierarchy();
    let coeffs = case.coefficients(&hierarchy)?;
    let finest = hierarchy.finest();
    let a = assemble(&hierarchy, finest, &coeffs);
    let grid = hierarchy.grid(finest);
    let f = assemble_rhs(&grid, case.rhs, &coeffs)?;
    let stack = build_level_stack(&hierarchy, a)?;
    let finest_e = coeffs.is_constant().then(|| {
        let h = hierarchy.h(finest);
        coeffs.alpha(0) / coeffs.beta() * h * h
    });
    let amli = Amli::new(&stack, case.amli, finest_e)?;
    let a = stack.matrix(finest);
    let (u, report) = match case.amli.variant {
        Variant::Nonlinear => fcg(a, &f, &amli, case.options, case.fcg_window)?,
        Variant::LinearT | Variant::LinearX => pcg(a, &f, &amli, case.options)?,
    };
    let err_x = (case.rhs == Source::Manufactured)
        .then(|| relative_x_error(&grid, &u, &ManufacturedProblem::new(case.dim)));
    #[cfg(not(target_arch = "wasm32"))]
    let seconds = start.elapsed().as_secs_f64();
    #[cfg(target_arch = "wasm32")]
    let seconds = report.seconds;
    Ok(ExperimentRow {
        case: *case,
        report,
        err_x,
        seconds,
    })
}

/// Runs independent cases on up to `threads` workers, each with its own
/// stack; results come back in input order.
pub fn run_cases(cases: &[ExperimentCase], threads: usize) -> Vec<Result<ExperimentRow>> {
    let threads = threads.clamp(1, cases.len().max(1));
    if threads == 1 || cfg!(target_arch = "wasm32") {
        return cases.iter().map(run_case).collect();
    }
    let next = AtomicUsize::new(0);
    let mut done: Vec<(usize, Result<ExperimentRow>)> = std::thread::scope(|scope| {
        let workers: Vec<_> = (0..threads)
            .map(|_| {
                scope.spawn(|| {
                    let mut out = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        let Some(case) = cases.get(i) else { break };
                        out.push((i, run_case(case)));
                    }
                    out
                })
            })
            .collect();
        workers
            .into_iter()
            .flat_map(|w| w.join().expect("experiment worker panicked"))
            .collect()
    });
    done.sort_by_key(|(i, _)| *i);
    done.into_iter().map(|(_, row)| row).collect()
}

/// Worker count matching the available cores.
pub fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

pub const CSV_HEADER: &str = "dim,inv_h,alpha,beta,pattern,kappa,variant,form,cycle,n_it,rho,err_x,seconds";

/// CSV with an optional `# `-prefixed comment line naming the table.
pub fn rows_csv(rows: &[ExperimentRow], comment: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(c) = comment {
        let _ = writeln!(out, "# {c}");
    }
    let _ = writeln!(out, "{CSV_HEADER}");
    for r in rows {
        let c = &r.case;
        let err = r.err_x.map(|e| format!("{e:.8e}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{:e},{:e},{},{:e},{},{},{},{},{:.6},{},{:.3}",
            c.dim,
            c.inv_h(),
            c.alpha,
            c.beta,
            c.pattern,
            c.kappa,
            c.amli.variant,
            c.amli.form,
            c.amli.cycle,
            r.n_it(),
            r.rho(),
            err,
            r.seconds
        );
    }
    out
}

/// Aligned Markdown table; rows that did not converge are marked with `*`.
pub fn rows_markdown(rows: &[ExperimentRow], comment: Option<&str>) -> String {
    let header: Vec<&str> = CSV_HEADER.split(',').collect();
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let c = &r.case;
            let n_it = if r.report.converged {
                r.n_it().to_string()
            } else {
                format!("{}*", r.n_it())
            };
            vec![
                c.dim.to_string(),
                c.inv_h().to_string(),
                format!("{:e}", c.alpha),
                format!("{:e}", c.beta),
                c.pattern.to_string(),
                format!("{:e}", c.kappa),
                c.amli.variant.to_string(),
                c.amli.form.to_string(),
                c.amli.cycle.to_string(),
                n_it,
                format!("{:.3}", r.rho()),
                r.err_x.map(|e| format!("{e:.8}")).unwrap_or_else(|| "-".into()),
                format!("{:.2}", r.seconds),
            ]
        })
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|j| body.iter().map(|row| row[j].len()).chain([header[j].len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, &w)| format!("{c:>w$}")).collect();
        format!("| {} |\n", padded.join(" | "))
    };
    let mut out = String::new();
    if let Some(c) = comment {
        let _ = writeln!(out, "<!-- {c} -->");
    }
    out.push_str(&line(&header.iter().map(|h| h.to_string()).collect::<Vec<_>>()));
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w.max(3))).collect();
    out.push_str(&format!("|-{}-|\n", rule.join("-|-")));
    for row in &body {
        out.push_str(&line(row));
    }
    out
}
