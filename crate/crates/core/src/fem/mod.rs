//! Element matrices and global assembly for the curl (2D edge element) and
//! div (3D face element) model problems, plus manufactured data.
//!
//! On a cell of width `h` the element matrix is
//! `α·L_K + β·X_K` with `L_K` the local mass matrix and `X_K = s sᵀ / h^d`
//! the rank-one curl / div part (`s` is the signed incidence stencil of
//! [`Grid::x_stencil`]).

mod manufactured;

pub use manufactured::{
    assemble_rhs, interpolate, relative_x_error, x_error_norm, ManufacturedProblem, Source, ERROR_QUADRATURE_POINTS,
};

use crate::linalg::{CsrBuilder, DenseMatrix, SparseMatrix};
use crate::mesh::{CoefficientField, Dimension, Grid, MeshHierarchy};

/// Dense element matrix together with the data it was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct ElementMatrix {
    pub matrix: DenseMatrix,
    pub alpha: f64,
    pub beta: f64,
    pub h: f64,
}

/// Integer mass stencil: `[[2,1],[1,2]]` on each pair of opposite DOFs.
fn mass_stencil(dim: Dimension) -> DenseMatrix {
    let n = dim.element_dofs();
    DenseMatrix::from_fn(n, n, |i, j| {
        if i == j {
            2.0
        } else if i / 2 == j / 2 {
            1.0
        } else {
            0.0
        }
    })
}

fn x_stencil(dim: Dimension) -> DenseMatrix {
    let s = Grid::new(dim, 1).x_stencil();
    DenseMatrix::from_fn(s.len(), s.len(), |i, j| s[i] * s[j])
}

/// Local mass matrix `L_K` (without `α`).
pub fn mass_matrix(dim: Dimension, h: f64) -> DenseMatrix {
    match dim {
        Dimension::Two => mass_stencil(dim).scaled(1.0 / 6.0),
        Dimension::Three => mass_stencil(dim).scaled(1.0 / (6.0 * h)),
    }
}

/// Local curl / div matrix `C_K` resp. `D_K` (without `β`).
pub fn x_matrix(dim: Dimension, h: f64) -> DenseMatrix {
    x_stencil(dim).scaled(1.0 / h.powi(dim.as_usize() as i32))
}

pub fn element_matrix(dim: Dimension, alpha: f64, beta: f64, h: f64) -> ElementMatrix {
    assert!(alpha > 0.0 && beta > 0.0 && h > 0.0, "element data must be positive");
    let matrix = mass_matrix(dim, h).scaled(alpha).add(&x_matrix(dim, h).scaled(beta));
    ElementMatrix { matrix, alpha, beta, h }
}

/// 4×4 edge-element matrix for `α(u,v) + β(curl u, curl v)`.
pub fn element_matrix_curl(alpha: f64, beta: f64, h: f64) -> ElementMatrix {
    element_matrix(Dimension::Two, alpha, beta, h)
}

/// 6×6 face-element matrix for `α(u,v) + β(div u, div v)`.
pub fn element_matrix_div(alpha: f64, beta: f64, h: f64) -> ElementMatrix {
    element_matrix(Dimension::Three, alpha, beta, h)
}

/// Elements touching each DOF (at most two), as a CSR-like list.
pub(crate) fn dof_elements(grid: &Grid) -> (Vec<usize>, Vec<(usize, usize)>) {
    let n_dofs = grid.n_dofs();
    let mut count = vec![0usize; n_dofs + 1];
    for cell in 0..grid.n_elements() {
        for d in grid.element_dofs(cell) {
            count[d + 1] += 1;
        }
    }
    for i in 0..n_dofs {
        count[i + 1] += count[i];
    }
    let mut fill = count.clone();
    let mut entries = vec![(0, 0); count[n_dofs]];
    for cell in 0..grid.n_elements() {
        for (local, d) in grid.element_dofs(cell).into_iter().enumerate() {
            entries[fill[d]] = (cell, local);
            fill[d] += 1;
        }
    }
    (count, entries)
}

/// Assembles `Σ_K R_Kᵀ local(K) R_K` row by row.
pub fn assemble_with(grid: &Grid, local: impl Fn(usize) -> DenseMatrix) -> SparseMatrix {
    let (offsets, entries) = dof_elements(grid);
    let mut builder = CsrBuilder::new(grid.n_dofs());
    for row in 0..grid.n_dofs() {
        for &(cell, i) in &entries[offsets[row]..offsets[row + 1]] {
            let a = local(cell);
            for (j, col) in grid.element_dofs(cell).into_iter().enumerate() {
                builder.add(col, a[(i, j)]);
            }
        }
        builder.finish_row();
    }
    builder.build().with_symmetry(true)
}

/// Discrete curl / div operator: one row per cell holding the signed
/// incidence stencil, so `ker` is the discrete gradient / curl image.
pub fn x_incidence(grid: &Grid) -> SparseMatrix {
    let s = grid.x_stencil();
    let triplets: Vec<(usize, usize, f64)> = (0..grid.n_elements())
        .flat_map(|cell| grid.element_dofs(cell).into_iter().zip(s).map(move |(d, &v)| (cell, d, v)))
        .collect();
    SparseMatrix::from_triplets(grid.n_elements(), grid.n_dofs(), &triplets)
}

/// Global matrix on a grid with per-element `α_K` and global `β`.
pub fn assemble_grid(grid: &Grid, alphas: &[f64], beta: f64) -> SparseMatrix {
    assert_eq!(alphas.len(), grid.n_elements(), "one α per element");
    let dim = grid.dim();
    let l = mass_matrix(dim, grid.h());
    let x = x_matrix(dim, grid.h()).scaled(beta);
    assemble_with(grid, |cell| l.scaled(alphas[cell]).add(&x))
}

/// Global matrix on `level` of the hierarchy; `coefficients` must live on
/// that level's elements.
pub fn assemble(hierarchy: &MeshHierarchy, level: usize, coefficients: &CoefficientField) -> SparseMatrix {
    let grid = hierarchy.grid(level);
    assert_eq!(
        coefficients.n_elements(),
        grid.n_elements(),
        "coefficient field does not match level {level}"
    );
    assemble_grid(&grid, coefficients.alphas(), coefficients.beta())
}
