//! Two-level hierarchical-basis splitting, exact elimination of the
//! macro-element interiors, and the resulting stack of level matrices.
//!
//! On level `ℓ` the fine unknowns are reordered and transformed into
//! `[interior | differences | aggregates]`. After eliminating the interiors
//! the aggregate block `B_22` is, up to numbering, the matrix of level
//! `ℓ−1`, so the construction recurses down to the coarsest mesh.

mod condense;
mod transform;

pub use condense::{fr_condense, local_condense, Condensed, LocalBlocks};
pub use transform::{local_transform, HbTransform};

use crate::error::Result;
use crate::linalg::{ilu0, BlockDiagLu, DirectSolver, IluFactors, SparseMatrix};
use crate::mesh::{macro_topology, MeshHierarchy};

/// Relative threshold below which condensed entries count as cancelled.
const PRUNE_TOL: f64 = 1e-13;

/// `Â = J A Jᵀ` for one level.
pub fn two_level_transform(a: &SparseMatrix, transform: &HbTransform) -> SparseMatrix {
    transform.transform_matrix(a)
}

/// Everything the preconditioner needs on one level `ℓ ≥ 1`.
#[derive(Clone, Debug)]
pub struct LevelData {
    pub level: usize,
    pub transform: HbTransform,
    /// Level matrix `A^(ℓ)` in the natural numbering.
    pub a: SparseMatrix,
    pub a11: BlockDiagLu,
    pub a12: SparseMatrix,
    pub a21: SparseMatrix,
    pub b11: SparseMatrix,
    pub b11_ilu: IluFactors,
    pub b12: SparseMatrix,
    pub b21: SparseMatrix,
}

impl LevelData {
    pub fn n(&self) -> usize {
        self.a.n_rows()
    }

    pub fn n_interior(&self) -> usize {
        self.a12.n_rows()
    }

    pub fn n_differences(&self) -> usize {
        self.b11.n_rows()
    }

    pub fn n_coarse(&self) -> usize {
        self.b12.n_cols()
    }
}

/// Builds one level from its matrix; also returns the coarse matrix `B_22`.
pub fn build_level(a: SparseMatrix, transform: HbTransform, level: usize) -> Result<(LevelData, SparseMatrix)> {
    let a_hat = two_level_transform(&a, &transform);
    let Condensed { a11, a12, b11, b12, b22 } = fr_condense(&a_hat, &transform, level)?;
    let b11 = b11.pruned(PRUNE_TOL);
    let b11_ilu = ilu0(&b11)?;
    let b12 = b12.clone();
    let data = LevelData {
        level,
        transform,
        a,
        a21: a12.transpose(),
        a11,
        a12,
        b21: b12.transpose(),
        b11,
        b11_ilu,
        b12,
    };
    Ok((data, b22.pruned(PRUNE_TOL)))
}

/// Level data for `ℓ = 1..=L` plus the coarsest matrix and its factorization.
#[derive(Clone, Debug)]
pub struct LevelStack {
    hierarchy: MeshHierarchy,
    levels: Vec<LevelData>,
    coarsest: SparseMatrix,
    coarsest_solver: DirectSolver,
}

impl LevelStack {
    pub fn hierarchy(&self) -> &MeshHierarchy {
        &self.hierarchy
    }

    pub fn finest(&self) -> usize {
        self.levels.len()
    }

    /// Data of level `ℓ ∈ 1..=L`.
    pub fn level(&self, l: usize) -> &LevelData {
        assert!(l >= 1 && l <= self.levels.len(), "no level data for level {l}");
        &self.levels[l - 1]
    }

    pub fn levels(&self) -> &[LevelData] {
        &self.levels
    }

    /// Matrix of level `ℓ ∈ 0..=L`.
    pub fn matrix(&self, l: usize) -> &SparseMatrix {
        if l == 0 {
            &self.coarsest
        } else {
            &self.level(l).a
        }
    }

    pub fn coarsest_solver(&self) -> &DirectSolver {
        &self.coarsest_solver
    }
}

/// Builds the stack from the finest matrix down to the coarsest mesh.
pub fn build_level_stack(hierarchy: &MeshHierarchy, finest: SparseMatrix) -> Result<LevelStack> {
    build_level_stack_with(hierarchy, finest, 0.0)
}

/// Same as [`build_level_stack`] with aggregate stencils scaled by
/// `1 + eps`; only meant to check that diagnostics detect a wrong transform.
pub fn build_level_stack_with(hierarchy: &MeshHierarchy, finest: SparseMatrix, eps: f64) -> Result<LevelStack> {
    let l_max = hierarchy.finest();
    assert_eq!(finest.n_rows(), hierarchy.n_dofs(l_max), "finest matrix has the wrong size");
    let mut levels = Vec::with_capacity(l_max);
    let mut a = finest;
    for l in (1..=l_max).rev() {
        let transform = HbTransform::perturbed(macro_topology(hierarchy, l), eps);
        let (data, coarse) = build_level(a, transform, l)?;
        levels.push(data);
        a = coarse;
    }
    levels.reverse();
    let coarsest_solver = DirectSolver::new(&a)?;
    Ok(LevelStack {
        hierarchy: hierarchy.clone(),
        levels,
        coarsest: a,
        coarsest_solver,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble, assemble_grid, element_matrix};
    use crate::linalg::{dense_gen_sym_eig, DenseMatrix};
    use crate::mesh::{build_hierarchy, CoefficientField, Dimension, Grid, MacroTopology};

    fn constant_stack(d: usize, n0: usize, levels: usize) -> LevelStack {
        let h = build_hierarchy(d, n0, levels);
        let f = CoefficientField::constant(h.n_elements(levels), 1.0, 1.0);
        build_level_stack(&h, assemble(&h, levels, &f)).unwrap()
    }

    #[test]
    fn stack_dimensions_2d() {
        let s = constant_stack(2, 4, 3);
        assert_eq!(s.levels().len(), 3);
        assert_eq!(s.matrix(0).n_rows(), 40);
        for l in 1..=3 {
            assert_eq!(s.level(l).n_coarse(), s.matrix(l - 1).n_rows());
        }
    }

    #[test]
    fn interior_blocks_2d_n4() {
        let s = constant_stack(2, 2, 1);
        let l = s.level(1);
        assert_eq!(l.n_interior(), 16);
        assert_eq!(l.a11.n_blocks(), 4);
        assert_eq!(l.a11.block_size(), 4);
    }

    #[test]
    fn single_macro_3d() {
        let g = Grid::new(Dimension::Three, 2);
        let a = assemble_grid(&g, &[1.0; 8], 1.0);
        let t = HbTransform::new(MacroTopology::new(g));
        let hat = two_level_transform(&a, &t);
        assert_eq!(hat.n_rows(), 36);
        let c = fr_condense(&hat, &t, 1).unwrap();
        assert_eq!((c.a11.n_blocks(), c.a11.block_size()), (1, 12));
        assert_eq!(c.b22.n_rows(), 6);
    }

    #[test]
    fn condensation_reproduces_direct_solve() {
        for (dim, n) in [(Dimension::Two, 4), (Dimension::Three, 4)] {
            let g = Grid::new(dim, n);
            let alphas: Vec<f64> = (0..g.n_elements()).map(|k| 1.0 + (k % 3) as f64).collect();
            let a = assemble_grid(&g, &alphas, 0.5);
            let t = HbTransform::new(MacroTopology::new(g));
            let hat = two_level_transform(&a, &t);
            let c = fr_condense(&hat, &t, 1).unwrap();
            let rhs: Vec<f64> = (0..t.n()).map(|i| (i as f64).cos()).collect();
            // block elimination: y1 = Â11⁻¹ r1, B x2 = r2 − Â21 y1, x1 = y1 − Â11⁻¹ Â12 x2
            let ni = c.a12.n_rows();
            let y1 = c.a11.solve(&rhs[..ni]);
            let mut r2 = rhs[ni..].to_vec();
            let t1 = c.a12.transpose().spmv(&y1);
            for (r, v) in r2.iter_mut().zip(&t1) {
                *r -= v;
            }
            let nd = c.b11.n_rows();
            let mut b = DenseMatrix::zeros(r2.len(), r2.len());
            let (d11, d12, d22) = (c.b11.to_dense(), c.b12.to_dense(), c.b22.to_dense());
            for i in 0..r2.len() {
                for j in 0..r2.len() {
                    b[(i, j)] = match (i < nd, j < nd) {
                        (true, true) => d11[(i, j)],
                        (true, false) => d12[(i, j - nd)],
                        (false, true) => d12[(j, i - nd)],
                        (false, false) => d22[(i - nd, j - nd)],
                    };
                }
            }
            let x2 = b.lu().unwrap().solve(&r2);
            let mut x1 = y1.clone();
            let corr = c.a11.solve(&c.a12.spmv(&x2));
            for (x, v) in x1.iter_mut().zip(&corr) {
                *x -= v;
            }
            let direct = hat.to_dense().lu().unwrap().solve(&rhs);
            let x: Vec<f64> = x1.into_iter().chain(x2).collect();
            let err = x.iter().zip(&direct).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let scale = direct.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(err <= 1e-10 * scale, "{dim}: {err}");
        }
    }

    #[test]
    fn local_spectrum_has_unit_eigenvalues() {
        for dim in [Dimension::Two, Dimension::Three] {
            let g = Grid::new(dim, 2);
            let a = crate::fem::assemble_with(&g, |_| element_matrix(dim, 1.0, 1.0, 1.0).matrix);
            let t = HbTransform::new(MacroTopology::new(g));
            let slots = t.macro_slots(0);
            let hat = two_level_transform(&a, &t).to_dense().select(&slots, &slots);
            let nd = dim.element_dofs() * dim.diffs_per_entity();
            let blocks = local_condense(&hat, dim.interior_per_macro(), nd).unwrap();
            let ev = dense_gen_sym_eig(&blocks.s, &blocks.b22).unwrap();
            assert!((ev[ev.len() - 1] - 1.0).abs() < 1e-12);
            assert!(ev[0] > 0.0 && ev[0] < 1.0);
        }
    }
}
