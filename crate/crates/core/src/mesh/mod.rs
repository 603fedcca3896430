//! Uniform structured meshes of the unit square / cube and their refinement
//! hierarchy.
//!
//! Degrees of freedom are edge moments (2D, tangential component along +x or
//! +y) and face fluxes (3D, normal component along +x, +y or +z). With this
//! uniform orientation every element matrix is identical on a uniform mesh.

mod coefficients;
mod grid;
mod topology;

pub use coefficients::{coefficient_field, CoefficientField, CoefficientPattern};
pub use grid::Grid;
pub use topology::{macro_topology, MacroTopology};

use std::fmt;

/// Spatial dimension, which also fixes the element family: edge elements
/// for the 2D curl problem, face elements for the 3D div problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Dimension {
    Two,
    Three,
}

impl Dimension {
    pub fn from_usize(d: usize) -> Option<Self> {
        match d {
            2 => Some(Self::Two),
            3 => Some(Self::Three),
            _ => None,
        }
    }

    pub fn as_usize(self) -> usize {
        match self {
            Self::Two => 2,
            Self::Three => 3,
        }
    }

    /// DOFs of one element (4 edges / 6 faces).
    pub fn element_dofs(self) -> usize {
        match self {
            Self::Two => 4,
            Self::Three => 6,
        }
    }

    /// Interior fine DOFs of one macro-element.
    pub fn interior_per_macro(self) -> usize {
        match self {
            Self::Two => 4,
            Self::Three => 12,
        }
    }

    /// Fine DOFs on one macro-edge / macro-face.
    pub fn fine_per_entity(self) -> usize {
        match self {
            Self::Two => 2,
            Self::Three => 4,
        }
    }

    /// Difference functions generated per macro-edge / macro-face.
    pub fn diffs_per_entity(self) -> usize {
        self.fine_per_entity() - 1
    }

    /// Children of one cell under uniform refinement.
    pub fn children_per_cell(self) -> usize {
        1 << self.as_usize()
    }

    /// Uniform upper bound for the squared CBS constant.
    pub fn theta(self) -> f64 {
        match self {
            Self::Two => 3.0 / 8.0,
            Self::Three => 0.5,
        }
    }

    /// Default coarsest mesh (cells per side).
    pub fn default_coarsest(self) -> usize {
        match self {
            Self::Two => 4,
            Self::Three => 2,
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_usize())
    }
}

/// Nested sequence of uniform meshes: level 0 has `coarsest` cells per side,
/// level `ℓ` has `coarsest · 2^ℓ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeshHierarchy {
    dim: Dimension,
    coarsest: usize,
    levels: usize,
}

impl MeshHierarchy {
    pub fn new(dim: Dimension, coarsest: usize, levels: usize) -> Self {
        assert!(coarsest >= 2, "coarsest mesh needs at least 2 cells per side");
        assert!(levels >= 1, "hierarchy needs at least one refinement");
        assert!(coarsest.checked_shl(levels as u32).is_some() && levels < 40, "too many levels");
        Self { dim, coarsest, levels }
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn coarsest(&self) -> usize {
        self.coarsest
    }

    /// Number of refinements `L`; the finest level index.
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn finest(&self) -> usize {
        self.levels
    }

    pub fn cells_per_side(&self, level: usize) -> usize {
        assert!(level <= self.levels, "level {level} beyond finest {}", self.levels);
        self.coarsest << level
    }

    pub fn h(&self, level: usize) -> f64 {
        1.0 / self.cells_per_side(level) as f64
    }

    pub fn grid(&self, level: usize) -> Grid {
        Grid::new(self.dim, self.cells_per_side(level))
    }

    pub fn n_dofs(&self, level: usize) -> usize {
        self.grid(level).n_dofs()
    }

    pub fn n_elements(&self, level: usize) -> usize {
        self.grid(level).n_elements()
    }

    /// Coarse cell containing fine cell `cell` of `level` (level ≥ 1).
    pub fn parent(&self, level: usize, cell: usize) -> usize {
        assert!(level >= 1);
        let fine = self.grid(level);
        let coarse = self.grid(level - 1);
        let idx = fine.cell_coords(cell);
        coarse.cell_index(&idx.map(|c| c / 2))
    }

    /// Fine cells of `level + 1` covering `cell` of `level`.
    pub fn children(&self, level: usize, cell: usize) -> Vec<usize> {
        let coarse = self.grid(level);
        let fine = self.grid(level + 1);
        let base = coarse.cell_coords(cell).map(|c| 2 * c);
        let d = self.dim.as_usize();
        (0..self.dim.children_per_cell())
            .map(|bits| {
                let mut idx = base;
                for (a, v) in idx.iter_mut().enumerate().take(d) {
                    *v += (bits >> a) & 1;
                }
                fine.cell_index(&idx)
            })
            .collect()
    }
}

/// Builds the hierarchy for dimension `d ∈ {2,3}`.
pub fn build_hierarchy(d: usize, coarsest: usize, levels: usize) -> MeshHierarchy {
    let dim = Dimension::from_usize(d).expect("dimension must be 2 or 3");
    MeshHierarchy::new(dim, coarsest, levels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finest_dof_counts() {
        let h2 = build_hierarchy(2, 4, 9);
        assert_eq!(h2.cells_per_side(9), 2048);
        assert_eq!(h2.n_dofs(9), 8_392_704);
        let h3 = build_hierarchy(3, 2, 6);
        assert_eq!(h3.cells_per_side(6), 128);
        assert_eq!(h3.n_dofs(6), 6_340_608);
    }

    #[test]
    fn one_level_2d() {
        let h = build_hierarchy(2, 4, 1);
        assert_eq!(h.n_dofs(0), 40);
        assert_eq!(h.n_dofs(1), 144);
    }

    #[test]
    fn dof_ratio_tends_to_coarsening_factor() {
        let h2 = build_hierarchy(2, 4, 9);
        let r2 = h2.n_dofs(9) as f64 / h2.n_dofs(8) as f64;
        assert!((r2 - 4.0).abs() < 0.01);
        let h3 = build_hierarchy(3, 2, 6);
        let r3 = h3.n_dofs(6) as f64 / h3.n_dofs(5) as f64;
        assert!((r3 - 8.0).abs() < 0.1);
    }

    #[test]
    fn parent_child_roundtrip() {
        for d in [2, 3] {
            let h = build_hierarchy(d, 2, 2);
            for cell in 0..h.n_elements(1) {
                for child in h.children(1, cell) {
                    assert_eq!(h.parent(2, child), cell);
                }
            }
        }
    }
}
