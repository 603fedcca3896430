use super::{Dimension, Grid, MeshHierarchy};

/// Macro-element structure between a fine level and its parent level.
///
/// Each coarse cell is a macro-element made of `2^d` fine cells. Fine DOFs
/// split into macro-element interiors (4 per macro in 2D, 12 in 3D) and
/// macro-edge / macro-face groups (2 resp. 4 fine DOFs per coarse DOF).
///
/// The hierarchical ordering used by the two-level transform is
/// `[interior | differences | aggregates]`: interior slots grouped by
/// macro-element, then the differences of every coarse DOF, then one
/// aggregate per coarse DOF in the coarse grid's own numbering.
#[derive(Clone, Debug)]
pub struct MacroTopology {
    fine: Grid,
    coarse: Grid,
    interior: Vec<usize>,
    entities: Vec<usize>,
}

/// Lexicographic 2×2 order used inside a macro-face.
const QUAD: [(usize, usize); 4] = [(0, 0), (1, 0), (0, 1), (1, 1)];

impl MacroTopology {
    pub fn new(fine: Grid) -> Self {
        let n = fine.cells_per_side();
        assert!(n % 2 == 0, "fine mesh must have an even number of cells per side");
        let dim = fine.dim();
        let coarse = Grid::new(dim, n / 2);
        let m = coarse.cells_per_side();
        let mut interior = Vec::with_capacity(coarse.n_elements() * dim.interior_per_macro());
        for g in 0..coarse.n_elements() {
            let [ci, cj, ck] = coarse.cell_coords(g);
            let (i, j, k) = (2 * ci, 2 * cj, 2 * ck);
            match dim {
                Dimension::Two => {
                    interior.extend([
                        fine.h_edge(i, j + 1),
                        fine.h_edge(i + 1, j + 1),
                        fine.v_edge(i + 1, j),
                        fine.v_edge(i + 1, j + 1),
                    ]);
                }
                Dimension::Three => {
                    for &(a, b) in &QUAD {
                        interior.push(fine.face(0, i + 1, j + a, k + b));
                    }
                    for &(a, b) in &QUAD {
                        interior.push(fine.face(1, i + a, j + 1, k + b));
                    }
                    for &(a, b) in &QUAD {
                        interior.push(fine.face(2, i + a, j + b, k + 1));
                    }
                }
            }
        }
        let mut entities = vec![usize::MAX; coarse.n_dofs() * dim.fine_per_entity()];
        match dim {
            Dimension::Two => {
                for cj in 0..=m {
                    for ci in 0..m {
                        let c = coarse.h_edge(ci, cj);
                        entities[2 * c] = fine.h_edge(2 * ci, 2 * cj);
                        entities[2 * c + 1] = fine.h_edge(2 * ci + 1, 2 * cj);
                    }
                }
                for cj in 0..m {
                    for ci in 0..=m {
                        let c = coarse.v_edge(ci, cj);
                        entities[2 * c] = fine.v_edge(2 * ci, 2 * cj);
                        entities[2 * c + 1] = fine.v_edge(2 * ci, 2 * cj + 1);
                    }
                }
            }
            Dimension::Three => {
                for axis in 0..3 {
                    let ext = |a: usize| if a == axis { m + 1 } else { m };
                    for ck in 0..ext(2) {
                        for cj in 0..ext(1) {
                            for ci in 0..ext(0) {
                                let c = coarse.face(axis, ci, cj, ck);
                                for (q, &(a, b)) in QUAD.iter().enumerate() {
                                    let f = match axis {
                                        0 => fine.face(0, 2 * ci, 2 * cj + a, 2 * ck + b),
                                        1 => fine.face(1, 2 * ci + a, 2 * cj, 2 * ck + b),
                                        _ => fine.face(2, 2 * ci + a, 2 * cj + b, 2 * ck),
                                    };
                                    entities[4 * c + q] = f;
                                }
                            }
                        }
                    }
                }
            }
        }
        debug_assert!(entities.iter().all(|&f| f != usize::MAX));
        Self {
            fine,
            coarse,
            interior,
            entities,
        }
    }

    pub fn dim(&self) -> Dimension {
        self.fine.dim()
    }

    pub fn fine(&self) -> &Grid {
        &self.fine
    }

    pub fn coarse(&self) -> &Grid {
        &self.coarse
    }

    pub fn n_macro(&self) -> usize {
        self.coarse.n_elements()
    }

    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    pub fn n_differences(&self) -> usize {
        self.coarse.n_dofs() * self.dim().diffs_per_entity()
    }

    pub fn n_aggregates(&self) -> usize {
        self.coarse.n_dofs()
    }

    pub fn n_total(&self) -> usize {
        self.fine.n_dofs()
    }

    /// Fine DOFs interior to macro-element `g`.
    pub fn interior_of(&self, g: usize) -> &[usize] {
        let k = self.dim().interior_per_macro();
        &self.interior[g * k..(g + 1) * k]
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    /// Fine DOFs on the macro-edge / macro-face of coarse DOF `c`.
    pub fn entity(&self, c: usize) -> &[usize] {
        let k = self.dim().fine_per_entity();
        &self.entities[c * k..(c + 1) * k]
    }

    pub fn interior_slot(&self, g: usize, k: usize) -> usize {
        g * self.dim().interior_per_macro() + k
    }

    pub fn difference_slot(&self, c: usize, k: usize) -> usize {
        self.n_interior() + c * self.dim().diffs_per_entity() + k
    }

    pub fn aggregate_slot(&self, c: usize) -> usize {
        self.n_interior() + self.n_differences() + c
    }

    /// Coarse DOFs (macro-edges / faces) of macro-element `g`, element order.
    pub fn macro_entities(&self, g: usize) -> Vec<usize> {
        self.coarse.element_dofs(g)
    }
}

/// Topology between `level` and `level - 1` of the hierarchy.
pub fn macro_topology(hierarchy: &MeshHierarchy, level: usize) -> MacroTopology {
    assert!(level >= 1, "macro topology needs a level ≥ 1");
    MacroTopology::new(hierarchy.grid(level))
}
