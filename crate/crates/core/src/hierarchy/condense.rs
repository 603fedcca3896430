use super::HbTransform;
use crate::error::{Error, Result};
use crate::fem::dof_elements;
use crate::linalg::{BlockDiagLu, CsrBuilder, DenseMatrix, SparseMatrix};

/// Result of eliminating the macro-element interiors from `Â`.
#[derive(Clone, Debug)]
pub struct Condensed {
    /// Factored interior block `Â_11`.
    pub a11: BlockDiagLu,
    /// Coupling `Â_12` (interior rows, remaining slots as columns).
    pub a12: SparseMatrix,
    /// Schur complement split into differences (1) and aggregates (2).
    pub b11: SparseMatrix,
    pub b12: SparseMatrix,
    pub b22: SparseMatrix,
}

/// Exact elimination of the interior unknowns:
/// `B = Â_22 − Â_21 Â_11⁻¹ Â_12`, formed macro-element by macro-element
/// since every interior block couples only to its own macro-element.
pub fn fr_condense(a_hat: &SparseMatrix, transform: &HbTransform, level: usize) -> Result<Condensed> {
    let t = transform.topology();
    let dim = t.dim();
    let n = t.n_total();
    let n_int = t.n_interior();
    let n_diff = t.n_differences();
    let ni = dim.interior_per_macro();
    let nd = dim.diffs_per_entity();
    let m = n - n_int;

    let a11 = a_hat.submatrix(0..n_int, 0..n_int);
    let a11 = BlockDiagLu::new(&a11, ni, level)?;
    let a12 = a_hat.submatrix(0..n_int, n_int..n);

    // Pattern of B: all slots of the macro-elements around each entity.
    let coarse = t.coarse();
    let (offsets, adjacent) = dof_elements(coarse);
    let entity_of = |r: usize| if r < n_diff { r / nd } else { r - n_diff };
    let mut builder = CsrBuilder::new(m);
    for r in 0..m {
        let c = entity_of(r);
        for &(g, _) in &adjacent[offsets[c]..offsets[c + 1]] {
            for e in t.macro_entities(g) {
                for d in 0..nd {
                    builder.add(t.difference_slot(e, d) - n_int, 0.0);
                }
                builder.add(t.aggregate_slot(e) - n_int, 0.0);
            }
        }
        let (cols, vals) = a_hat.row(n_int + r);
        for (&col, &v) in cols.iter().zip(vals) {
            if col >= n_int {
                builder.add(col - n_int, v);
            }
        }
        builder.finish_row();
    }
    let mut b = builder.build();

    let offs = b.row_offsets().to_vec();
    let cols = b.col_indices().to_vec();
    let values = b.values_mut();
    for g in 0..t.n_macro() {
        let slots = transform.macro_slots(g);
        let outer: Vec<usize> = slots[ni..].iter().map(|&s| s - n_int).collect();
        let mut aii = DenseMatrix::zeros(ni, ni);
        let mut ais = DenseMatrix::zeros(ni, outer.len());
        for i in 0..ni {
            let row = t.interior_slot(g, i);
            let (rc, rv) = a_hat.row(row);
            for (&c, &v) in rc.iter().zip(rv) {
                if c < n_int {
                    aii[(i, c - t.interior_slot(g, 0))] = v;
                } else {
                    let local = outer.iter().position(|&o| o == c - n_int).expect("interior couples outside its macro-element");
                    ais[(i, local)] = v;
                }
            }
        }
        let k = aii.solve_matrix(&ais).map_err(|_| Error::SingularBlock { level, block: g })?;
        let corr = ais.transpose().matmul(&k).symmetrized();
        for (li, &r) in outer.iter().enumerate() {
            let row_cols = &cols[offs[r]..offs[r + 1]];
            for (lj, &c) in outer.iter().enumerate() {
                let p = offs[r] + row_cols.binary_search(&c).expect("entry outside the pattern of B");
                values[p] -= corr[(li, lj)];
            }
        }
    }
    let b = b.with_symmetry(false).symmetrized();
    Ok(Condensed {
        a11,
        a12,
        b11: b.submatrix(0..n_diff, 0..n_diff),
        b12: b.submatrix(0..n_diff, n_diff..m),
        b22: b.submatrix(n_diff..m, n_diff..m),
    })
}

/// Blocks of the condensed macro-element matrix.
#[derive(Clone, Debug)]
pub struct LocalBlocks {
    pub b11: DenseMatrix,
    pub b12: DenseMatrix,
    pub b22: DenseMatrix,
    /// `S_G = B_22 − B_21 B_11⁻¹ B_12`.
    pub s: DenseMatrix,
}

/// Dense condensation of one macro-element matrix `Â_G` given in the
/// local `[interior | differences | aggregates]` ordering.
pub fn local_condense(a_hat_g: &DenseMatrix, n_interior: usize, n_differences: usize) -> Result<LocalBlocks> {
    let n = a_hat_g.n_rows();
    let int: Vec<usize> = (0..n_interior).collect();
    let rest: Vec<usize> = (n_interior..n).collect();
    let a11 = a_hat_g.select(&int, &int);
    let a12 = a_hat_g.select(&int, &rest);
    let b = a_hat_g
        .select(&rest, &rest)
        .sub(&a12.transpose().matmul(&a11.solve_matrix(&a12)?))
        .symmetrized();
    let m = rest.len();
    let d: Vec<usize> = (0..n_differences).collect();
    let g: Vec<usize> = (n_differences..m).collect();
    let b11 = b.select(&d, &d);
    let b12 = b.select(&d, &g);
    let b22 = b.select(&g, &g);
    let s = b22.sub(&b12.transpose().matmul(&b11.solve_matrix(&b12)?)).symmetrized();
    Ok(LocalBlocks { b11, b12, b22, s })
}
