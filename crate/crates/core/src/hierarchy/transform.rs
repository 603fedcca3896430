use crate::linalg::{CsrBuilder, DenseMatrix, SparseMatrix};
use crate::mesh::{Dimension, MacroTopology};

/// Difference rows on one macro-edge (2D).
const DIFF_2D: [f64; 2] = [1.0, -1.0];
/// Difference rows on one macro-face (3D), row-major 3×4.
const DIFF_3D: [f64; 12] = [
    1.0, -1.0, 1.0, -1.0, //
    1.0, 1.0, -1.0, -1.0, //
    1.0, -1.0, -1.0, 1.0,
];

fn diff_rows(dim: Dimension) -> &'static [f64] {
    match dim {
        Dimension::Two => &DIFF_2D,
        Dimension::Three => &DIFF_3D,
    }
}

/// Per-entity scale of the difference and aggregate rows (`1/2` or `1/4`).
fn entity_scale(dim: Dimension) -> f64 {
    1.0 / dim.fine_per_entity() as f64
}

/// Two-level hierarchical basis transformation `J` of one level.
///
/// `J` is the identity on macro-element interiors. On each macro-edge
/// (2D) / macro-face (3D) it maps the fine basis functions to scaled
/// differences and one scaled aggregate. `J` is never stored; it is applied
/// through the per-entity stencils, each entity owned by exactly one stencil.
#[derive(Clone, Debug)]
pub struct HbTransform {
    topology: MacroTopology,
    diff_scale: f64,
    agg_scale: f64,
    /// Fine DOF → `slot` for interior DOFs, `n_interior + c·k + q` for
    /// position `q` on entity `c`.
    location: Vec<usize>,
}

impl HbTransform {
    pub fn new(topology: MacroTopology) -> Self {
        Self::perturbed(topology, 0.0)
    }

    /// Transform whose aggregate rows are scaled by `1 + eps` (diagnostics).
    pub fn perturbed(topology: MacroTopology, eps: f64) -> Self {
        let dim = topology.dim();
        let k = dim.fine_per_entity();
        let n_int = topology.n_interior();
        let mut location = vec![usize::MAX; topology.n_total()];
        for (slot, &f) in topology.interior().iter().enumerate() {
            location[f] = slot;
        }
        for c in 0..topology.n_aggregates() {
            for (q, &f) in topology.entity(c).iter().enumerate() {
                location[f] = n_int + c * k + q;
            }
        }
        let s = entity_scale(dim);
        Self {
            topology,
            diff_scale: s,
            agg_scale: s * (1.0 + eps),
            location,
        }
    }

    pub fn topology(&self) -> &MacroTopology {
        &self.topology
    }

    pub fn dim(&self) -> Dimension {
        self.topology.dim()
    }

    pub fn n(&self) -> usize {
        self.topology.n_total()
    }

    /// Row `slot` of `J` as `(fine DOF, weight)` pairs.
    pub fn row(&self, slot: usize) -> Vec<(usize, f64)> {
        let t = &self.topology;
        let dim = self.dim();
        let (n_int, n_diff) = (t.n_interior(), t.n_differences());
        if slot < n_int {
            return vec![(t.interior()[slot], 1.0)];
        }
        let k = dim.fine_per_entity();
        if slot < n_int + n_diff {
            let r = slot - n_int;
            let (c, d) = (r / dim.diffs_per_entity(), r % dim.diffs_per_entity());
            let rows = diff_rows(dim);
            t.entity(c)
                .iter()
                .enumerate()
                .map(|(q, &f)| (f, rows[d * k + q] * self.diff_scale))
                .collect()
        } else {
            let c = slot - n_int - n_diff;
            t.entity(c).iter().map(|&f| (f, self.agg_scale)).collect()
        }
    }

    /// Column `fine` of `J` as `(slot, weight)` pairs.
    pub fn column(&self, fine: usize) -> Vec<(usize, f64)> {
        let mut out = Vec::with_capacity(4);
        self.for_column(fine, |slot, w| out.push((slot, w)));
        out
    }

    fn for_column(&self, fine: usize, mut f: impl FnMut(usize, f64)) {
        let t = &self.topology;
        let dim = self.dim();
        let n_int = t.n_interior();
        let loc = self.location[fine];
        if loc < n_int {
            f(loc, 1.0);
            return;
        }
        let k = dim.fine_per_entity();
        let (c, q) = ((loc - n_int) / k, (loc - n_int) % k);
        let rows = diff_rows(dim);
        for d in 0..dim.diffs_per_entity() {
            f(t.difference_slot(c, d), rows[d * k + q] * self.diff_scale);
        }
        f(t.aggregate_slot(c), self.agg_scale);
    }

    /// `out = J r` (maps a fine residual to hierarchical ordering).
    pub fn apply_into(&self, r: &[f64], out: &mut [f64]) {
        let t = &self.topology;
        assert!(r.len() == self.n() && out.len() == self.n(), "J: wrong vector length");
        let dim = self.dim();
        let k = dim.fine_per_entity();
        let rows = diff_rows(dim);
        for (slot, &f) in t.interior().iter().enumerate() {
            out[slot] = r[f];
        }
        for c in 0..t.n_aggregates() {
            let fs = t.entity(c);
            for d in 0..dim.diffs_per_entity() {
                let s: f64 = (0..k).map(|q| rows[d * k + q] * r[fs[q]]).sum();
                out[t.difference_slot(c, d)] = self.diff_scale * s;
            }
            out[t.aggregate_slot(c)] = self.agg_scale * fs.iter().map(|&f| r[f]).sum::<f64>();
        }
    }

    /// `out = Jᵀ z` (maps hierarchical coefficients back to the fine basis).
    pub fn apply_transpose_into(&self, z: &[f64], out: &mut [f64]) {
        let t = &self.topology;
        assert!(z.len() == self.n() && out.len() == self.n(), "Jᵀ: wrong vector length");
        let dim = self.dim();
        let k = dim.fine_per_entity();
        let rows = diff_rows(dim);
        for (slot, &f) in t.interior().iter().enumerate() {
            out[f] = z[slot];
        }
        for c in 0..t.n_aggregates() {
            let agg = self.agg_scale * z[t.aggregate_slot(c)];
            for (q, &f) in t.entity(c).iter().enumerate() {
                let mut v = agg;
                for d in 0..dim.diffs_per_entity() {
                    v += self.diff_scale * rows[d * k + q] * z[t.difference_slot(c, d)];
                }
                out[f] = v;
            }
        }
    }

    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        self.apply_into(r, &mut out);
        out
    }

    pub fn apply_transpose(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        self.apply_transpose_into(z, &mut out);
        out
    }

    /// `J⁻ᵀ x`: hierarchical coefficients of a fine coefficient vector.
    ///
    /// On each entity the stencil rows are orthogonal with squared norm
    /// `1/s` after scaling by `s`, so `J⁻ᵀ = J / s` there (unperturbed `J`).
    pub fn apply_inverse_transpose(&self, x: &[f64]) -> Vec<f64> {
        let t = &self.topology;
        let inv = 1.0 / entity_scale(self.dim());
        let mut out = self.apply(x);
        for v in &mut out[t.n_interior()..] {
            *v *= inv;
        }
        out
    }

    /// `Â = J A Jᵀ` in the `[interior | differences | aggregates]` ordering.
    pub fn transform_matrix(&self, a: &SparseMatrix) -> SparseMatrix {
        let n = self.n();
        assert!(a.n_rows() == n && a.n_cols() == n, "matrix does not live on this level");
        let mut builder = CsrBuilder::new(n);
        for slot in 0..n {
            for (f, wf) in self.row(slot) {
                let (cols, vals) = a.row(f);
                for (&g, &v) in cols.iter().zip(vals) {
                    let s = wf * v;
                    self.for_column(g, |j, wj| builder.add(j, s * wj));
                }
            }
            builder.finish_row();
        }
        builder.build().symmetrized()
    }

    /// Fine DOFs of macro-element `g` in local order: interior, then the
    /// fine DOFs of each macro-edge / face in coarse element order.
    pub fn macro_fine_dofs(&self, g: usize) -> Vec<usize> {
        let t = &self.topology;
        let mut dofs = t.interior_of(g).to_vec();
        for c in t.macro_entities(g) {
            dofs.extend_from_slice(t.entity(c));
        }
        dofs
    }

    /// Slots of macro-element `g` in local order: interior, differences of
    /// each entity, aggregates of each entity.
    pub fn macro_slots(&self, g: usize) -> Vec<usize> {
        let t = &self.topology;
        let dim = self.dim();
        let entities = t.macro_entities(g);
        let mut slots: Vec<usize> = (0..dim.interior_per_macro()).map(|k| t.interior_slot(g, k)).collect();
        for &c in &entities {
            slots.extend((0..dim.diffs_per_entity()).map(|d| t.difference_slot(c, d)));
        }
        slots.extend(entities.iter().map(|&c| t.aggregate_slot(c)));
        slots
    }
}

/// Dense macro-element transformation `J_G` (12×12 in 2D, 36×36 in 3D) in
/// the local ordering of [`HbTransform::macro_fine_dofs`] (columns) and
/// [`HbTransform::macro_slots`] (rows).
pub fn local_transform(dim: Dimension) -> DenseMatrix {
    let ni = dim.interior_per_macro();
    let k = dim.fine_per_entity();
    let nd = dim.diffs_per_entity();
    let ne = dim.element_dofs();
    let n = ni + ne * k;
    let s = entity_scale(dim);
    let rows = diff_rows(dim);
    let mut j = DenseMatrix::zeros(n, n);
    for i in 0..ni {
        j[(i, i)] = 1.0;
    }
    for e in 0..ne {
        for d in 0..nd {
            for q in 0..k {
                j[(ni + e * nd + d, ni + e * k + q)] = s * rows[d * k + q];
            }
        }
        for q in 0..k {
            j[(ni + ne * nd + e, ni + e * k + q)] = s;
        }
    }
    j
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assemble_grid;
    use crate::mesh::Grid;

    fn transform(dim: Dimension, n: usize) -> HbTransform {
        HbTransform::new(MacroTopology::new(Grid::new(dim, n)))
    }

    #[test]
    fn literal_2d_rows() {
        let j = local_transform(Dimension::Two);
        let mut row5 = vec![0.0; 12];
        row5[4] = 0.5;
        row5[5] = -0.5;
        assert_eq!(j.row(4), row5.as_slice());
        let mut row9 = vec![0.0; 12];
        row9[4] = 0.5;
        row9[5] = 0.5;
        assert_eq!(j.row(8), row9.as_slice());
    }

    #[test]
    fn literal_3d_aggregate_row() {
        let j = local_transform(Dimension::Three);
        let row = j.row(12 + 18);
        for (c, &v) in row.iter().enumerate() {
            let expected = if (12..16).contains(&c) { 0.25 } else { 0.0 };
            assert_eq!(v, expected);
        }
    }

    #[test]
    fn local_transform_is_invertible() {
        for dim in [Dimension::Two, Dimension::Three] {
            assert!(local_transform(dim).lu().is_ok());
        }
    }

    #[test]
    fn single_macro_matches_local_transform() {
        for dim in [Dimension::Two, Dimension::Three] {
            let t = transform(dim, 2);
            let fine = t.macro_fine_dofs(0);
            let slots = t.macro_slots(0);
            let j = local_transform(dim);
            for (r, &slot) in slots.iter().enumerate() {
                let mut dense = vec![0.0; t.n()];
                for (f, w) in t.row(slot) {
                    dense[f] = w;
                }
                for (c, &f) in fine.iter().enumerate() {
                    assert_eq!(dense[f], j[(r, c)]);
                }
            }
        }
    }

    #[test]
    fn apply_and_transpose_are_adjoint() {
        for (dim, n) in [(Dimension::Two, 4), (Dimension::Three, 4)] {
            let t = transform(dim, n);
            let x: Vec<f64> = (0..t.n()).map(|i| ((i * 37 % 11) as f64) - 5.0).collect();
            let y: Vec<f64> = (0..t.n()).map(|i| ((i * 17 % 7) as f64) * 0.5).collect();
            let jx = t.apply(&x);
            let jty = t.apply_transpose(&y);
            let lhs: f64 = jx.iter().zip(&y).map(|(a, b)| a * b).sum();
            let rhs: f64 = x.iter().zip(&jty).map(|(a, b)| a * b).sum();
            assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn inverse_transpose_round_trip() {
        for (dim, n) in [(Dimension::Two, 8), (Dimension::Three, 4)] {
            let t = transform(dim, n);
            let z: Vec<f64> = (0..t.n()).map(|i| (i as f64 * 0.37).sin()).collect();
            let back = t.apply_inverse_transpose(&t.apply_transpose(&z));
            assert!(back.iter().zip(&z).all(|(a, b)| (a - b).abs() < 1e-12));
        }
    }

    #[test]
    fn transformed_matrix_matches_dense_product() {
        for (dim, n) in [(Dimension::Two, 4), (Dimension::Three, 2)] {
            let g = Grid::new(dim, n);
            let a = assemble_grid(&g, &vec![1.0; g.n_elements()], 1.0);
            let t = transform(dim, n);
            let mut j = DenseMatrix::zeros(t.n(), t.n());
            for slot in 0..t.n() {
                for (f, w) in t.row(slot) {
                    j[(slot, f)] = w;
                }
            }
            let dense = j.matmul(&a.to_dense()).matmul(&j.transpose());
            let hat = t.transform_matrix(&a);
            assert!(hat.to_dense().max_abs_diff(&dense) < 1e-13);
            assert!(hat.is_symmetric());
        }
    }
}
