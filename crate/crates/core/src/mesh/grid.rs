use super::Dimension;

/// One uniform mesh with `n` cells per side and its DOF numbering.
///
/// 2D: horizontal edges `H(i,j)` (i < n, j ≤ n) come first, then vertical
/// edges `V(i,j)` (i ≤ n, j < n). 3D: faces normal to x, then y, then z.
/// Element-local order is (bottom, top, left, right) in 2D and
/// (x-low, x-high, y-low, y-high, z-low, z-high) in 3D.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    dim: Dimension,
    n: usize,
}

impl Grid {
    pub fn new(dim: Dimension, n: usize) -> Self {
        assert!(n >= 1);
        Self { dim, n }
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn cells_per_side(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn n_elements(&self) -> usize {
        self.n.pow(self.dim.as_usize() as u32)
    }

    pub fn n_dofs(&self) -> usize {
        let n = self.n;
        match self.dim {
            Dimension::Two => 2 * n * (n + 1),
            Dimension::Three => 3 * n * n * (n + 1),
        }
    }

    /// Cell coordinates; the third entry is 0 in 2D.
    pub fn cell_coords(&self, cell: usize) -> [usize; 3] {
        let n = self.n;
        match self.dim {
            Dimension::Two => [cell % n, cell / n, 0],
            Dimension::Three => [cell % n, (cell / n) % n, cell / (n * n)],
        }
    }

    pub fn cell_index(&self, c: &[usize; 3]) -> usize {
        let n = self.n;
        match self.dim {
            Dimension::Two => c[1] * n + c[0],
            Dimension::Three => (c[2] * n + c[1]) * n + c[0],
        }
    }

    pub fn cell_origin(&self, cell: usize) -> [f64; 3] {
        let h = self.h();
        let c = self.cell_coords(cell);
        [c[0] as f64 * h, c[1] as f64 * h, c[2] as f64 * h]
    }

    pub fn barycenter(&self, cell: usize) -> [f64; 3] {
        let o = self.cell_origin(cell);
        let half = 0.5 * self.h();
        match self.dim {
            Dimension::Two => [o[0] + half, o[1] + half, 0.0],
            Dimension::Three => [o[0] + half, o[1] + half, o[2] + half],
        }
    }

    /// 2D edge tangent to x at `(i, j)`, i < n, j ≤ n.
    pub fn h_edge(&self, i: usize, j: usize) -> usize {
        debug_assert!(self.dim == Dimension::Two && i < self.n && j <= self.n);
        j * self.n + i
    }

    /// 2D edge tangent to y at `(i, j)`, i ≤ n, j < n.
    pub fn v_edge(&self, i: usize, j: usize) -> usize {
        debug_assert!(self.dim == Dimension::Two && i <= self.n && j < self.n);
        self.n * (self.n + 1) + j * (self.n + 1) + i
    }

    /// 3D face with normal along axis `axis` at integer position `(i, j, k)`;
    /// the coordinate along `axis` ranges over `0..=n`, the others over `0..n`.
    pub fn face(&self, axis: usize, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(self.dim == Dimension::Three);
        let n = self.n;
        let block = n * n * (n + 1);
        match axis {
            0 => (k * n + j) * (n + 1) + i,
            1 => block + (k * (n + 1) + j) * n + i,
            2 => 2 * block + (k * n + j) * n + i,
            _ => panic!("axis {axis} out of range"),
        }
    }

    /// Global DOFs of `cell` in element-local order.
    pub fn element_dofs(&self, cell: usize) -> Vec<usize> {
        let [i, j, k] = self.cell_coords(cell);
        match self.dim {
            Dimension::Two => vec![
                self.h_edge(i, j),
                self.h_edge(i, j + 1),
                self.v_edge(i, j),
                self.v_edge(i + 1, j),
            ],
            Dimension::Three => vec![
                self.face(0, i, j, k),
                self.face(0, i + 1, j, k),
                self.face(1, i, j, k),
                self.face(1, i, j + 1, k),
                self.face(2, i, j, k),
                self.face(2, i, j, k + 1),
            ],
        }
    }

    /// Sign of each element-local DOF in the discrete curl / divergence.
    pub fn x_stencil(&self) -> &'static [f64] {
        match self.dim {
            Dimension::Two => &[1.0, -1.0, -1.0, 1.0],
            Dimension::Three => &[-1.0, 1.0, -1.0, 1.0, -1.0, 1.0],
        }
    }

    /// Number of elements sharing DOF faces/edges is at most 2; this lists the
    /// boundary DOFs (on ∂Ω).
    pub fn is_boundary_dof(&self, dof: usize) -> bool {
        let n = self.n;
        match self.dim {
            Dimension::Two => {
                let nh = n * (n + 1);
                if dof < nh {
                    let j = dof / n;
                    j == 0 || j == n
                } else {
                    let i = (dof - nh) % (n + 1);
                    i == 0 || i == n
                }
            }
            Dimension::Three => {
                let block = n * n * (n + 1);
                let (axis, local) = (dof / block, dof % block);
                let pos = match axis {
                    0 => local % (n + 1),
                    1 => (local / n) % (n + 1),
                    _ => local / (n * n),
                };
                pos == 0 || pos == n
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_dof_touched_by_one_or_two_elements() {
        for (dim, n) in [(Dimension::Two, 4), (Dimension::Three, 3)] {
            let g = Grid::new(dim, n);
            let mut count = vec![0; g.n_dofs()];
            for c in 0..g.n_elements() {
                for d in g.element_dofs(c) {
                    count[d] += 1;
                }
            }
            for (d, &k) in count.iter().enumerate() {
                let expected = if g.is_boundary_dof(d) { 1 } else { 2 };
                assert_eq!(k, expected, "dof {d}");
            }
        }
    }
}
