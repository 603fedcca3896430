use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mesh::{CoefficientField, Dimension, Grid};

/// Three-point Gauss rule on `[0, 1]`.
const GAUSS_X: [f64; 3] = [0.112_701_665_379_258_3, 0.5, 0.887_298_334_620_741_7];
const GAUSS_W: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
/// Two-point Gauss rule on `[0, 1]`, used for the error norm.
const GAUSS2_X: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];
const GAUSS2_W: [f64; 2] = [0.5, 0.5];

/// Points per direction of the tensor rule in [`x_error_norm`].
pub const ERROR_QUADRATURE_POINTS: usize = 2;

/// Smooth solution with `X u = 0` on the boundary.
///
/// 2D: `u = (π sin πx cos πy, −π cos πx sin πy)`, `curl u = 2π² sin πx sin πy`.
/// 3D: `u = ∇(sin πx sin πy sin πz)`, `div u = −3π² sin πx sin πy sin πz`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ManufacturedProblem {
    pub dim: Dimension,
}

impl ManufacturedProblem {
    pub fn new(dim: Dimension) -> Self {
        Self { dim }
    }

    pub fn u(&self, p: [f64; 3]) -> [f64; 3] {
        let [x, y, z] = p.map(|c| PI * c);
        match self.dim {
            Dimension::Two => [PI * x.sin() * y.cos(), -PI * x.cos() * y.sin(), 0.0],
            Dimension::Three => [
                PI * x.cos() * y.sin() * z.sin(),
                PI * x.sin() * y.cos() * z.sin(),
                PI * x.sin() * y.sin() * z.cos(),
            ],
        }
    }

    /// `curl u` (2D) or `div u` (3D).
    pub fn xu(&self, p: [f64; 3]) -> f64 {
        let [x, y, z] = p.map(|c| PI * c);
        match self.dim {
            Dimension::Two => 2.0 * PI * PI * x.sin() * y.sin(),
            Dimension::Three => -3.0 * PI * PI * x.sin() * y.sin() * z.sin(),
        }
    }

    /// Exact `‖X u‖_{L²(Ω)}`: `π²` in 2D, `3π²/(2√2)` in 3D.
    pub fn x_norm(&self) -> f64 {
        match self.dim {
            Dimension::Two => PI * PI,
            Dimension::Three => 3.0 * PI * PI / 8f64.sqrt(),
        }
    }

    /// Strong right-hand side `f = α u + β Xᵃ X u`; here `Xᵃ X u = d π² u`.
    pub fn f(&self, p: [f64; 3], alpha: f64, beta: f64) -> [f64; 3] {
        let d = self.dim.as_usize() as f64;
        let s = alpha + d * beta * PI * PI;
        self.u(p).map(|c| s * c)
    }
}

/// Right-hand side choice.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    /// The algebraic all-ones vector.
    Ones,
    /// Load vector of the smooth manufactured solution.
    Manufactured,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Ones => "ones",
            Self::Manufactured => "manufactured",
        })
    }
}

impl FromStr for Source {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ones" => Ok(Self::Ones),
            "manufactured" | "manufactured2d" | "manufactured3d" => Ok(Self::Manufactured),
            other => Err(Error::InvalidConfig(format!("unknown right-hand side `{other}`"))),
        }
    }
}

fn gauss_rule(points: usize) -> (&'static [f64], &'static [f64]) {
    match points {
        2 => (&GAUSS2_X, &GAUSS2_W),
        3 => (&GAUSS_X, &GAUSS_W),
        _ => panic!("no {points}-point rule"),
    }
}

/// Quadrature points (global coordinates), local points and weights of one
/// cell for a tensor Gauss rule with `points` nodes per direction.
fn cell_quadrature(grid: &Grid, cell: usize, points: usize) -> Vec<([f64; 3], [f64; 3], f64)> {
    let (gx, gw) = gauss_rule(points);
    let o = grid.cell_origin(cell);
    let h = grid.h();
    let d = grid.dim().as_usize();
    let vol = h.powi(d as i32);
    let mut pts = Vec::with_capacity(27);
    let nz = if d == 3 { points } else { 1 };
    for c in 0..nz {
        for b in 0..points {
            for a in 0..points {
                let local = [gx[a], gx[b], if d == 3 { gx[c] } else { 0.0 }];
                let w = gw[a] * gw[b] * if d == 3 { gw[c] } else { 1.0 };
                let global = [o[0] + h * local[0], o[1] + h * local[1], o[2] + h * local[2]];
                pts.push((global, local, w * vol));
            }
        }
    }
    pts
}

/// Values of the element basis functions at local point `ξ`.
fn basis(dim: Dimension, h: f64, xi: [f64; 3]) -> Vec<[f64; 3]> {
    let [x, y, z] = xi;
    match dim {
        Dimension::Two => vec![
            [(1.0 - y) / h, 0.0, 0.0],
            [y / h, 0.0, 0.0],
            [0.0, (1.0 - x) / h, 0.0],
            [0.0, x / h, 0.0],
        ],
        Dimension::Three => {
            let s = 1.0 / (h * h);
            vec![
                [(1.0 - x) * s, 0.0, 0.0],
                [x * s, 0.0, 0.0],
                [0.0, (1.0 - y) * s, 0.0],
                [0.0, y * s, 0.0],
                [0.0, 0.0, (1.0 - z) * s],
                [0.0, 0.0, z * s],
            ]
        }
    }
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Load vector on `grid`.
pub fn assemble_rhs(grid: &Grid, source: Source, coefficients: &CoefficientField) -> Result<Vec<f64>> {
    match source {
        Source::Ones => Ok(vec![1.0; grid.n_dofs()]),
        Source::Manufactured => {
            if !coefficients.is_constant() {
                return Err(Error::InvalidConfig(
                    "the manufactured right-hand side needs constant coefficients".into(),
                ));
            }
            let alpha = coefficients.alpha(0);
            let beta = coefficients.beta();
            let problem = ManufacturedProblem::new(grid.dim());
            let mut b = vec![0.0; grid.n_dofs()];
            for cell in 0..grid.n_elements() {
                let dofs = grid.element_dofs(cell);
                for (p, xi, w) in cell_quadrature(grid, cell, 3) {
                    let f = problem.f(p, alpha, beta);
                    for (phi, &d) in basis(grid.dim(), grid.h(), xi).iter().zip(&dofs) {
                        b[d] += w * dot3(&f, phi);
                    }
                }
            }
            Ok(b)
        }
    }
}

/// `‖X(u − u_h)‖_{L²}` by a 2×2(×2) Gauss rule per cell; `X u_h` is
/// constant on every cell.
pub fn x_error_norm(grid: &Grid, u_h: &[f64], problem: &ManufacturedProblem) -> f64 {
    assert_eq!(u_h.len(), grid.n_dofs(), "coefficient vector has wrong length");
    let stencil = grid.x_stencil();
    let scale = 1.0 / grid.h().powi(grid.dim().as_usize() as i32);
    let mut sum = 0.0;
    for cell in 0..grid.n_elements() {
        let xh: f64 = grid
            .element_dofs(cell)
            .iter()
            .zip(stencil)
            .map(|(&d, s)| s * u_h[d])
            .sum::<f64>()
            * scale;
        for (p, _, w) in cell_quadrature(grid, cell, ERROR_QUADRATURE_POINTS) {
            let e = problem.xu(p) - xh;
            sum += w * e * e;
        }
    }
    sum.sqrt()
}

/// `‖X(u − u_h)‖ / ‖X u‖`, the scale-free error reported by experiments.
pub fn relative_x_error(grid: &Grid, u_h: &[f64], problem: &ManufacturedProblem) -> f64 {
    x_error_norm(grid, u_h, problem) / problem.x_norm()
}

/// Canonical interpolant: edge moments (2D) or face fluxes (3D) of `u`.
pub fn interpolate(grid: &Grid, problem: &ManufacturedProblem) -> Vec<f64> {
    let h = grid.h();
    let mut out = vec![f64::NAN; grid.n_dofs()];
    let dim = grid.dim();
    for cell in 0..grid.n_elements() {
        let o = grid.cell_origin(cell);
        for (local, d) in grid.element_dofs(cell).into_iter().enumerate() {
            if !out[d].is_nan() {
                continue;
            }
            let axis = local / 2;
            let offset = (local % 2) as f64 * h;
            // 2D: bottom/top edges are tangent to x, left/right to y;
            // 3D: the normal of the face
            let component = axis;
            let mut v = 0.0;
            match dim {
                Dimension::Two => {
                    for (t, w) in GAUSS_X.iter().zip(GAUSS_W) {
                        let mut p = o;
                        p[1 - component] += offset;
                        p[component] += t * h;
                        v += w * h * problem.u(p)[component];
                    }
                }
                Dimension::Three => {
                    let others: Vec<usize> = (0..3).filter(|&a| a != axis).collect();
                    for (s, ws) in GAUSS_X.iter().zip(GAUSS_W) {
                        for (t, wt) in GAUSS_X.iter().zip(GAUSS_W) {
                            let mut p = o;
                            p[axis] += offset;
                            p[others[0]] += s * h;
                            p[others[1]] += t * h;
                            v += ws * wt * h * h * problem.u(p)[component];
                        }
                    }
                }
            }
            out[d] = v;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn x_u_vanishes_on_boundary() {
        for dim in [Dimension::Two, Dimension::Three] {
            let p = ManufacturedProblem::new(dim);
            for k in 0..=10 {
                let t = k as f64 / 10.0;
                assert!(p.xu([0.0, t, t]).abs() < 1e-12);
                assert!(p.xu([1.0, t, t]).abs() < 1e-12);
                assert!(p.xu([t, 0.0, t]).abs() < 1e-12);
                assert!(p.xu([t, 1.0, t]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn curl_matches_finite_differences() {
        let p = ManufacturedProblem::new(Dimension::Two);
        let (x, y, e) = (0.3, 0.7, 1e-6);
        let fd = (p.u([x + e, y, 0.0])[1] - p.u([x - e, y, 0.0])[1]) / (2.0 * e)
            - (p.u([x, y + e, 0.0])[0] - p.u([x, y - e, 0.0])[0]) / (2.0 * e);
        assert!((fd - p.xu([x, y, 0.0])).abs() < 1e-6);
    }

    #[test]
    fn ones_rhs() {
        let g = Grid::new(Dimension::Two, 4);
        let c = CoefficientField::constant(16, 1.0, 1.0);
        assert_eq!(assemble_rhs(&g, Source::Ones, &c).unwrap(), vec![1.0; 40]);
    }

    #[test]
    fn quadrature_integrates_constants() {
        let g = Grid::new(Dimension::Three, 3);
        let total: f64 = (0..g.n_elements())
            .flat_map(|c| cell_quadrature(&g, c, 3))
            .map(|(_, _, w)| w)
            .sum();
        assert!((total - 1.0).abs() < 1e-14);
    }
}
