use std::fmt;
use std::str::FromStr;

use super::{Dimension, MeshHierarchy};
use crate::error::{Error, Result};

/// Spatial layout of the mass coefficient `α`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoefficientPattern {
    Constant,
    /// `α` on `[0,½]² ∪ (½,1]²`, `κ·α` on the other two quadrants.
    Checkerboard2d,
    /// `α` on the octants whose index parity is even, `κ·α` elsewhere.
    Checkerboard3d,
}

impl CoefficientPattern {
    pub fn name(self) -> &'static str {
        match self {
            Self::Constant => "const",
            Self::Checkerboard2d => "jump2d",
            Self::Checkerboard3d => "jump3d",
        }
    }
}

impl fmt::Display for CoefficientPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CoefficientPattern {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "const" | "constant" => Ok(Self::Constant),
            "jump2d" | "checkerboard2d" => Ok(Self::Checkerboard2d),
            "jump3d" | "checkerboard3d" => Ok(Self::Checkerboard3d),
            other => Err(Error::InvalidConfig(format!("unknown coefficient pattern `{other}`"))),
        }
    }
}

/// Piecewise constant `α_K` on the finest mesh and a global `β`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientField {
    alpha: Vec<f64>,
    beta: f64,
}

impl CoefficientField {
    pub fn constant(n_elements: usize, alpha: f64, beta: f64) -> Self {
        assert!(alpha > 0.0 && beta > 0.0, "coefficients must be positive");
        Self {
            alpha: vec![alpha; n_elements],
            beta,
        }
    }

    /// Coefficients on the finest level of `hierarchy`.
    pub fn new(
        hierarchy: &MeshHierarchy,
        pattern: CoefficientPattern,
        alpha: f64,
        beta: f64,
        kappa: f64,
    ) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && kappa > 0.0) {
            return Err(Error::InvalidConfig("α, β and κ must be positive".into()));
        }
        let grid = hierarchy.grid(hierarchy.finest());
        let n = grid.n_elements();
        let dim = hierarchy.dim();
        match (pattern, dim) {
            (CoefficientPattern::Constant, _) => return Ok(Self::constant(n, alpha, beta)),
            (CoefficientPattern::Checkerboard2d, Dimension::Two)
            | (CoefficientPattern::Checkerboard3d, Dimension::Three) => {}
            _ => {
                return Err(Error::PatternDimension {
                    pattern: pattern.name().into(),
                    dim: dim.as_usize(),
                })
            }
        }
        if hierarchy.coarsest() % 2 != 0 {
            return Err(Error::InvalidConfig(
                "jump interfaces must align with the coarsest mesh (even cells per side)".into(),
            ));
        }
        let alpha_k = (0..n)
            .map(|cell| {
                let c = grid.barycenter(cell);
                let parity: usize = c[..dim.as_usize()].iter().map(|&x| usize::from(x > 0.5)).sum();
                if parity % 2 == 0 {
                    alpha
                } else {
                    alpha * kappa
                }
            })
            .collect();
        Ok(Self { alpha: alpha_k, beta })
    }

    pub fn alpha(&self, cell: usize) -> f64 {
        self.alpha[cell]
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn n_elements(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_constant(&self) -> bool {
        self.alpha.windows(2).all(|w| w[0] == w[1])
    }
}

/// Convenience wrapper with `α = β = 1` outside the jump region.
pub fn coefficient_field(
    hierarchy: &MeshHierarchy,
    pattern: CoefficientPattern,
    kappa: f64,
) -> Result<CoefficientField> {
    CoefficientField::new(hierarchy, pattern, 1.0, 1.0, kappa)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_hierarchy;

    fn cell_at(h: &MeshHierarchy, p: [f64; 3]) -> usize {
        let g = h.grid(h.finest());
        (0..g.n_elements())
            .find(|&c| {
                let b = g.barycenter(c);
                (0..h.dim().as_usize()).all(|a| (b[a] - p[a]).abs() < 1e-12)
            })
            .expect("no cell with that barycenter")
    }

    #[test]
    fn constant_field() {
        let h = build_hierarchy(2, 4, 1);
        let f = coefficient_field(&h, CoefficientPattern::Constant, 1.0).unwrap();
        assert!(f.alphas().iter().all(|&a| a == 1.0));
    }

    #[test]
    fn checkerboard_2d_off_diagonal_quadrant() {
        // finest n = 4: barycenters at odd multiples of 1/8
        let h = build_hierarchy(2, 2, 1);
        let f = coefficient_field(&h, CoefficientPattern::Checkerboard2d, 1e-4).unwrap();
        assert_eq!(f.alpha(cell_at(&h, [0.125, 0.875, 0.0])), 1e-4);
        assert_eq!(f.alpha(cell_at(&h, [0.875, 0.875, 0.0])), 1.0);
        assert_eq!(f.alpha(cell_at(&h, [0.125, 0.125, 0.0])), 1.0);
    }

    #[test]
    fn checkerboard_3d_first_octant() {
        let h = MeshHierarchy::new(Dimension::Three, 2, 1);
        let f = coefficient_field(&h, CoefficientPattern::Checkerboard3d, 1e-2).unwrap();
        assert_eq!(f.alpha(cell_at(&h, [0.125, 0.125, 0.125])), 1.0);
        assert_eq!(f.alpha(cell_at(&h, [0.875, 0.875, 0.125])), 1.0);
        assert_eq!(f.alpha(cell_at(&h, [0.875, 0.125, 0.125])), 1e-2);
    }

    #[test]
    fn pattern_dimension_mismatch() {
        let h = build_hierarchy(2, 4, 1);
        assert!(matches!(
            coefficient_field(&h, CoefficientPattern::Checkerboard3d, 1.0),
            Err(Error::PatternDimension { .. })
        ));
    }
}
