use crate::error::{Error, Result};

/// `q(x) = q0 + q1·x`, the stabilization polynomial approximating `1/x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolyCoeffs {
    pub q0: f64,
    pub q1: f64,
}

impl PolyCoeffs {
    /// `q ≡ 1`: plain V-cycle on the coarse levels.
    pub const V_CYCLE: Self = Self { q0: 1.0, q1: 0.0 };

    pub fn eval(&self, x: f64) -> f64 {
        self.q0 + self.q1 * x
    }

    /// Coefficient of `x^k`.
    pub fn coeff(&self, k: usize) -> f64 {
        match k {
            0 => self.q0,
            1 => self.q1,
            _ => 0.0,
        }
    }
}

fn check_gamma2(gamma2: f64) -> Result<()> {
    if !(0.0..1.0).contains(&gamma2) {
        return Err(Error::InvalidPolynomial(format!("γ² = {gamma2} outside [0, 1)")));
    }
    Ok(())
}

/// Shifted and scaled Chebyshev polynomial of degree 2, written in terms of
/// `s = sqrt(1 − γ² + b + b²)`.
pub fn chebyshev_coeffs(gamma2: f64, b: f64) -> Result<PolyCoeffs> {
    check_gamma2(gamma2)?;
    let s2 = 1.0 - gamma2 + b + b * b;
    if s2 <= 0.0 {
        return Err(Error::InvalidPolynomial(format!("1 − γ² + b + b² = {s2} ≤ 0")));
    }
    let d = s2.sqrt() - b;
    if d <= 0.0 {
        return Err(Error::InvalidPolynomial(format!("s ≤ b for γ² = {gamma2}, b = {b}")));
    }
    Ok(PolyCoeffs {
        q0: 2.0 / d,
        q1: -1.0 / (d * d),
    })
}

/// The same polynomial computed through the Chebyshev polynomial `T₂`
/// directly; kept as an independent route for [`chebyshev_coeffs`].
pub fn chebyshev_coeffs_long_form(gamma2: f64, b: f64) -> Result<PolyCoeffs> {
    check_gamma2(gamma2)?;
    let t2 = |x: f64| 2.0 * x * x - 1.0;
    let g = 3.0 - 4.0 * gamma2;
    let c2b = 1.0 + 2.0 * b;
    let disc = g + c2b * c2b;
    if disc < 0.0 {
        return Err(Error::InvalidPolynomial(format!("negative discriminant for γ² = {gamma2}, b = {b}")));
    }
    let alpha = g / (c2b + disc.sqrt());
    if alpha == 1.0 {
        // removable singularity on γ² = −b: a → ∞ with a(1 − α) = 1 + α
        return Ok(PolyCoeffs {
            q0: 4.0 / (1.0 + alpha),
            q1: -4.0 / ((1.0 + alpha) * (1.0 + alpha)),
        });
    }
    let a = (1.0 + alpha) / (1.0 - alpha);
    let c = 1.0 / (1.0 + t2(a));
    let q = PolyCoeffs {
        q0: 8.0 * a * c / (1.0 - alpha),
        q1: -8.0 * c / ((1.0 - alpha) * (1.0 - alpha)),
    };
    if !(q.q0.is_finite() && q.q1.is_finite()) {
        return Err(Error::InvalidPolynomial(format!("degenerate shift {alpha} for γ² = {gamma2}, b = {b}")));
    }
    Ok(q)
}

/// Best uniform linear approximation of `1/x` on `[1 − γ², 1]`.
pub fn best_approx_coeffs(gamma2: f64) -> Result<PolyCoeffs> {
    check_gamma2(gamma2)?;
    let d = 1.0 - gamma2;
    Ok(PolyCoeffs {
        q0: (2.0 - gamma2) / d,
        q1: -1.0 / d,
    })
}
