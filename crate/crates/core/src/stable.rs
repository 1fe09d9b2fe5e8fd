//! Stable laws with characteristic function exp(-|y|^alpha e^{i pi theta sgn(y) / 2})
//! and their two-sided Mellin transforms.

use num_complex::Complex64;
use thiserror::Error;

use crate::contour::{BromwichLine, ComplexFunction};
use crate::mellin::{mellin_from_fourier, mellin_invert, MellinError, MellinPair, Side, SidedPair, Strip};
use crate::quad::Estimate;
use crate::specfun::{gamma, is_gamma_pole, rgamma, SpecFunError};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum StableError {
    #[error("inadmissible stable parameters alpha = {alpha}, theta = {theta}")]
    Inadmissible { alpha: f64, theta: f64 },
    #[error("pole of the transform at s = {0}")]
    Pole(Complex64),
    #[error("density needs x != 0 and 0 < gamma < 1, got x = {x}, gamma = {gamma}")]
    Domain { x: f64, gamma: f64 },
    #[error(transparent)]
    Mellin(#[from] MellinError),
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
}

/// Index `alpha` in (0, 2] and skewness `theta` with |theta| <= min(alpha, 2 - alpha);
/// alpha = 1 only in the symmetric case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableParams {
    pub alpha: f64,
    pub theta: f64,
    /// Mass on the positive half line, (alpha - theta) / (2 alpha).
    pub rho_plus: f64,
    /// Mass on the negative half line, (alpha + theta) / (2 alpha).
    pub rho_minus: f64,
}

impl StableParams {
    pub fn new(alpha: f64, theta: f64) -> Result<Self, StableError> {
        let bad = StableError::Inadmissible { alpha, theta };
        if !(alpha > 0.0 && alpha <= 2.0) || !theta.is_finite() {
            return Err(bad);
        }
        if theta.abs() > alpha.min(2.0 - alpha) || (alpha == 1.0 && theta != 0.0) {
            return Err(bad);
        }
        Ok(StableParams {
            alpha,
            theta,
            rho_plus: (alpha - theta) / (2.0 * alpha),
            rho_minus: (alpha + theta) / (2.0 * alpha),
        })
    }

    pub fn rho(&self, side: Side) -> f64 {
        match side {
            Side::Plus => self.rho_plus,
            Side::Minus => self.rho_minus,
        }
    }

    /// Strip of the Mellin transform: the tails decay like |x|^{-1-alpha}.
    pub fn strip(&self) -> Strip {
        let hi = if self.alpha == 2.0 {
            f64::INFINITY
        } else {
            1.0 + self.alpha
        };
        Strip { lo: 0.0, hi }
    }

    /// psi*(y) = exp(-|y|^alpha e^{i pi theta sgn(y) / 2}).
    pub fn characteristic(&self, y: f64) -> Complex64 {
        if y == 0.0 {
            return Complex64::new(1.0, 0.0);
        }
        let zeta = Complex64::from_polar(1.0, std::f64::consts::PI * self.theta * y.signum() / 2.0);
        (-y.abs().powf(self.alpha) * zeta).exp()
    }

    /// The closed-form pair as a `MellinPair`.
    pub fn mellin_pair(&self) -> MellinPair {
        let (p, q) = (*self, *self);
        let nan = Complex64::new(f64::NAN, f64::NAN);
        MellinPair::new(
            move |s| stable_mellin(&p, s, Side::Plus).unwrap_or(nan),
            move |s| stable_mellin(&q, s, Side::Minus).unwrap_or(nan),
            self.strip(),
        )
    }
}

/// rho Gamma(s) Gamma(1 + (1 - s)/alpha) / [Gamma(1 + rho (1 - s)) Gamma(1 - rho (1 - s))]
/// with rho = rho_plus or rho_minus.
pub fn stable_mellin(p: &StableParams, s: Complex64, side: Side) -> Result<Complex64, StableError> {
    let rho = p.rho(side);
    let a = 1.0 + (1.0 - s) / p.alpha;
    if is_gamma_pole(s) || (is_gamma_pole(a) && p.alpha != 2.0) {
        return Err(StableError::Pole(s));
    }
    if rho == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let t = rho * (1.0 - s);
    if p.alpha == 2.0 {
        // Gamma(1 + (1-s)/2) cancels against Gamma(1 + (1-s)/2) in the denominator
        return Ok(rho * gamma(s)? * rgamma(1.0 - t));
    }
    Ok(rho * gamma(s)? * gamma(a)? * rgamma(1.0 + t) * rgamma(1.0 - t))
}

/// Both transforms at real s in (0, 1) from the characteristic function.
pub fn stable_mellin_numeric(p: &StableParams, s: f64) -> Result<SidedPair, StableError> {
    let q = *p;
    let fstar = ComplexFunction::new(move |y: Complex64| q.characteristic(y.re), "real y > 0");
    Ok(mellin_from_fourier(&fstar, s, f64::INFINITY)?)
}

/// Density at x != 0 by inverting the closed-form transform on Re(s) = gamma.
pub fn stable_density(p: &StableParams, x: f64, gamma: f64, line: &BromwichLine) -> Result<Estimate<f64>, StableError> {
    if x == 0.0 || !x.is_finite() || !(gamma > 0.0 && gamma < 1.0) {
        return Err(StableError::Domain { x, gamma });
    }
    let side = if x > 0.0 { Side::Plus } else { Side::Minus };
    Ok(mellin_invert(&p.mellin_pair(), side, x.abs(), gamma, line)?)
}
