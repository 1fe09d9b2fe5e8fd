//! Gamma, reciprocal Gamma through a Hankel contour, and the Mittag-Leffler
//! function E_nu(u) = sum (-u)^k / Gamma(nu k + 1).

mod gamma;
mod hankel;
pub(crate) mod series;

use num_complex::Complex64;
use thiserror::Error;

pub use gamma::{cos_pi, gamma, gamma_ratio, gamma_real, is_gamma_pole, ln_gamma, ln_gamma_real, rgamma, sin_pi};
pub use hankel::{mittag_leffler_hankel, recip_gamma_hankel, HankelContour, DOMAIN_MARGIN};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SpecFunError {
    #[error("pole of Gamma at {re} + {im}i")]
    Pole { re: f64, im: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("series overflow: {detail}")]
    Overflow { detail: String },
    #[error("invalid contour: {0}")]
    InvalidContour(String),
    #[error("invalid order: {0}")]
    InvalidOrder(f64),
}

/// Order nu of a Mittag-Leffler function, restricted to (0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct MLOrder(f64);

impl MLOrder {
    pub fn new(nu: f64) -> Result<Self, SpecFunError> {
        if nu > 0.0 && nu <= 1.0 {
            Ok(MLOrder(nu))
        } else {
            Err(SpecFunError::InvalidOrder(nu))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Series evaluation of E_nu(u), stopping after two consecutive terms below
/// `tol` relative to the partial sum.
pub fn mittag_leffler_series(nu: MLOrder, u: Complex64, tol: f64) -> Result<Complex64, SpecFunError> {
    series::Series {
        p: 1.0,
        a: nu.value(),
        b: 1.0,
    }
    .sum(-u, tol)
}

/// sum_k (p)_k / k! * z^k / Gamma(a k + b) for p > 0 and a > 0, with the
/// same truncation rule as `mittag_leffler_series`.
pub fn prabhakar_series(p: f64, a: f64, b: f64, z: Complex64, tol: f64) -> Result<Complex64, SpecFunError> {
    if !(p > 0.0 && a > 0.0 && p.is_finite() && a.is_finite() && b.is_finite()) {
        return Err(SpecFunError::Domain(format!(
            "series parameters p = {p}, a = {a}, b = {b}"
        )));
    }
    series::Series { p, a, b }.sum(z, tol)
}

/// E_nu(u) by whichever path suits `u`: the series near the origin and the
/// Hankel integral on an adapted contour further out.
pub fn mittag_leffler(nu: MLOrder, u: Complex64) -> Result<Complex64, SpecFunError> {
    if u.norm() <= 4.0 {
        return mittag_leffler_series(nu, u, 1e-16);
    }
    let contour = HankelContour::for_argument(nu, u)?;
    mittag_leffler_hankel(nu, u, &contour)
}
