use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;

use super::{MellinError, MellinPair, RealFn, Side, Strip};
use crate::specfun::{gamma, gamma_real};

/// One half of a function on R, as a function of x > 0.
#[derive(Clone)]
pub struct HalfLine {
    /// `None` when the function vanishes on this half line.
    pub f: Option<RealFn>,
    /// Strip of absolute convergence of the Mellin transform.
    pub strip: Strip,
    /// Exponential decay rate at infinity, `f64::INFINITY` for faster than
    /// exponential decay or compact support.
    pub decay: f64,
    /// Interval outside of which the component vanishes.
    pub support: (f64, f64),
}

impl HalfLine {
    pub fn zero() -> Self {
        HalfLine {
            f: None,
            strip: Strip::ALL,
            decay: f64::INFINITY,
            support: (0.0, 0.0),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.f {
            Some(f) if x >= self.support.0 && x <= self.support.1 => f(x),
            _ => 0.0,
        }
    }
}

impl std::fmt::Debug for HalfLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HalfLine")
            .field("present", &self.f.is_some())
            .field("strip", &self.strip)
            .field("decay", &self.decay)
            .field("support", &self.support)
            .finish()
    }
}

/// A function on R, usually a probability density, split at the origin.
#[derive(Clone, Debug)]
pub struct DensityOnR {
    pub plus: HalfLine,
    pub minus: HalfLine,
    known: Option<MellinPair>,
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

impl DensityOnR {
    pub fn zero() -> Self {
        DensityOnR {
            plus: HalfLine::zero(),
            minus: HalfLine::zero(),
            known: None,
        }
    }

    pub fn with_plus(mut self, f: impl Fn(f64) -> f64 + Send + Sync + 'static, strip: Strip, decay: f64) -> Self {
        self.plus = HalfLine {
            f: Some(Arc::new(f)),
            strip,
            decay,
            support: (0.0, f64::INFINITY),
        };
        self
    }

    pub fn with_minus(mut self, f: impl Fn(f64) -> f64 + Send + Sync + 'static, strip: Strip, decay: f64) -> Self {
        self.minus = HalfLine {
            f: Some(Arc::new(f)),
            strip,
            decay,
            support: (0.0, f64::INFINITY),
        };
        self
    }

    pub fn with_support(mut self, side: Side, lo: f64, hi: f64) -> Result<Self, MellinError> {
        if !(lo >= 0.0 && hi > lo) {
            return Err(MellinError::InvalidInput(format!("support ({lo}, {hi})")));
        }
        match side {
            Side::Plus => self.plus.support = (lo, hi),
            Side::Minus => self.minus.support = (lo, hi),
        }
        Ok(self)
    }

    /// Attach a closed-form transform, used where a transform is needed on
    /// a whole vertical line.
    pub fn with_mellin(mut self, m: MellinPair) -> Self {
        self.known = Some(m);
        self
    }

    pub fn known_mellin(&self) -> Option<&MellinPair> {
        self.known.as_ref()
    }

    pub fn half(&self, side: Side) -> &HalfLine {
        match side {
            Side::Plus => &self.plus,
            Side::Minus => &self.minus,
        }
    }

    /// Strip where both component transforms converge.
    pub fn strip(&self) -> Strip {
        self.plus.strip.intersect(&self.minus.strip)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x >= 0.0 {
            self.plus.eval(x)
        } else {
            self.minus.eval(-x)
        }
    }

    /// x -> f(lambda * sign(x) |x|^mu); the transform becomes
    /// lambda^{-s/mu} / mu * M[f; s/mu].
    pub fn transform_argument(&self, lambda: f64, mu: f64) -> Result<DensityOnR, MellinError> {
        if !(lambda > 0.0 && mu > 0.0 && lambda.is_finite() && mu.is_finite()) {
            return Err(MellinError::InvalidInput(format!("lambda = {lambda}, mu = {mu}")));
        }
        let map = |h: &HalfLine| -> HalfLine {
            let f =
                h.f.clone()
                    .map(|f| -> RealFn { Arc::new(move |x: f64| f(lambda * x.powf(mu))) });
            HalfLine {
                f,
                strip: Strip {
                    lo: h.strip.lo * mu,
                    hi: h.strip.hi * mu,
                },
                decay: if mu == 1.0 {
                    h.decay * lambda
                } else if mu > 1.0 {
                    f64::INFINITY
                } else {
                    0.0
                },
                support: (
                    (h.support.0 / lambda).powf(1.0 / mu),
                    (h.support.1 / lambda).powf(1.0 / mu),
                ),
            }
        };
        let known = self.known.as_ref().map(|m| {
            let wrap = |g: Option<super::ComplexFn>| -> Option<super::ComplexFn> {
                g.map(|g| -> super::ComplexFn {
                    Arc::new(move |s: Complex64| {
                        let t = s / mu;
                        g(t) * (-t * lambda.ln()).exp() / mu
                    })
                })
            };
            MellinPair {
                plus: wrap(m.plus.clone()),
                minus: wrap(m.minus.clone()),
                strip: Strip {
                    lo: m.strip.lo * mu,
                    hi: m.strip.hi * mu,
                },
            }
        });
        Ok(DensityOnR {
            plus: map(&self.plus),
            minus: map(&self.minus),
            known,
        })
    }

    /// e^{-x} on x > 0.
    pub fn one_sided_exponential() -> Self {
        let strip = Strip {
            lo: 0.0,
            hi: f64::INFINITY,
        };
        DensityOnR::zero()
            .with_plus(|x| (-x).exp(), strip, 1.0)
            .with_mellin(MellinPair::plus_only(|s| gamma(s).unwrap_or(c(f64::NAN)), strip))
    }

    /// e^{-|x|} / 2.
    pub fn two_sided_exponential() -> Self {
        let strip = Strip {
            lo: 0.0,
            hi: f64::INFINITY,
        };
        let half = |s: Complex64| 0.5 * gamma(s).unwrap_or(c(f64::NAN));
        DensityOnR::zero()
            .with_plus(|x| 0.5 * (-x).exp(), strip, 1.0)
            .with_minus(|x| 0.5 * (-x).exp(), strip, 1.0)
            .with_mellin(MellinPair::new(half, half, strip))
    }

    /// Uniform density on (0, 1).
    pub fn uniform_unit() -> Self {
        let strip = Strip {
            lo: 0.0,
            hi: f64::INFINITY,
        };
        DensityOnR {
            plus: HalfLine {
                f: Some(Arc::new(|_| 1.0)),
                strip,
                decay: f64::INFINITY,
                support: (0.0, 1.0),
            },
            minus: HalfLine::zero(),
            known: Some(MellinPair::plus_only(|s| 1.0 / s, strip)),
        }
    }

    /// Gamma(k, 1) density x^{k-1} e^{-x} / Gamma(k) on x > 0.
    pub fn gamma_density(k: f64) -> Result<Self, MellinError> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(MellinError::InvalidInput(format!("shape {k}")));
        }
        let gk = gamma_real(k)?;
        let strip = Strip {
            lo: 1.0 - k,
            hi: f64::INFINITY,
        };
        Ok(DensityOnR::zero()
            .with_plus(move |x| (-x + (k - 1.0) * x.ln()).exp() / gk, strip, 1.0)
            .with_mellin(MellinPair::plus_only(
                move |s| gamma(s + k - 1.0).unwrap_or(c(f64::NAN)) / gk,
                strip,
            )))
    }

    /// Centered normal density with standard deviation `sigma`.
    pub fn gaussian(sigma: f64) -> Result<Self, MellinError> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(MellinError::InvalidInput(format!("sigma {sigma}")));
        }
        let norm = 1.0 / (sigma * (2.0 * PI).sqrt());
        let strip = Strip {
            lo: 0.0,
            hi: f64::INFINITY,
        };
        let f = move |x: f64| norm * (-0.5 * (x / sigma).powi(2)).exp();
        // int_0^inf e^{-x^2/2 sigma^2} x^{s-1} dx = (2 sigma^2)^{s/2} Gamma(s/2) / 2
        let m = move |s: Complex64| {
            norm * 0.5 * (s / 2.0 * (2.0 * sigma * sigma).ln()).exp() * gamma(s / 2.0).unwrap_or(c(f64::NAN))
        };
        Ok(DensityOnR::zero()
            .with_plus(f, strip, f64::INFINITY)
            .with_minus(f, strip, f64::INFINITY)
            .with_mellin(MellinPair::new(m, m, strip)))
    }

    /// Normal density with mean `mean`, transform computed numerically.
    pub fn shifted_gaussian(mean: f64, sigma: f64) -> Result<Self, MellinError> {
        if !(sigma > 0.0 && sigma.is_finite() && mean.is_finite()) {
            return Err(MellinError::InvalidInput(format!("mean {mean}, sigma {sigma}")));
        }
        let norm = 1.0 / (sigma * (2.0 * PI).sqrt());
        let strip = Strip {
            lo: 0.0,
            hi: f64::INFINITY,
        };
        Ok(DensityOnR::zero()
            .with_plus(
                move |x| norm * (-0.5 * ((x - mean) / sigma).powi(2)).exp(),
                strip,
                f64::INFINITY,
            )
            .with_minus(
                move |x| norm * (-0.5 * ((x + mean) / sigma).powi(2)).exp(),
                strip,
                f64::INFINITY,
            ))
    }

    /// Standard Cauchy density 1 / (pi (1 + x^2)).
    pub fn cauchy() -> Self {
        let strip = Strip { lo: 0.0, hi: 2.0 };
        // int_0^inf x^{s-1} / (1 + x^2) dx = pi / (2 sin(pi s / 2)), times 1/pi
        let m = |s: Complex64| 0.5 / crate::specfun::sin_pi(s / 2.0);
        let f = |x: f64| 1.0 / (PI * (1.0 + x * x));
        DensityOnR::zero()
            .with_plus(f, strip, 0.0)
            .with_minus(f, strip, 0.0)
            .with_mellin(MellinPair::new(m, m, strip))
    }
}
