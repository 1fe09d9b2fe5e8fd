//! Two-sided Mellin transforms of functions on the real line.
//!
//! A function f on R is split into f+(x) = f(x) and f-(x) = f(-x) for x > 0,
//! and its transform is the pair (M f+, M f-). Products of independent
//! variables correspond to the hyperbolic product of these pairs.

mod bridge;
mod density;

use num_complex::Complex64;
use std::ops::{Add, Mul};
use std::sync::Arc;
use thiserror::Error;

use crate::contour::{bromwich, extrapolate_with, BromwichLine, ContourError};
use crate::quad::{exp_sinh, tanh_sinh, Estimate, QuadOptions, QuadResult};
use crate::specfun::SpecFunError;

pub use bridge::{
    fourier_from_mellin, laplace_from_mellin, mellin_from_fourier, mellin_from_fourier_damped, mellin_from_laplace,
    BilateralLaplace,
};
pub use density::{DensityOnR, HalfLine};

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type ComplexFn = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MellinError {
    #[error("Re(s) = {re} outside the strip ({lo}, {hi})")]
    StripViolation { re: f64, lo: f64, hi: f64 },
    #[error("integral is not absolutely convergent: {0}")]
    NonIntegrable(String),
    #[error("branch cut crossed: {0}")]
    BranchViolation(String),
    #[error("s = {s} outside (0, 1)")]
    Range { s: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error(transparent)]
    Contour(#[from] ContourError),
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
}

/// An open vertical strip lo < Re(s) < hi.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Strip {
    pub lo: f64,
    pub hi: f64,
}

impl Strip {
    pub const ALL: Strip = Strip {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Result<Self, MellinError> {
        if lo < hi && !lo.is_nan() && !hi.is_nan() {
            Ok(Strip { lo, hi })
        } else {
            Err(MellinError::InvalidInput(format!("empty strip ({lo}, {hi})")))
        }
    }

    pub fn contains(&self, re: f64) -> bool {
        self.lo < re && re < self.hi
    }

    pub fn intersect(&self, other: &Strip) -> Strip {
        Strip {
            lo: self.lo.max(other.lo),
            hi: self.hi.min(other.hi),
        }
    }

    pub fn check(&self, re: f64) -> Result<(), MellinError> {
        if self.contains(re) {
            Ok(())
        } else {
            Err(MellinError::StripViolation {
                re,
                lo: self.lo,
                hi: self.hi,
            })
        }
    }
}

/// Which half line a component describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Plus,
    Minus,
}

/// Values (M f+(s), M f-(s)) at one point. `*` is the hyperbolic product.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SidedPair {
    pub plus: Complex64,
    pub minus: Complex64,
}

impl SidedPair {
    pub fn new(plus: Complex64, minus: Complex64) -> Self {
        SidedPair { plus, minus }
    }

    pub fn real(plus: f64, minus: f64) -> Self {
        SidedPair::new(Complex64::new(plus, 0.0), Complex64::new(minus, 0.0))
    }

    pub fn get(&self, side: Side) -> Complex64 {
        match side {
            Side::Plus => self.plus,
            Side::Minus => self.minus,
        }
    }

    pub fn max_abs_diff(&self, other: &SidedPair) -> f64 {
        (self.plus - other.plus).norm().max((self.minus - other.minus).norm())
    }
}

impl Mul for SidedPair {
    type Output = SidedPair;

    fn mul(self, b: SidedPair) -> SidedPair {
        SidedPair {
            plus: self.plus * b.plus + self.minus * b.minus,
            minus: self.plus * b.minus + self.minus * b.plus,
        }
    }
}

impl Add for SidedPair {
    type Output = SidedPair;

    fn add(self, b: SidedPair) -> SidedPair {
        SidedPair::new(self.plus + b.plus, self.minus + b.minus)
    }
}

/// A pair of transforms (M f+, M f-) valid on a strip. A missing component
/// stands for a function that vanishes on that half line.
#[derive(Clone)]
pub struct MellinPair {
    pub plus: Option<ComplexFn>,
    pub minus: Option<ComplexFn>,
    pub strip: Strip,
}

impl std::fmt::Debug for MellinPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MellinPair")
            .field("plus", &self.plus.is_some())
            .field("minus", &self.minus.is_some())
            .field("strip", &self.strip)
            .finish()
    }
}

impl MellinPair {
    pub fn new(
        plus: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static,
        minus: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static,
        strip: Strip,
    ) -> Self {
        MellinPair {
            plus: Some(Arc::new(plus)),
            minus: Some(Arc::new(minus)),
            strip,
        }
    }

    pub fn plus_only(plus: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static, strip: Strip) -> Self {
        MellinPair {
            plus: Some(Arc::new(plus)),
            minus: None,
            strip,
        }
    }

    pub fn zero() -> Self {
        MellinPair {
            plus: None,
            minus: None,
            strip: Strip::ALL,
        }
    }

    pub fn component(&self, side: Side) -> Option<&ComplexFn> {
        match side {
            Side::Plus => self.plus.as_ref(),
            Side::Minus => self.minus.as_ref(),
        }
    }

    pub fn eval(&self, s: Complex64) -> SidedPair {
        let z = Complex64::new(0.0, 0.0);
        SidedPair {
            plus: self.plus.as_ref().map_or(z, |f| f(s)),
            minus: self.minus.as_ref().map_or(z, |f| f(s)),
        }
    }

    pub fn eval_checked(&self, s: Complex64) -> Result<SidedPair, MellinError> {
        self.strip.check(s.re)?;
        Ok(self.eval(s))
    }
}

/// Largest Cauchy-Riemann mismatch |df/dx + i df/dy| / |df/dx| of `f` at `z`
/// from central differences with step `h`; near zero where f is analytic.
pub fn cauchy_riemann_residual(f: impl Fn(Complex64) -> Complex64, z: Complex64, h: f64) -> f64 {
    let dx = (f(z + h) - f(z - h)) / (2.0 * h);
    let dy = (f(z + Complex64::new(0.0, h)) - f(z - Complex64::new(0.0, h))) / (2.0 * h);
    (dx + Complex64::new(0.0, 1.0) * dy).norm() / dx.norm().max(1e-300)
}

fn forward_options() -> QuadOptions {
    QuadOptions {
        rel_tol: 1e-13,
        max_level: 10,
        ..Default::default()
    }
}

fn accept<T: crate::quad::QuadValue>(r: QuadResult<T>, what: &str) -> Result<T, MellinError> {
    if !r.value.is_finite_value() {
        return Err(MellinError::NonIntegrable(format!("{what}: integral is not finite")));
    }
    if !r.converged && r.error > 1e-9 * r.l1.max(1e-300) {
        return Err(MellinError::Quadrature(format!(
            "{what}: error estimate {:.3e} against magnitude {:.3e}",
            r.error, r.l1
        )));
    }
    Ok(r.value)
}

// Integral of h(x) over the support [lo, hi] of a half-line component.
fn integrate_support<T, H>(h: H, lo: f64, hi: f64, what: &str) -> Result<T, MellinError>
where
    T: crate::quad::QuadValue,
    H: Fn(f64) -> T,
{
    if !(hi > lo) {
        return Ok(T::default());
    }
    let opts = forward_options();
    let r = if hi.is_finite() {
        tanh_sinh(|x: f64, _| h(x), lo, hi, &opts)
    } else {
        exp_sinh(h, lo, 1.0, &opts)
    };
    accept(r, what)
}

fn half_transform(h: &HalfLine, s: Complex64) -> Result<Complex64, MellinError> {
    let Some(f) = h.f.as_ref() else {
        return Ok(Complex64::new(0.0, 0.0));
    };
    let sm1 = s - 1.0;
    integrate_support(
        |x: f64| {
            let v = f(x);
            if v == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                (sm1 * x.ln()).exp() * v
            }
        },
        h.support.0,
        h.support.1,
        "Mellin transform",
    )
}

/// Numerical Mellin transform (int f+(x) x^{s-1} dx, int f-(x) x^{s-1} dx).
pub fn mellin_forward(f: &DensityOnR, s: Complex64) -> Result<SidedPair, MellinError> {
    f.strip().check(s.re)?;
    Ok(SidedPair {
        plus: half_transform(&f.plus, s)?,
        minus: half_transform(&f.minus, s)?,
    })
}

// int_0^inf a(w / y) b(y) dy / y over the overlap of the supports
fn product_integral(a: &HalfLine, b: &HalfLine, w: f64) -> Result<f64, MellinError> {
    let (Some(fa), Some(fb)) = (a.f.as_ref(), b.f.as_ref()) else {
        return Ok(0.0);
    };
    let lo = b.support.0.max(w / a.support.1);
    let hi = if a.support.0 > 0.0 {
        b.support.1.min(w / a.support.0)
    } else {
        b.support.1
    };
    integrate_support(
        |y: f64| {
            let gb = fb(y);
            if gb == 0.0 {
                0.0
            } else {
                fa(w / y) * gb / y
            }
        },
        lo,
        hi,
        "Mellin convolution",
    )
}

/// Density of X * Y at z for independent X ~ f and Y ~ g.
pub fn mellin_convolve(f: &DensityOnR, g: &DensityOnR, z: f64) -> Result<f64, MellinError> {
    if z == 0.0 || !z.is_finite() {
        return Err(MellinError::NonIntegrable(format!(
            "the product density is not defined through dy/y at z = {z}"
        )));
    }
    let w = z.abs();
    let v = if z > 0.0 {
        product_integral(&f.plus, &g.plus, w)? + product_integral(&f.minus, &g.minus, w)?
    } else {
        product_integral(&f.minus, &g.plus, w)? + product_integral(&f.plus, &g.minus, w)?
    };
    if !v.is_finite() {
        return Err(MellinError::NonIntegrable(format!("value at z = {z} is not finite")));
    }
    Ok(v)
}

/// The convolution f * g as a density, evaluated lazily.
pub fn convolved_density(f: &DensityOnR, g: &DensityOnR) -> DensityOnR {
    let (f1, g1) = (f.clone(), g.clone());
    let (f2, g2) = (f.clone(), g.clone());
    let strip = f.strip().intersect(&g.strip());
    let decay_plus = f.plus.decay.min(g.plus.decay).min(f.minus.decay).min(g.minus.decay);
    let plus_support_hi = (f.plus.support.1 * g.plus.support.1).max(f.minus.support.1 * g.minus.support.1);
    let minus_support_hi = (f.minus.support.1 * g.plus.support.1).max(f.plus.support.1 * g.minus.support.1);
    let has_plus = (f.plus.f.is_some() && g.plus.f.is_some()) || (f.minus.f.is_some() && g.minus.f.is_some());
    let has_minus = (f.minus.f.is_some() && g.plus.f.is_some()) || (f.plus.f.is_some() && g.minus.f.is_some());
    let mut d = DensityOnR::zero();
    if has_plus {
        d = d.with_plus(
            move |x| mellin_convolve(&f1, &g1, x).unwrap_or(f64::NAN),
            strip,
            decay_plus,
        );
        d.plus.support = (0.0, plus_support_hi);
    }
    if has_minus {
        d = d.with_minus(
            move |x| mellin_convolve(&f2, &g2, -x).unwrap_or(f64::NAN),
            strip,
            decay_plus,
        );
        d.minus.support = (0.0, minus_support_hi);
    }
    d
}

/// (a+ b+ + a- b-, a+ b- + a- b+) at s.
pub fn hyperbolic_product(a: &MellinPair, b: &MellinPair, s: Complex64) -> Result<SidedPair, MellinError> {
    let x = a.eval_checked(s)?;
    let y = b.eval_checked(s)?;
    Ok(x * y)
}

fn line_integral<F>(f: F, line: &BromwichLine) -> Result<Estimate<Complex64>, MellinError>
where
    F: Fn(Complex64) -> Complex64,
{
    let eps = line.regularizer_eps;
    if eps > 0.0 {
        let sched = [eps, eps / 2.0, eps / 4.0];
        Ok(extrapolate_with(f, &line.with_regularizer(0.0), &sched)?)
    } else {
        Ok(bromwich(f, line)?)
    }
}

/// Inverse Mellin transform of one component at x > 0, on the line Re(s) = gamma.
///
/// A positive `line.regularizer_eps` runs the regularized integral at eps,
/// eps/2 and eps/4 and extrapolates to zero.
pub fn mellin_invert(
    m: &MellinPair,
    side: Side,
    x: f64,
    gamma: f64,
    line: &BromwichLine,
) -> Result<Estimate<f64>, MellinError> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(MellinError::InvalidInput(format!("inversion needs x > 0, got {x}")));
    }
    m.strip.check(gamma)?;
    let Some(comp) = m.component(side) else {
        return Ok(Estimate::new(0.0, 0.0));
    };
    let lx = x.ln();
    let r = line_integral(|s| comp(s) * (-s * lx).exp(), &line.with_abscissa(gamma))?;
    Ok(r.map(|v| v.re))
}

/// Both sides of the Plancherel identity for the plus components:
/// (1/2 pi i) int M f+(s) conj(M g+(s)) ds and int f+ g+ x^{2 gamma - 1} dx.
///
/// Transforms come from the densities' closed forms when attached, otherwise
/// from `mellin_forward` at every node.
pub fn plancherel_check(
    f: &DensityOnR,
    g: &DensityOnR,
    gamma: f64,
    line: &BromwichLine,
) -> Result<(f64, f64), MellinError> {
    f.plus.strip.check(gamma)?;
    g.plus.strip.check(gamma)?;
    let (Some(ff), Some(gf)) = (f.plus.f.as_ref(), g.plus.f.as_ref()) else {
        return Ok((0.0, 0.0));
    };
    let lo = f.plus.support.0.max(g.plus.support.0);
    let hi = f.plus.support.1.min(g.plus.support.1);
    let p = 2.0 * gamma - 1.0;
    let right: f64 = integrate_support(|x: f64| ff(x) * gf(x) * x.powf(p), lo, hi, "Plancherel right side")?;

    let mf = |s: Complex64| -> Complex64 {
        match f.known_mellin().and_then(|m| m.plus.clone()) {
            Some(c) => c(s),
            None => half_transform(&f.plus, s).unwrap_or(Complex64::new(f64::NAN, f64::NAN)),
        }
    };
    let mg = |s: Complex64| -> Complex64 {
        match g.known_mellin().and_then(|m| m.plus.clone()) {
            Some(c) => c(s),
            None => half_transform(&g.plus, s).unwrap_or(Complex64::new(f64::NAN, f64::NAN)),
        }
    };
    let left = line_integral(|s| mf(s) * mg(s).conj(), &line.with_abscissa(gamma))?;
    Ok((left.value.re, right))
}

#[cfg(test)]
mod tests;
