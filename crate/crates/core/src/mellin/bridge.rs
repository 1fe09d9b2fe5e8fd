//! Passing between Mellin, bilateral Laplace and Fourier transforms.

use num_complex::Complex64;
use std::cell::Cell;
use std::f64::consts::PI;
use std::sync::Arc;

use super::{line_integral, ComplexFn, MellinError, MellinPair, SidedPair, Strip};
use crate::contour::{integrate_halfline, integrate_halfline_damped, BromwichLine, ComplexFunction, LineRule};
use crate::quad::Estimate;
use crate::specfun::{gamma, ln_gamma};

/// phi(u) = int e^{-u x} f(x) dx, analytic for Re(u) in `valid_strip`.
#[derive(Clone)]
pub struct BilateralLaplace {
    pub evaluator: ComplexFn,
    pub valid_strip: Strip,
}

impl std::fmt::Debug for BilateralLaplace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BilateralLaplace")
            .field("valid_strip", &self.valid_strip)
            .finish()
    }
}

impl BilateralLaplace {
    pub fn new(f: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static, valid_strip: Strip) -> Self {
        BilateralLaplace {
            evaluator: Arc::new(f),
            valid_strip,
        }
    }

    pub fn eval(&self, u: Complex64) -> Complex64 {
        (self.evaluator)(u)
    }
}

const MAX_RESIDUES: usize = 2000;
const SMALL_ARGUMENT: f64 = 1e-4;

// Gamma(1 - s) w^{s-1} as a single exponential, for 0 < Re(s) < 1.
fn kernel(s: Complex64, lw: Complex64) -> Complex64 {
    match ln_gamma(2.0 - s) {
        Ok(lg) => (lg - (1.0 - s).ln() + (s - 1.0) * lw).exp(),
        Err(_) => Complex64::new(f64::NAN, f64::NAN),
    }
}

/// (M f+(s), M f-(s)) from the bilateral Laplace transform, through
/// Gamma(s) / (2 pi i) int phi(+-u) (-u)^{-s} du on Re(u) = beta < 0.
pub fn mellin_from_laplace(
    phi: &BilateralLaplace,
    s: Complex64,
    beta: f64,
    line: &BromwichLine,
) -> Result<SidedPair, MellinError> {
    if !(s.re > 0.0) {
        return Err(MellinError::StripViolation {
            re: s.re,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    if !(beta < 0.0) {
        return Err(MellinError::BranchViolation(format!(
            "abscissa {beta} does not keep Re(-u) > 0"
        )));
    }
    phi.valid_strip.check(beta)?;
    phi.valid_strip.check(-beta)?;
    let g = gamma(s)?;
    let line = line.with_abscissa(beta);
    let mut out = [Complex64::new(0.0, 0.0); 2];
    for (k, sign) in [1.0, -1.0].into_iter().enumerate() {
        let crossed = Cell::new(false);
        let integrand = |u: Complex64| {
            let w = -u;
            if !(w.re > 0.0) {
                crossed.set(true);
            }
            phi.eval(sign * u) * (-s * w.ln()).exp()
        };
        let r = line_integral(integrand, &line)?;
        if crossed.get() {
            return Err(MellinError::BranchViolation("a node reached Re(u) >= 0".into()));
        }
        out[k] = g * r.value;
    }
    Ok(SidedPair::new(out[0], out[1]))
}

// (1/2 pi i) int M(s) Gamma(1 - s) w^{s-1} ds on Re(s) = gamma, valid for
// |arg w| < pi where the integrand decays.
fn direct_part(
    m: &ComplexFn,
    strip: &Strip,
    w: Complex64,
    line: &BromwichLine,
) -> Result<Estimate<Complex64>, MellinError> {
    let lw = w.ln();
    // w^{s-1} oscillates at frequency |ln w| along the line; keep the
    // trapezoid aliasing error near e^{-37} given the distance d to the poles
    let d = (1.0 - line.abscissa).min(line.abscissa - strip.lo).min(1.0);
    let h_max = 2.0 * PI / (lw.re.abs() + 37.0 / d);
    let mut line = *line;
    if line.rule == LineRule::Trapezoid && line.spacing() > h_max {
        let steps = (2.0 * line.half_height / h_max).ceil() as usize;
        line.steps = steps + steps % 2;
    }
    line_integral(|s| m(s) * kernel(s, lw), &line)
}

// Sum of the residues at s = 1, 2, ...: sum_n M(n + 1) (-w)^n / n!. Used on
// the negative axis, where the line integral stops converging, and for tiny
// |w|, where w^{s-1} oscillates too fast for the line rule. Converges while
// |w| is below the exponential decay rate of the function.
fn residue_series_part(m: &ComplexFn, strip: &Strip, w: Complex64) -> Result<Estimate<Complex64>, MellinError> {
    if strip.hi.is_finite() {
        return Err(MellinError::NonIntegrable(format!(
            "value at {w} needs moments of every order, strip ends at {}",
            strip.hi
        )));
    }
    let mut sum = Complex64::new(0.0, 0.0);
    let mut scale = Complex64::new(1.0, 0.0);
    let mut small = 0;
    for n in 0..MAX_RESIDUES {
        if n > 0 {
            scale *= -w / n as f64;
        }
        let term = m(Complex64::new(n as f64 + 1.0, 0.0)) * scale;
        if !(term.re.is_finite() && term.im.is_finite()) {
            return Err(MellinError::NonIntegrable(format!(
                "moment series term {n} is not finite"
            )));
        }
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() {
            small += 1;
            if small == 2 {
                return Ok(Estimate::new(sum, 2.0 * term.norm() + 1e-16 * sum.norm()));
            }
        } else {
            small = 0;
        }
    }
    Err(MellinError::NonIntegrable(format!(
        "moment series at {w} did not converge in {MAX_RESIDUES} terms"
    )))
}

fn part(
    m: Option<&ComplexFn>,
    strip: &Strip,
    w: Complex64,
    line: &BromwichLine,
) -> Result<Estimate<Complex64>, MellinError> {
    let Some(m) = m else {
        return Ok(Estimate::new(Complex64::new(0.0, 0.0), 0.0));
    };
    if (w.im == 0.0 && w.re < 0.0) || (w.norm() < SMALL_ARGUMENT && strip.hi.is_infinite()) {
        residue_series_part(m, strip, w)
    } else {
        direct_part(m, strip, w, line)
    }
}

fn check_line_abscissa(m: &MellinPair, gamma: f64) -> Result<(), MellinError> {
    m.strip.check(gamma)?;
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(MellinError::StripViolation {
            re: gamma,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(())
}

/// phi(u) = (1/2 pi i) int [M f+(s) u^{s-1} + M f-(s) (-u)^{s-1}] Gamma(1 - s) ds.
///
/// A component whose argument lies on the negative real axis is summed from
/// its residues at the positive integers instead, which needs the function to
/// decay faster than e^{-|u| x} on that side.
pub fn laplace_from_mellin(
    m: &MellinPair,
    u: Complex64,
    gamma: f64,
    line: &BromwichLine,
) -> Result<Estimate<Complex64>, MellinError> {
    check_line_abscissa(m, gamma)?;
    if u == Complex64::new(0.0, 0.0) || !(u.re.is_finite() && u.im.is_finite()) {
        return Err(MellinError::InvalidInput(format!("u = {u}")));
    }
    let line = line.with_abscissa(gamma);
    let a = part(m.plus.as_ref(), &m.strip, u, &line)?;
    let b = part(m.minus.as_ref(), &m.strip, -u, &line)?;
    Ok(Estimate::new(a.value + b.value, a.error + b.error))
}

fn fourier_pair(j: Complex64, s: f64) -> Result<SidedPair, MellinError> {
    let g = gamma(Complex64::new(s, 0.0))?.re / PI;
    let rot = Complex64::from_polar(1.0, -s * PI / 2.0);
    Ok(SidedPair::real(g * (rot * j).re, g * (rot.conj() * j).re))
}

fn check_unit_interval(s: f64) -> Result<(), MellinError> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(MellinError::Range { s })
    }
}

/// (M f+(s), M f-(s)) for a real density from its characteristic function
/// f*(y) = int e^{i y x} f(x) dx, for 0 < s < 1.
///
/// The half-line integral of f*(y) y^{-s} runs over (0, upper); an infinite
/// `upper` needs f* to decay, a finite one is split in panels of width about pi.
pub fn mellin_from_fourier(fstar: &ComplexFunction, s: f64, upper: f64) -> Result<SidedPair, MellinError> {
    check_unit_interval(s)?;
    let panels = if upper.is_finite() {
        (upper / PI).ceil().max(1.0) as usize
    } else {
        1
    };
    let j = integrate_halfline(
        |y| fstar.eval(Complex64::new(y, 0.0)),
        Complex64::new(s, 0.0),
        upper,
        panels,
    )?;
    fourier_pair(j.value, s)
}

/// As `mellin_from_fourier`, for characteristic functions that oscillate
/// without decaying: the half-line integral is damped by e^{-eta y} and
/// extrapolated to eta = 0 over `dampings`.
pub fn mellin_from_fourier_damped(fstar: &ComplexFunction, s: f64, dampings: &[f64]) -> Result<SidedPair, MellinError> {
    check_unit_interval(s)?;
    let j = integrate_halfline_damped(|y| fstar.eval(Complex64::new(y, 0.0)), Complex64::new(s, 0.0), dampings)?;
    fourier_pair(j.value, s)
}

/// f*(y) = int e^{i y x} f(x) dx of a real function from its Mellin pair:
/// the Laplace parts evaluated at w = -iy and w = iy.
pub fn fourier_from_mellin(
    m: &MellinPair,
    y: f64,
    gamma: f64,
    line: &BromwichLine,
) -> Result<Estimate<Complex64>, MellinError> {
    check_line_abscissa(m, gamma)?;
    if y == 0.0 || !y.is_finite() {
        return Err(MellinError::InvalidInput(format!("y = {y}")));
    }
    let line = line.with_abscissa(gamma);
    let r = y.abs();
    let a = part(m.plus.as_ref(), &m.strip, Complex64::new(0.0, -r), &line)?;
    let b = part(m.minus.as_ref(), &m.strip, Complex64::new(0.0, r), &line)?;
    let v = a.value + b.value;
    Ok(Estimate::new(if y > 0.0 { v } else { v.conj() }, a.error + b.error))
}
