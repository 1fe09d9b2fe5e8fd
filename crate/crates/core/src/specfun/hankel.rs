//! Contour integrals over the truncated Hankel path H(eps): the lower ray
//! from -cutoff to -eps at arg -pi, the circle |zeta| = eps, and the upper
//! ray back out at arg +pi.

use num_complex::Complex64;
use rug::{float::Constant, Assign, Complex as MpComplex, Float};
use std::f64::consts::PI;

use super::{MLOrder, SpecFunError};
use crate::quad::tanh_sinh_fixed;

/// Exclusion margin around the zero set, relative to min(1, eps^nu).
pub const DOMAIN_MARGIN: f64 = 0.05;

const TANH_SINH_SPAN: f64 = 3.6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HankelContour {
    pub radius: f64,
    pub cutoff: f64,
    pub steps_ray: usize,
    pub steps_arc: usize,
}

impl Default for HankelContour {
    fn default() -> Self {
        HankelContour {
            radius: 1.0,
            cutoff: 40.0,
            steps_ray: 2000,
            steps_arc: 400,
        }
    }
}

impl HankelContour {
    pub fn new(radius: f64, cutoff: f64, steps_ray: usize, steps_arc: usize) -> Result<Self, SpecFunError> {
        let c = HankelContour {
            radius,
            cutoff,
            steps_ray,
            steps_arc,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), SpecFunError> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(SpecFunError::InvalidContour(format!(
                "radius must be positive, got {}",
                self.radius
            )));
        }
        if !(self.cutoff > self.radius && self.cutoff.is_finite()) {
            return Err(SpecFunError::InvalidContour(format!(
                "cutoff {} must exceed radius {}",
                self.cutoff, self.radius
            )));
        }
        if self.steps_ray < 16 || self.steps_arc < 16 {
            return Err(SpecFunError::InvalidContour("step counts must be at least 16".into()));
        }
        Ok(())
    }

    /// Same contour with a different radius, keeping the ray length.
    pub fn with_radius(&self, radius: f64) -> Self {
        HankelContour {
            radius,
            cutoff: radius + (self.cutoff - self.radius).max(40.0),
            ..*self
        }
    }

    /// Distance from `u` to the zero set H0(eps) = { -zeta^nu : zeta on H(eps) }.
    pub fn zero_set_distance(&self, nu: MLOrder, u: Complex64) -> f64 {
        let nu = nu.value();
        let r0 = self.radius.powf(nu);
        let r1 = self.cutoff.powf(nu);
        // the arc maps to |u| = r0 with arg u in [pi - nu pi, pi + nu pi]
        let arg_from_neg = (-u).arg().abs();
        let arc = if arg_from_neg <= nu * PI {
            (u.norm() - r0).abs()
        } else {
            let end = Complex64::from_polar(r0, PI * (1.0 - nu));
            (u - end).norm().min((u - end.conj()).norm())
        };
        let mut best = arc;
        for sign in [1.0, -1.0] {
            let dir = Complex64::from_polar(1.0, sign * PI * (1.0 - nu));
            let proj = (u * dir.conj()).re.clamp(r0, r1);
            best = best.min((u - dir * proj).norm());
        }
        best
    }

    /// True if `u` lies in the unbounded component cut off by H0(eps), where
    /// the contour integral misses the pole at zeta = (-u)^{1/nu}.
    pub fn is_outer(&self, nu: MLOrder, u: Complex64) -> bool {
        let nu = nu.value();
        u.norm() > self.radius.powf(nu) && (-u).arg().abs() < nu * PI
    }

    /// A contour for which `u` keeps a safe distance from H0(eps).
    pub fn for_argument(nu: MLOrder, u: Complex64) -> Result<Self, SpecFunError> {
        let base = HankelContour::default();
        let m = u.norm();
        let mut candidates = vec![1.0, m + 1.0, 2.0 * m + 1.0];
        if m > 0.2 {
            candidates.push(m / 2.0);
        }
        for r in candidates {
            let eps = r.powf(1.0 / nu.value());
            if !(eps.is_finite() && eps <= 60.0) {
                continue;
            }
            let c = base.with_radius(eps);
            if c.zero_set_distance(nu, u) >= DOMAIN_MARGIN * r.min(1.0) {
                return Ok(c);
            }
        }
        Err(SpecFunError::Domain(format!(
            "no well-conditioned Hankel contour for nu = {}, u = {u}",
            nu.value()
        )))
    }
}

/// 1/Gamma(z) as (1/2 pi i) times the integral of e^zeta zeta^{-z} over H(eps).
///
/// When the integrand is much larger than the result the sum is carried out
/// in MPFR so the cancellation between arc and rays does not eat the answer.
pub fn recip_gamma_hankel(z: Complex64, contour: &HankelContour) -> Result<Complex64, SpecFunError> {
    contour.validate()?;
    let eps = contour.radius;
    // rough size of the integrand against the size of 1/Gamma(z)
    let peak_ln = eps + PI * z.im.abs() - z.re * eps.ln() + (2.0 * PI * eps + contour.cutoff).ln();
    let ln_result = -ln_abs_gamma_estimate(z);
    let lost_bits = ((peak_ln - ln_result) / std::f64::consts::LN_2).max(0.0);
    // at a pole the result is zero and only absolute accuracy is meaningful
    if lost_bits < 12.0 || !lost_bits.is_finite() || super::is_gamma_pole(z) {
        Ok(recip_gamma_hankel_f64(z, contour))
    } else {
        let bits = (lost_bits + 53.0 + 40.0).min(8192.0) as u32;
        Ok(recip_gamma_hankel_mpfr(z, contour, bits))
    }
}

// log|Gamma(z)| through Stirling-type bounds; only used to size the precision
fn ln_abs_gamma_estimate(z: Complex64) -> f64 {
    if z.re >= 0.5 {
        super::gamma::ln_gamma(z).map(|v| v.re).unwrap_or(0.0)
    } else {
        // reflection: |Gamma(z)| = pi / (|sin pi z| |Gamma(1 - z)|)
        let s = super::gamma::sin_pi(z).norm();
        let g = super::gamma::ln_gamma(1.0 - z).map(|v| v.re).unwrap_or(0.0);
        if s == 0.0 {
            f64::INFINITY
        } else {
            PI.ln() - s.ln() - g
        }
    }
}

fn recip_gamma_hankel_f64(z: Complex64, c: &HankelContour) -> Complex64 {
    let eps = c.radius;
    let i = Complex64::new(0.0, 1.0);
    // lower ray: zeta = r e^{-i pi}, d zeta = -dr, r from cutoff down to eps
    let lower: Complex64 = tanh_sinh_fixed(
        |r| (-r).exp() * (-z * Complex64::new(r.ln(), -PI)).exp(),
        eps,
        c.cutoff,
        c.steps_ray,
    );
    let upper: Complex64 = tanh_sinh_fixed(
        |r| (-r).exp() * (-z * Complex64::new(r.ln(), PI)).exp(),
        eps,
        c.cutoff,
        c.steps_ray,
    );
    let arc: Complex64 = tanh_sinh_fixed(
        |th| {
            let zeta = Complex64::from_polar(eps, th);
            let log_zeta = Complex64::new(eps.ln(), th);
            zeta.exp() * (-z * log_zeta).exp() * i * zeta
        },
        -PI,
        PI,
        c.steps_arc,
    );
    (lower - upper + arc) / (2.0 * PI * i)
}

fn ts_node(t: &Float, a: &Float, b: &Float, bits: u32) -> (Float, Float) {
    // x = c + d tanh(pi/2 sinh t), w = d pi/2 cosh t / cosh^2(pi/2 sinh t)
    let half_pi = Float::with_val(bits, Constant::Pi) / 2u32;
    let c = Float::with_val(bits, a + b) / 2u32;
    let d = Float::with_val(bits, b - a) / 2u32;
    let u = Float::with_val(bits, t.sinh_ref()) * &half_pi;
    let x = Float::with_val(bits, u.tanh_ref()) * &d + &c;
    let cu = Float::with_val(bits, u.cosh_ref());
    let w = Float::with_val(bits, t.cosh_ref()) * &half_pi * &d / Float::with_val(bits, &cu * &cu);
    (x, w)
}

fn ts_mpfr<F>(mut f: F, a: Float, b: Float, n: usize, bits: u32) -> MpComplex
where
    F: FnMut(&Float) -> MpComplex,
{
    let n = n.max(3);
    // endpoint weights decay like exp(-pi/2 e^span); push them below 2^-bits
    let span = (2.0 * bits as f64 * std::f64::consts::LN_2 / PI)
        .ln()
        .max(TANH_SINH_SPAN)
        + 0.5;
    let h = 2.0 * span / (n - 1) as f64;
    let hf = Float::with_val(bits, h);
    let mut acc = MpComplex::with_val(bits, (0.0, 0.0));
    let mut t = Float::new(bits);
    for j in 0..n {
        t.assign(&hf * j as u32);
        t -= span;
        let (x, w) = ts_node(&t, &a, &b, bits);
        let v = f(&x);
        acc += v * w;
    }
    acc * hf
}

fn recip_gamma_hankel_mpfr(z: Complex64, c: &HankelContour, bits: u32) -> Complex64 {
    let pi = Float::with_val(bits, Constant::Pi);
    let zz = MpComplex::with_val(bits, (z.re, z.im));
    let ray = |sign: f64| {
        let pi = pi.clone();
        let zz = zz.clone();
        ts_mpfr(
            move |r: &Float| {
                let ln_r = Float::with_val(bits, r.ln_ref());
                let arg = Float::with_val(bits, &pi * sign);
                let log_zeta = MpComplex::with_val(bits, (ln_r, arg));
                let e = MpComplex::with_val(bits, -(zz.clone() * log_zeta)).exp();
                let decay = Float::with_val(bits, -r.clone()).exp();
                e * decay
            },
            Float::with_val(bits, c.radius),
            Float::with_val(bits, c.cutoff),
            c.steps_ray,
            bits,
        )
    };
    let lower = ray(-1.0);
    let upper = ray(1.0);
    let eps = Float::with_val(bits, c.radius);
    let ln_eps = Float::with_val(bits, eps.ln_ref());
    let arc = ts_mpfr(
        |th: &Float| {
            let zeta = MpComplex::with_val(
                bits,
                (
                    Float::with_val(bits, th.cos_ref()) * &eps,
                    Float::with_val(bits, th.sin_ref()) * &eps,
                ),
            );
            let log_zeta = MpComplex::with_val(bits, (ln_eps.clone(), th.clone()));
            let e1 = MpComplex::with_val(bits, zeta.exp_ref());
            let e2 = MpComplex::with_val(bits, -(zz.clone() * log_zeta)).exp();
            let iz = MpComplex::with_val(bits, (-zeta.imag().clone(), zeta.real().clone()));
            e1 * e2 * iz
        },
        Float::with_val(bits, -&pi),
        pi.clone(),
        c.steps_arc,
        bits,
    );
    let total = lower - upper + arc;
    let two_pi = Float::with_val(bits, &pi * 2u32);
    // divide by 2 pi i: (a + ib)/(i 2pi) = (b - ia)/2pi
    let (re, im) = total.into_real_imag();
    let out_re = Float::with_val(bits, &im / &two_pi);
    let out_im = Float::with_val(bits, -re / &two_pi);
    Complex64::new(out_re.to_f64(), out_im.to_f64())
}

/// E_nu(u) = sum (-u)^k / Gamma(nu k + 1) through the lollipop integral
/// (1/2 pi i) int_H e^zeta / (zeta + u zeta^rho) d zeta with rho = 1 - nu.
///
/// For `u` in the unbounded component cut off by H0(eps) the pole at
/// zeta = (-u)^{1/nu} lies outside the contour and its residue
/// e^zeta / nu is added back.
pub fn mittag_leffler_hankel(nu: MLOrder, u: Complex64, contour: &HankelContour) -> Result<Complex64, SpecFunError> {
    contour.validate()?;
    let r0 = contour.radius.powf(nu.value());
    let dist = contour.zero_set_distance(nu, u);
    if dist < DOMAIN_MARGIN * r0.min(1.0) {
        return Err(SpecFunError::Domain(format!(
            "u = {u} lies within {dist:.3e} of the contour's zero set"
        )));
    }
    let rho = 1.0 - nu.value();
    let eps = contour.radius;
    let i = Complex64::new(0.0, 1.0);
    let pow_rho = |r: f64, arg: f64| Complex64::from_polar(r.powf(rho), rho * arg);
    let lower: Complex64 = tanh_sinh_fixed(
        |r| (-r).exp() / (Complex64::new(-r, 0.0) + u * pow_rho(r, -PI)),
        eps,
        contour.cutoff,
        contour.steps_ray,
    );
    let upper: Complex64 = tanh_sinh_fixed(
        |r| (-r).exp() / (Complex64::new(-r, 0.0) + u * pow_rho(r, PI)),
        eps,
        contour.cutoff,
        contour.steps_ray,
    );
    let arc: Complex64 = tanh_sinh_fixed(
        |th| {
            let zeta = Complex64::from_polar(eps, th);
            zeta.exp() / (zeta + u * pow_rho(eps, th)) * i * zeta
        },
        -PI,
        PI,
        contour.steps_arc,
    );
    let mut v = (lower - upper + arc) / (2.0 * PI * i);
    if contour.is_outer(nu, u) {
        let zeta0 = (-u).powf(1.0 / nu.value());
        v += zeta0.exp() / nu.value();
    }
    Ok(v)
}
