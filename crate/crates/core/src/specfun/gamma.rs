use num_complex::Complex64;
use std::f64::consts::PI;

use super::SpecFunError;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// True when `z` sits on a pole of Gamma, i.e. a nonpositive integer.
pub fn is_gamma_pole(z: Complex64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round()
}

/// sin(pi z) with exact reduction of the real part.
pub fn sin_pi(z: Complex64) -> Complex64 {
    let n = z.re.round();
    let r = z.re - n;
    let a = PI * r;
    let b = PI * z.im;
    let v = Complex64::new(a.sin() * b.cosh(), a.cos() * b.sinh());
    if (n as i64).rem_euclid(2) == 1 {
        -v
    } else {
        v
    }
}

/// cos(pi z) with exact reduction of the real part.
pub fn cos_pi(z: Complex64) -> Complex64 {
    let n = z.re.round();
    let r = z.re - n;
    let a = PI * r;
    let b = PI * z.im;
    let v = Complex64::new(a.cos() * b.cosh(), -a.sin() * b.sinh());
    if (n as i64).rem_euclid(2) == 1 {
        -v
    } else {
        v
    }
}

// Lanczos sum for Re(z) >= 1/2, returning (series, t) with z shifted by one.
fn lanczos_parts(z: Complex64) -> (Complex64, Complex64) {
    let zm = z - 1.0;
    let mut x = Complex64::new(LANCZOS_COEFFS[0], 0.0);
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        x += *c / (zm + i as f64);
    }
    let t = zm + LANCZOS_G + 0.5;
    (x, t)
}

fn gamma_right(z: Complex64) -> Complex64 {
    let (x, t) = lanczos_parts(z);
    let zm = z - 1.0;
    (LN_SQRT_2PI + (zm + 0.5) * t.ln() - t).exp() * x
}

/// Gamma function on the complex plane.
pub fn gamma(z: Complex64) -> Result<Complex64, SpecFunError> {
    if is_gamma_pole(z) {
        return Err(SpecFunError::Pole { re: z.re, im: z.im });
    }
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(SpecFunError::Domain(format!("non-finite argument {z}")));
    }
    if z.im == 0.0 && z.re > 0.0 && z.re == z.re.round() && z.re <= 171.0 {
        let mut acc = 1.0f64;
        for k in 2..(z.re as u64) {
            acc *= k as f64;
        }
        return Ok(Complex64::new(acc, 0.0));
    }
    if z.re < 0.5 {
        Ok(PI / (sin_pi(z) * gamma_right(1.0 - z)))
    } else {
        Ok(gamma_right(z))
    }
}

/// Real Gamma; convenience wrapper.
pub fn gamma_real(x: f64) -> Result<f64, SpecFunError> {
    gamma(Complex64::new(x, 0.0)).map(|v| v.re)
}

/// 1/Gamma(z), which is entire; returns zero at the poles of Gamma.
pub fn rgamma(z: Complex64) -> Complex64 {
    if is_gamma_pole(z) {
        return Complex64::new(0.0, 0.0);
    }
    if z.im == 0.0 && z.re > 0.0 && z.re == z.re.round() && z.re <= 171.0 {
        if let Ok(g) = gamma(z) {
            return 1.0 / g;
        }
    }
    if z.re < 0.5 {
        sin_pi(z) * gamma_right(1.0 - z) / PI
    } else {
        1.0 / gamma_right(z)
    }
}

/// ln Gamma(x) for real x > 0.
pub fn ln_gamma_real(x: f64) -> f64 {
    if x < 0.5 {
        // reflection keeps accuracy for small x
        return (PI / (PI * x).sin()).ln() - ln_gamma_real(1.0 - x);
    }
    let zm = x - 1.0;
    let mut s = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        s += c / (zm + i as f64);
    }
    let t = zm + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (zm + 0.5) * t.ln() - t + s.ln()
}

/// A branch of ln Gamma(z) for Re(z) >= 1/2, continuous in z there.
pub fn ln_gamma(z: Complex64) -> Result<Complex64, SpecFunError> {
    if z.re < 0.5 {
        return Err(SpecFunError::Domain(format!("ln_gamma needs Re(z) >= 1/2, got {z}")));
    }
    let (x, t) = lanczos_parts(z);
    let zm = z - 1.0;
    Ok(LN_SQRT_2PI + (zm + 0.5) * t.ln() - t + x.ln())
}

/// prod Gamma(num) / prod Gamma(den), with 1/Gamma vanishing at poles.
pub fn gamma_ratio(num: &[Complex64], den: &[Complex64]) -> Complex64 {
    let mut v = Complex64::new(1.0, 0.0);
    for &z in num {
        v *= gamma(z).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
    }
    for &z in den {
        v *= rgamma(z);
    }
    v
}
