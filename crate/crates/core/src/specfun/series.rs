//! Power series of the form `sum_k (p)_k / k! * z^k / Gamma(a k + b)`.
//!
//! Both the Mittag-Leffler series and the Luria-Delbrück Laplace series fit
//! this shape. Terms are scanned in f64 log space first; if the largest term
//! dwarfs the sum, the sum is redone with MPFR at a working precision that
//! covers the cancellation.

use num_complex::Complex64;
use rug::{Assign, Complex as MpComplex, Float};

use super::gamma::{ln_gamma_real, rgamma};
use super::SpecFunError;

pub(crate) const MAX_TERMS: usize = 200_000;
const MAX_BITS: u32 = 20_000;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Series {
    pub p: f64,
    pub a: f64,
    pub b: f64,
}

impl Series {
    // log |(p)_k / k!| for p > 0
    fn ln_rising_over_factorial(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        if self.p == 1.0 {
            return 0.0;
        }
        ln_gamma_real(self.p + k as f64) - ln_gamma_real(self.p) - ln_gamma_real(k as f64 + 1.0)
    }

    fn ln_recip_gamma(&self, k: usize) -> f64 {
        let x = self.a * k as f64 + self.b;
        if x > 0.0 {
            -ln_gamma_real(x)
        } else {
            let r = rgamma(Complex64::new(x, 0.0)).re.abs();
            if r == 0.0 {
                f64::NEG_INFINITY
            } else {
                r.ln()
            }
        }
    }

    fn ln_term(&self, k: usize, ln_z: f64) -> f64 {
        self.ln_rising_over_factorial(k) + k as f64 * ln_z + self.ln_recip_gamma(k)
    }

    /// Largest log-magnitude over the terms and the index past which terms
    /// only shrink below `ln_tol` relative to that peak.
    fn scan(&self, z: Complex64, ln_tol: f64) -> Result<(f64, usize), SpecFunError> {
        let ln_z = z.norm().ln();
        let mut peak = f64::NEG_INFINITY;
        let mut k = 0usize;
        loop {
            let lt = self.ln_term(k, ln_z);
            if lt > peak {
                peak = lt;
            }
            // terms are eventually log-concave in k, so once we are well
            // below the peak and decreasing we can stop
            if k > 2 && lt < peak + ln_tol - 5.0 && lt < self.ln_term(k - 1, ln_z) {
                return Ok((peak, k));
            }
            k += 1;
            if k > MAX_TERMS {
                return Err(SpecFunError::Overflow {
                    detail: format!("series for |z| = {} needs more than {MAX_TERMS} terms", z.norm()),
                });
            }
        }
    }

    pub fn sum(&self, z: Complex64, tol: f64) -> Result<Complex64, SpecFunError> {
        if !(tol > 0.0) {
            return Err(SpecFunError::Domain(format!("tolerance must be positive, got {tol}")));
        }
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(SpecFunError::Domain(format!("non-finite argument {z}")));
        }
        if z.norm() == 0.0 {
            return Ok(rgamma(Complex64::new(self.b, 0.0)));
        }
        let ln_tol = tol.max(1e-300).ln();
        let (peak, _) = self.scan(z, ln_tol)?;
        let peak2 = peak / std::f64::consts::LN_2;
        let tol_bits = (-ln_tol / std::f64::consts::LN_2).max(53.0);
        if peak2 < 8.0 {
            let v = self.sum_f64(z, tol)?;
            let noise = peak.exp() * 4e-16;
            if noise <= tol.max(1e-14) * v.norm() {
                return Ok(v);
            }
        }
        let mut bits = (64.0 + peak2.max(0.0) + tol_bits) as u32;
        loop {
            if bits > MAX_BITS {
                return Err(SpecFunError::Overflow {
                    detail: format!("series at |z| = {} needs more than {MAX_BITS} bits", z.norm()),
                });
            }
            let v = self.sum_mpfr(z, tol, bits)?;
            let ln_v = v.norm().ln();
            // bits lost to cancellation are log2(peak / |sum|)
            let needed = if ln_v.is_finite() {
                ((peak - ln_v) / std::f64::consts::LN_2).max(0.0) + tol_bits + 20.0
            } else {
                2.0 * bits as f64
            };
            if needed > bits as f64 {
                bits = (needed as u32 + 64).max(bits + 64);
                continue;
            }
            return Ok(v);
        }
    }

    fn sum_f64(&self, z: Complex64, tol: f64) -> Result<Complex64, SpecFunError> {
        let mut coef = 1.0f64;
        let mut zk = Complex64::new(1.0, 0.0);
        let mut sum = Complex64::new(0.0, 0.0);
        let mut small = 0;
        for k in 0..MAX_TERMS {
            if k > 0 {
                coef *= (self.p + (k - 1) as f64) / k as f64;
                zk *= z;
            }
            let term = zk * coef * rgamma(Complex64::new(self.a * k as f64 + self.b, 0.0));
            sum += term;
            if !(sum.re.is_finite() && sum.im.is_finite()) {
                return Err(SpecFunError::Overflow {
                    detail: format!("partial sums overflow at |z| = {}", z.norm()),
                });
            }
            if term.norm() < tol * sum.norm() {
                small += 1;
                if small >= 2 {
                    return Ok(sum);
                }
            } else {
                small = 0;
            }
        }
        Err(SpecFunError::Overflow {
            detail: format!("no convergence within {MAX_TERMS} terms"),
        })
    }

    fn sum_mpfr(&self, z: Complex64, tol: f64, bits: u32) -> Result<Complex64, SpecFunError> {
        let zz = MpComplex::with_val(bits, (z.re, z.im));
        let mut zk = MpComplex::with_val(bits, (1.0, 0.0));
        let mut coef = Float::with_val(bits, 1.0);
        let mut sum = MpComplex::with_val(bits, (0.0, 0.0));
        let mut term = MpComplex::new(bits);
        let mut arg = Float::new(bits);
        let a = Float::with_val(bits, self.a);
        let b = Float::with_val(bits, self.b);
        let p = Float::with_val(bits, self.p);
        let tol_f = Float::with_val(bits, tol);
        let mut small = 0;
        for k in 0..MAX_TERMS {
            if k > 0 {
                coef *= Float::with_val(bits, &p + (k - 1) as u32);
                coef /= k as u32;
                zk *= &zz;
            }
            arg.assign(&a * k as u32);
            arg += &b;
            let rg = recip_gamma_mpfr(&arg, bits);
            term.assign(&zk * &coef);
            term *= &rg;
            sum += &term;
            let tn = Float::with_val(bits, term.abs_ref());
            let sn = Float::with_val(bits, sum.abs_ref());
            if tn < Float::with_val(bits, &tol_f * &sn) {
                small += 1;
                if small >= 2 {
                    let (re, im) = sum.into_real_imag();
                    return Ok(Complex64::new(re.to_f64(), im.to_f64()));
                }
            } else {
                small = 0;
            }
        }
        Err(SpecFunError::Overflow {
            detail: format!("no convergence within {MAX_TERMS} terms"),
        })
    }
}

fn recip_gamma_mpfr(x: &Float, bits: u32) -> Float {
    if x.is_zero() || (x.is_sign_negative() && x.is_integer()) {
        return Float::with_val(bits, 0.0);
    }
    let g = Float::with_val(bits, x.gamma_ref());
    Float::with_val(bits, 1.0) / g
}
