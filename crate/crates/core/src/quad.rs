//! Double-exponential quadrature rules and extrapolation helpers.
//!
//! All rules are trapezoid sums after a change of variables. `tanh_sinh`
//! covers finite intervals with endpoint singularities, `exp_sinh` the
//! half line and `sinh_sinh` the whole line.

use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;
use std::ops::{Add, Mul, Sub};

/// Value types the quadrature rules can sum.
pub trait QuadValue: Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn magnitude(&self) -> f64;
    fn is_finite_value(&self) -> bool;
}

impl QuadValue for f64 {
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl QuadValue for Complex64 {
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn is_finite_value(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// A computed value with an estimate of its absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
}

impl<T> Estimate<T> {
    pub fn new(value: T, error: f64) -> Self {
        Estimate { value, error }
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Estimate<U> {
        Estimate {
            value: f(self.value),
            error: self.error,
        }
    }
}

/// Tolerances for the adaptive rules.
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_level: u32,
    pub tmax: f64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            rel_tol: 1e-13,
            abs_tol: 1e-300,
            max_level: 11,
            tmax: 6.5,
        }
    }
}

/// Result of an adaptive run, including whether the tolerance was met.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
    pub l1: f64,
    pub converged: bool,
    pub evaluations: usize,
}

impl<T> QuadResult<T> {
    pub fn estimate(self) -> Estimate<T> {
        Estimate::new(self.value, self.error)
    }
}

// Abscissa at level `level`: level 0 uses integer t, later levels only odd multiples of h.
fn level_nodes(level: u32, tmax: f64) -> impl Iterator<Item = f64> {
    let h = 0.5f64.powi(level as i32);
    let kmax = (tmax / h).floor() as i64;
    let step = if level == 0 { 1 } else { 2 };
    let start = if level == 0 { 0 } else { 1 };
    (0..)
        .map(move |i| start + step * i)
        .take_while(move |k| *k <= kmax)
        .map(move |k| k as f64 * h)
}

fn run_adaptive<T, F>(mut sample: F, opts: &QuadOptions) -> QuadResult<T>
where
    T: QuadValue,
    F: FnMut(f64) -> Option<(T, f64)>,
{
    // `sample(t)` returns (weight * f, |weight * f|) or None if the node is to be skipped.
    let mut raw = T::default();
    let mut raw_l1 = 0.0;
    let mut evals = 0usize;
    let mut prev: Option<T> = None;
    let mut prev_diff = f64::INFINITY;
    let mut value = T::default();
    let mut error = f64::INFINITY;
    let mut converged = false;
    for level in 0..=opts.max_level {
        let h = 0.5f64.powi(level as i32);
        for t in level_nodes(level, opts.tmax) {
            let signs: &[f64] = if t == 0.0 { &[1.0] } else { &[1.0, -1.0] };
            for &sg in signs {
                let tt = sg * t;
                if let Some((v, a)) = sample(tt) {
                    if v.is_finite_value() {
                        raw = raw + v;
                        raw_l1 += a;
                    } else if tt.abs() < 3.0 {
                        return QuadResult {
                            value: v,
                            error: f64::NAN,
                            l1: f64::NAN,
                            converged: false,
                            evaluations: evals,
                        };
                    }
                }
                evals += 1;
            }
        }
        value = raw * h;
        let l1 = raw_l1 * h;
        if let Some(p) = prev {
            let diff = (value - p).magnitude();
            // quadratic convergence: the next correction is roughly diff^2 / prev_diff
            error = if prev_diff.is_finite() && prev_diff > 0.0 && diff < prev_diff {
                (diff * diff / prev_diff).max(diff * 1e-3).max(l1 * 4e-16)
            } else {
                diff.max(l1 * 4e-16)
            };
            if level >= 3 && (diff <= opts.rel_tol * l1 || diff <= opts.abs_tol) {
                converged = true;
                error = error.max(l1 * 4e-16);
                return QuadResult {
                    value,
                    error,
                    l1,
                    converged,
                    evaluations: evals,
                };
            }
            prev_diff = diff;
        }
        prev = Some(value);
    }
    QuadResult {
        value,
        error,
        l1: raw_l1 * 0.5f64.powi(opts.max_level as i32),
        converged,
        evaluations: evals,
    }
}

/// Tanh-sinh rule on a finite interval `[a, b]`.
///
/// The integrand receives `(x, d)` where `d` is the distance to the nearest
/// endpoint, computed without cancellation. Endpoint singularities are fine.
pub fn tanh_sinh<T, F>(f: F, a: f64, b: f64, opts: &QuadOptions) -> QuadResult<T>
where
    T: QuadValue,
    F: Fn(f64, f64) -> T,
{
    let d = 0.5 * (b - a);
    if d == 0.0 {
        return QuadResult {
            value: T::default(),
            error: 0.0,
            l1: 0.0,
            converged: true,
            evaluations: 0,
        };
    }
    run_adaptive(
        |t| {
            let u = FRAC_PI_2 * t.sinh();
            let e = (-2.0 * u.abs()).exp();
            // 1 - tanh|u| = 2 e^{-2|u|} / (1 + e^{-2|u|})
            let dist = d * 2.0 * e / (1.0 + e);
            if dist == 0.0 {
                return None;
            }
            let x = if t >= 0.0 { b - dist } else { a + dist };
            if x <= a.min(b) || x >= a.max(b) {
                return None;
            }
            let cosh_u = 0.5 * (u.abs().exp() + (-u.abs()).exp());
            let w = d * FRAC_PI_2 * t.cosh() / (cosh_u * cosh_u);
            if w == 0.0 || !w.is_finite() {
                return None;
            }
            let v = f(x, dist);
            Some((v * w, v.magnitude() * w))
        },
        opts,
    )
}

/// Exp-sinh rule on `[a, inf)`: `x = a + scale * exp(pi/2 sinh t)`.
pub fn exp_sinh<T, F>(f: F, a: f64, scale: f64, opts: &QuadOptions) -> QuadResult<T>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    run_adaptive(
        |t| {
            let u = FRAC_PI_2 * t.sinh();
            let e = scale * u.exp();
            if e == 0.0 || !e.is_finite() {
                return None;
            }
            let x = a + e;
            if x == a {
                return None;
            }
            let w = FRAC_PI_2 * t.cosh() * e;
            let v = f(x);
            Some((v * w, v.magnitude() * w))
        },
        opts,
    )
}

/// Sinh-sinh rule on the real line: `x = center + scale * sinh(pi/2 sinh t)`.
pub fn sinh_sinh<T, F>(f: F, center: f64, scale: f64, opts: &QuadOptions) -> QuadResult<T>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    run_adaptive(
        |t| {
            let u = FRAC_PI_2 * t.sinh();
            let x = scale * u.sinh();
            let w = scale * FRAC_PI_2 * t.cosh() * u.cosh();
            if !w.is_finite() || !x.is_finite() {
                return None;
            }
            let v = f(center + x);
            Some((v * w, v.magnitude() * w))
        },
        opts,
    )
}

/// Fixed tanh-sinh rule with `n` nodes on `[a, b]`, for smooth integrands.
pub fn tanh_sinh_fixed<T, F>(f: F, a: f64, b: f64, n: usize) -> T
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    let tm = 3.6;
    let n = n.max(3);
    let h = 2.0 * tm / (n - 1) as f64;
    let c = 0.5 * (a + b);
    let d = 0.5 * (b - a);
    let mut acc = T::default();
    for j in 0..n {
        let t = -tm + j as f64 * h;
        let u = FRAC_PI_2 * t.sinh();
        let x = c + d * u.tanh();
        let cu = u.cosh();
        let w = d * FRAC_PI_2 * t.cosh() / (cu * cu);
        acc = acc + f(x) * w;
    }
    acc * h
}

/// Neville extrapolation of `ys` sampled at `xs` to `x = 0`.
///
/// Returns the extrapolated value and the change from the previous order as
/// an error estimate.
pub fn neville_at_zero<T: QuadValue>(xs: &[f64], ys: &[T]) -> Estimate<T> {
    assert_eq!(xs.len(), ys.len());
    assert!(!xs.is_empty());
    let n = xs.len();
    let mut p: Vec<T> = ys.to_vec();
    let mut last_diag = p[0];
    let mut prev_diag = p[0];
    for m in 1..n {
        for i in 0..n - m {
            let (xi, xim) = (xs[i], xs[i + m]);
            p[i] = (p[i + 1] * xi - p[i] * xim) * (1.0 / (xi - xim));
        }
        prev_diag = last_diag;
        last_diag = p[0];
    }
    let error = if n > 1 {
        (last_diag - prev_diag).magnitude()
    } else {
        f64::INFINITY
    };
    Estimate::new(last_diag, error)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tanh_sinh_handles_endpoint_singularity() {
        let r = tanh_sinh(|x: f64, _| x.powf(-0.5), 0.0, 1.0, &QuadOptions::default());
        assert!(r.converged);
        assert!((r.value - 2.0).abs() < 1e-13, "{}", r.value);
    }

    #[test]
    fn tanh_sinh_distance_is_exact_near_zero() {
        let r = tanh_sinh(
            |x: f64, d| if x < 0.5 { d.powf(-0.9) } else { x.powf(-0.9) },
            0.0,
            1.0,
            &QuadOptions::default(),
        );
        assert!((r.value - 10.0).abs() < 1e-12, "{}", r.value);
    }

    #[test]
    fn exp_sinh_gamma_integral() {
        let r = exp_sinh(|x: f64| (-x).exp() * x.powf(-0.5), 0.0, 1.0, &QuadOptions::default());
        assert!((r.value - std::f64::consts::PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn sinh_sinh_algebraic_tail() {
        let r = sinh_sinh(|x: f64| 1.0 / (1.0 + x * x), 0.0, 1.0, &QuadOptions::default());
        assert!((r.value - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn fixed_rule_polynomial() {
        let v: f64 = tanh_sinh_fixed(|x| x * x, 0.0, 3.0, 400);
        assert!((v - 9.0).abs() < 1e-12);
    }

    #[test]
    fn neville_recovers_polynomial_limit() {
        let xs = [0.4, 0.2, 0.1, 0.05];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 + 2.0 * x - x * x * x).collect();
        let e = neville_at_zero(&xs, &ys);
        assert!((e.value - 3.0).abs() < 1e-13);
    }

    #[test]
    fn neville_constant_data() {
        let e = neville_at_zero(&[0.3, 0.2, 0.1], &[Complex64::new(1.5, -2.0); 3]);
        assert!((e.value - Complex64::new(1.5, -2.0)).norm() < 1e-15);
        assert!(e.error < 1e-14);
    }
}
