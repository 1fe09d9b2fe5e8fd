//! Integrals along vertical lines Re(s) = gamma and along the half line
//! (0, upper) with a y^{-s} weight.

use num_complex::Complex64;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

use crate::quad::{exp_sinh, neville_at_zero, sinh_sinh, tanh_sinh, Estimate, QuadOptions};

/// Default regularizer schedule for `extrapolate_regularizer`.
pub const DEFAULT_EPS_SCHEDULE: [f64; 3] = [0.02, 0.01, 0.005];

/// Default damping rates for oscillatory half-line integrals.
pub const DEFAULT_DAMPINGS: [f64; 6] = [0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125];

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ContourError {
    #[error("invalid line: {0}")]
    InvalidLine(String),
    #[error("tail of the line integral is not negligible: |f| = {tail:.3e} at the cut, result {value:.3e}")]
    NonConvergence { tail: f64, value: f64 },
    #[error("regularizer extrapolation diverges: step {step} changed by {change:.3e} after {previous:.3e}")]
    Divergence { step: usize, change: f64, previous: f64 },
    #[error("integrand singularity y^-{power} is not integrable at 0")]
    Singularity { power: f64 },
    #[error("integrand is not finite near {at}")]
    NonFinite { at: f64 },
    #[error("quadrature did not reach tolerance: estimate {value:.6e} +- {error:.3e}")]
    Quadrature { value: f64, error: f64 },
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
}

/// Quadrature used along a line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineRule {
    /// Trapezoid on [-T, T] with `steps` intervals.
    Trapezoid,
    /// Sinh-sinh substitution over the whole line, for algebraic tails.
    DoubleExponential,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BromwichLine {
    pub abscissa: f64,
    pub half_height: f64,
    pub steps: usize,
    pub regularizer_eps: f64,
    pub rule: LineRule,
}

impl BromwichLine {
    pub fn new(abscissa: f64) -> Self {
        BromwichLine {
            abscissa,
            half_height: 200.0,
            steps: 20_000,
            regularizer_eps: 0.0,
            rule: LineRule::Trapezoid,
        }
    }

    pub fn double_exponential(abscissa: f64) -> Self {
        BromwichLine {
            rule: LineRule::DoubleExponential,
            ..BromwichLine::new(abscissa)
        }
    }

    pub fn with_abscissa(mut self, abscissa: f64) -> Self {
        self.abscissa = abscissa;
        self
    }

    pub fn with_regularizer(mut self, eps: f64) -> Self {
        self.regularizer_eps = eps;
        self
    }

    pub fn with_truncation(mut self, half_height: f64, steps: usize) -> Self {
        self.half_height = half_height;
        self.steps = steps;
        self
    }

    pub fn validate(&self) -> Result<(), ContourError> {
        if !self.abscissa.is_finite() {
            return Err(ContourError::InvalidLine(format!("abscissa {}", self.abscissa)));
        }
        if !(self.half_height > 0.0 && self.half_height.is_finite()) {
            return Err(ContourError::InvalidLine(format!("half_height {}", self.half_height)));
        }
        if self.steps < 64 {
            return Err(ContourError::InvalidLine(format!("steps {} < 64", self.steps)));
        }
        if !(self.regularizer_eps >= 0.0 && self.regularizer_eps.is_finite()) {
            return Err(ContourError::InvalidLine(format!(
                "regularizer_eps {}",
                self.regularizer_eps
            )));
        }
        Ok(())
    }

    /// Node spacing of the trapezoid rule.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_height / self.steps as f64
    }

    fn stretched_for(&self, eps: f64) -> BromwichLine {
        // e^{pi eps^2 s^2} falls below 1e-17 once |Im s| > 3.6 / eps
        let t = self.half_height.max(3.6 / eps);
        let steps = ((t / self.half_height) * self.steps as f64).ceil() as usize;
        BromwichLine {
            half_height: t,
            steps: steps + steps % 2,
            regularizer_eps: eps,
            ..*self
        }
    }
}

/// A complex function together with a note on where it may be evaluated.
#[derive(Clone)]
pub struct ComplexFunction {
    evaluator: Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>,
    pub domain_note: String,
}

impl ComplexFunction {
    pub fn new(f: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static, domain_note: impl Into<String>) -> Self {
        ComplexFunction {
            evaluator: Arc::new(f),
            domain_note: domain_note.into(),
        }
    }

    pub fn zero() -> Self {
        ComplexFunction::new(|_| Complex64::new(0.0, 0.0), "entire")
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        (self.evaluator)(s)
    }
}

impl fmt::Debug for ComplexFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ComplexFunction")
            .field("domain_note", &self.domain_note)
            .finish_non_exhaustive()
    }
}

/// (1/2 pi i) times the integral of `f` along the line, times the regularizer
/// e^{pi eps^2 s^2} when `line.regularizer_eps > 0`.
pub fn integrate_bromwich(f: &ComplexFunction, line: &BromwichLine) -> Result<Estimate<Complex64>, ContourError> {
    bromwich(|s| f.eval(s), line)
}

pub(crate) fn bromwich<F>(f: F, line: &BromwichLine) -> Result<Estimate<Complex64>, ContourError>
where
    F: Fn(Complex64) -> Complex64,
{
    line.validate()?;
    let gamma = line.abscissa;
    let eps = line.regularizer_eps;
    let g = |t: f64| {
        let s = Complex64::new(gamma, t);
        let v = f(s);
        if eps > 0.0 {
            v * (PI * eps * eps * s * s).exp()
        } else {
            v
        }
    };
    match line.rule {
        LineRule::Trapezoid => trapezoid_line(g, line),
        LineRule::DoubleExponential => {
            let opts = QuadOptions {
                rel_tol: 1e-13,
                max_level: 10,
                tmax: 5.0,
                ..Default::default()
            };
            let r = sinh_sinh(g, 0.0, 1.0, &opts);
            let value = r.value / (2.0 * PI);
            if !(value.re.is_finite() && value.im.is_finite()) {
                return Err(ContourError::NonFinite { at: gamma });
            }
            if !r.converged && r.error > 1e-8 * r.l1 {
                return Err(ContourError::Quadrature {
                    value: value.norm(),
                    error: r.error / (2.0 * PI),
                });
            }
            Ok(Estimate::new(value, r.error / (2.0 * PI)))
        }
    }
}

fn trapezoid_line<G>(g: G, line: &BromwichLine) -> Result<Estimate<Complex64>, ContourError>
where
    G: Fn(f64) -> Complex64,
{
    let n = line.steps + line.steps % 2;
    let t0 = line.half_height;
    let h = 2.0 * t0 / n as f64;
    let mut fine = Complex64::new(0.0, 0.0);
    let mut coarse = Complex64::new(0.0, 0.0);
    let mut ends = [Complex64::new(0.0, 0.0); 2];
    for j in 0..=n {
        let t = -t0 + j as f64 * h;
        let v = g(t);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(ContourError::NonFinite { at: t });
        }
        let w = if j == 0 || j == n { 0.5 } else { 1.0 };
        fine += v * w;
        if j % 2 == 0 {
            coarse += v * w;
        }
        if j == 0 {
            ends[0] = v;
        }
        if j == n {
            ends[1] = v;
        }
    }
    let value = fine * h / (2.0 * PI);
    let coarse = coarse * 2.0 * h / (2.0 * PI);
    let tail = ends[0].norm().max(ends[1].norm()) / (2.0 * PI);
    if tail > 1e-3 * value.norm() && tail > 1e-300 {
        return Err(ContourError::NonConvergence {
            tail,
            value: value.norm(),
        });
    }
    // the halved rule error dwarfs the true error for analytic integrands
    let error = ((value - coarse).norm() * 1e-3).max(tail * t0) + value.norm() * 1e-15;
    Ok(Estimate::new(value, error))
}

/// Runs `integrate_bromwich` for each regularizer width and extrapolates to
/// eps = 0 with Neville's scheme in eps^2.
///
/// The line is lengthened for each eps so the Gaussian factor has decayed at
/// the cut.
pub fn extrapolate_regularizer(
    f: &ComplexFunction,
    line: &BromwichLine,
    eps_sequence: &[f64],
) -> Result<Estimate<Complex64>, ContourError> {
    extrapolate_with(|s| f.eval(s), line, eps_sequence)
}

pub(crate) fn extrapolate_with<F>(
    f: F,
    line: &BromwichLine,
    eps_sequence: &[f64],
) -> Result<Estimate<Complex64>, ContourError>
where
    F: Fn(Complex64) -> Complex64,
{
    line.validate()?;
    if eps_sequence.len() < 2 {
        return Err(ContourError::InvalidSchedule("need at least two widths".into()));
    }
    for w in eps_sequence.windows(2) {
        if !(w[1] < w[0]) {
            return Err(ContourError::InvalidSchedule("widths must strictly decrease".into()));
        }
    }
    if eps_sequence.iter().any(|&e| !(e >= 1e-4)) {
        return Err(ContourError::InvalidSchedule("widths must be at least 1e-4".into()));
    }
    let mut xs = Vec::with_capacity(eps_sequence.len());
    let mut ys = Vec::with_capacity(eps_sequence.len());
    let mut quad_err: f64 = 0.0;
    for &eps in eps_sequence {
        let l = line.stretched_for(eps);
        let r = bromwich(&f, &l)?;
        xs.push(eps * eps);
        ys.push(r.value);
        quad_err = quad_err.max(r.error);
    }
    check_divergence(&ys)?;
    let e = neville_at_zero(&xs, &ys);
    Ok(Estimate::new(e.value, e.error + quad_err))
}

fn check_divergence(ys: &[Complex64]) -> Result<(), ContourError> {
    let scale = ys.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let floor = 1e-12 * scale.max(1e-300);
    for k in 2..ys.len() {
        let prev = (ys[k - 1] - ys[k - 2]).norm();
        let cur = (ys[k] - ys[k - 1]).norm();
        if cur > 10.0 * prev && cur > floor {
            return Err(ContourError::Divergence {
                step: k,
                change: cur,
                previous: prev,
            });
        }
    }
    Ok(())
}

fn halfline_options() -> QuadOptions {
    QuadOptions {
        rel_tol: 1e-14,
        max_level: 10,
        ..Default::default()
    }
}

/// Integral of f(y) y^{-power} over (0, upper).
///
/// `steps` is the number of equal panels on (0, upper); the first panel
/// carries the endpoint singularity. An infinite `upper` splits the range at
/// 1 and uses an exp-sinh rule on the tail.
pub fn integrate_halfline<F>(
    f: F,
    power: Complex64,
    upper: f64,
    steps: usize,
) -> Result<Estimate<Complex64>, ContourError>
where
    F: Fn(f64) -> Complex64,
{
    if power.re >= 1.0 {
        return Err(ContourError::Singularity { power: power.re });
    }
    if !(upper > 0.0) {
        return Err(ContourError::InvalidLine(format!("upper limit {upper}")));
    }
    let opts = halfline_options();
    let g = |y: f64| f(y) * (-power * y.ln()).exp();
    let mut total = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    let mut push = |value: Complex64, error: f64, converged: bool, at: f64| -> Result<(), ContourError> {
        if !(value.re.is_finite() && value.im.is_finite()) {
            return Err(ContourError::NonFinite { at });
        }
        if !converged && error > 1e-9 * value.norm().max(total.norm()).max(1e-300) {
            return Err(ContourError::Quadrature {
                value: value.norm(),
                error,
            });
        }
        total += value;
        err += error;
        Ok(())
    };
    if upper.is_infinite() {
        let head = tanh_sinh(|y: f64, _| g(y), 0.0, 1.0, &opts);
        push(head.value, head.error, head.converged, 0.0)?;
        let tail = exp_sinh(g, 1.0, 1.0, &opts);
        push(tail.value, tail.error, tail.converged, 1.0)?;
    } else {
        let panels = steps.max(1);
        let w = upper / panels as f64;
        for k in 0..panels {
            let a = k as f64 * w;
            let b = if k + 1 == panels { upper } else { a + w };
            let r = tanh_sinh(|y: f64, _| g(y), a, b, &opts);
            push(r.value, r.error, r.converged, a)?;
        }
    }
    Ok(Estimate::new(total, err))
}

/// Integral of f(y) y^{-power} over (0, inf) for oscillatory `f` that does
/// not decay, through e^{-eta y} damping and extrapolation to eta = 0.
pub fn integrate_halfline_damped<F>(
    f: F,
    power: Complex64,
    dampings: &[f64],
) -> Result<Estimate<Complex64>, ContourError>
where
    F: Fn(f64) -> Complex64,
{
    if dampings.len() < 2 {
        return Err(ContourError::InvalidSchedule("need at least two damping rates".into()));
    }
    for w in dampings.windows(2) {
        if !(w[1] < w[0] && w[1] > 0.0) {
            return Err(ContourError::InvalidSchedule(
                "damping rates must be positive and decreasing".into(),
            ));
        }
    }
    let mut ys = Vec::with_capacity(dampings.len());
    let mut quad_err: f64 = 0.0;
    for &eta in dampings {
        let upper = 40.0 / eta;
        let panels = (upper / PI).ceil() as usize;
        let r = integrate_halfline(|y| f(y) * (-eta * y).exp(), power, upper, panels)?;
        ys.push(r.value);
        quad_err += r.error;
    }
    let e = neville_at_zero(dampings, &ys);
    Ok(Estimate::new(e.value, e.error + quad_err))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::gamma;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gaussian_regularizer_integral() {
        // (1/2 pi i) * int e^{pi s^2} ds over the imaginary axis = (i/eps)/(2 pi i)
        let f = ComplexFunction::new(|s: Complex64| (PI * s * s).exp(), "entire");
        let line = BromwichLine::new(0.0).with_truncation(20.0, 4000);
        let v = integrate_bromwich(&f, &line).unwrap().value * 2.0 * PI * c(0.0, 1.0);
        assert!((v - c(0.0, 1.0)).norm() < 1e-13, "{v}");
    }

    #[test]
    fn inversion_of_gamma_at_one() {
        let f = ComplexFunction::new(|s| gamma(s).unwrap(), "Re s > 0");
        let v = integrate_bromwich(&f, &BromwichLine::new(0.5)).unwrap();
        assert!((v.value - c((-1.0f64).exp(), 0.0)).norm() < 1e-12);
    }

    #[test]
    fn zero_integrand() {
        let v = integrate_bromwich(&ComplexFunction::zero(), &BromwichLine::new(0.5)).unwrap();
        assert_eq!(v.value, c(0.0, 0.0));
    }

    #[test]
    fn slow_tail_is_reported() {
        let f = ComplexFunction::new(|s: Complex64| 1.0 / s, "Re s > 0");
        assert!(matches!(
            integrate_bromwich(&f, &BromwichLine::new(0.5)),
            Err(ContourError::NonConvergence { .. })
        ));
    }

    #[test]
    fn line_validation() {
        assert!(BromwichLine::new(0.5).with_truncation(10.0, 10).validate().is_err());
        assert!(BromwichLine::new(0.5).with_regularizer(-1.0).validate().is_err());
        assert!(BromwichLine::new(0.5).with_truncation(-1.0, 100).validate().is_err());
    }

    #[test]
    fn regularized_inversion_of_gamma_at_two() {
        let x: f64 = 2.0;
        let f = ComplexFunction::new(move |s: Complex64| gamma(s).unwrap() * (-s * x.ln()).exp(), "Re s > 0");
        let v = extrapolate_regularizer(&f, &BromwichLine::new(0.5), &DEFAULT_EPS_SCHEDULE).unwrap();
        assert!((v.value - c((-2.0f64).exp(), 0.0)).norm() < 1e-9, "{}", v.value);
    }

    #[test]
    fn schedule_validation() {
        let f = ComplexFunction::zero();
        let l = BromwichLine::new(0.5);
        assert!(extrapolate_regularizer(&f, &l, &[0.01, 0.02]).is_err());
        assert!(extrapolate_regularizer(&f, &l, &[0.01, 0.00001]).is_err());
        assert!(extrapolate_regularizer(&f, &l, &[0.01]).is_err());
    }

    #[test]
    fn divergence_is_detected() {
        let ys = [c(1.0, 0.0), c(1.001, 0.0), c(2.0, 0.0)];
        assert!(matches!(check_divergence(&ys), Err(ContourError::Divergence { .. })));
    }

    #[test]
    fn halfline_examples() {
        let v = integrate_halfline(|_| c(1.0, 0.0), c(0.5, 0.0), 1.0, 1).unwrap();
        assert!((v.value - 2.0).norm() < 1e-13);
        let v = integrate_halfline(|y| c((-y).exp(), 0.0), c(0.5, 0.0), 40.0, 8).unwrap();
        assert!((v.value.re - PI.sqrt()).abs() < 1e-12);
        assert!(matches!(
            integrate_halfline(|_| c(1.0, 0.0), c(1.0, 0.0), 1.0, 1),
            Err(ContourError::Singularity { .. })
        ));
    }

    #[test]
    fn damped_oscillatory_integral() {
        // int_0^inf e^{iy} y^{-1/2} dy = Gamma(1/2) e^{i pi/4}
        let v = integrate_halfline_damped(|y| Complex64::from_polar(1.0, y), c(0.5, 0.0), &DEFAULT_DAMPINGS).unwrap();
        let r = Complex64::from_polar(PI.sqrt(), PI / 4.0);
        assert!((v.value - r).norm() < 1e-7, "{} vs {r}", v.value);
    }
}
