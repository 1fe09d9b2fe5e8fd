//! Supercritical Bellman-Harris processes: recovering the life-time law from a
//! postulated limit law, closed forms for the Gamma family, and an
//! event-driven simulator.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::sync::Arc;
use thiserror::Error;

use crate::contour::{bromwich, BromwichLine, ContourError};
use crate::mellin::{ComplexFn, MellinPair, RealFn, Strip};
use crate::quad::{exp_sinh, tanh_sinh, Estimate, QuadOptions};
use crate::rng::replica_rng;
use crate::specfun::{gamma, gamma_real, is_gamma_pole, rgamma, SpecFunError};

/// Largest population a simulated replica may reach.
pub const EXPLOSION_LIMIT: usize = 10_000_000;
/// Points in the tabulated life-time CDF used for sampling.
pub const CDF_GRID: usize = 4096;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum BHError {
    #[error("invalid offspring law: {0}")]
    InvalidOffspring(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no Malthusian root in [{lo}, {hi}]")]
    NoRoot { lo: f64, hi: f64 },
    #[error("pole at s = {0}")]
    Pole(Complex64),
    #[error("denominator of the recovery ratio is {0:.3e}")]
    SmallDenominator(f64),
    #[error("quadrature did not converge: {value:.6e} +- {error:.3e}")]
    Quadrature { value: f64, error: f64 },
    #[error("replica {replica} exceeded {EXPLOSION_LIMIT} individuals")]
    Explosion { replica: u64 },
    #[error(transparent)]
    Contour(#[from] ContourError),
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
}

/// Offspring law {pi_j}: `coefficients[j]` is the probability of j children.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringPGF {
    coefficients: Vec<f64>,
    cumulative: Vec<f64>,
}

impl OffspringPGF {
    pub fn new(coefficients: Vec<f64>) -> Result<Self, BHError> {
        if coefficients.is_empty() || coefficients.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
            return Err(BHError::InvalidOffspring(format!("{coefficients:?}")));
        }
        let total: f64 = coefficients.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(BHError::InvalidOffspring(format!("probabilities sum to {total}")));
        }
        let mut acc = 0.0;
        let cumulative = coefficients
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(OffspringPGF {
            coefficients,
            cumulative,
        })
    }

    /// f(s) = s^m.
    pub fn power(m: usize) -> Self {
        let mut c = vec![0.0; m + 1];
        c[m] = 1.0;
        OffspringPGF::new(c).expect("point mass")
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn mean(&self) -> f64 {
        self.coefficients.iter().enumerate().map(|(j, p)| j as f64 * p).sum()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coefficients
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &p| acc * z + p)
    }

    /// Number of children for a uniform draw `u` in [0, 1).
    pub fn sample(&self, u: f64) -> usize {
        self.cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.coefficients.len() - 1)
    }

    fn check_recoverable(&self) -> Result<(), BHError> {
        if self.coefficients[0] > 0.0 {
            return Err(BHError::InvalidOffspring("recovery needs pi_0 = 0".into()));
        }
        if !(self.mean() > 1.0) {
            return Err(BHError::InvalidOffspring(format!(
                "mean {} is not supercritical",
                self.mean()
            )));
        }
        Ok(())
    }
}

/// Life-time law G on (0, inf) through its density and Laplace transform.
#[derive(Clone)]
pub struct LifetimeDistribution {
    pub density: RealFn,
    pub laplace: ComplexFn,
    pub support_note: String,
}

impl std::fmt::Debug for LifetimeDistribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LifetimeDistribution")
            .field("support_note", &self.support_note)
            .finish()
    }
}

impl LifetimeDistribution {
    pub fn new(
        density: impl Fn(f64) -> f64 + Send + Sync + 'static,
        laplace: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static,
        support_note: impl Into<String>,
    ) -> Self {
        LifetimeDistribution {
            density: Arc::new(density),
            laplace: Arc::new(laplace),
            support_note: support_note.into(),
        }
    }

    pub fn exponential(rate: f64) -> Result<Self, BHError> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(BHError::InvalidInput(format!("rate = {rate}")));
        }
        Ok(LifetimeDistribution::new(
            move |t| if t >= 0.0 { rate * (-rate * t).exp() } else { 0.0 },
            move |s| rate / (rate + s),
            format!("exponential, rate {rate}"),
        ))
    }

    /// The life-time law paired with f(s) = s^m and the Gamma(kappa) limit.
    pub fn gamma_case(kappa: f64, m: usize) -> Result<Self, BHError> {
        check_gamma_case(kappa, m)?;
        let c = gamma_real(m as f64 * kappa)? / (gamma_real(kappa)? * gamma_real((m - 1) as f64 * kappa)?);
        let p = (m - 1) as f64 * kappa - 1.0;
        Ok(LifetimeDistribution::new(
            move |t| {
                if t > 0.0 {
                    c * (-kappa * t).exp() * (-(-t).exp_m1()).powf(p)
                } else {
                    0.0
                }
            },
            move |s| gamma_case_lifetime_laplace(kappa, m, s).unwrap_or(Complex64::new(f64::NAN, f64::NAN)),
            format!("Gamma family, kappa {kappa}, m {m}"),
        ))
    }

    pub fn mass(&self) -> Result<Estimate<f64>, BHError> {
        let g = self.density.clone();
        positive_halfline(move |t| g(t))
    }

    /// Laplace transform of the density by quadrature, for real s >= 0.
    pub fn numeric_laplace(&self, s: f64) -> Result<Estimate<f64>, BHError> {
        let g = self.density.clone();
        positive_halfline(move |t| (-s * t).exp() * g(t))
    }

    /// Sign pattern of finite differences of the Laplace transform at
    /// `k * step`, k = 0..count: the order-j difference must have sign (-1)^j.
    pub fn completely_monotone_on_grid(&self, step: f64, count: usize, max_order: usize) -> bool {
        let vals: Vec<f64> = (0..=count)
            .map(|k| (self.laplace)(Complex64::new(k as f64 * step, 0.0)).re)
            .collect();
        alternating_differences(&vals, max_order)
    }
}

/// True when the j-th forward differences of `values` have sign (-1)^j for
/// j = 0..=max_order.
pub fn alternating_differences(values: &[f64], max_order: usize) -> bool {
    let mut d = values.to_vec();
    for order in 0..=max_order {
        let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
        if d.is_empty() || d.iter().any(|&x| !(sign * x >= 0.0)) {
            return false;
        }
        d = d.windows(2).map(|w| w[1] - w[0]).collect();
    }
    true
}

fn positive_halfline(f: impl Fn(f64) -> f64) -> Result<Estimate<f64>, BHError> {
    let opts = QuadOptions::default();
    let a = tanh_sinh(|t, _| f(t), 0.0, 1.0, &opts);
    let b = exp_sinh(&f, 1.0, 1.0, &opts);
    let value = a.value + b.value;
    let error = a.error + b.error;
    if !value.is_finite() || (!(a.converged && b.converged) && error > 1e-10 * value.abs().max(1e-300)) {
        return Err(BHError::Quadrature { value, error });
    }
    Ok(Estimate::new(value, error))
}

/// Limit law Z of the normed process, through psi(u) = E e^{-u Z} and the
/// Mellin transform of its density.
#[derive(Clone)]
pub struct LimitLaw {
    pub laplace: ComplexFn,
    pub mellin: MellinPair,
    /// Exponential decay rate of the density.
    pub decay: f64,
}

impl std::fmt::Debug for LimitLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LimitLaw").field("decay", &self.decay).finish()
    }
}

impl LimitLaw {
    pub fn new(laplace: ComplexFn, mellin: MellinPair, decay: f64) -> Result<Self, BHError> {
        if !(decay > 0.0) {
            return Err(BHError::InvalidInput(format!("decay = {decay}")));
        }
        let at0 = laplace(Complex64::new(0.0, 0.0));
        if (at0 - 1.0).norm() > 1e-12 {
            return Err(BHError::InvalidInput(format!("psi(0) = {at0}")));
        }
        Ok(LimitLaw { laplace, mellin, decay })
    }

    /// Gamma(kappa, 1): psi(u) = (1 + u)^{-kappa}.
    pub fn gamma(kappa: f64) -> Result<Self, BHError> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(BHError::InvalidInput(format!("kappa = {kappa}")));
        }
        let rg = 1.0 / gamma_real(kappa)?;
        let strip = Strip::new(1.0 - kappa, f64::INFINITY).map_err(|e| BHError::InvalidInput(e.to_string()))?;
        let mellin = MellinPair::plus_only(
            move |s| {
                gamma(s + kappa - 1.0)
                    .map(|g| g * rg)
                    .unwrap_or(Complex64::new(f64::NAN, f64::NAN))
            },
            strip,
        );
        LimitLaw::new(Arc::new(move |u: Complex64| (1.0 + u).powf(-kappa)), mellin, 1.0)
    }

    pub fn eval(&self, u: Complex64) -> Complex64 {
        (self.laplace)(u)
    }
}

/// Root beta of mu * int e^{-beta t} dG(t) = 1 by bisection on `bracket`.
pub fn malthusian(f: &OffspringPGF, g: &LifetimeDistribution, bracket: (f64, f64)) -> Result<f64, BHError> {
    let mu = f.mean();
    let h = |y: f64| mu * (g.laplace)(Complex64::new(y, 0.0)).re - 1.0;
    let (mut lo, mut hi) = bracket;
    if !(lo < hi && lo.is_finite() && hi.is_finite()) {
        return Err(BHError::InvalidInput(format!("bracket [{lo}, {hi}]")));
    }
    let (hlo, hhi) = (h(lo), h(hi));
    if !(hlo.is_finite() && hhi.is_finite()) || hlo.signum() == hhi.signum() {
        return Err(BHError::NoRoot { lo, hi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let hm = h(mid);
        if hm == 0.0 {
            return Ok(mid);
        }
        if hm.signum() == hlo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let beta = 0.5 * (lo + hi);
    if !(beta > 0.0) {
        return Err(BHError::NoRoot {
            lo: bracket.0,
            hi: bracket.1,
        });
    }
    Ok(beta)
}

/// Line used for the recovery ratio: double-exponential on Re(u) = -1/2.
pub fn default_recovery_line() -> BromwichLine {
    BromwichLine::double_exponential(-0.5)
}

/// Laplace transform of G at s as the ratio
/// int psi(u) (-u)^{-s-1} du / int f(psi(u)) (-u)^{-s-1} du along Re(u) = beta.
pub fn recover_lifetime_laplace(
    psi: &LimitLaw,
    f: &OffspringPGF,
    s: Complex64,
    line: &BromwichLine,
) -> Result<Estimate<Complex64>, BHError> {
    f.check_recoverable()?;
    if !(s.re >= 0.0 && s.im.is_finite()) {
        return Err(BHError::InvalidInput(format!("s = {s} needs Re(s) >= 0")));
    }
    let beta = line.abscissa;
    if !(beta < 0.0 && -beta < psi.decay) {
        return Err(BHError::InvalidInput(format!(
            "abscissa {beta} must lie in (-{}, 0)",
            psi.decay
        )));
    }
    let kernel = |u: Complex64| ((-s - 1.0) * (-u).ln()).exp();
    let num = bromwich(|u| psi.eval(u) * kernel(u), line)?;
    let den = bromwich(|u| f.eval(psi.eval(u)) * kernel(u), line)?;
    if den.value.norm() < 1e-14 {
        return Err(BHError::SmallDenominator(den.value.norm()));
    }
    let value = num.value / den.value;
    let rel = num.error / num.value.norm().max(1e-300) + den.error / den.value.norm();
    Ok(Estimate::new(value, rel * value.norm()))
}

fn check_gamma_case(kappa: f64, m: usize) -> Result<(), BHError> {
    if !(kappa > 0.0 && kappa.is_finite()) || m < 2 {
        return Err(BHError::InvalidInput(format!("kappa = {kappa}, m = {m}")));
    }
    Ok(())
}

/// Gamma(s + kappa) Gamma(m kappa) / (Gamma(s + m kappa) Gamma(kappa)).
pub fn gamma_case_lifetime_laplace(kappa: f64, m: usize, s: Complex64) -> Result<Complex64, BHError> {
    check_gamma_case(kappa, m)?;
    let a = s + kappa;
    if is_gamma_pole(a) {
        return Err(BHError::Pole(s));
    }
    let mk = m as f64 * kappa;
    Ok(gamma(a)? * rgamma(s + mk) * (gamma_real(mk)? / gamma_real(kappa)?))
}

/// Gamma(m kappa) / (Gamma(kappa) Gamma(m kappa - kappa)) e^{-kappa t} (1 - e^{-t})^{(m-1) kappa - 1}.
pub fn gamma_case_lifetime_density(kappa: f64, m: usize, t: f64) -> Result<f64, BHError> {
    if !(t > 0.0) {
        return Err(BHError::InvalidInput(format!("t = {t}")));
    }
    Ok((LifetimeDistribution::gamma_case(kappa, m)?.density)(t))
}

/// [Gamma(s + kappa) / Gamma(kappa)] / sum_j pi_j Gamma(s + j kappa) / Gamma(j kappa).
pub fn poly_case_lifetime_laplace(f: &OffspringPGF, kappa: f64, s: Complex64) -> Result<Complex64, BHError> {
    f.check_recoverable()?;
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(BHError::InvalidInput(format!("kappa = {kappa}")));
    }
    let a = s + kappa;
    if is_gamma_pole(a) {
        return Err(BHError::Pole(s));
    }
    let mut den = Complex64::new(0.0, 0.0);
    for (j, &p) in f.coefficients().iter().enumerate().skip(1) {
        if p > 0.0 {
            let jk = j as f64 * kappa;
            if is_gamma_pole(s + jk) {
                return Err(BHError::Pole(s));
            }
            den += p * gamma(s + jk)? / gamma_real(jk)?;
        }
    }
    if den.norm() < 1e-300 || !den.is_finite() {
        return Err(BHError::SmallDenominator(den.norm()));
    }
    Ok(gamma(a)? / gamma_real(kappa)? / den)
}

/// |psi(u) - int f(psi(u e^{-beta t})) dG(t)|.
pub fn fixed_point_residual(
    psi: &LimitLaw,
    f: &OffspringPGF,
    g: &LifetimeDistribution,
    beta: f64,
    u: f64,
) -> Result<f64, BHError> {
    Ok(fixed_point_estimate(psi, f, g, beta, u)?.value)
}

/// The fixed-point residual with the quadrature error of the right-hand side.
pub fn fixed_point_estimate(
    psi: &LimitLaw,
    f: &OffspringPGF,
    g: &LifetimeDistribution,
    beta: f64,
    u: f64,
) -> Result<Estimate<f64>, BHError> {
    if !(u >= 0.0 && u.is_finite()) || !(beta > 0.0 && beta.is_finite()) {
        return Err(BHError::InvalidInput(format!("u = {u}, beta = {beta}")));
    }
    let rhs = positive_halfline(|t| {
        let inner = psi.eval(Complex64::new(u * (-beta * t).exp(), 0.0));
        f.eval(inner).re * (g.density)(t)
    })?;
    Ok(Estimate::new(
        (psi.eval(Complex64::new(u, 0.0)).re - rhs.value).abs(),
        rhs.error,
    ))
}

/// Inverse-CDF sampler for a life-time density: the CDF is tabulated on a
/// grid refined towards 0 and inverted through a monotone cubic, with
/// bisection on the exact CDF in the far tail.
#[derive(Clone)]
pub struct LifetimeSampler {
    density: RealFn,
    t: Vec<f64>,
    cdf: Vec<f64>,
    slope: Vec<f64>,
}

impl std::fmt::Debug for LifetimeSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LifetimeSampler")
            .field("points", &self.t.len())
            .finish()
    }
}

impl LifetimeSampler {
    pub fn new(g: &LifetimeDistribution) -> Result<Self, BHError> {
        let density = g.density.clone();
        let opts = QuadOptions::default();
        let mut tmax = 1.0;
        loop {
            let tail = exp_sinh(|t| density(t), tmax, 1.0, &opts).value;
            if tail < 1e-14 {
                break;
            }
            tmax *= 2.0;
            if tmax > 1e6 {
                return Err(BHError::InvalidInput("life-time tail does not decay".into()));
            }
        }
        let n = CDF_GRID - 1;
        let t: Vec<f64> = (0..=n).map(|i| tmax * (i as f64 / n as f64).powi(2)).collect();
        let mut cdf = vec![0.0; t.len()];
        for i in 1..t.len() {
            let r = tanh_sinh(|x, _| density(x), t[i - 1], t[i], &opts);
            cdf[i] = cdf[i - 1] + r.value;
        }
        if !cdf[n].is_finite() || (cdf[n] - 1.0).abs() > 1e-8 {
            return Err(BHError::InvalidInput(format!("life-time density has mass {}", cdf[n])));
        }
        // exact slopes, limited so the Hermite cubic stays monotone
        let mut slope: Vec<f64> = t
            .iter()
            .map(|&x| if x > 0.0 { density(x) } else { f64::INFINITY })
            .collect();
        for i in 0..t.len() {
            let mut cap = f64::INFINITY;
            if i > 0 {
                cap = cap.min(3.0 * (cdf[i] - cdf[i - 1]) / (t[i] - t[i - 1]));
            }
            if i < n {
                cap = cap.min(3.0 * (cdf[i + 1] - cdf[i]) / (t[i + 1] - t[i]));
            }
            slope[i] = slope[i].max(0.0).min(cap);
        }
        Ok(LifetimeSampler { density, t, cdf, slope })
    }

    fn hermite(&self, i: usize, x: f64) -> (f64, f64) {
        let h = self.t[i + 1] - self.t[i];
        let r = (x - self.t[i]) / h;
        let (y0, y1, m0, m1) = (self.cdf[i], self.cdf[i + 1], self.slope[i] * h, self.slope[i + 1] * h);
        let r2 = r * r;
        let r3 = r2 * r;
        let v =
            (2.0 * r3 - 3.0 * r2 + 1.0) * y0 + (r3 - 2.0 * r2 + r) * m0 + (-2.0 * r3 + 3.0 * r2) * y1 + (r3 - r2) * m1;
        let d = ((6.0 * r2 - 6.0 * r) * y0
            + (3.0 * r2 - 4.0 * r + 1.0) * m0
            + (-6.0 * r2 + 6.0 * r) * y1
            + (3.0 * r2 - 2.0 * r) * m1)
            / h;
        (v, d)
    }

    /// Quantile of `u` in [0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        let n = self.t.len() - 1;
        if u >= self.cdf[n] {
            return self.tail_quantile(u);
        }
        let i = self.cdf.partition_point(|&c| c <= u).saturating_sub(1).min(n - 1);
        let (mut lo, mut hi) = (self.t[i], self.t[i + 1]);
        let mut x = 0.5 * (lo + hi);
        for _ in 0..100 {
            let (v, d) = self.hermite(i, x);
            let r = v - u;
            if r.abs() <= 1e-16 || hi - lo <= 1e-15 * hi {
                break;
            }
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let newton = x - r / d;
            x = if d > 0.0 && newton >= lo && newton <= hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        x
    }

    fn tail_quantile(&self, u: f64) -> f64 {
        let n = self.t.len() - 1;
        let opts = QuadOptions::default();
        let cdf = |x: f64| self.cdf[n] + tanh_sinh(|y, _| (self.density)(y), self.t[n], x, &opts).value;
        let mut lo = self.t[n];
        let mut hi = 2.0 * lo;
        while cdf(hi) <= u && hi < 1e8 {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if cdf(mid) <= u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }
}

/// Population sizes at the horizon, one per replica, and their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct BHSummary {
    pub samples: Vec<u64>,
    pub mean: f64,
    pub mean_se: f64,
}

#[derive(PartialEq)]
struct Death(f64);

impl Eq for Death {}

impl PartialOrd for Death {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Death {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn run_bh_replica(
    f: &OffspringPGF,
    sampler: &LifetimeSampler,
    horizon: f64,
    seed: u64,
    replica: u64,
) -> Result<u64, BHError> {
    let mut rng = replica_rng(seed, replica);
    let mut queue = BinaryHeap::new();
    queue.push(Reverse(Death(sampler.sample(&mut rng))));
    while let Some(Reverse(Death(t))) = queue.peek() {
        let t = *t;
        if t > horizon {
            break;
        }
        queue.pop();
        let children = f.sample(rng.random::<f64>());
        for _ in 0..children {
            queue.push(Reverse(Death(t + sampler.sample(&mut rng))));
        }
        if queue.len() > EXPLOSION_LIMIT {
            return Err(BHError::Explosion { replica });
        }
    }
    Ok(queue.len() as u64)
}

/// Runs `replicas` independent processes from one newborn individual up to
/// `horizon`. Each individual lives a G-distributed time and is then replaced
/// by its children.
pub fn simulate_bellman_harris(
    f: &OffspringPGF,
    g: &LifetimeDistribution,
    horizon: f64,
    replicas: usize,
    seed: u64,
) -> Result<BHSummary, BHError> {
    if !(horizon > 0.0 && horizon.is_finite()) || replicas == 0 {
        return Err(BHError::InvalidInput(format!(
            "horizon = {horizon}, replicas = {replicas}"
        )));
    }
    let sampler = LifetimeSampler::new(g)?;
    let samples = (0..replicas as u64)
        .into_par_iter()
        .map(|r| run_bh_replica(f, &sampler, horizon, seed, r))
        .collect::<Result<Vec<u64>, BHError>>()?;
    let stats = mean_and_se(samples.iter().map(|&z| z as f64));
    Ok(BHSummary {
        samples,
        mean: stats.value,
        mean_se: stats.error,
    })
}

fn mean_and_se(xs: impl Iterator<Item = f64> + Clone) -> Estimate<f64> {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    Estimate::new(mean, (var / n).sqrt())
}

/// Sample mean of e^{-u Z / norm} with its standard error.
pub fn empirical_laplace(samples: &[u64], norm: f64, u: f64) -> Estimate<f64> {
    mean_and_se(samples.iter().map(move |&z| (-u * z as f64 / norm).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn offspring_validation() {
        assert!(OffspringPGF::new(vec![0.5, 0.4]).is_err());
        assert!(OffspringPGF::new(vec![-0.1, 1.1]).is_err());
        let f = OffspringPGF::new(vec![0.0, 0.0, 0.5, 0.5]).unwrap();
        assert_eq!(f.mean(), 2.5);
        assert!((f.eval(c(0.5)) - (0.125 + 0.0625)).norm() < 1e-16);
        assert_eq!(f.sample(0.2), 2);
        assert_eq!(f.sample(0.7), 3);
    }

    #[test]
    fn malthusian_examples() {
        let g = LifetimeDistribution::exponential(1.0).unwrap();
        let b = malthusian(&OffspringPGF::power(2), &g, (1e-6, 50.0)).unwrap();
        assert!((b - 1.0).abs() < 1e-12);
        for &kappa in &[0.5, 1.0, 2.0] {
            for m in 2..=3 {
                let g = LifetimeDistribution::gamma_case(kappa, m).unwrap();
                let b = malthusian(&OffspringPGF::power(m), &g, (1e-6, 50.0)).unwrap();
                assert!((b - 1.0).abs() < 1e-10, "kappa {kappa} m {m}: {b}");
            }
        }
        let sub = OffspringPGF::new(vec![0.5, 0.0, 0.5]).unwrap();
        assert!(matches!(
            malthusian(&sub, &g, (1e-6, 50.0)),
            Err(BHError::NoRoot { .. })
        ));
    }

    #[test]
    fn gamma_case_examples() {
        assert!((gamma_case_lifetime_laplace(1.0, 2, c(1.0)).unwrap() - 0.5).norm() < 1e-15);
        assert!((gamma_case_lifetime_laplace(1.7, 3, c(0.0)).unwrap() - 1.0).norm() < 1e-14);
        assert!((gamma_case_lifetime_laplace(0.5, 2, c(2.0)).unwrap() - 0.375).norm() < 1e-14);
        for &t in &[0.1, 1.0, 4.0] {
            assert!((gamma_case_lifetime_density(1.0, 2, t).unwrap() - (-t).exp()).abs() < 1e-15);
        }
        assert!(gamma_case_lifetime_density(1.5, 3, 1e-12).unwrap() < 1e-10);
        assert!(gamma_case_lifetime_density(1.0, 2, 0.0).is_err());
    }

    #[test]
    fn gamma_case_density_is_consistent() {
        for &kappa in &[0.5, 1.0, 2.0] {
            for m in 2..=3 {
                let g = LifetimeDistribution::gamma_case(kappa, m).unwrap();
                assert!((g.mass().unwrap().value - 1.0).abs() < 1e-8, "kappa {kappa} m {m}");
                for &s in &[0.5, 1.0, 2.0] {
                    let numeric = g.numeric_laplace(s).unwrap().value;
                    let closed = gamma_case_lifetime_laplace(kappa, m, c(s)).unwrap().re;
                    assert!((numeric - closed).abs() < 1e-8);
                }
                assert!(g.completely_monotone_on_grid(0.1, 30, 4));
            }
        }
    }

    #[test]
    fn poly_case_examples() {
        let f2 = OffspringPGF::power(2);
        assert!((poly_case_lifetime_laplace(&f2, 1.0, c(1.0)).unwrap() - 0.5).norm() < 1e-15);
        let mix = OffspringPGF::new(vec![0.0, 0.0, 0.5, 0.5]).unwrap();
        assert!((poly_case_lifetime_laplace(&mix, 1.3, c(0.0)).unwrap() - 1.0).norm() < 1e-14);
        assert!((poly_case_lifetime_laplace(&mix, 1.0, c(1.0)).unwrap() - 0.4).norm() < 1e-15);
        let s = Complex64::new(0.8, 0.6);
        let a = poly_case_lifetime_laplace(&OffspringPGF::power(3), 0.7, s).unwrap();
        assert!((a - gamma_case_lifetime_laplace(0.7, 3, s).unwrap()).norm() < 1e-14);
        let with_death = OffspringPGF::new(vec![0.1, 0.0, 0.9]).unwrap();
        assert!(poly_case_lifetime_laplace(&with_death, 1.0, c(1.0)).is_err());
    }

    #[test]
    fn recovery_examples() {
        let line = default_recovery_line();
        let psi = LimitLaw::gamma(1.0).unwrap();
        let f2 = OffspringPGF::power(2);
        assert!((recover_lifetime_laplace(&psi, &f2, c(1.0), &line).unwrap().value - 0.5).norm() < 1e-10);
        assert!((recover_lifetime_laplace(&psi, &f2, c(0.0), &line).unwrap().value - 1.0).norm() < 1e-10);
        let psi2 = LimitLaw::gamma(2.0).unwrap();
        let f3 = OffspringPGF::power(3);
        let v = recover_lifetime_laplace(&psi2, &f3, c(1.5), &line).unwrap().value;
        assert!((v - gamma_case_lifetime_laplace(2.0, 3, c(1.5)).unwrap()).norm() < 1e-8);
        assert!(recover_lifetime_laplace(&psi, &f2, c(-0.5), &line).is_err());
        assert!(recover_lifetime_laplace(&psi, &f2, c(1.0), &line.with_abscissa(-1.5)).is_err());
    }

    #[test]
    fn recovery_matches_closed_forms() {
        let line = default_recovery_line();
        let mix = OffspringPGF::new(vec![0.0, 0.0, 0.5, 0.5]).unwrap();
        for &kappa in &[0.5, 1.0, 2.0] {
            let psi = LimitLaw::gamma(kappa).unwrap();
            for f in [OffspringPGF::power(2), OffspringPGF::power(3), mix.clone()] {
                for &s in &[0.5, 1.0, 2.0] {
                    let r = recover_lifetime_laplace(&psi, &f, c(s), &line).unwrap().value;
                    let p = poly_case_lifetime_laplace(&f, kappa, c(s)).unwrap();
                    assert!((r - p).norm() < 1e-8, "kappa {kappa} s {s}: {r} vs {p}");
                    assert!(r.norm() <= 1.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn fixed_point_examples() {
        let psi = LimitLaw::gamma(1.0).unwrap();
        let f2 = OffspringPGF::power(2);
        let g = LifetimeDistribution::exponential(1.0).unwrap();
        assert!(fixed_point_residual(&psi, &f2, &g, 1.0, 0.0).unwrap() < 1e-14);
        assert!(fixed_point_residual(&psi, &f2, &g, 1.0, 1.0).unwrap() < 1e-8);
        let g2 = LifetimeDistribution::exponential(2.0).unwrap();
        assert!(fixed_point_residual(&psi, &f2, &g2, 1.0, 1.0).unwrap() > 1e-2);
    }

    #[test]
    fn fixed_point_holds_for_gamma_family() {
        for &kappa in &[0.5, 1.0, 2.0] {
            for m in 2..=3 {
                let psi = LimitLaw::gamma(kappa).unwrap();
                let g = LifetimeDistribution::gamma_case(kappa, m).unwrap();
                for &u in &[0.1, 0.5, 1.0, 2.0, 5.0] {
                    let r = fixed_point_residual(&psi, &OffspringPGF::power(m), &g, 1.0, u).unwrap();
                    assert!(r < 1e-6, "kappa {kappa} m {m} u {u}: {r}");
                }
            }
        }
    }

    #[test]
    fn sampler_inverts_cdf() {
        let g = LifetimeDistribution::exponential(1.0).unwrap();
        let s = LifetimeSampler::new(&g).unwrap();
        for &u in &[1e-9, 0.1, 0.5, 0.9, 0.999999] {
            let x = s.quantile(u);
            assert!((x - -(-u).ln_1p()).abs() < 1e-7 * x.max(1.0), "u {u}: {x}");
        }
        let g = LifetimeDistribution::gamma_case(0.5, 2).unwrap();
        let s = LifetimeSampler::new(&g).unwrap();
        // here G(t) = (2/pi) asin(sqrt(1 - e^{-t}))
        for &u in &[0.01, 0.3, 0.8] {
            let x = s.quantile(u);
            let cdf = 2.0 / std::f64::consts::PI * (-(-x).exp_m1()).sqrt().asin();
            assert!((cdf - u).abs() < 1e-7, "u {u}: {cdf}");
        }
    }

    #[test]
    fn single_offspring_keeps_one() {
        let g = LifetimeDistribution::gamma_case(2.0, 2).unwrap();
        let r = simulate_bellman_harris(&OffspringPGF::power(1), &g, 10.0, 50, 3).unwrap();
        assert!(r.samples.iter().all(|&z| z == 1));
    }

    #[test]
    fn extinction_is_allowed() {
        let g = LifetimeDistribution::exponential(1.0).unwrap();
        let f = OffspringPGF::new(vec![1.0]).unwrap();
        let r = simulate_bellman_harris(&f, &g, 5.0, 20, 1).unwrap();
        assert!(r.samples.iter().all(|&z| z <= 1));
    }

    #[test]
    fn yule_mean_and_limit() {
        let g = LifetimeDistribution::exponential(1.0).unwrap();
        let horizon = 5.0;
        let r = simulate_bellman_harris(&OffspringPGF::power(2), &g, horizon, 10_000, 7).unwrap();
        let e = horizon.exp();
        assert!((r.mean / e - 1.0).abs() < 3.0 * r.mean_se / e);
        for &u in &[0.5, 1.0, 2.0] {
            let est = empirical_laplace(&r.samples, e, u);
            assert!((est.value - 1.0 / (1.0 + u)).abs() < 3.0 * est.error, "u {u}");
        }
    }

    #[test]
    fn alternating_differences_detects_violations() {
        let good: Vec<f64> = (0..10).map(|k| (-(k as f64) * 0.3).exp()).collect();
        assert!(alternating_differences(&good, 4));
        let bad: Vec<f64> = (0..10).map(|k| 1.0 / (1.0 + (k as f64 * 0.3).powi(3))).collect();
        assert!(!alternating_differences(&bad, 4));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn recovered_laplace_is_bounded(kappa in 0.5..2.5f64, p2 in 0.0..1.0f64, s in 0.0..3.0f64) {
            let f = OffspringPGF::new(vec![0.0, 0.0, p2, 1.0 - p2]).unwrap();
            let psi = LimitLaw::gamma(kappa).unwrap();
            let r = recover_lifetime_laplace(&psi, &f, c(s), &default_recovery_line()).unwrap().value;
            prop_assert!(r.norm() <= 1.0 + 1e-10);
            prop_assert!((r - poly_case_lifetime_laplace(&f, kappa, c(s)).unwrap()).norm() < 1e-8);
        }

        #[test]
        fn simulation_is_reproducible(seed in 0u64..1000) {
            let g = LifetimeDistribution::exponential(1.0).unwrap();
            let f = OffspringPGF::power(2);
            let a = simulate_bellman_harris(&f, &g, 2.0, 8, seed).unwrap();
            let b = simulate_bellman_harris(&f, &g, 2.0, 8, seed).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
