//! The (1 - rho, kappa) Luria-Delbrück process: an embedded-chain simulator
//! and the Mellin and Laplace transforms of its limit law.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::rng::replica_rng;
use crate::specfun::{gamma, gamma_real, is_gamma_pole, prabhakar_series, rgamma, SpecFunError};

/// Largest n * kappa a single replica may run.
pub const STEP_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LDError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("pole at s = {0}")]
    Pole(Complex64),
    #[error("size-biasing normalizer vanishes at {0}")]
    ZeroNormalizer(Complex64),
    #[error("n * kappa = {requested} exceeds the per-replica budget {STEP_BUDGET}")]
    Budget { requested: u64 },
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
}

/// Mutation probability `rho` and burst size `kappa`; `kbar` = 1 / kappa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LDParams {
    pub rho: f64,
    pub kappa: u32,
    pub kbar: f64,
}

impl LDParams {
    /// `rho` = 0 is accepted as the mutation-free limit.
    pub fn new(rho: f64, kappa: u32) -> Result<Self, LDError> {
        if !(0.0..1.0).contains(&rho) {
            return Err(LDError::InvalidParams(format!("rho = {rho} outside [0, 1)")));
        }
        if kappa == 0 {
            return Err(LDError::InvalidParams("kappa must be at least 1".into()));
        }
        Ok(LDParams {
            rho,
            kappa,
            kbar: 1.0 / kappa as f64,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LDState {
    pub nonmutants: u64,
    pub total: u64,
    pub divisions: u64,
}

impl LDState {
    pub fn initial() -> Self {
        LDState {
            nonmutants: 1,
            total: 1,
            divisions: 0,
        }
    }

    pub fn is_valid(&self, kappa: u32) -> bool {
        self.total == self.divisions * kappa as u64 + 1 && self.nonmutants <= self.total
    }
}

/// What happened at one division.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Division {
    NonMutant { mutated: bool },
    Mutant,
}

/// Picks the dividing cell uniformly among living cells, then whether a
/// non-mutant division mutates.
pub fn draw_division<R: Rng + ?Sized>(state: &LDState, p: &LDParams, rng: &mut R) -> Division {
    if rng.random_range(0..state.total) < state.nonmutants {
        Division::NonMutant {
            mutated: p.rho > 0.0 && rng.random::<f64>() < p.rho,
        }
    } else {
        Division::Mutant
    }
}

/// One division: the parent is replaced by kappa + 1 cells.
pub fn ld_step(state: LDState, p: &LDParams, division: Division) -> LDState {
    let k = p.kappa as u64;
    let nonmutants = match division {
        Division::NonMutant { mutated: false } => state.nonmutants + k,
        _ => state.nonmutants,
    };
    LDState {
        nonmutants,
        total: state.total + k,
        divisions: state.divisions + 1,
    }
}

fn run_replica(p: &LDParams, n: u64, seed: u64, replica: u64) -> u64 {
    let mut rng = replica_rng(seed, replica);
    let mut state = LDState::initial();
    for _ in 0..n {
        let d = draw_division(&state, p, &mut rng);
        state = ld_step(state, p, d);
    }
    state.nonmutants
}

/// L_n for `replicas` independent runs of n divisions from a single
/// non-mutant, in replica order.
pub fn simulate_ld(p: &LDParams, n: u64, replicas: usize, seed: u64) -> Result<Vec<u64>, LDError> {
    let requested = n.saturating_mul(p.kappa as u64);
    if requested > STEP_BUDGET {
        return Err(LDError::Budget { requested });
    }
    Ok((0..replicas as u64)
        .into_par_iter()
        .map(|r| run_replica(p, n, seed, r))
        .collect())
}

fn check_pole(z: Complex64) -> Result<(), LDError> {
    if is_gamma_pole(z) {
        Err(LDError::Pole(z))
    } else {
        Ok(())
    }
}

/// Mittag-Leffler law of order 1 - rho: Gamma(s) / Gamma((1 - rho)(s - 1) + 1).
pub fn ml_mellin(rho: f64, s: Complex64) -> Result<Complex64, LDError> {
    check_pole(s)?;
    Ok(gamma(s)? * rgamma((1.0 - rho) * (s - 1.0) + 1.0))
}

/// Transform of the law reweighted by x^weight: base(s + weight) / base(1 + weight).
pub fn size_biased_mellin<F>(base: F, weight: f64, s: Complex64) -> Result<Complex64, LDError>
where
    F: Fn(Complex64) -> Result<Complex64, LDError>,
{
    let at = Complex64::new(1.0 + weight, 0.0);
    let norm = base(at)?;
    if norm == Complex64::new(0.0, 0.0) || !norm.is_finite() {
        return Err(LDError::ZeroNormalizer(at));
    }
    Ok(base(s + weight)? / norm)
}

/// B^{1-rho} for B ~ Beta(kbar (1 - rho), kbar rho):
/// Gamma(kbar) / Gamma((1 - rho) kbar) * Gamma((1 - rho)(s - 1 + kbar)) / Gamma((1 - rho)(s - 1) + kbar).
pub fn beta_power_mellin(rho: f64, kbar: f64, s: Complex64) -> Result<Complex64, LDError> {
    let a = (1.0 - rho) * (s - 1.0 + kbar);
    check_pole(a)?;
    let c = gamma_real(kbar)? / gamma_real((1.0 - rho) * kbar)?;
    Ok(c * gamma(a)? * rgamma((1.0 - rho) * (s - 1.0) + kbar))
}

/// Limit law L: Gamma(s + kbar - 1) / Gamma((1 - rho)(s - 1) + kbar).
pub fn ld_mellin(p: &LDParams, s: Complex64) -> Result<Complex64, LDError> {
    let a = s + p.kbar - 1.0;
    check_pole(a)?;
    Ok(gamma(a)? * rgamma((1.0 - p.rho) * (s - 1.0) + p.kbar))
}

/// The same transform as the product of the Beta-power factor and the
/// kbar-biased Mittag-Leffler transform. All mass sits on the positive half
/// line, so the hyperbolic product reduces to plain multiplication.
pub fn ld_mellin_factorized(p: &LDParams, s: Complex64) -> Result<Complex64, LDError> {
    let rho = p.rho;
    let biased = size_biased_mellin(|z| ml_mellin(rho, z), p.kbar, s)?;
    Ok(beta_power_mellin(rho, p.kbar, s)? * biased)
}

/// Coefficient of u^i in the Laplace series: Gamma(kbar) C(-kbar, i) / Gamma(i (1 - rho) + kbar).
pub fn ld_laplace_coefficient(p: &LDParams, i: u32) -> Result<f64, LDError> {
    let mut binom = 1.0;
    for j in 1..=i {
        binom *= (-p.kbar - j as f64 + 1.0) / j as f64;
    }
    let x = i as f64 * (1.0 - p.rho) + p.kbar;
    Ok(gamma_real(p.kbar)? * binom * rgamma(Complex64::new(x, 0.0)).re)
}

/// E exp(-u L) = Gamma(kbar) sum_i C(-kbar, i) u^i / Gamma(i (1 - rho) + kbar).
pub fn ld_laplace(p: &LDParams, u: f64, tol: f64) -> Result<f64, LDError> {
    if !(u >= 0.0 && u.is_finite()) {
        return Err(LDError::InvalidParams(format!("u = {u} must be finite and >= 0")));
    }
    if !(tol > 0.0) {
        return Err(LDError::InvalidParams(format!("tol = {tol} must be positive")));
    }
    let v = prabhakar_series(p.kbar, 1.0 - p.rho, p.kbar, Complex64::new(-u, 0.0), tol)?;
    Ok(gamma_real(p.kbar)? * v.re)
}

/// Exact (E[L_n], E[L_n^2]) of the chain, from the one-step recursion: L
/// gains kappa with probability (1 - rho) L / total.
pub fn finite_n_moments(p: &LDParams, n: u64) -> (f64, f64) {
    let k = p.kappa as f64;
    let (mut m1, mut m2, mut total) = (1.0, 1.0, 1.0);
    for _ in 0..n {
        let q = (1.0 - p.rho) / total;
        m2 += q * (2.0 * k * m2 + k * k * m1);
        m1 += q * k * m1;
        total += k;
    }
    (m1, m2)
}

/// Scale-free moment ratios of a sample and their bootstrap standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleFreeRatios {
    /// E[X^2] / E[X]^2.
    pub second: f64,
    pub second_se: f64,
    /// E[X^{1/2}]^2 / E[X].
    pub half: f64,
    pub half_se: f64,
    /// E[X] itself, the empirical scale.
    pub mean: f64,
}

fn ratios_of(xs: &[f64], roots: &[f64], idx: impl Iterator<Item = usize>) -> (f64, f64) {
    let (mut m1, mut m2, mut mh, mut n) = (0.0, 0.0, 0.0, 0.0);
    for i in idx {
        m1 += xs[i];
        m2 += xs[i] * xs[i];
        mh += roots[i];
        n += 1.0;
    }
    let (m1, m2, mh) = (m1 / n, m2 / n, mh / n);
    (m2 / (m1 * m1), mh * mh / m1)
}

/// Ratios of L_n / n^{1 - rho}; the normalization cancels, so only the shape
/// of the sample matters.
pub fn scale_free_ratios(samples: &[u64], n: u64, rho: f64, resamples: usize, seed: u64) -> ScaleFreeRatios {
    let scale = (n as f64).powf(1.0 - rho);
    let xs: Vec<f64> = samples.iter().map(|&l| l as f64 / scale).collect();
    let roots: Vec<f64> = xs.iter().map(|x| x.sqrt()).collect();
    let len = xs.len();
    let (second, half) = ratios_of(&xs, &roots, 0..len);
    let boots: Vec<(f64, f64)> = (0..resamples as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = replica_rng(seed, b);
            let idx: Vec<usize> = (0..len).map(|_| rng.random_range(0..len)).collect();
            ratios_of(&xs, &roots, idx.into_iter())
        })
        .collect();
    let sd = |f: &dyn Fn(&(f64, f64)) -> f64| {
        let k = boots.len() as f64;
        let m = boots.iter().map(f).sum::<f64>() / k;
        (boots.iter().map(|b| (f(b) - m).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
    };
    ScaleFreeRatios {
        second,
        second_se: sd(&|b| b.0),
        half,
        half_se: sd(&|b| b.1),
        mean: xs.iter().sum::<f64>() / len as f64,
    }
}

/// The same two ratios for the limit law, from `ld_mellin`:
/// (M(3) M(1) / M(2)^2, M(3/2)^2 / (M(2) M(1))).
pub fn analytic_ratios(p: &LDParams) -> Result<(f64, f64), LDError> {
    let m = |s: f64| ld_mellin(p, Complex64::new(s, 0.0)).map(|v| v.re);
    let (m1, m15, m2, m3) = (m(1.0)?, m(1.5)?, m(2.0)?, m(3.0)?);
    Ok((m3 * m1 / (m2 * m2), m15 * m15 / (m2 * m1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{tanh_sinh, QuadOptions};
    use crate::specfun::{mittag_leffler_series, MLOrder};
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn params_validation() {
        assert!(LDParams::new(1.0, 1).is_err());
        assert!(LDParams::new(-0.1, 1).is_err());
        assert!(LDParams::new(0.5, 0).is_err());
        let p = LDParams::new(0.3, 4).unwrap();
        assert_eq!(p.kbar * p.kappa as f64, 1.0);
    }

    #[test]
    fn forced_steps() {
        let p = LDParams::new(0.5, 1).unwrap();
        let s = ld_step(LDState::initial(), &p, Division::NonMutant { mutated: false });
        assert_eq!((s.nonmutants, s.total, s.divisions), (2, 2, 1));
        let p = LDParams::new(0.5, 2).unwrap();
        let s = ld_step(LDState::initial(), &p, Division::NonMutant { mutated: true });
        assert_eq!((s.nonmutants, s.total, s.divisions), (1, 3, 1));
        let s = ld_step(s, &p, Division::Mutant);
        assert_eq!((s.nonmutants, s.total, s.divisions), (1, 5, 2));
        assert!(s.is_valid(2));
    }

    #[test]
    fn no_mutation_is_deterministic() {
        let p = LDParams::new(0.0, 3).unwrap();
        let v = simulate_ld(&p, 500, 16, 1).unwrap();
        assert!(v.iter().all(|&l| l == 500 * 3 + 1));
    }

    #[test]
    fn budget_is_enforced() {
        let p = LDParams::new(0.5, 4).unwrap();
        assert!(matches!(
            simulate_ld(&p, STEP_BUDGET, 1, 1),
            Err(LDError::Budget { .. })
        ));
    }

    #[test]
    fn simulation_is_reproducible() {
        let p = LDParams::new(0.4, 2).unwrap();
        let a = simulate_ld(&p, 300, 64, 11).unwrap();
        let b = simulate_ld(&p, 300, 64, 11).unwrap();
        let c2 = simulate_ld(&p, 300, 64, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c2);
    }

    #[test]
    fn closed_form_examples() {
        assert!((ml_mellin(0.5, c(1.0)).unwrap() - 1.0).norm() < 1e-15);
        let v = ml_mellin(0.5, c(2.0)).unwrap();
        // -d/du E_{1/2}(u) at 0 is the first series coefficient, 1 / Gamma(3/2)
        let h = 1e-5;
        let nu = MLOrder::new(0.5).unwrap();
        let d = (mittag_leffler_series(nu, c(-h), 1e-17).unwrap() - mittag_leffler_series(nu, c(h), 1e-17).unwrap())
            / (2.0 * h);
        assert!((v - d).norm() < 1e-9 && (v.re - std::f64::consts::FRAC_2_SQRT_PI).abs() < 1e-14);
        assert!((ml_mellin(0.0, Complex64::new(2.3, 0.7)).unwrap() - 1.0).norm() < 1e-14);
        assert!(matches!(ml_mellin(0.5, c(-1.0)), Err(LDError::Pole(_))));

        let p = LDParams::new(0.5, 2).unwrap();
        assert!((ld_mellin(&p, c(2.0)).unwrap().re - 0.886_226_925_452_758).abs() < 1e-14);
        assert!((ld_mellin(&p, c(1.0)).unwrap() - 1.0).norm() < 1e-14);
    }

    #[test]
    fn size_biasing_examples() {
        let base = |s| ml_mellin(0.5, s);
        let s = Complex64::new(1.7, 0.4);
        assert!((size_biased_mellin(base, 0.0, s).unwrap() - base(s).unwrap()).norm() < 1e-15);
        assert!((size_biased_mellin(base, 0.6, c(1.0)).unwrap() - 1.0).norm() < 1e-15);
        let v = size_biased_mellin(base, 1.0, c(2.0)).unwrap().re;
        // Gamma(s + kbar) / Gamma((1-rho)(s + kbar - 1) + 1) * Gamma(1 + (1-rho) kbar) / Gamma(1 + kbar)
        let g = |x: f64| gamma_real(x).unwrap();
        let display = g(3.0) / g(0.5 * 2.0 + 1.0) * g(1.5) / g(2.0);
        assert!((v - display).abs() < 1e-12);
    }

    #[test]
    fn beta_power_examples() {
        assert!((beta_power_mellin(0.3, 0.5, c(1.0)).unwrap() - 1.0).norm() < 1e-14);
        // B ~ arcsine; with x = sin^2(t), E[B^q] = (2/pi) int_0^{pi/2} sin^{2q}(t) dt
        for &sv in &[2.0, 2.6, 3.3] {
            let v = beta_power_mellin(0.5, 1.0, c(sv)).unwrap().re;
            let q = 0.5 * (sv - 1.0);
            let r = tanh_sinh(
                |t: f64, _| t.sin().powf(2.0 * q),
                0.0,
                std::f64::consts::FRAC_PI_2,
                &QuadOptions::default(),
            );
            assert!(
                (v - 2.0 * r.value / std::f64::consts::PI).abs() < 1e-12,
                "{v} {}",
                r.value
            );
        }
        assert!((beta_power_mellin(0.0, 0.5, Complex64::new(1.4, 0.3)).unwrap() - 1.0).norm() < 1e-14);
    }

    #[test]
    fn factorization_grid() {
        for &rho in &[0.3, 0.5, 0.7] {
            for kappa in 1..=3 {
                let p = LDParams::new(rho, kappa).unwrap();
                for s in [0.5, 1.0, 1.5, 2.0, 3.0] {
                    match (ld_mellin(&p, c(s)), ld_mellin_factorized(&p, c(s))) {
                        (Ok(a), Ok(b)) => assert!((a - b).norm() < 1e-12 * a.norm(), "rho={rho} kappa={kappa} s={s}"),
                        // kappa = 2, s = 1/2 hits the pole of Gamma(s + kbar - 1) on both sides
                        (Err(LDError::Pole(_)), Err(LDError::Pole(_))) => assert_eq!((kappa, s), (2, 0.5)),
                        other => panic!("rho={rho} kappa={kappa} s={s}: {other:?}"),
                    }
                }
            }
        }
    }

    #[test]
    fn kappa_one_is_mittag_leffler() {
        let p = LDParams::new(0.4, 1).unwrap();
        let nu = MLOrder::new(0.6).unwrap();
        for k in 0..=12 {
            let u = k as f64 * 0.25;
            let a = ld_laplace(&p, u, 1e-16).unwrap();
            let b = mittag_leffler_series(nu, c(u), 1e-16).unwrap().re;
            assert!((a - b).abs() < 1e-10);
            assert!((ld_mellin(&p, c(1.0 + u)).unwrap() - ml_mellin(0.4, c(1.0 + u)).unwrap()).norm() < 1e-13);
        }
        assert_eq!(ld_laplace(&p, 0.0, 1e-16).unwrap(), 1.0);
        assert!(ld_laplace(&p, -1.0, 1e-16).is_err());
    }

    #[test]
    fn coefficients_are_moments() {
        for &(rho, kappa) in &[(0.5, 1), (0.3, 2), (0.7, 3)] {
            let p = LDParams::new(rho, kappa).unwrap();
            let mut fact = 1.0;
            for i in 1..=3u32 {
                fact *= i as f64;
                let lhs = ld_laplace_coefficient(&p, i).unwrap() * fact;
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                let rhs = sign * ld_mellin(&p, c(i as f64 + 1.0)).unwrap().re;
                assert!((lhs - rhs).abs() < 1e-10 * rhs.abs().max(1.0));
            }
        }
    }

    #[test]
    fn laplace_is_completely_monotone_on_grid() {
        let p = LDParams::new(0.3, 2).unwrap();
        let h = 0.1;
        let vals: Vec<f64> = (0..=34).map(|k| ld_laplace(&p, k as f64 * h, 1e-16).unwrap()).collect();
        let mut diffs = vals.clone();
        for order in 0..=4 {
            let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
            assert!(diffs.iter().all(|d| sign * d > 0.0), "order {order}");
            diffs = diffs.windows(2).map(|w| w[1] - w[0]).collect();
        }
        assert!(vals.iter().all(|&v| v > 0.0 && v <= 1.0));
    }

    #[test]
    fn simulation_matches_finite_n_moments() {
        for &(rho, kappa) in &[(0.5, 1), (0.3, 2)] {
            let p = LDParams::new(rho, kappa).unwrap();
            let n = 200;
            let v = simulate_ld(&p, n, 40_000, 5).unwrap();
            let xs: Vec<f64> = v.iter().map(|&l| l as f64).collect();
            let len = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / len;
            let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (len - 1.0)).sqrt();
            let (m1, m2) = finite_n_moments(&p, n);
            assert!((mean - m1).abs() < 4.0 * sd / len.sqrt(), "rho {rho}: {mean} vs {m1}");
            let sq = xs.iter().map(|x| x * x).sum::<f64>() / len;
            let sd2 = (xs.iter().map(|x| (x * x - sq).powi(2)).sum::<f64>() / (len - 1.0)).sqrt();
            assert!((sq - m2).abs() < 4.0 * sd2 / len.sqrt(), "rho {rho}: {sq} vs {m2}");
        }
        let p = LDParams::new(0.0, 3).unwrap();
        assert_eq!(finite_n_moments(&p, 10), (31.0, 961.0));
    }

    #[test]
    fn finite_n_ratio_approaches_limit() {
        let p = LDParams::new(0.5, 1).unwrap();
        let (limit, _) = analytic_ratios(&p).unwrap();
        let gap = |n| {
            let (m1, m2) = finite_n_moments(&p, n);
            (m2 / (m1 * m1) - limit).abs()
        };
        assert!(gap(100_000) < gap(10_000) && gap(10_000) < gap(1_000));
        assert!(gap(1_000_000) < 1e-3);
    }

    #[test]
    fn ratios_of_constant_sample() {
        let r = scale_free_ratios(&[5; 100], 25, 0.5, 20, 3);
        assert!((r.second - 1.0).abs() < 1e-15 && (r.half - 1.0).abs() < 1e-15);
        assert!(r.second_se < 1e-15 && (r.mean - 1.0).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn transforms_are_normalized(rho in 0.0..0.95f64, kappa in 1u32..6) {
            let p = LDParams::new(rho, kappa).unwrap();
            prop_assert!((ml_mellin(rho, c(1.0)).unwrap() - 1.0).norm() < 1e-14);
            prop_assert!((beta_power_mellin(rho, p.kbar, c(1.0)).unwrap() - 1.0).norm() < 1e-14);
            prop_assert!((size_biased_mellin(|s| ml_mellin(rho, s), p.kbar, c(1.0)).unwrap() - 1.0).norm() < 1e-14);
            prop_assert!((ld_mellin(&p, c(1.0)).unwrap() - 1.0).norm() < 1e-14);
        }

        #[test]
        fn states_stay_valid(rho in 0.0..0.99f64, kappa in 1u32..5, seed in 0u64..1000) {
            let p = LDParams::new(rho, kappa).unwrap();
            let mut rng = replica_rng(seed, 0);
            let mut s = LDState::initial();
            for _ in 0..200 {
                s = ld_step(s, &p, draw_division(&s, &p, &mut rng));
                prop_assert!(s.is_valid(kappa) && s.nonmutants >= 1);
            }
        }
    }
}
