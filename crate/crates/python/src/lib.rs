//! Python bindings: stable laws, Mittag-Leffler functions, the Luria-Delbrück
//! limit, Bellman-Harris recovery and simulation, and the CLI runner.

use mellinbp_core::bellman_harris::{
    default_recovery_line, malthusian, poly_case_lifetime_laplace, recover_lifetime_laplace, simulate_bellman_harris,
    LifetimeDistribution, LimitLaw, OffspringPGF,
};
use mellinbp_core::cli::{self, CliError, Command, Grid, RunConfig};
use mellinbp_core::contour::BromwichLine;
use mellinbp_core::luria_delbruck::{analytic_ratios, ld_laplace, ld_mellin, scale_free_ratios, simulate_ld, LDParams};
use mellinbp_core::mellin::Side;
use mellinbp_core::specfun::{mittag_leffler as ml, MLOrder};
use mellinbp_core::stable::{stable_density, stable_mellin, stable_mellin_numeric, StableParams};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::collections::BTreeMap;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

pub fn parse_side(side: &str) -> Option<Side> {
    match side {
        "plus" | "+" => Some(Side::Plus),
        "minus" | "-" => Some(Side::Minus),
        _ => None,
    }
}

fn side_arg(side: &str) -> PyResult<Side> {
    parse_side(side).ok_or_else(|| value_err(format!("side must be 'plus' or 'minus', got '{side}'")))
}

/// Strictly stable law with index alpha and asymmetry theta.
#[pyclass(name = "StableLaw", frozen, skip_from_py_object)]
struct PyStableLaw {
    inner: StableParams,
}

#[pymethods]
impl PyStableLaw {
    #[new]
    #[pyo3(signature = (alpha, theta = 0.0))]
    fn new(alpha: f64, theta: f64) -> PyResult<Self> {
        Ok(PyStableLaw {
            inner: StableParams::new(alpha, theta).map_err(value_err)?,
        })
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.inner.theta
    }

    #[pyo3(signature = (s, side = "plus"))]
    fn mellin(&self, s: Complex64, side: &str) -> PyResult<Complex64> {
        stable_mellin(&self.inner, s, side_arg(side)?).map_err(runtime_err)
    }

    /// (plus, minus) by quadrature of the characteristic function, 0 < s < 1.
    fn mellin_numeric(&self, s: f64) -> PyResult<(Complex64, Complex64)> {
        let r = stable_mellin_numeric(&self.inner, s).map_err(runtime_err)?;
        Ok((r.plus, r.minus))
    }

    /// (density, error estimate) at x != 0.
    #[pyo3(signature = (x, gamma = 0.5))]
    fn density(&self, x: f64, gamma: f64) -> PyResult<(f64, f64)> {
        let e = stable_density(&self.inner, x, gamma, &BromwichLine::new(gamma)).map_err(runtime_err)?;
        Ok((e.value, e.error))
    }

    fn __repr__(&self) -> String {
        format!("StableLaw(alpha={}, theta={})", self.inner.alpha, self.inner.theta)
    }
}

/// E_nu(u) = sum_k (-u)^k / Gamma(nu k + 1).
#[pyfunction]
fn mittag_leffler(nu: f64, u: Complex64) -> PyResult<Complex64> {
    let order = MLOrder::new(nu).map_err(value_err)?;
    ml(order, u).map_err(runtime_err)
}

/// Luria-Delbrück chain with mutation probability rho and kappa offspring per division.
#[pyclass(name = "LuriaDelbruck", frozen, skip_from_py_object)]
struct PyLuriaDelbruck {
    inner: LDParams,
}

#[pymethods]
impl PyLuriaDelbruck {
    #[new]
    #[pyo3(signature = (rho, kappa = 1))]
    fn new(rho: f64, kappa: u32) -> PyResult<Self> {
        Ok(PyLuriaDelbruck {
            inner: LDParams::new(rho, kappa).map_err(value_err)?,
        })
    }

    #[getter]
    fn rho(&self) -> f64 {
        self.inner.rho
    }

    #[getter]
    fn kappa(&self) -> u32 {
        self.inner.kappa
    }

    fn limit_mellin(&self, s: Complex64) -> PyResult<Complex64> {
        ld_mellin(&self.inner, s).map_err(runtime_err)
    }

    #[pyo3(signature = (u, tol = 1e-16))]
    fn limit_laplace(&self, u: f64, tol: f64) -> PyResult<f64> {
        ld_laplace(&self.inner, u, tol).map_err(runtime_err)
    }

    /// Limits of M(3)M(1)/M(2)^2 and M(3/2)^2/(M(2)M(1)).
    fn analytic_ratios(&self) -> PyResult<(f64, f64)> {
        analytic_ratios(&self.inner).map_err(runtime_err)
    }

    /// Non-mutant count of each replica after n divisions.
    #[pyo3(signature = (n, replicas, seed = 1))]
    fn simulate(&self, py: Python<'_>, n: u64, replicas: usize, seed: u64) -> PyResult<Vec<u64>> {
        let p = self.inner;
        py.detach(move || simulate_ld(&p, n, replicas, seed)).map_err(value_err)
    }

    /// Bootstrap estimates of the two moment ratios and the scale of the simulated counts.
    #[pyo3(signature = (samples, n, resamples = 200, seed = 1))]
    fn ratios<'py>(
        &self,
        py: Python<'py>,
        samples: Vec<u64>,
        n: u64,
        resamples: usize,
        seed: u64,
    ) -> PyResult<Bound<'py, PyDict>> {
        if samples.len() < 2 || resamples < 2 {
            return Err(value_err("need at least two samples and two resamples"));
        }
        let rho = self.inner.rho;
        let r = py.detach(move || scale_free_ratios(&samples, n, rho, resamples, seed));
        let d = PyDict::new(py);
        d.set_item("second", r.second)?;
        d.set_item("second_se", r.second_se)?;
        d.set_item("half", r.half)?;
        d.set_item("half_se", r.half_se)?;
        d.set_item("mean", r.mean)?;
        Ok(d)
    }
}

/// Offspring generating function f(z) = sum_k pi_k z^k.
#[pyclass(name = "Offspring", frozen, skip_from_py_object)]
struct PyOffspring {
    inner: OffspringPGF,
}

#[pymethods]
impl PyOffspring {
    #[new]
    fn new(pi: Vec<f64>) -> PyResult<Self> {
        Ok(PyOffspring {
            inner: OffspringPGF::new(pi).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn power(m: usize) -> PyResult<Self> {
        if m == 0 {
            return Err(value_err("m must be positive"));
        }
        Ok(PyOffspring {
            inner: OffspringPGF::power(m),
        })
    }

    #[getter]
    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    #[getter]
    fn coefficients(&self) -> Vec<f64> {
        self.inner.coefficients().to_vec()
    }

    fn __call__(&self, z: Complex64) -> Complex64 {
        self.inner.eval(z)
    }

    /// Life-time Laplace transform at s recovered from a Gamma(kappa) limit law:
    /// (value, error estimate).
    fn recover_lifetime_laplace(&self, kappa: f64, s: Complex64) -> PyResult<(Complex64, f64)> {
        let psi = LimitLaw::gamma(kappa).map_err(value_err)?;
        let e = recover_lifetime_laplace(&psi, &self.inner, s, &default_recovery_line()).map_err(runtime_err)?;
        Ok((e.value, e.error))
    }

    /// Closed form of the same transform.
    fn lifetime_laplace(&self, kappa: f64, s: Complex64) -> PyResult<Complex64> {
        poly_case_lifetime_laplace(&self.inner, kappa, s).map_err(runtime_err)
    }

    /// Population at `horizon` with exponential(rate) life times; returns
    /// the Malthusian parameter and the counts.
    #[pyo3(signature = (horizon, replicas, rate = 1.0, seed = 1))]
    fn simulate<'py>(
        &self,
        py: Python<'py>,
        horizon: f64,
        replicas: usize,
        rate: f64,
        seed: u64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let g = LifetimeDistribution::exponential(rate).map_err(value_err)?;
        let f = self.inner.clone();
        let beta = if f.mean() > 1.0 {
            malthusian(&f, &g, (1e-9, 100.0)).map_err(runtime_err)?
        } else {
            0.0
        };
        let r = py
            .detach(move || simulate_bellman_harris(&f, &g, horizon, replicas, seed))
            .map_err(runtime_err)?;
        let d = PyDict::new(py);
        d.set_item("beta", beta)?;
        d.set_item("mean", r.mean)?;
        d.set_item("mean_se", r.mean_se)?;
        d.set_item("samples", r.samples)?;
        Ok(d)
    }
}

fn command_arg(name: &str) -> PyResult<Command> {
    Command::from_name(name).ok_or_else(|| value_err(format!("unknown command '{name}'")))
}

/// Runs a CLI command and returns its JSON report. `grids` maps names to
/// (start, stop, count).
#[pyfunction]
#[pyo3(signature = (command, params = None, grids = None, seed = 1))]
fn run(
    py: Python<'_>,
    command: &str,
    params: Option<BTreeMap<String, String>>,
    grids: Option<BTreeMap<String, (f64, f64, usize)>>,
    seed: u64,
) -> PyResult<String> {
    let mut config = RunConfig::new(command_arg(command)?);
    config.params = params.unwrap_or_default();
    for (k, (start, stop, count)) in grids.unwrap_or_default() {
        config.grids.insert(k, Grid { start, stop, count });
    }
    config.seed = seed;
    match py.detach(move || cli::run(&config)) {
        Ok(report) => Ok(report.to_json()),
        Err(e @ CliError::Numerical { .. }) => Err(runtime_err(e)),
        Err(e) => Err(value_err(e)),
    }
}

#[pymodule]
fn mellinbp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyStableLaw>()?;
    m.add_class::<PyLuriaDelbruck>()?;
    m.add_class::<PyOffspring>()?;
    m.add_function(wrap_pyfunction!(mittag_leffler, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add("__version__", cli::VERSION)?;
    Ok(())
}
