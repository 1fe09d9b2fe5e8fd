//! The `mellinbp` command line: one command per run over a parameter grid,
//! reported as JSON or CSV.

use clap::{Parser, ValueEnum};
use num_complex::Complex64;
use serde::{Serialize, Serializer};
use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;
use thiserror::Error;

use crate::acceptance::{run_criterion, CRITERIA};
use crate::bellman_harris::{
    default_recovery_line, empirical_laplace, fixed_point_estimate, malthusian, poly_case_lifetime_laplace,
    recover_lifetime_laplace, simulate_bellman_harris, LifetimeDistribution, LimitLaw, OffspringPGF,
};
use crate::contour::BromwichLine;
use crate::luria_delbruck::{
    analytic_ratios, finite_n_moments, ld_laplace, ld_mellin, ld_mellin_factorized, scale_free_ratios, simulate_ld,
    LDParams, STEP_BUDGET,
};
use crate::mellin::{mellin_forward, plancherel_check, DensityOnR, Side};
use crate::specfun::{mittag_leffler_hankel, mittag_leffler_series, HankelContour, MLOrder};
use crate::stable::{stable_density, stable_mellin, stable_mellin_numeric, StableParams};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    StableMellin,
    StableDensity,
    MlEval,
    MellinCheck,
    Plancherel,
    BhRecover,
    BhFixedPoint,
    BhSimulate,
    LdSimulate,
    LdLimit,
    Acceptance,
}

impl Command {
    pub fn from_name(name: &str) -> Option<Self> {
        <Self as ValueEnum>::from_str(name, false).ok()
    }

    pub fn name(self) -> &'static str {
        match self {
            Command::StableMellin => "stable-mellin",
            Command::StableDensity => "stable-density",
            Command::MlEval => "ml-eval",
            Command::MellinCheck => "mellin-check",
            Command::Plancherel => "plancherel",
            Command::BhRecover => "bh-recover",
            Command::BhFixedPoint => "bh-fixed-point",
            Command::BhSimulate => "bh-simulate",
            Command::LdSimulate => "ld-simulate",
            Command::LdLimit => "ld-limit",
            Command::Acceptance => "acceptance",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "mellinbp", version, about = "Mellin-transform computations and checks")]
pub struct Args {
    #[arg(long, value_enum)]
    pub command: Command,
    /// key=value, repeatable
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    /// key=start:stop:count, repeatable
    #[arg(long = "grid", value_name = "KEY=START:STOP:COUNT")]
    pub grids: Vec<String>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub threads: Option<usize>,
}

/// An evenly spaced grid including both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Grid {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let parts: Vec<&str> = text.split(':').collect();
        let bad = || CliError::Validation(format!("grid '{text}' is not start:stop:count"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let stop: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if !(start.is_finite() && stop.is_finite()) || count == 0 {
            return Err(bad());
        }
        Ok(Grid { start, stop, count })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|k| {
                if k + 1 == self.count {
                    self.stop
                } else {
                    self.start + k as f64 * step
                }
            })
            .collect()
    }
}

/// A parameter as given on the command line: integer, float or text.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Text(String),
}

impl ParamValue {
    fn parse(text: &str) -> Self {
        if let Ok(i) = text.parse::<i64>() {
            ParamValue::Int(i)
        } else if let Ok(x) = text.parse::<f64>() {
            ParamValue::Float(x)
        } else {
            ParamValue::Text(text.to_string())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub params: BTreeMap<String, String>,
    pub grids: BTreeMap<String, Grid>,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            params: BTreeMap::new(),
            grids: BTreeMap::new(),
            seed: 1,
            output_path: None,
            format: Format::Json,
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    pub fn grid(mut self, key: &str, start: f64, stop: f64, count: usize) -> Self {
        self.grids.insert(key.to_string(), Grid { start, stop, count });
        self
    }

    pub fn from_args(args: &Args) -> Result<Self, CliError> {
        let mut params = BTreeMap::new();
        for p in &args.params {
            let (k, v) = split_pair(p)?;
            if params.insert(k.clone(), v).is_some() {
                return Err(CliError::Validation(format!("parameter '{k}' given twice")));
            }
        }
        let mut grids = BTreeMap::new();
        for g in &args.grids {
            let (k, v) = split_pair(g)?;
            if params.contains_key(&k) || grids.insert(k.clone(), Grid::parse(&v)?).is_some() {
                return Err(CliError::Validation(format!("'{k}' given twice")));
            }
        }
        Ok(RunConfig {
            command: args.command,
            params,
            grids,
            seed: args.seed,
            output_path: args.out.clone(),
            format: args.format,
        })
    }
}

fn split_pair(text: &str) -> Result<(String, String), CliError> {
    match text.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(CliError::Validation(format!("'{text}' is not key=value"))),
    }
}

/// Error estimate of a result: a number, or "exact" for closed forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorEstimate {
    Exact,
    Value(f64),
}

impl Serialize for ErrorEstimate {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ErrorEstimate::Exact => s.serialize_str("exact"),
            ErrorEstimate::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl std::fmt::Display for ErrorEstimate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ErrorEstimate::Exact => write!(f, "exact"),
            ErrorEstimate::Value(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub name: String,
    pub inputs: BTreeMap<String, f64>,
    pub value: f64,
    pub error_estimate: ErrorEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: Command,
    pub params: BTreeMap<String, ParamValue>,
    pub seed: u64,
    pub results: Vec<ResultRow>,
    pub version: String,
    pub wall_time: f64,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per result: name, the union of input names, value, error_estimate.
    pub fn to_csv(&self) -> String {
        let mut inputs: Vec<&String> = Vec::new();
        for r in &self.results {
            for k in r.inputs.keys() {
                if !inputs.contains(&k) {
                    inputs.push(k);
                }
            }
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["name".to_string()];
        header.extend(inputs.iter().map(|k| k.to_string()));
        header.push("value".into());
        header.push("error_estimate".into());
        w.write_record(&header).expect("in-memory write");
        for r in &self.results {
            let mut row = vec![r.name.clone()];
            row.extend(
                inputs
                    .iter()
                    .map(|k| r.inputs.get(*k).map(|v| v.to_string()).unwrap_or_default()),
            );
            row.push(r.value.to_string());
            row.push(r.error_estimate.to_string());
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("numerical failure: {message}")]
    Numerical { message: String, report: Box<RunReport> },
    #[error("cannot write output: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Output(_) => 2,
            CliError::Numerical { .. } => 3,
        }
    }
}

// Typed access to the parameters; every key must be consumed.
struct Params<'a> {
    config: &'a RunConfig,
    used: RefCell<BTreeSet<String>>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

impl<'a> Params<'a> {
    fn new(config: &'a RunConfig) -> Self {
        Params {
            config,
            used: RefCell::new(BTreeSet::new()),
        }
    }

    fn raw(&self, key: &str) -> Option<&'a str> {
        self.used.borrow_mut().insert(key.to_string());
        self.config.params.get(key).map(|s| s.as_str())
    }

    fn f64_opt(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(Some(x)),
                _ => Err(invalid(format!("{key} = '{v}' is not a finite number"))),
            },
        }
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    fn f64_req(&self, key: &str) -> Result<f64, CliError> {
        self.f64_opt(key)?
            .ok_or_else(|| invalid(format!("missing parameter {key}")))
    }

    fn u64_or(&self, key: &str, default: u64) -> Result<u64, CliError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| invalid(format!("{key} = '{v}' is not a non-negative integer"))),
        }
    }

    fn text_or(&self, key: &str, default: &'a str) -> &'a str {
        self.raw(key).unwrap_or(default)
    }

    /// Grid values for `key`, or the single parameter value.
    fn axis(&self, key: &str, default: Option<f64>) -> Result<Vec<f64>, CliError> {
        self.used.borrow_mut().insert(key.to_string());
        if let Some(g) = self.config.grids.get(key) {
            return Ok(g.values());
        }
        match (self.f64_opt(key)?, default) {
            (Some(x), _) | (None, Some(x)) => Ok(vec![x]),
            (None, None) => Err(invalid(format!("missing parameter or grid {key}"))),
        }
    }

    fn optional_axis(&self, key: &str) -> Result<Vec<f64>, CliError> {
        if self.config.grids.contains_key(key) || self.config.params.contains_key(key) {
            self.axis(key, None)
        } else {
            Ok(Vec::new())
        }
    }

    fn finish(&self) -> Result<(), CliError> {
        let used = self.used.borrow();
        let unknown: Vec<&String> = self
            .config
            .params
            .keys()
            .chain(self.config.grids.keys())
            .filter(|k| !used.contains(*k))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(invalid(format!(
                "unknown parameters for {}: {unknown:?}",
                self.config.command.name()
            )))
        }
    }
}

// Rows collected so far; a numerical error keeps them as a partial report.
struct Rows {
    rows: Vec<ResultRow>,
}

impl Rows {
    fn new() -> Self {
        Rows { rows: Vec::new() }
    }

    fn push(&mut self, name: &str, inputs: &[(&str, f64)], value: f64, error: ErrorEstimate) {
        self.rows.push(ResultRow {
            name: name.to_string(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            value,
            error_estimate: error,
        });
    }
}

type Numeric<T> = Result<T, String>;

fn num<T, E: std::fmt::Display>(r: Result<T, E>) -> Numeric<T> {
    r.map_err(|e| e.to_string())
}

fn check_each(values: &[f64], ok: impl Fn(f64) -> bool, what: &str) -> Result<(), CliError> {
    match values.iter().find(|&&v| !ok(v)) {
        Some(v) => Err(invalid(format!("{what}, got {v}"))),
        None => Ok(()),
    }
}

fn offspring(p: &Params) -> Result<OffspringPGF, CliError> {
    match p.raw("pi") {
        Some(list) => {
            let coeffs = list
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|_| invalid(format!("pi = '{list}' is not a comma-separated list")))?;
            if p.config.params.contains_key("m") {
                return Err(invalid("give either pi or m"));
            }
            OffspringPGF::new(coeffs).map_err(|e| invalid(e.to_string()))
        }
        None => {
            let m = p.u64_or("m", 2)?;
            if !(1..=64).contains(&m) {
                return Err(invalid(format!("m = {m} outside 1..=64")));
            }
            Ok(OffspringPGF::power(m as usize))
        }
    }
}

fn named_density(name: &str, p: &Params) -> Result<DensityOnR, CliError> {
    let d = match name {
        "one-sided-exponential" => Ok(DensityOnR::one_sided_exponential()),
        "two-sided-exponential" => Ok(DensityOnR::two_sided_exponential()),
        "uniform" => Ok(DensityOnR::uniform_unit()),
        "cauchy" => Ok(DensityOnR::cauchy()),
        "gamma" => DensityOnR::gamma_density(p.f64_or("k", 2.0)?),
        "gaussian" => DensityOnR::gaussian(p.f64_or("sigma", 1.0)?),
        other => return Err(invalid(format!("unknown density '{other}'"))),
    };
    d.map_err(|e| invalid(e.to_string()))
}

fn stable_params(p: &Params) -> Result<StableParams, CliError> {
    StableParams::new(p.f64_req("alpha")?, p.f64_or("theta", 0.0)?).map_err(|e| invalid(e.to_string()))
}

type Job = Box<dyn FnOnce(&mut Rows) -> Numeric<()>>;

// Parses and validates everything, then hands back the computation.
fn plan(config: &RunConfig) -> Result<Job, CliError> {
    let p = Params::new(config);
    let seed = config.seed;
    let job: Job = match config.command {
        Command::StableMellin => {
            let sp = stable_params(&p)?;
            let s = p.axis("s", None)?;
            check_each(&s, |x| x > 0.0 && x < 1.0, "s must lie in (0, 1)")?;
            Box::new(move |rows| {
                for &s in &s {
                    let inputs = [("alpha", sp.alpha), ("theta", sp.theta), ("s", s)];
                    let plus = num(stable_mellin(&sp, Complex64::new(s, 0.0), Side::Plus))?.re;
                    let minus = num(stable_mellin(&sp, Complex64::new(s, 0.0), Side::Minus))?.re;
                    let n = num(stable_mellin_numeric(&sp, s))?;
                    rows.push("closed_plus", &inputs, plus, ErrorEstimate::Exact);
                    rows.push("closed_minus", &inputs, minus, ErrorEstimate::Exact);
                    rows.push(
                        "numeric_plus",
                        &inputs,
                        n.plus.re,
                        ErrorEstimate::Value((n.plus.re - plus).abs()),
                    );
                    rows.push(
                        "numeric_minus",
                        &inputs,
                        n.minus.re,
                        ErrorEstimate::Value((n.minus.re - minus).abs()),
                    );
                }
                Ok(())
            })
        }
        Command::StableDensity => {
            let sp = stable_params(&p)?;
            let gamma = p.f64_or("gamma", 0.5)?;
            if !(gamma > 0.0 && gamma < 1.0) {
                return Err(invalid(format!("gamma = {gamma} must lie in (0, 1)")));
            }
            let x = p.axis("x", None)?;
            check_each(&x, |v| v != 0.0, "x must be non-zero")?;
            Box::new(move |rows| {
                let line = BromwichLine::new(gamma);
                for &x in &x {
                    let d = num(stable_density(&sp, x, gamma, &line))?;
                    rows.push(
                        "density",
                        &[("alpha", sp.alpha), ("theta", sp.theta), ("x", x)],
                        d.value,
                        ErrorEstimate::Value(d.error),
                    );
                }
                Ok(())
            })
        }
        Command::MlEval => {
            let nu = p.f64_req("nu")?;
            let order = MLOrder::new(nu).map_err(|e| invalid(e.to_string()))?;
            let u = p.axis("u", None)?;
            Box::new(move |rows| {
                for &u in &u {
                    let z = Complex64::new(u, 0.0);
                    let series = num(mittag_leffler_series(order, z, 1e-16))?;
                    let contour = num(HankelContour::for_argument(order, z))?;
                    let hankel = num(mittag_leffler_hankel(order, z, &contour))?;
                    let gap = ErrorEstimate::Value((series - hankel).norm());
                    rows.push("series", &[("nu", nu), ("u", u)], series.re, gap);
                    rows.push("hankel", &[("nu", nu), ("u", u)], hankel.re, gap);
                }
                Ok(())
            })
        }
        Command::MellinCheck => {
            let name = p.text_or("density", "two-sided-exponential");
            let f = named_density(name, &p)?;
            let s = p.axis("s", None)?;
            let strip = f.strip();
            check_each(&s, |x| strip.contains(x), "s must lie in the fundamental strip")?;
            Box::new(move |rows| {
                let known = f.known_mellin().cloned();
                for &s in &s {
                    let z = Complex64::new(s, 0.0);
                    let n = num(mellin_forward(&f, z))?;
                    match &known {
                        Some(m) => {
                            let k = num(m.eval_checked(z))?;
                            rows.push("closed_plus", &[("s", s)], k.plus.re, ErrorEstimate::Exact);
                            rows.push("closed_minus", &[("s", s)], k.minus.re, ErrorEstimate::Exact);
                            rows.push(
                                "numeric_plus",
                                &[("s", s)],
                                n.plus.re,
                                ErrorEstimate::Value((n.plus - k.plus).norm()),
                            );
                            rows.push(
                                "numeric_minus",
                                &[("s", s)],
                                n.minus.re,
                                ErrorEstimate::Value((n.minus - k.minus).norm()),
                            );
                        }
                        None => {
                            rows.push(
                                "numeric_plus",
                                &[("s", s)],
                                n.plus.re,
                                ErrorEstimate::Value(1e-13 * n.plus.norm()),
                            );
                            rows.push(
                                "numeric_minus",
                                &[("s", s)],
                                n.minus.re,
                                ErrorEstimate::Value(1e-13 * n.minus.norm()),
                            );
                        }
                    }
                }
                Ok(())
            })
        }
        Command::Plancherel => {
            let f = named_density(p.text_or("f", "one-sided-exponential"), &p)?;
            let g = named_density(p.text_or("g", "one-sided-exponential"), &p)?;
            let gamma = p.f64_or("gamma", 0.5)?;
            let line = match p.text_or("rule", "trapezoid") {
                "trapezoid" => BromwichLine::new(gamma),
                "double-exponential" => BromwichLine::double_exponential(gamma),
                other => return Err(invalid(format!("unknown rule '{other}'"))),
            };
            Box::new(move |rows| {
                let (a, b) = num(plancherel_check(&f, &g, gamma, &line))?;
                let gap = ErrorEstimate::Value((a - b).abs());
                rows.push("line_integral", &[("gamma", gamma)], a, gap);
                rows.push("real_integral", &[("gamma", gamma)], b, gap);
                Ok(())
            })
        }
        Command::BhRecover => {
            let kappa = p.f64_req("kappa")?;
            let psi = LimitLaw::gamma(kappa).map_err(|e| invalid(e.to_string()))?;
            let f = offspring(&p)?;
            if f.coefficients()[0] > 0.0 || f.mean() <= 1.0 {
                return Err(invalid("recovery needs pi_0 = 0 and mean > 1"));
            }
            let s = p.axis("s", None)?;
            check_each(&s, |x| x >= 0.0, "s must be >= 0")?;
            Box::new(move |rows| {
                let line = default_recovery_line();
                for &s in &s {
                    let z = Complex64::new(s, 0.0);
                    let r = num(recover_lifetime_laplace(&psi, &f, z, &line))?;
                    let c = num(poly_case_lifetime_laplace(&f, kappa, z))?;
                    rows.push(
                        "recovered",
                        &[("kappa", kappa), ("s", s)],
                        r.value.re,
                        ErrorEstimate::Value(r.error),
                    );
                    rows.push("closed_form", &[("kappa", kappa), ("s", s)], c.re, ErrorEstimate::Exact);
                }
                Ok(())
            })
        }
        Command::BhFixedPoint => {
            let kappa = p.f64_req("kappa")?;
            let m = p.u64_or("m", 2)?;
            if !(2..=64).contains(&m) {
                return Err(invalid(format!("m = {m} outside 2..=64")));
            }
            let beta = p.f64_or("beta", 1.0)?;
            if !(beta > 0.0) {
                return Err(invalid(format!("beta = {beta} must be positive")));
            }
            let psi = LimitLaw::gamma(kappa).map_err(|e| invalid(e.to_string()))?;
            let g = LifetimeDistribution::gamma_case(kappa, m as usize).map_err(|e| invalid(e.to_string()))?;
            let u = p.axis("u", None)?;
            check_each(&u, |x| x >= 0.0, "u must be >= 0")?;
            Box::new(move |rows| {
                let f = OffspringPGF::power(m as usize);
                for &u in &u {
                    let r = num(fixed_point_estimate(&psi, &f, &g, beta, u))?;
                    rows.push(
                        "residual",
                        &[("kappa", kappa), ("m", m as f64), ("u", u)],
                        r.value,
                        ErrorEstimate::Value(r.error),
                    );
                }
                Ok(())
            })
        }
        Command::BhSimulate => {
            let f = offspring(&p)?;
            let g = match p.text_or("lifetime", "exponential") {
                "exponential" => LifetimeDistribution::exponential(p.f64_or("rate", 1.0)?),
                "gamma-case" => {
                    let m = f.coefficients().len().saturating_sub(1).max(2);
                    LifetimeDistribution::gamma_case(p.f64_or("kappa", 1.0)?, m)
                }
                other => return Err(invalid(format!("unknown lifetime '{other}'"))),
            }
            .map_err(|e| invalid(e.to_string()))?;
            let horizon = p.f64_or("horizon", 5.0)?;
            let replicas = p.u64_or("replicas", 10_000)?;
            if !(horizon > 0.0) || replicas == 0 {
                return Err(invalid("horizon and replicas must be positive"));
            }
            let u = p.optional_axis("u")?;
            check_each(&u, |x| x >= 0.0, "u must be >= 0")?;
            Box::new(move |rows| {
                let beta = if f.mean() > 1.0 {
                    num(malthusian(&f, &g, (1e-9, 100.0)))?
                } else {
                    0.0
                };
                let r = num(simulate_bellman_harris(&f, &g, horizon, replicas as usize, seed))?;
                let norm = (beta * horizon).exp();
                let inputs = [("horizon", horizon), ("beta", beta)];
                rows.push(
                    "mean_normalized",
                    &inputs,
                    r.mean / norm,
                    ErrorEstimate::Value(r.mean_se / norm),
                );
                for &u in &u {
                    let e = empirical_laplace(&r.samples, norm, u);
                    rows.push(
                        "empirical_laplace",
                        &[("horizon", horizon), ("beta", beta), ("u", u)],
                        e.value,
                        ErrorEstimate::Value(e.error),
                    );
                }
                Ok(())
            })
        }
        Command::LdSimulate => {
            let ld =
                LDParams::new(p.f64_req("rho")?, p.u64_or("kappa", 1)? as u32).map_err(|e| invalid(e.to_string()))?;
            let n = p.u64_or("n", 10_000)?;
            let replicas = p.u64_or("replicas", 10_000)?;
            let resamples = p.u64_or("resamples", 200)?;
            if n.saturating_mul(ld.kappa as u64) > STEP_BUDGET || n == 0 || replicas < 2 || resamples < 2 {
                return Err(invalid(format!(
                    "need 0 < n * kappa <= {STEP_BUDGET}, replicas >= 2, resamples >= 2"
                )));
            }
            Box::new(move |rows| {
                let samples = num(simulate_ld(&ld, n, replicas as usize, seed))?;
                let r = scale_free_ratios(&samples, n, ld.rho, resamples as usize, seed);
                let (a2, ah) = num(analytic_ratios(&ld))?;
                let (m1, m2) = finite_n_moments(&ld, n);
                let inputs = [("rho", ld.rho), ("kappa", ld.kappa as f64), ("n", n as f64)];
                rows.push(
                    "second_moment_ratio",
                    &inputs,
                    r.second,
                    ErrorEstimate::Value(r.second_se),
                );
                rows.push("second_moment_ratio_limit", &inputs, a2, ErrorEstimate::Exact);
                rows.push(
                    "second_moment_ratio_exact_n",
                    &inputs,
                    m2 / (m1 * m1),
                    ErrorEstimate::Exact,
                );
                rows.push("half_moment_ratio", &inputs, r.half, ErrorEstimate::Value(r.half_se));
                rows.push("half_moment_ratio_limit", &inputs, ah, ErrorEstimate::Exact);
                rows.push("scale", &inputs, r.mean, ErrorEstimate::Value(0.0));
                Ok(())
            })
        }
        Command::LdLimit => {
            let ld =
                LDParams::new(p.f64_req("rho")?, p.u64_or("kappa", 1)? as u32).map_err(|e| invalid(e.to_string()))?;
            let u = p.optional_axis("u")?;
            check_each(&u, |x| x >= 0.0, "u must be >= 0")?;
            let s = p.optional_axis("s")?;
            check_each(&s, |x| x > 1.0 - ld.kbar, "s must exceed 1 - 1/kappa")?;
            if u.is_empty() && s.is_empty() {
                return Err(invalid("give a u or s grid"));
            }
            Box::new(move |rows| {
                let order = num(MLOrder::new(1.0 - ld.rho))?;
                for &u in &u {
                    let inputs = [("rho", ld.rho), ("kappa", ld.kappa as f64), ("u", u)];
                    let v = num(ld_laplace(&ld, u, 1e-16))?;
                    rows.push("ld_laplace", &inputs, v, ErrorEstimate::Value(1e-15 * v.abs().max(1.0)));
                    if ld.kappa == 1 {
                        let m = num(mittag_leffler_series(order, Complex64::new(u, 0.0), 1e-16))?.re;
                        rows.push("mittag_leffler", &inputs, m, ErrorEstimate::Value((m - v).abs()));
                    }
                }
                for &s in &s {
                    let inputs = [("rho", ld.rho), ("kappa", ld.kappa as f64), ("s", s)];
                    let z = Complex64::new(s, 0.0);
                    let a = num(ld_mellin(&ld, z))?.re;
                    let b = num(ld_mellin_factorized(&ld, z))?.re;
                    rows.push("ld_mellin", &inputs, a, ErrorEstimate::Exact);
                    rows.push("ld_mellin_factorized", &inputs, b, ErrorEstimate::Value((a - b).abs()));
                }
                Ok(())
            })
        }
        Command::Acceptance => {
            let ids: Vec<u8> = match p.raw("criteria") {
                None => CRITERIA.iter().map(|c| c.0).collect(),
                Some(list) => list
                    .split(',')
                    .map(|x| x.trim().parse::<u8>())
                    .collect::<Result<Vec<u8>, _>>()
                    .map_err(|_| invalid(format!("criteria = '{list}'")))?,
            };
            check_each(
                &ids.iter().map(|&i| i as f64).collect::<Vec<_>>(),
                |i| (1.0..=9.0).contains(&i),
                "criteria are 1..=9",
            )?;
            Box::new(move |rows| {
                let mut failed = Vec::new();
                for id in ids {
                    let o = run_criterion(id);
                    eprintln!("{}", o.line());
                    rows.push(
                        &format!("criterion_{id}"),
                        &[("criterion", id as f64), ("seconds", o.seconds)],
                        if o.passed { 1.0 } else { 0.0 },
                        ErrorEstimate::Exact,
                    );
                    if !o.passed {
                        failed.push(id);
                    }
                }
                if failed.is_empty() {
                    Ok(())
                } else {
                    Err(format!("criteria {failed:?} failed"))
                }
            })
        }
    };
    p.finish()?;
    Ok(job)
}

/// Validates the configuration, then runs it. A numerical failure returns
/// the rows computed so far inside the error.
pub fn run(config: &RunConfig) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let job = plan(config)?;
    let mut params: BTreeMap<String, ParamValue> = config
        .params
        .iter()
        .map(|(k, v)| (k.clone(), ParamValue::parse(v)))
        .collect();
    for (k, g) in &config.grids {
        params.insert(
            k.clone(),
            ParamValue::Text(format!("{}:{}:{}", g.start, g.stop, g.count)),
        );
    }
    let mut rows = Rows::new();
    let outcome = job(&mut rows);
    let report = RunReport {
        command: config.command,
        params,
        seed: config.seed,
        results: rows.rows,
        version: VERSION.to_string(),
        wall_time: start.elapsed().as_secs_f64(),
    };
    match outcome {
        Ok(()) => Ok(report),
        Err(message) => Err(CliError::Numerical {
            message,
            report: Box::new(report),
        }),
    }
}

fn emit(report: &RunReport, config: &RunConfig) -> Result<(), CliError> {
    let text = report.render(config.format);
    match &config.output_path {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Output(format!("{}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            let tail: &[u8] = if text.ends_with('\n') { b"" } else { b"\n" };
            out.write_all(text.as_bytes())
                .and_then(|_| out.write_all(tail))
                .map_err(|e| CliError::Output(e.to_string()))
        }
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Some(n) = args.threads {
        if n == 0 || rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            eprintln!("invalid input: cannot use {n} threads");
            return 2;
        }
    }
    let config = match RunConfig::from_args(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return e.exit_code();
        }
    };
    match run(&config) {
        Ok(report) => match emit(&report, &config) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("{e}");
                e.exit_code()
            }
        },
        Err(CliError::Numerical { message, report }) => {
            eprintln!("numerical failure: {message}");
            if let Err(e) = emit(&report, &config) {
                eprintln!("{e}");
            }
            3
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
