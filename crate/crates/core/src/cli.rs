//! Command-line front end: argument parsing, config-file merging and the
//! subcommand drivers. `run` returns the process exit code.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::arfima::{simulate, ArfimaParams, Innovation, ParamSpace};
use crate::asymptotics::{mspe_table, DEFAULT_TRUNCATION};
use crate::css::{estimate_css, CssConfig};
use crate::error::{ArfimaError, Result};
use crate::forecast::{predict_css_closed_form, predict_css_recursive, predict_ls_integrated_ar};
use crate::montecarlo::{
    empirical_second_order_mspe, run_table1, with_threads, write_results_csv, ErrorMode,
    ExperimentSpec, Predictor, ResultRow, RunManifest, Table1Settings,
};
use crate::series::Series;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "arfima",
    version,
    about = "ARFIMA(p1, d, p2) simulation, CSS estimation, prediction and second-order MSPE theory"
)]
pub struct Cli {
    /// Structured config file (TOML); command-line flags override its values
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Random seed
    #[arg(long, global = true, env = "ARFIMA_SEED")]
    pub seed: Option<u64>,

    /// Maximum number of worker threads
    #[arg(long, global = true, env = "ARFIMA_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a path with zero initial conditions and write it as CSV
    Simulate(SimulateArgs),
    /// Fit the CSS estimator to a series read from CSV
    Estimate(EstimateArgs),
    /// Forecast h steps ahead from a series read from CSV
    Predict(PredictArgs),
    /// Print the second-order MSPE decomposition for horizons 1..h-max
    MspeTheory(TheoryArgs),
    /// Monte Carlo experiments
    #[command(subcommand)]
    Mc(McCommand),
}

#[derive(Debug, Subcommand)]
pub enum McCommand {
    /// One-step CSS vs LS comparison on the three integrated AR models
    Table1(Table1Args),
    /// Empirical second-order MSPE for a user-specified model
    Custom(CustomArgs),
}

#[derive(Debug, Args, Default, Clone)]
pub struct ModelArgs {
    /// AR order (defaults to the number of --alpha values)
    #[arg(long)]
    pub p1: Option<usize>,
    /// MA order (defaults to the number of --beta values)
    #[arg(long)]
    pub p2: Option<usize>,
    /// AR coefficients a_1..a_p1 of 1 - a_1 B - ... - a_p1 B^p1, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub alpha: Option<Vec<f64>>,
    /// MA coefficients b_1..b_p2 of 1 - b_1 B - ... - b_p2 B^p2, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub beta: Option<Vec<f64>>,
    /// Memory parameter d
    #[arg(long, allow_hyphen_values = true)]
    pub d: Option<f64>,
    /// Innovation standard deviation
    #[arg(long)]
    pub sigma: Option<f64>,
}

#[derive(Debug, Args, Default, Clone)]
pub struct SpaceArgs {
    /// Lower end of the memory interval D
    #[arg(long, allow_hyphen_values = true)]
    pub d_lo: Option<f64>,
    /// Upper end of the memory interval D
    #[arg(long, allow_hyphen_values = true)]
    pub d_hi: Option<f64>,
    /// Common lower bound for every AR/MA coefficient
    #[arg(long, allow_hyphen_values = true)]
    pub theta_lo: Option<f64>,
    /// Common upper bound for every AR/MA coefficient
    #[arg(long, allow_hyphen_values = true)]
    pub theta_hi: Option<f64>,
    /// Number of d grid values used as optimizer starts
    #[arg(long)]
    pub starts_d: Option<usize>,
    /// Maximum optimizer iterations per start
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Relative tolerance on the projected gradient
    #[arg(long)]
    pub grad_tol: Option<f64>,
}

#[derive(Debug, Args, Default, Clone)]
pub struct InputArgs {
    /// Input CSV file
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// Column holding the series
    #[arg(long)]
    pub column: Option<String>,
}

#[derive(Debug, Args, Default, Clone)]
pub struct OutputArgs {
    /// Output file (stdout when omitted)
    #[arg(short = 'o', long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InnovationArg {
    Gaussian,
    Uniform,
}

impl From<InnovationArg> for Innovation {
    fn from(v: InnovationArg) -> Self {
        match v {
            InnovationArg::Gaussian => Innovation::Gaussian,
            InnovationArg::Uniform => Innovation::Uniform,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Sample size
    #[arg(long)]
    pub n: Option<usize>,
    /// Innovation distribution
    #[arg(long, value_enum)]
    pub innovation: Option<InnovationArg>,
    /// Also write the innovations as a column `eps`
    #[arg(long)]
    pub with_innovations: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub space: SpaceArgs,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    /// Iterated one-step CSS predictor
    Css,
    /// Closed-form CSS predictor
    ClosedForm,
    /// Least-squares integrated AR(p1) predictor
    Ls,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub space: SpaceArgs,
    #[command(flatten)]
    pub input: InputArgs,
    /// Forecast horizon
    #[arg(long)]
    pub h: Option<usize>,
    /// Prediction method
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Fit the CSS estimator first instead of using the given coefficients
    #[arg(long)]
    pub fit: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Largest horizon
    #[arg(long)]
    pub h_max: Option<usize>,
    /// Number of terms kept in the infinite series
    #[arg(long)]
    pub truncation: Option<usize>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorModeArg {
    Conditional,
    Realized,
}

impl From<ErrorModeArg> for ErrorMode {
    fn from(v: ErrorModeArg) -> Self {
        match v {
            ErrorModeArg::Conditional => ErrorMode::Conditional,
            ErrorModeArg::Realized => ErrorMode::Realized,
        }
    }
}

#[derive(Debug, Args)]
pub struct Table1Args {
    /// Sample size
    #[arg(long)]
    pub n: Option<usize>,
    /// Replications per model and predictor
    #[arg(long)]
    pub reps: Option<usize>,
    /// How each replication's squared error is measured
    #[arg(long, value_enum)]
    pub error_mode: Option<ErrorModeArg>,
    #[command(flatten)]
    pub space: SpaceArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictorArg {
    Css,
    Ls,
}

#[derive(Debug, Args)]
pub struct CustomArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub space: SpaceArgs,
    /// Sample size
    #[arg(long)]
    pub n: Option<usize>,
    /// Forecast horizon
    #[arg(long)]
    pub h: Option<usize>,
    /// Replications
    #[arg(long)]
    pub reps: Option<usize>,
    /// Predictor under study
    #[arg(long, value_enum)]
    pub predictor: Option<PredictorArg>,
    /// AR order of the LS predictor
    #[arg(long)]
    pub ls_p1: Option<usize>,
    /// How each replication's squared error is measured
    #[arg(long, value_enum)]
    pub error_mode: Option<ErrorModeArg>,
    /// Innovation distribution
    #[arg(long, value_enum)]
    pub innovation: Option<InnovationArg>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub p1: Option<usize>,
    pub p2: Option<usize>,
    pub alpha: Option<Vec<f64>>,
    pub beta: Option<Vec<f64>>,
    pub d: Option<f64>,
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub d_lo: Option<f64>,
    pub d_hi: Option<f64>,
    pub theta_lo: Option<f64>,
    pub theta_hi: Option<f64>,
    pub starts_d: Option<usize>,
    pub max_iter: Option<usize>,
    pub grad_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub n: Option<usize>,
    pub h: Option<usize>,
    pub h_max: Option<usize>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub truncation: Option<usize>,
    pub innovation: Option<InnovationArg>,
    pub error_mode: Option<ErrorModeArg>,
    pub method: Option<MethodArg>,
    pub predictor: Option<PredictorArg>,
    pub ls_p1: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoSpec {
    pub input: Option<PathBuf>,
    pub column: Option<String>,
    pub output: Option<PathBuf>,
}

/// Settings that may come from a config file. Every field is optional; values
/// given on the command line take precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: Option<String>,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub space: SpaceSpec,
    #[serde(default)]
    pub run: RunSpec,
    #[serde(default)]
    pub io: IoSpec,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| ArfimaError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| ArfimaError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ArfimaError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Builds the model, checking orders against coefficient counts.
    pub fn params(&self) -> Result<ArfimaParams> {
        let m = &self.model;
        let alpha = m.alpha.clone().unwrap_or_default();
        let beta = m.beta.clone().unwrap_or_default();
        if let Some(p1) = m.p1 {
            if p1 != alpha.len() {
                return Err(ArfimaError::InvalidParameter(format!(
                    "--p1 {p1} but {} AR coefficients given",
                    alpha.len()
                )));
            }
        }
        if let Some(p2) = m.p2 {
            if p2 != beta.len() {
                return Err(ArfimaError::InvalidParameter(format!(
                    "--p2 {p2} but {} MA coefficients given",
                    beta.len()
                )));
            }
        }
        let d = m.d.ok_or_else(|| ArfimaError::InvalidParameter("--d is required".into()))?;
        let p = ArfimaParams::new(alpha, beta, d);
        p.validate()?;
        Ok(p)
    }

    /// Orders for fitting: explicit `p1`/`p2`, else coefficient counts.
    pub fn orders(&self) -> (usize, usize) {
        let m = &self.model;
        (
            m.p1.unwrap_or_else(|| m.alpha.as_ref().map_or(0, Vec::len)),
            m.p2.unwrap_or_else(|| m.beta.as_ref().map_or(0, Vec::len)),
        )
    }

    pub fn sigma(&self) -> Result<f64> {
        let s = self.model.sigma.unwrap_or(1.0);
        if !(s > 0.0 && s.is_finite()) {
            return Err(ArfimaError::InvalidParameter(format!("--sigma {s} must be positive")));
        }
        Ok(s)
    }

    pub fn space(&self, p1: usize, p2: usize) -> Result<ParamSpace> {
        let s = &self.space;
        let space = ParamSpace::new(p1, p2, s.d_lo.unwrap_or(-1.0), s.d_hi.unwrap_or(3.0))?;
        match (s.theta_lo, s.theta_hi) {
            (None, None) => Ok(space),
            (lo, hi) => space.with_uniform_theta_box(lo.unwrap_or(-2.0), hi.unwrap_or(2.0)),
        }
    }

    pub fn css(&self) -> Result<CssConfig> {
        let mut c = CssConfig::default();
        if let Some(v) = self.space.starts_d {
            c.starts_d = v;
        }
        if let Some(v) = self.space.max_iter {
            c.max_iter = v;
        }
        if let Some(v) = self.space.grad_tol {
            c.grad_tol = v;
        }
        if c.starts_d == 0 || c.max_iter == 0 || !(c.grad_tol > 0.0) {
            return Err(ArfimaError::InvalidParameter(
                "--starts-d and --max-iter must be >= 1 and --grad-tol positive".into(),
            ));
        }
        Ok(c)
    }

    pub fn seed(&self) -> u64 {
        self.run.seed.unwrap_or(0)
    }

    fn required<T: Copy>(v: Option<T>, flag: &str) -> Result<T> {
        v.ok_or_else(|| ArfimaError::InvalidParameter(format!("{flag} is required")))
    }
}

fn pick<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

fn merge_model(cfg: &mut RunConfig, m: &ModelArgs) {
    let c = &mut cfg.model;
    c.p1 = pick(m.p1, c.p1);
    c.p2 = pick(m.p2, c.p2);
    c.alpha = pick(m.alpha.clone(), c.alpha.take());
    c.beta = pick(m.beta.clone(), c.beta.take());
    c.d = pick(m.d, c.d);
    c.sigma = pick(m.sigma, c.sigma);
}

fn merge_space(cfg: &mut RunConfig, s: &SpaceArgs) {
    let c = &mut cfg.space;
    c.d_lo = pick(s.d_lo, c.d_lo);
    c.d_hi = pick(s.d_hi, c.d_hi);
    c.theta_lo = pick(s.theta_lo, c.theta_lo);
    c.theta_hi = pick(s.theta_hi, c.theta_hi);
    c.starts_d = pick(s.starts_d, c.starts_d);
    c.max_iter = pick(s.max_iter, c.max_iter);
    c.grad_tol = pick(s.grad_tol, c.grad_tol);
}

fn merge_input(cfg: &mut RunConfig, i: &InputArgs) {
    cfg.io.input = pick(i.input.clone(), cfg.io.input.take());
    cfg.io.column = pick(i.column.clone(), cfg.io.column.take());
}

fn merge_output(cfg: &mut RunConfig, o: &OutputArgs) {
    cfg.io.output = pick(o.output.clone(), cfg.io.output.take());
}

/// Applies command-line values on top of an optional config file.
pub fn resolve(cli: &Cli, file: Option<RunConfig>) -> RunConfig {
    let mut cfg = file.unwrap_or_default();
    cfg.run.seed = pick(cli.seed, cfg.run.seed);
    cfg.run.threads = pick(cli.threads, cfg.run.threads);
    let r = &mut cfg.run;
    let name = match &cli.command {
        Command::Simulate(a) => {
            r.n = pick(a.n, r.n);
            r.innovation = pick(a.innovation, r.innovation);
            merge_model(&mut cfg, &a.model);
            merge_output(&mut cfg, &a.out);
            "simulate"
        }
        Command::Estimate(a) => {
            merge_model(&mut cfg, &a.model);
            merge_space(&mut cfg, &a.space);
            merge_input(&mut cfg, &a.input);
            merge_output(&mut cfg, &a.out);
            "estimate"
        }
        Command::Predict(a) => {
            r.h = pick(a.h, r.h);
            r.method = pick(a.method, r.method);
            merge_model(&mut cfg, &a.model);
            merge_space(&mut cfg, &a.space);
            merge_input(&mut cfg, &a.input);
            merge_output(&mut cfg, &a.out);
            "predict"
        }
        Command::MspeTheory(a) => {
            r.h_max = pick(a.h_max, r.h_max);
            r.truncation = pick(a.truncation, r.truncation);
            merge_model(&mut cfg, &a.model);
            merge_output(&mut cfg, &a.out);
            "mspe-theory"
        }
        Command::Mc(McCommand::Table1(a)) => {
            r.n = pick(a.n, r.n);
            r.reps = pick(a.reps, r.reps);
            r.error_mode = pick(a.error_mode, r.error_mode);
            merge_space(&mut cfg, &a.space);
            merge_output(&mut cfg, &a.out);
            "mc table1"
        }
        Command::Mc(McCommand::Custom(a)) => {
            r.n = pick(a.n, r.n);
            r.h = pick(a.h, r.h);
            r.reps = pick(a.reps, r.reps);
            r.predictor = pick(a.predictor, r.predictor);
            r.ls_p1 = pick(a.ls_p1, r.ls_p1);
            r.error_mode = pick(a.error_mode, r.error_mode);
            r.innovation = pick(a.innovation, r.innovation);
            merge_model(&mut cfg, &a.model);
            merge_space(&mut cfg, &a.space);
            merge_output(&mut cfg, &a.out);
            "mc custom"
        }
    };
    cfg.subcommand = Some(name.to_string());
    cfg
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_input(cfg: &RunConfig) -> Result<Series> {
    let path = cfg
        .io
        .input
        .as_ref()
        .ok_or_else(|| ArfimaError::InvalidParameter("--input is required".into()))?;
    let column = cfg.io.column.as_deref().unwrap_or("y");
    Series::read_csv_path(path, column).map_err(|e| match e {
        ArfimaError::InvalidParameter(msg) => ArfimaError::DegenerateData(msg),
        other => other,
    })
}

fn cmd_simulate(cfg: &RunConfig, with_innovations: bool) -> Result<()> {
    let params = cfg.params()?;
    let n = RunConfig::required(cfg.run.n, "--n")?;
    let innovation: Innovation = cfg.run.innovation.map(Into::into).unwrap_or_default();
    let (y, eps) = simulate(&params, cfg.sigma()?, n, cfg.seed(), innovation)?;
    let out = open_output(cfg.io.output.as_deref())?;
    if with_innovations {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["y", "eps"])?;
        for (a, b) in y.values().iter().zip(&eps) {
            w.write_record([a.to_string(), b.to_string()])?;
        }
        w.flush()?;
        Ok(())
    } else {
        y.write_csv(out, "y")
    }
}

fn fit(cfg: &RunConfig, y: &Series) -> Result<crate::css::CssFit> {
    let (p1, p2) = cfg.orders();
    let space = cfg.space(p1, p2)?;
    estimate_css(y.values(), &space, &cfg.css()?)
}

fn cmd_estimate(cfg: &RunConfig) -> Result<()> {
    let y = read_input(cfg)?;
    let f = fit(cfg, &y)?;
    let mut w = csv::Writer::from_writer(open_output(cfg.io.output.as_deref())?);
    w.write_record(["parameter", "value"])?;
    for (k, a) in f.estimate.alpha.iter().enumerate() {
        w.write_record([format!("alpha{}", k + 1), a.to_string()])?;
    }
    for (k, b) in f.estimate.beta.iter().enumerate() {
        w.write_record([format!("beta{}", k + 1), b.to_string()])?;
    }
    w.write_record(["d".to_string(), f.estimate.d.to_string()])?;
    w.write_record(["sigma2".to_string(), f.sigma2_hat.to_string()])?;
    w.write_record(["objective".to_string(), f.objective_value.to_string()])?;
    w.write_record(["converged".to_string(), f.converged.to_string()])?;
    w.write_record(["boundary".to_string(), f.boundary_flag.to_string()])?;
    w.flush()?;
    Ok(())
}

fn cmd_predict(cfg: &RunConfig, do_fit: bool) -> Result<()> {
    let y = read_input(cfg)?;
    let h = RunConfig::required(cfg.run.h, "--h")?;
    let method = cfg.run.method.unwrap_or(MethodArg::Css);
    let result = match method {
        MethodArg::Ls => {
            let (p1, _) = cfg.orders();
            predict_ls_integrated_ar(y.values(), p1, h)?
        }
        MethodArg::Css | MethodArg::ClosedForm => {
            let params = if do_fit { fit(cfg, &y)?.estimate } else { cfg.params()? };
            if method == MethodArg::Css {
                predict_css_recursive(y.values(), &params, h)?
            } else {
                predict_css_closed_form(y.values(), &params, h)?
            }
        }
    };
    let mut w = csv::Writer::from_writer(open_output(cfg.io.output.as_deref())?);
    w.write_record(["h", "forecast"])?;
    for (k, v) in result.point.iter().enumerate() {
        w.write_record([(k + 1).to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_theory(cfg: &RunConfig) -> Result<()> {
    let params = cfg.params()?;
    let sigma = cfg.sigma()?;
    let h_max = cfg.run.h_max.unwrap_or(1);
    let rows = mspe_table(&params, sigma * sigma, h_max, cfg.run.truncation.unwrap_or(DEFAULT_TRUNCATION))?;
    if rows.iter().any(|r| r.truncation_warning) {
        eprintln!("warning: series truncation leaves an estimated tail above tolerance; raise --truncation");
    }
    let mut w = csv::Writer::from_writer(open_output(cfg.io.output.as_deref())?);
    w.write_record(["h", "sigma2_h", "f", "g", "j", "total_second_order"])?;
    for r in rows {
        w.write_record([
            r.h.to_string(),
            r.sigma2_h.to_string(),
            r.f.to_string(),
            r.g.to_string(),
            r.j.to_string(),
            r.total_second_order.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_mc_output<S: Serialize>(cfg: &RunConfig, rows: &[ResultRow], experiment: &str, settings: &S) -> Result<()> {
    let failures = rows.iter().map(|r| r.estimate.failures).sum();
    for r in rows.iter().filter(|r| r.estimate.quality_warning) {
        eprintln!(
            "warning: model {} / {}: {} of {} replications failed",
            r.model_id, r.method, r.estimate.failures, r.reps
        );
    }
    match cfg.io.output.as_deref() {
        Some(path) => {
            write_results_csv(rows, BufWriter::new(File::create(path)?))?;
            let manifest = RunManifest::new(experiment, cfg.seed(), cfg.run.threads, settings, failures)?;
            let mpath = manifest_path(path);
            std::fs::write(&mpath, manifest.to_toml()?)?;
        }
        None => write_results_csv(rows, io::stdout().lock())?,
    }
    Ok(())
}

/// `results.csv` -> `results.manifest.toml`.
pub fn manifest_path(results: &Path) -> PathBuf {
    results.with_extension("manifest.toml")
}

fn cmd_table1(cfg: &RunConfig) -> Result<()> {
    let defaults = Table1Settings::default();
    let settings = Table1Settings {
        n: cfg.run.n.unwrap_or(defaults.n),
        replications: cfg.run.reps.unwrap_or(defaults.replications),
        base_seed: cfg.run.seed.unwrap_or(defaults.base_seed),
        error_mode: cfg.run.error_mode.map(Into::into).unwrap_or_default(),
        css: cfg.css()?,
        innovation: Innovation::Gaussian,
    };
    let rows = run_table1(&settings)?;
    write_mc_output(cfg, &rows, "table1", &settings)
}

fn cmd_custom(cfg: &RunConfig) -> Result<()> {
    let model = cfg.params()?;
    let predictor = match cfg.run.predictor.unwrap_or(PredictorArg::Css) {
        PredictorArg::Css => Predictor::Css,
        PredictorArg::Ls => Predictor::Ls { p1: cfg.run.ls_p1.unwrap_or(model.p1().max(1)) },
    };
    let spec = ExperimentSpec {
        fit_space: cfg.space(model.p1(), model.p2())?,
        sigma: cfg.sigma()?,
        n: RunConfig::required(cfg.run.n, "--n")?,
        h: cfg.run.h.unwrap_or(1),
        replications: cfg.run.reps.unwrap_or(2000),
        base_seed: cfg.seed(),
        predictor,
        innovation: cfg.run.innovation.map(Into::into).unwrap_or_default(),
        error_mode: cfg.run.error_mode.map(Into::into).unwrap_or_default(),
        css: cfg.css()?,
        model,
    };
    let est = empirical_second_order_mspe(&spec)?;
    let theory = match predictor {
        Predictor::Css => crate::asymptotics::mspe_decomposition(
            &spec.model,
            spec.sigma * spec.sigma,
            spec.h,
            DEFAULT_TRUNCATION,
        )?
        .total_second_order,
        Predictor::Ls { .. } => f64::NAN,
    };
    let row = ResultRow {
        model_id: "custom".into(),
        method: predictor.label().into(),
        n: spec.n,
        h: spec.h,
        reps: spec.replications,
        estimate: est,
        theory_value: theory,
    };
    write_mc_output(cfg, &[row], "custom", &spec)
}

fn execute(cli: &Cli) -> Result<()> {
    let file = cli.config.as_deref().map(RunConfig::load).transpose()?;
    let cfg = resolve(cli, file);
    with_threads(cfg.run.threads, || match &cli.command {
        Command::Simulate(a) => cmd_simulate(&cfg, a.with_innovations),
        Command::Estimate(_) => cmd_estimate(&cfg),
        Command::Predict(a) => cmd_predict(&cfg, a.fit),
        Command::MspeTheory(_) => cmd_theory(&cfg),
        Command::Mc(McCommand::Table1(_)) => cmd_table1(&cfg),
        Command::Mc(McCommand::Custom(_)) => cmd_custom(&cfg),
    })?
}

/// Exit code for an error: 2 for data/convergence problems, 1 otherwise.
pub fn exit_code(err: &ArfimaError) -> i32 {
    if err.is_data_error() {
        EXIT_DATA
    } else {
        EXIT_USAGE
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_config_round_trip() {
        let cfg = RunConfig {
            subcommand: Some("mc custom".into()),
            model: ModelSpec {
                p1: Some(1),
                p2: Some(1),
                alpha: Some(vec![0.5]),
                beta: Some(vec![-0.3]),
                d: Some(0.3),
                sigma: Some(1.5),
            },
            space: SpaceSpec { d_lo: Some(-1.0), d_hi: Some(2.5), grad_tol: Some(1e-7), ..Default::default() },
            run: RunSpec {
                n: Some(1000),
                h: Some(3),
                reps: Some(20),
                seed: Some(42),
                innovation: Some(InnovationArg::Uniform),
                error_mode: Some(ErrorModeArg::Realized),
                predictor: Some(PredictorArg::Css),
                ..Default::default()
            },
            io: IoSpec { input: Some("in.csv".into()), column: Some("y".into()), output: None },
        };
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn flags_override_config() {
        let file = RunConfig::from_toml("[model]\nd = 0.4\nsigma = 2.0\n[run]\nn = 50\nseed = 3\n").unwrap();
        let cli = Cli::try_parse_from(["arfima", "simulate", "--d", "1", "--seed", "9"]).unwrap();
        let cfg = resolve(&cli, Some(file));
        assert_eq!(cfg.model.d, Some(1.0));
        assert_eq!(cfg.model.sigma, Some(2.0));
        assert_eq!(cfg.run.n, Some(50));
        assert_eq!(cfg.run.seed, Some(9));
    }

    #[test]
    fn unknown_config_key_is_rejected() {
        assert!(matches!(RunConfig::from_toml("[model]\ndelta = 1\n"), Err(ArfimaError::Config(_))));
    }

    #[test]
    fn constraint_messages() {
        let mut cfg = RunConfig::default();
        cfg.model.alpha = Some(vec![1.2]);
        cfg.model.d = Some(0.0);
        let err = cfg.params().unwrap_err();
        assert!(err.to_string().contains("AR polynomial"), "{err}");
        cfg.model.alpha = Some(vec![0.5]);
        cfg.model.beta = Some(vec![0.5]);
        assert!(cfg.params().unwrap_err().to_string().contains("common zeros"));
        cfg.model.p1 = Some(2);
        assert!(cfg.params().unwrap_err().to_string().contains("--p1 2"));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&ArfimaError::InsufficientData { n: 3, required: 6 }), EXIT_DATA);
        assert_eq!(exit_code(&ArfimaError::InvalidParameter("x".into())), EXIT_USAGE);
        assert_eq!(run(["arfima", "--bogus"]), EXIT_USAGE);
        assert_eq!(run(["arfima", "--help"]), EXIT_OK);
    }

    #[test]
    fn manifest_name() {
        assert_eq!(manifest_path(Path::new("out/res.csv")), PathBuf::from("out/res.manifest.toml"));
    }
}
