//! Seeded replication harness: empirical second-order MSPE, the Table 1
//! experiment, objective-gap growth rates and moment stability of the CSS estimator.

use std::io::Write;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arfima::{residuals, simulate, ArfimaParams, Innovation, ParamSpace};
use crate::asymptotics::ls_second_order_mspe;
use crate::css::{estimate_css, CssConfig};
use crate::error::{ArfimaError, Result};
use crate::forecast::{ar_iterate, fit_ls_ar, psi_weights, recursive_path};

/// Failure share above which an estimate carries a quality warning.
pub const MAX_FAILURE_SHARE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Predictor {
    Css,
    Ls { p1: usize },
}

impl Predictor {
    pub fn label(&self) -> &'static str {
        match self {
            Predictor::Css => "css",
            Predictor::Ls { .. } => "ls",
        }
    }
}

/// How a replication's squared error enters the average.
///
/// `Conditional` uses `E[(y_{n+h} - yhat)^2 | y_1..y_n] - sigma_h^2 = (yhat - yhat_0)^2`,
/// where `yhat_0` is the predictor at the true parameter (exactly the conditional
/// mean under zero initial conditions). It has the same expectation as the
/// realized error and a far smaller variance. `Realized` draws `y_{n+h}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMode {
    #[default]
    Conditional,
    Realized,
}

impl std::str::FromStr for ErrorMode {
    type Err = ArfimaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conditional" => Ok(ErrorMode::Conditional),
            "realized" => Ok(ErrorMode::Realized),
            other => Err(ArfimaError::InvalidParameter(format!("unknown error mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub model: ArfimaParams,
    pub sigma: f64,
    pub fit_space: ParamSpace,
    pub n: usize,
    pub h: usize,
    pub replications: usize,
    pub base_seed: u64,
    pub predictor: Predictor,
    #[serde(default)]
    pub innovation: Innovation,
    #[serde(default)]
    pub error_mode: ErrorMode,
    #[serde(default)]
    pub css: CssConfig,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(ArfimaError::InvalidParameter(format!("sigma = {} must be positive", self.sigma)));
        }
        if self.replications == 0 {
            return Err(ArfimaError::InvalidParameter("replications must be >= 1".into()));
        }
        if self.n < 100 {
            return Err(ArfimaError::InsufficientData { n: self.n, required: 100 });
        }
        if self.h == 0 {
            return Err(ArfimaError::InvalidParameter("horizon h must be >= 1".into()));
        }
        if let Predictor::Ls { p1 } = self.predictor {
            if p1 == 0 {
                return Err(ArfimaError::InvalidParameter("LS predictor needs p1 >= 1".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MspeEstimate {
    /// Estimate of `n [E(y_{n+h} - yhat_{n+h})^2 - sigma_h^2]`.
    pub empirical_second_order: f64,
    /// `None` when fewer than two replications succeeded.
    pub std_error: Option<f64>,
    pub replications_used: usize,
    pub failures: usize,
    pub quality_warning: bool,
    /// `sigma_h^2(eta_0)` that was subtracted.
    pub sigma2_h: f64,
}

/// Compensated (Neumaier) sum; the order of `values` fixes the result.
pub fn neumaier_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Mean and standard error of the mean.
pub fn mean_and_se(values: &[f64]) -> (f64, Option<f64>) {
    let k = values.len();
    if k == 0 {
        return (f64::NAN, None);
    }
    let mean = neumaier_sum(values) / k as f64;
    if k < 2 {
        return (mean, None);
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
    let var = neumaier_sum(&sq) / (k - 1) as f64;
    (mean, Some((var / k as f64).sqrt()))
}

fn one_replication(spec: &ExperimentSpec, seed: u64, sigma2_h: f64) -> Option<f64> {
    let total = spec.n + spec.h;
    let (y, _) = simulate(&spec.model, spec.sigma, total, seed, spec.innovation).ok()?;
    let past = &y[..spec.n];
    let yhat = match spec.predictor {
        Predictor::Css => {
            let fit = estimate_css(past, &spec.fit_space, &spec.css).ok()?;
            if !fit.converged && !fit.boundary_flag {
                return None;
            }
            recursive_path(past, &fit.estimate, spec.h)[spec.h - 1]
        }
        Predictor::Ls { p1 } => {
            let coef = fit_ls_ar(past, p1).ok()?;
            ar_iterate(past, &coef, spec.h)[spec.h - 1]
        }
    };
    let n = spec.n as f64;
    let value = match spec.error_mode {
        ErrorMode::Conditional => {
            let y0 = recursive_path(past, &spec.model, spec.h)[spec.h - 1];
            n * (yhat - y0).powi(2)
        }
        ErrorMode::Realized => n * ((y[total - 1] - yhat).powi(2) - sigma2_h),
    };
    value.is_finite().then_some(value)
}

/// Replication `i` uses seed `base_seed + i`; results are aggregated in index
/// order, so the estimate does not depend on the number of worker threads.
pub fn empirical_second_order_mspe(spec: &ExperimentSpec) -> Result<MspeEstimate> {
    spec.validate()?;
    let sigma2 = spec.sigma * spec.sigma;
    let sigma2_h = sigma2 * psi_weights(&spec.model, spec.h).iter().map(|c| c * c).sum::<f64>();
    let outcomes: Vec<Option<f64>> = (0..spec.replications)
        .into_par_iter()
        .map(|i| one_replication(spec, spec.base_seed.wrapping_add(i as u64), sigma2_h))
        .collect();
    let values: Vec<f64> = outcomes.iter().flatten().copied().collect();
    let failures = spec.replications - values.len();
    let (mean, se) = mean_and_se(&values);
    Ok(MspeEstimate {
        empirical_second_order: mean,
        std_error: se,
        replications_used: values.len(),
        failures,
        quality_warning: failures as f64 > MAX_FAILURE_SHARE * spec.replications as f64,
        sigma2_h,
    })
}

/// Runs `f` on a pool with at most `threads` workers (`None`: rayon default).
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(ArfimaError::InvalidParameter("threads must be >= 1".into())),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| ArfimaError::Config(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Model {
    pub id: usize,
    pub label: &'static str,
    /// Minimal representation used for simulation.
    pub params: ArfimaParams,
    /// Integration order `v0` seen by the LS predictor.
    pub v0: usize,
}

/// The three models of the one-step comparison, all inside the CSS fitting
/// space with `p1 = 3`, `p2 = 0`.
pub fn table1_models() -> Vec<Table1Model> {
    vec![
        Table1Model {
            id: 1,
            label: "(1+0.5B)(1-B)^2 y = e",
            params: ArfimaParams::new(vec![-0.5], vec![], 2.0),
            v0: 2,
        },
        Table1Model {
            id: 2,
            label: "(1-0.25B^2)(1-B) y = e",
            params: ArfimaParams::new(vec![0.0, 0.25], vec![], 1.0),
            v0: 1,
        },
        Table1Model {
            id: 3,
            label: "(1-0.2B-0.25B^2+0.5B^3) y = e",
            params: ArfimaParams::new(vec![0.2, 0.25, -0.5], vec![], 0.0),
            v0: 0,
        },
    ]
}

/// CSS fitting space of the comparison: `p1 = 3`, `p2 = 0`, `alpha in [-2, 2]^3`, `d in [-1, 3]`.
pub fn table1_fit_space() -> ParamSpace {
    ParamSpace::new(3, 0, -1.0, 3.0)
        .and_then(|s| s.with_uniform_theta_box(-2.0, 2.0))
        .expect("static space is valid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Settings {
    pub n: usize,
    pub replications: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub error_mode: ErrorMode,
    #[serde(default)]
    pub css: CssConfig,
    #[serde(default)]
    pub innovation: Innovation,
}

impl Default for Table1Settings {
    fn default() -> Self {
        Table1Settings {
            n: 1000,
            replications: 2000,
            base_seed: 20_240_601,
            error_mode: ErrorMode::Conditional,
            css: CssConfig::default(),
            innovation: Innovation::Gaussian,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub model_id: String,
    pub method: String,
    pub n: usize,
    pub h: usize,
    pub reps: usize,
    pub estimate: MspeEstimate,
    pub theory_value: f64,
}

/// One-step second-order MSPE of the CSS (p1 = 3, p2 = 0) and LS (AR(3)) predictors
/// for each comparison model. Models share seeds across predictors.
pub fn run_table1(settings: &Table1Settings) -> Result<Vec<ResultRow>> {
    let space = table1_fit_space();
    let mut rows = Vec::new();
    for (k, m) in table1_models().into_iter().enumerate() {
        for predictor in [Predictor::Css, Predictor::Ls { p1: 3 }] {
            let spec = ExperimentSpec {
                model: m.params.clone(),
                sigma: 1.0,
                fit_space: space.clone(),
                n: settings.n,
                h: 1,
                replications: settings.replications,
                base_seed: settings.base_seed.wrapping_add(1_000_000 * k as u64),
                predictor,
                innovation: settings.innovation,
                error_mode: settings.error_mode,
                css: settings.css,
            };
            let estimate = empirical_second_order_mspe(&spec)?;
            let theory_value = match predictor {
                Predictor::Css => space.p_bar() as f64,
                Predictor::Ls { p1 } => ls_second_order_mspe(p1, m.v0)?,
            };
            rows.push(ResultRow {
                model_id: m.id.to_string(),
                method: predictor.label().to_string(),
                n: settings.n,
                h: 1,
                reps: settings.replications,
                estimate,
                theory_value,
            });
        }
    }
    Ok(rows)
}

/// CSV with columns `model_id,method,n,h,reps,estimate,std_error,theory_value`
/// (empty `std_error` when not available).
pub fn write_results_csv<W: Write>(rows: &[ResultRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["model_id", "method", "n", "h", "reps", "estimate", "std_error", "theory_value"])?;
    for r in rows {
        w.write_record([
            r.model_id.clone(),
            r.method.clone(),
            r.n.to_string(),
            r.h.to_string(),
            r.reps.to_string(),
            r.estimate.empirical_second_order.to_string(),
            r.estimate.std_error.map(|s| s.to_string()).unwrap_or_default(),
            r.theory_value.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reproducibility record written next to a results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub crate_version: String,
    pub experiment: String,
    pub seed: u64,
    pub threads: Option<usize>,
    pub settings: toml::Value,
    pub failures: usize,
}

impl RunManifest {
    pub fn new<S: Serialize>(experiment: &str, seed: u64, threads: Option<usize>, settings: &S, failures: usize) -> Result<Self> {
        let settings = toml::Value::try_from(settings).map_err(|e| ArfimaError::Config(e.to_string()))?;
        Ok(RunManifest {
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            experiment: experiment.to_string(),
            seed,
            threads,
            settings,
            failures,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| ArfimaError::Config(e.to_string()))
    }
}

/// `a_n(d) = n` if `d >= d0 - 1/2`, else `n^{2(d0 - d)}`.
pub fn a_n(n: usize, d: f64, d0: f64) -> f64 {
    let n = n as f64;
    if d >= d0 - 0.5 {
        n
    } else {
        n.powf(2.0 * (d0 - d))
    }
}

/// `sum_t (eps_t(eta) - eps_t(eta0))^2`.
pub fn objective_gap(y: &[f64], eta: &ArfimaParams, truth: &ArfimaParams) -> Result<f64> {
    let a = residuals(y, eta)?;
    let b = residuals(y, truth)?;
    Ok(a.iter().zip(&b).map(|(x, z)| (x - z).powi(2)).sum())
}

fn eta_distance(a: &ArfimaParams, b: &ArfimaParams) -> Result<f64> {
    let (x, z) = (a.to_eta(), b.to_eta());
    if x.len() != z.len() {
        return Err(ArfimaError::DimensionMismatch { expected: z.len(), got: x.len() });
    }
    Ok(x.iter().zip(&z).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt())
}

/// `min over grid of a_n(d)^{-1} sum_t (eps_t(eta) - eps_t(eta0))^2`; every grid
/// point must lie outside the `delta` ball around the truth.
pub fn lemma1_statistic(y: &[f64], truth: &ArfimaParams, grid: &[ArfimaParams], delta: f64) -> Result<f64> {
    if grid.is_empty() {
        return Err(ArfimaError::EmptyGrid);
    }
    if !(delta > 0.0) {
        return Err(ArfimaError::InvalidParameter("delta must be positive".into()));
    }
    let n = y.len();
    let mut best = f64::INFINITY;
    for eta in grid {
        if eta_distance(eta, truth)? <= delta {
            return Err(ArfimaError::InvalidParameter(format!(
                "grid point {:?} lies inside the delta ball",
                eta.to_eta()
            )));
        }
        let v = objective_gap(y, eta, truth)? / a_n(n, eta.d, truth.d);
        best = best.min(v);
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapGrowth {
    pub n_grid: Vec<usize>,
    pub mean_gap: Vec<f64>,
    /// Least-squares slope of `log mean_gap` on `log n`.
    pub slope: f64,
}

/// Least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Average unnormalized gap at a fixed `eta` across sample sizes, and its
/// growth exponent in `n`. Replication `i` at every `n` uses seed `base_seed + i`.
pub fn gap_growth(
    truth: &ArfimaParams,
    eta: &ArfimaParams,
    sigma: f64,
    n_grid: &[usize],
    reps: usize,
    base_seed: u64,
) -> Result<GapGrowth> {
    if n_grid.len() < 2 {
        return Err(ArfimaError::InvalidParameter("need at least two sample sizes".into()));
    }
    if reps == 0 {
        return Err(ArfimaError::InvalidParameter("reps must be >= 1".into()));
    }
    truth.validate()?;
    eta.validate()?;
    let mut mean_gap = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let gaps: Result<Vec<f64>> = (0..reps)
            .into_par_iter()
            .map(|i| {
                let (y, _) = simulate(truth, sigma, n, base_seed.wrapping_add(i as u64), Innovation::Gaussian)?;
                objective_gap(&y, eta, truth)
            })
            .collect();
        let gaps = gaps?;
        mean_gap.push(neumaier_sum(&gaps) / reps as f64);
    }
    let lx: Vec<f64> = n_grid.iter().map(|&n| (n as f64).ln()).collect();
    let ly: Vec<f64> = mean_gap.iter().map(|v| v.ln()).collect();
    Ok(GapGrowth { n_grid: n_grid.to_vec(), mean_gap, slope: ols_slope(&lx, &ly) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub n: usize,
    /// Empirical `E ||sqrt(n) (eta_hat - eta_0)||^q`.
    pub moment: f64,
    pub std_error: Option<f64>,
    pub replications_used: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    pub q: f64,
    pub rows: Vec<MomentRow>,
    /// Largest over smallest moment across the grid.
    pub ratio: f64,
}

/// Empirical moments of the scaled CSS error across sample sizes.
pub fn moment_stability(
    model: &ArfimaParams,
    sigma: f64,
    space: &ParamSpace,
    q: f64,
    n_grid: &[usize],
    reps: usize,
    base_seed: u64,
    css: &CssConfig,
) -> Result<MomentTable> {
    if !(1.0..=4.0).contains(&q) {
        return Err(ArfimaError::InvalidParameter(format!("moment order q = {q} must lie in [1, 4]")));
    }
    if n_grid.is_empty() || reps == 0 {
        return Err(ArfimaError::InvalidParameter("need a nonempty n grid and reps >= 1".into()));
    }
    space.check(model)?;
    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let vals: Vec<Option<f64>> = (0..reps)
            .into_par_iter()
            .map(|i| {
                let (y, _) = simulate(model, sigma, n, base_seed.wrapping_add(i as u64), Innovation::Gaussian).ok()?;
                let fit = estimate_css(&y, space, css).ok()?;
                if !fit.converged && !fit.boundary_flag {
                    return None;
                }
                let e = crate::css::scaled_error(&fit, model, n).ok()?;
                Some(e.iter().map(|v| v * v).sum::<f64>().sqrt().powf(q))
            })
            .collect();
        let used: Vec<f64> = vals.iter().flatten().copied().collect();
        let (moment, std_error) = mean_and_se(&used);
        rows.push(MomentRow { n, moment, std_error, replications_used: used.len(), failures: reps - used.len() });
    }
    let max = rows.iter().map(|r| r.moment).fold(f64::NEG_INFINITY, f64::max);
    let min = rows.iter().map(|r| r.moment).fold(f64::INFINITY, f64::min);
    Ok(MomentTable { q, rows, ratio: max / min })
}

/// `E ||Q||^q` for `Q ~ N(0, cov)`, by simulation.
pub fn limit_norm_moment(cov: &DMatrix<f64>, q: f64, draws: usize, seed: u64) -> Result<f64> {
    let k = cov.nrows();
    let chol = cov
        .clone()
        .cholesky()
        .ok_or_else(|| ArfimaError::Domain("covariance is not positive definite".into()))?;
    let l = chol.l();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vals = Vec::with_capacity(draws);
    for _ in 0..draws {
        let z = nalgebra::DVector::from_fn(k, |_, _| StandardNormal.sample(&mut rng));
        vals.push((&l * z).norm().powf(q));
    }
    Ok(neumaier_sum(&vals) / draws as f64)
}
