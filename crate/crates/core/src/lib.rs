//! ARFIMA(p1, d, p2) models with zero initial conditions: simulation,
//! conditional-sum-of-squares estimation, multistep prediction, second-order
//! MSPE theory and Monte Carlo checks.

pub mod arfima;
pub mod css;
pub mod error;
pub mod forecast;
pub mod fracdiff;
pub mod lintime;
pub mod montecarlo;
mod optim;
pub mod asymptotics;
pub mod cli;
pub mod series;

pub use arfima::{residuals, simulate, ArfimaParams, Innovation, ParamSpace};
pub use css::{estimate_css, CssConfig, CssFit};
pub use error::{ArfimaError, Constraint, Result};
pub use forecast::{
    predict_css_closed_form, predict_css_recursive, predict_ls_integrated_ar, ForecastMethod,
    ForecastResult,
};
pub use series::Series;
