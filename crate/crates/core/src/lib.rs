//! Rainfall-risk regressors and ARIMA/ARIMAX models with GARCH-family
//! conditional variance for forecasting annual crop production.
//!
//! The crate is organised bottom-up:
//!
//! * [`series`] annual and monthly containers, differencing and alignment
//! * [`risk`] the four annual rainfall-risk measures
//! * [`stat_tests`] the augmented Dickey-Fuller test
//! * [`mean`] ARMA(X) mean equations fitted by conditional sum of squares
//! * [`garch`] sGARCH, eGARCH, gjrGARCH and iGARCH variance equations
//! * [`optim`] Nelder-Mead and BFGS minimization
//! * [`eval`] train/test protocol, metrics and the evaluation grid
//! * [`io`] CSV ingestion and report bundles

pub mod error;
pub mod eval;
pub mod garch;
pub mod io;
pub mod mean;
pub mod ols;
pub mod optim;
pub mod risk;
pub mod series;
pub mod transform;

pub use error::{Error, Result};
