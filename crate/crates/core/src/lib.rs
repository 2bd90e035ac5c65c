//! Factor-augmented forecasting regression for binary outcomes.
//!
//! The pipeline has two estimation steps. Latent factors are extracted from a
//! large `T x N` predictor panel by principal components ([`factors`]), and the
//! binary forecasting equation `P(y_{t+h} = 1) = F(beta' z_t)` with
//! `z_t = (1, w_t', f_t')'` is then fitted by maximum likelihood ([`glm`]).
//! Around those two steps sit a moving-block bootstrap for coefficient
//! inference ([`inference`]), evaluation statistics ([`metrics`]), the
//! Monte Carlo designs used to validate the estimator ([`simulate`]),
//! FRED-MD style data handling ([`data`]) and in-/out-of-sample recession
//! backtests ([`backtest`]).

pub mod backtest;
pub mod data;
pub mod error;
pub mod factors;
pub mod glm;
pub mod inference;
pub mod metrics;
pub mod panel;
pub mod period;
pub mod plot;
pub mod rng;
pub mod simulate;

pub(crate) mod linalg;

pub use error::{Error, Result};
pub use factors::{estimate_factors, rotation_matrix, select_num_factors, FactorEstimate};
pub use glm::{fit, BinaryFarFit, Design, FitOptions, LinkFunction};
pub use panel::PanelMatrix;
pub use period::YearMonth;
