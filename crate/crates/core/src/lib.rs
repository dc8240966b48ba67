//! Time-series econometrics engine for daily market data: a date-indexed
//! frame with variable construction, OLS with robust covariance, ADF/PP
//! unit-root screening, ARDL estimation with AIC lag selection, the exact
//! error-correction reparametrization with long-run coefficients, the
//! Pesaran-Shin-Smith bounds cointegration test, residual and stability
//! diagnostics, and a config-driven pipeline that renders the usual
//! long-run / short-run report tables.
//!
//! Every statistical routine is backed by a seeded synthetic-data module
//! (`synth`) whose Monte Carlo experiments double as the test oracle.

pub mod ardl;
pub mod bounds;
pub mod diagnostics;
pub mod error;
pub mod frame;
pub mod pipeline;
pub mod regress;
pub mod synth;
pub mod unitroot;

pub use error::{Error, Result};
pub use frame::{Day, Frame};
