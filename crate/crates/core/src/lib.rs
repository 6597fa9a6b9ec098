//! Estimation and goodness-of-fit testing for the bivariate Frank copula.
//!
//! The crate covers the copula itself ([`copula`]), classical and
//! generalised-Bayes estimators of its association parameter
//! ([`estimation`]), Cramér–von Mises and Kolmogorov–Smirnov tests built on
//! Kendall's distribution ([`gof`]), a bias/MSE simulation harness
//! ([`montecarlo`]) and dataset ingestion with rank correlations ([`data`]).

pub mod copula;
pub mod data;
pub mod error;
pub mod estimation;
pub mod gof;
pub mod montecarlo;
pub mod optimize;
pub mod quadrature;
pub mod ranks;
pub mod rng;

pub use copula::{AssociationParameter, UnitPair};
pub use error::{Error, Result};
