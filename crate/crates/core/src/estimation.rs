//! Point estimation of the association parameter: maximum likelihood, the
//! two moment estimators, and posterior means under flat and Jeffreys priors.
//!
//! All estimators take the copula-scale pairs directly, so they apply both to
//! pseudo-observations built from ranks and to simulated pairs.

use rayon::prelude::*;
use serde::Serialize;

use crate::copula::{self, invert_rho, invert_tau, AssociationParameter, UnitPair};
use crate::error::{Error, Result};
use crate::optimize;
use crate::quadrature;
use crate::ranks;

/// Search interval for the maximum likelihood estimate is `[-MLE_BOUND, MLE_BOUND]`.
pub const MLE_BOUND: f64 = 50.0;

/// Absolute tolerance for the Fisher information double integrals.
const FISHER_TOL: f64 = 1e-9;

/// Below this |θ| the information is integrated as `E[score²]`.
const FISHER_SCORE_LIMIT: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Method {
    /// Maximum likelihood by bounded maximisation of the log-likelihood.
    #[serde(rename = "MLE_LOGLIK")]
    MleLoglik,
    /// Maximum likelihood by solving the score equation.
    #[serde(rename = "MLE")]
    MleScore,
    /// Moment estimator from Kendall's tau.
    #[serde(rename = "MME1")]
    Mme1,
    /// Moment estimator from Spearman's rho.
    #[serde(rename = "MME2")]
    Mme2,
    /// Posterior mean under a flat prior.
    #[serde(rename = "BFPE")]
    Bfpe,
    /// Posterior mean under the Jeffreys prior.
    #[serde(rename = "BJPE")]
    Bjpe,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::MleLoglik,
        Method::MleScore,
        Method::Mme1,
        Method::Mme2,
        Method::Bfpe,
        Method::Bjpe,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Method::MleLoglik => "MLE_LOGLIK",
            Method::MleScore => "MLE",
            Method::Mme1 => "MME1",
            Method::Mme2 => "MME2",
            Method::Bfpe => "BFPE",
            Method::Bjpe => "BJPE",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let up = s.to_ascii_uppercase().replace('-', "_");
        Method::ALL
            .into_iter()
            .find(|m| m.label() == up || (up == "MLE_SCORE" && *m == Method::MleScore))
            .ok_or_else(|| Error::Config(format!("unknown estimator '{s}'")))
    }
}

/// Solver bookkeeping attached to every estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    pub iterations: usize,
    pub converged: bool,
    /// Log-likelihood for the maximiser, score for the root finder, the
    /// sample rank correlation for moment estimators, and the posterior mass
    /// in the outermost grid cells for Bayes estimators.
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatorResult {
    pub estimate: AssociationParameter,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

impl EstimatorResult {
    pub fn value(&self) -> f64 {
        self.estimate.value()
    }
}

fn require(data: &[UnitPair], needed: usize) -> Result<()> {
    if data.len() < needed {
        Err(Error::TooFewObservations {
            needed,
            got: data.len(),
        })
    } else {
        Ok(())
    }
}

fn loglik_raw(data: &[UnitPair], t: f64) -> f64 {
    copula::log_likelihood_raw(data, t)
}

fn score_mean(data: &[UnitPair], t: f64) -> f64 {
    data.iter()
        .map(|p| copula::score_raw(p.u, p.v, t))
        .sum::<f64>()
        / data.len() as f64
}

/// Log-likelihood `Σ ln c(u_i, v_i | θ)`.
pub fn log_likelihood(data: &[UnitPair], theta: AssociationParameter) -> f64 {
    loglik_raw(data, theta.value())
}

/// The score scaled per observation, `(1/n) ∂ℓ/∂θ`.
pub fn score(data: &[UnitPair], theta: AssociationParameter) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    score_mean(data, theta.value())
}

/// How the maximum likelihood estimate is located.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum MleApproach {
    /// Brent maximisation of the log-likelihood on the search interval.
    LoglikMax,
    /// Secant iteration on the score from the Kendall moment estimate,
    /// bracketed Brent root as a fallback.
    #[default]
    ScoreRoot,
}

/// Kendall's tau of the pairs.
fn pairs_tau(data: &[UnitPair]) -> f64 {
    let u: Vec<f64> = data.iter().map(|p| p.u).collect();
    let v: Vec<f64> = data.iter().map(|p| p.v).collect();
    ranks::kendall_tau_b(&u, &v)
}

fn pairs_rho(data: &[UnitPair]) -> f64 {
    let u: Vec<f64> = data.iter().map(|p| p.u).collect();
    let v: Vec<f64> = data.iter().map(|p| p.v).collect();
    ranks::spearman(&u, &v)
}

fn loglik_max(data: &[UnitPair]) -> Result<EstimatorResult> {
    let sol = optimize::brent_minimize(|t| -loglik_raw(data, t), -MLE_BOUND, MLE_BOUND, 1e-10, 500);
    Ok(EstimatorResult {
        estimate: AssociationParameter::new(sol.x)?,
        method: Method::MleLoglik,
        diagnostics: Diagnostics {
            iterations: sol.iterations,
            converged: sol.converged,
            objective: -sol.fx,
        },
    })
}

fn score_root(data: &[UnitPair]) -> Result<EstimatorResult> {
    let tau = pairs_tau(data);
    let start = if tau.is_finite() && tau.abs() < 1.0 {
        invert_tau(tau)
            .map(|t| t.value().clamp(-MLE_BOUND, MLE_BOUND))
            .unwrap_or(0.0)
    } else {
        0.0
    };
    let f = |t: f64| score_mean(data, t);
    let step = 0.05 * (1.0 + start.abs());
    let sol = optimize::secant(f, start, start + step, 1e-12, 100);
    let mut result = if sol.converged && sol.x.abs() <= MLE_BOUND {
        Some(sol)
    } else {
        optimize::brent_root(f, -MLE_BOUND, MLE_BOUND, 1e-12, 300).map(|s| optimize::Solution {
            iterations: s.iterations + sol.iterations,
            ..s
        })
    };
    if let Some(s) = result.as_mut() {
        s.converged = s.converged && s.fx.abs() <= 1e-9;
    }
    match result {
        Some(s) => Ok(EstimatorResult {
            estimate: AssociationParameter::new(s.x)?,
            method: Method::MleScore,
            diagnostics: Diagnostics {
                iterations: s.iterations,
                converged: s.converged,
                objective: s.fx,
            },
        }),
        // No sign change on the search interval: the likelihood peaks on its
        // boundary, which only the maximiser can report.
        None => {
            let mut r = loglik_max(data)?;
            r.method = Method::MleScore;
            r.diagnostics.converged = false;
            r.diagnostics.objective = score_mean(data, r.value());
            Ok(r)
        }
    }
}

/// Maximum likelihood estimate of θ.
pub fn mle(data: &[UnitPair], approach: MleApproach) -> Result<EstimatorResult> {
    require(data, 2)?;
    match approach {
        MleApproach::LoglikMax => loglik_max(data),
        MleApproach::ScoreRoot => score_root(data),
    }
}

fn moment(
    corr: f64,
    method: Method,
    invert: fn(f64) -> Result<AssociationParameter>,
) -> Result<EstimatorResult> {
    if corr.is_nan() {
        return Err(Error::Data(
            "rank correlation undefined for a constant margin".into(),
        ));
    }
    if corr.abs() >= 1.0 {
        return Err(Error::PerfectDependence(corr));
    }
    Ok(EstimatorResult {
        estimate: invert(corr)?,
        method,
        diagnostics: Diagnostics {
            iterations: 0,
            converged: true,
            objective: corr,
        },
    })
}

/// Moment estimator solving `ρ_K(θ) = τ̂`.
pub fn mme1(data: &[UnitPair]) -> Result<EstimatorResult> {
    require(data, 2)?;
    moment(pairs_tau(data), Method::Mme1, invert_tau)
}

/// Moment estimator solving `ρ_S(θ) = ρ̂_S`.
pub fn mme2(data: &[UnitPair]) -> Result<EstimatorResult> {
    require(data, 2)?;
    moment(pairs_rho(data), Method::Mme2, invert_rho)
}

// ---------------------------------------------------------------------------
// Fisher information

/// Fisher information per observation, `value = i1 − i2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FisherInfo {
    pub theta: AssociationParameter,
    pub value: f64,
    /// `θ⁻² + e^θ/(e^θ − 1)²`; infinite at θ = 0.
    pub i1: f64,
    /// `2 E[J(U, V | θ)]`; infinite at θ = 0.
    pub i2: f64,
}

fn fisher_i1(t: f64) -> f64 {
    if t == 0.0 {
        f64::INFINITY
    } else if t.abs() < 1e-3 {
        2.0 / (t * t) - 1.0 / 12.0 + t * t / 240.0
    } else {
        let a = t.abs();
        // e^θ/(e^θ − 1)² is even in θ; evaluate at |θ| to avoid overflow.
        1.0 / (t * t) + (-a).exp() / (-(-a).exp_m1()).powi(2)
    }
}

/// `J = −∂²/∂θ² ln(e^{-θu} + e^{-θv} − e^{-θ} − e^{-θ(u+v)})` from its
/// printed numerator and denominator, for θ > 0.
fn j_pos(u: f64, v: f64, t: f64) -> f64 {
    let e = f64::exp;
    let j1 = e(-t * (u + v))
        * (-(u - v).powi(2) + u * u * e(-t * v) + v * v * e(-t * u)
            - (u + v - 1.0).powi(2) * e(-t))
        + (v - 1.0).powi(2) * e(-t * (v + 1.0))
        + (u - 1.0).powi(2) * e(-t * (u + 1.0));
    let a2 = e(-t * u) * -(-t * v).exp_m1() + e(-t * v) * -(-t * (1.0 - v)).exp_m1();
    j1 / (a2 * a2)
}

pub(crate) fn j_raw(u: f64, v: f64, t: f64) -> f64 {
    if t > 0.0 {
        j_pos(u, v, t)
    } else {
        j_pos(u, 1.0 - v, -t)
    }
}

/// `J(u, v, θ)`, whose expectation under the copula is half the second part
/// of the Fisher information, `i2(θ) = 2 E[J]`.
pub fn j_integrand(p: UnitPair, theta: AssociationParameter) -> f64 {
    j_raw(p.u, p.v, theta.value())
}

/// `E[g(U, V)]` under the copula, integrated in conditional-quantile
/// coordinates `(u, w)` with `v = h⁻¹(w | u)` so the integrand carries no
/// density factor.
fn copula_expectation(t: f64, g: impl Fn(f64, f64) -> f64) -> Result<f64> {
    quadrature::integrate_2d(
        |u, w| g(u, copula::conditional_inverse(u, w, t)),
        (0.0, 1.0),
        (0.0, 1.0),
        FISHER_TOL,
    )
    .map(|r| r.value)
}

/// Fisher information per observation.
pub fn fisher_information(theta: AssociationParameter) -> Result<FisherInfo> {
    let t = theta.value();
    let i1 = fisher_i1(t);
    let (value, i2) = if t.abs() < FISHER_SCORE_LIMIT {
        // I1 and I2 both grow like 2/θ²; the score form stays well scaled.
        let value = copula_expectation(t, |u, v| copula::score_raw(u, v, t).powi(2))?;
        (value, i1 - value)
    } else {
        let i2 = 2.0 * copula_expectation(t, |u, v| j_raw(u, v, t))?;
        (i1 - i2, i2)
    };
    if !(value > 0.0) {
        return Err(Error::Quadrature(format!(
            "non-positive information {value} at θ = {t}"
        )));
    }
    Ok(FisherInfo {
        theta,
        value,
        i1,
        i2,
    })
}

/// The Jeffreys prior `√I(θ)` (unnormalised).
pub fn jeffreys_prior(theta: AssociationParameter) -> Result<f64> {
    fisher_information(theta).map(|f| f.value.sqrt())
}

// ---------------------------------------------------------------------------
// generalised Bayes estimators on a θ grid

/// Window and resolution of the posterior quadrature grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    /// Half-width `A` of the window around its centre.
    pub half_width: f64,
    /// Number `L` of subintervals, giving `L + 1` nodes.
    pub intervals: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            half_width: 25.0,
            intervals: 2000,
        }
    }
}

impl GridSpec {
    pub fn nodes(&self, center: f64) -> Vec<f64> {
        let h = 2.0 * self.half_width / self.intervals as f64;
        (0..=self.intervals)
            .map(|i| center - self.half_width + i as f64 * h)
            .collect()
    }
}

/// Nodes of a posterior grid with unnormalised log-weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorGrid {
    pub theta_nodes: Vec<f64>,
    pub log_weights: Vec<f64>,
}

impl PosteriorGrid {
    /// Posterior mean and the share of mass in the two outermost nodes.
    pub fn mean(&self) -> Result<(f64, f64)> {
        let max = self
            .log_weights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::DegeneratePosterior);
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for (&t, &lw) in self.theta_nodes.iter().zip(&self.log_weights) {
            let w = (lw - max).exp();
            num += t * w;
            den += w;
        }
        let last = self.log_weights.len() - 1;
        let edge = ((self.log_weights[0] - max).exp() + (self.log_weights[last] - max).exp()) / den;
        Ok((num / den, edge))
    }
}

/// Log Jeffreys prior precomputed on a fixed set of nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct JeffreysTable {
    pub nodes: Vec<f64>,
    pub log_prior: Vec<f64>,
}

impl JeffreysTable {
    /// Evaluate the prior on every node. The information is even in θ, so
    /// each distinct |θ| is computed once.
    pub fn build(nodes: &[f64]) -> Result<Self> {
        let mut keys: Vec<u64> = nodes.iter().map(|t| t.abs().to_bits()).collect();
        keys.sort_unstable();
        keys.dedup();
        let values: Vec<f64> = keys
            .par_iter()
            .map(|&k| jeffreys_prior(AssociationParameter::new(f64::from_bits(k))?).map(f64::ln))
            .collect::<Result<_>>()?;
        let log_prior = nodes
            .iter()
            .map(|t| values[keys.binary_search(&t.abs().to_bits()).unwrap()])
            .collect();
        Ok(Self {
            nodes: nodes.to_vec(),
            log_prior,
        })
    }
}

/// Grid nodes plus an optional Jeffreys table on the same nodes.
#[derive(Debug, Clone)]
pub struct BayesGrid {
    pub nodes: Vec<f64>,
    pub jeffreys: Option<JeffreysTable>,
}

impl BayesGrid {
    pub fn new(center: f64, spec: GridSpec, with_jeffreys: bool) -> Result<Self> {
        if !(spec.half_width > 0.0) || spec.intervals < 2 {
            return Err(Error::Config(format!("invalid posterior grid {spec:?}")));
        }
        let nodes = spec.nodes(center);
        let jeffreys = if with_jeffreys {
            Some(JeffreysTable::build(&nodes)?)
        } else {
            None
        };
        Ok(Self { nodes, jeffreys })
    }
}

/// Log-likelihood at every node of the grid.
pub fn loglik_on_nodes(data: &[UnitPair], nodes: &[f64]) -> Vec<f64> {
    nodes.iter().map(|&t| loglik_raw(data, t)).collect()
}

fn bayes_result(grid: PosteriorGrid, method: Method) -> Result<EstimatorResult> {
    let (mean, edge) = grid.mean()?;
    Ok(EstimatorResult {
        estimate: AssociationParameter::new(mean)?,
        method,
        diagnostics: Diagnostics {
            iterations: grid.theta_nodes.len(),
            converged: edge < 1e-8,
            objective: edge,
        },
    })
}

/// Flat-prior and (if the grid carries it) Jeffreys-prior posterior means,
/// sharing one pass over the likelihood.
pub fn bayes_on_grid(
    data: &[UnitPair],
    grid: &BayesGrid,
) -> Result<(EstimatorResult, Option<EstimatorResult>)> {
    require(data, 2)?;
    let ll = loglik_on_nodes(data, &grid.nodes);
    let flat = bayes_result(
        PosteriorGrid {
            theta_nodes: grid.nodes.clone(),
            log_weights: ll.clone(),
        },
        Method::Bfpe,
    )?;
    let jeff = match &grid.jeffreys {
        Some(table) => Some(bayes_result(
            PosteriorGrid {
                theta_nodes: grid.nodes.clone(),
                log_weights: ll
                    .iter()
                    .zip(&table.log_prior)
                    .map(|(a, b)| a + b)
                    .collect(),
            },
            Method::Bjpe,
        )?),
        None => None,
    };
    Ok((flat, jeff))
}

fn application_center(data: &[UnitPair]) -> Result<f64> {
    Ok(mle(data, MleApproach::ScoreRoot)?.value())
}

/// Posterior mean under a flat prior, window centred at the MLE.
pub fn bayes_flat(data: &[UnitPair]) -> Result<EstimatorResult> {
    bayes_flat_with(data, GridSpec::default())
}

pub fn bayes_flat_with(data: &[UnitPair], spec: GridSpec) -> Result<EstimatorResult> {
    require(data, 2)?;
    let grid = BayesGrid::new(application_center(data)?, spec, false)?;
    bayes_on_grid(data, &grid).map(|r| r.0)
}

/// Posterior mean under the Jeffreys prior, window centred at the MLE.
pub fn bayes_jeffreys(data: &[UnitPair]) -> Result<EstimatorResult> {
    bayes_jeffreys_with(data, GridSpec::default())
}

pub fn bayes_jeffreys_with(data: &[UnitPair], spec: GridSpec) -> Result<EstimatorResult> {
    require(data, 2)?;
    let grid = BayesGrid::new(application_center(data)?, spec, true)?;
    Ok(bayes_on_grid(data, &grid)?
        .1
        .expect("grid built with Jeffreys table"))
}

/// Every estimator on one dataset; Bayes windows are centred at the MLE.
pub fn estimate_all(data: &[UnitPair], spec: GridSpec) -> Result<Vec<EstimatorResult>> {
    require(data, 2)?;
    let loglik = mle(data, MleApproach::LoglikMax)?;
    let score = mle(data, MleApproach::ScoreRoot)?;
    let m1 = mme1(data)?;
    let m2 = mme2(data)?;
    let grid = BayesGrid::new(score.value(), spec, true)?;
    let (bf, bj) = bayes_on_grid(data, &grid)?;
    Ok(vec![
        loglik,
        score,
        m1,
        m2,
        bf,
        bj.expect("grid built with Jeffreys table"),
    ])
}

/// Copula-scale pairs must lie strictly inside the unit square.
pub fn check_pairs(data: &[UnitPair]) -> Result<()> {
    match data
        .iter()
        .find(|p| !(p.u > 0.0 && p.u < 1.0 && p.v > 0.0 && p.v < 1.0))
    {
        Some(p) => Err(Error::Domain(format!(
            "pair ({}, {}) not inside the unit square",
            p.u, p.v
        ))),
        None => Ok(()),
    }
}
