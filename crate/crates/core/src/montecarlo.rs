//! Bias and mean squared error of the estimators by simulation.
//!
//! Each `(n, θ)` cell draws `M` samples, splits them into equal batches, and
//! reports `Bias = Σ(θ̂ − θ)/M`, `MSE = Σ(θ̂ − θ)²/M`, the bias standard error
//! `√(MSE/M)` and the spread of the per-batch MSEs. Replication `r` of a cell
//! always uses random stream `r` of the cell seed, so results do not depend on
//! the number of worker threads.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::{self, AssociationParameter, UnitPair};
use crate::error::{Error, Result};
use crate::estimation::{self, BayesGrid, GridSpec, JeffreysTable, Method, MleApproach, MLE_BOUND};
use crate::rng;

/// Largest tolerated share of failed replications in a cell.
pub const MAX_FAILURE_RATE: f64 = 0.001;

/// Where the posterior window is centred in each replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum WindowMode {
    /// `(θ − A, θ + A)` around the true value.
    #[default]
    TrueTheta,
    /// Around the replication's maximum likelihood estimate, snapped to the
    /// node spacing so that one Jeffreys table serves the whole cell.
    Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentPlan {
    pub n_grid: Vec<usize>,
    pub theta_grid: Vec<f64>,
    /// Total replications `M` per cell.
    pub reps_total: usize,
    pub batches: usize,
    pub estimators: Vec<Method>,
    pub seed: u64,
    pub grid: GridSpec,
    pub window: WindowMode,
}

impl ExperimentPlan {
    pub fn new(
        n_grid: Vec<usize>,
        theta_grid: Vec<f64>,
        reps_total: usize,
        batches: usize,
        seed: u64,
    ) -> Self {
        Self {
            n_grid,
            theta_grid,
            reps_total,
            batches,
            estimators: vec![Method::MleScore, Method::Bfpe, Method::Bjpe],
            seed,
            grid: GridSpec::default(),
            window: WindowMode::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.batches < 2 {
            return bad(format!(
                "at least two batches are needed, got {}",
                self.batches
            ));
        }
        if self.reps_total == 0 || self.reps_total % self.batches != 0 {
            return bad(format!(
                "replications ({}) must be a positive multiple of the batch count ({})",
                self.reps_total, self.batches
            ));
        }
        if self.estimators.is_empty() {
            return bad("no estimators requested".into());
        }
        if let Some(&n) = self.n_grid.iter().find(|&&n| n < 3) {
            return bad(format!("sample sizes must be at least 3, got {n}"));
        }
        if let Some(&t) = self
            .theta_grid
            .iter()
            .find(|t| !t.is_finite() || t.abs() > MLE_BOUND)
        {
            return bad(format!(
                "θ grid entries must be finite with |θ| ≤ {MLE_BOUND}, got {t}"
            ));
        }
        if self.n_grid.is_empty() || self.theta_grid.is_empty() {
            return bad("empty n or θ grid".into());
        }
        Ok(())
    }
}

/// One `(n, θ, estimator)` line of a simulation report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationRow {
    pub n: usize,
    pub theta: f64,
    pub estimator: Method,
    pub bias: f64,
    pub bias_se: f64,
    pub mse: f64,
    pub mse_se: f64,
    /// Replications that produced an estimate.
    pub reps: usize,
    pub failures: usize,
}

impl SimulationRow {
    /// Standardised bias `Bias/|θ|`.
    pub fn sb(&self) -> f64 {
        self.bias / self.theta.abs()
    }

    /// Standardised MSE `MSE/θ²`.
    pub fn smse(&self) -> f64 {
        self.mse / (self.theta * self.theta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub plan: ExperimentPlan,
    pub rows: Vec<SimulationRow>,
}

/// Seed of a cell. It depends on `|θ|` only, so `θ` and `−θ` share streams.
pub fn cell_seed(seed: u64, n: usize, theta: f64) -> u64 {
    rng::derive_seed(seed, &[n as u64, theta.abs().to_bits()])
}

/// Draws at `−|θ|` are the reflections of the draws at `|θ|`, which makes the
/// two cells exact mirror images.
fn draw(seed: u64, rep: u64, n: usize, theta: f64) -> Vec<UnitPair> {
    let mut r = rng::stream(seed, rep);
    let pairs = copula::sample_with(
        &mut r,
        n,
        AssociationParameter::new(theta.abs()).expect("finite θ"),
    );
    if theta < 0.0 {
        copula::reflect(&pairs)
    } else {
        pairs
    }
}

struct CellContext {
    theta: f64,
    grid: GridSpec,
    window: WindowMode,
    want: Vec<Method>,
    /// Fixed window (true-θ mode) or lattice table (estimate mode).
    fixed: Option<BayesGrid>,
    lattice: Option<JeffreysTable>,
}

impl CellContext {
    fn new(theta: f64, plan: &ExperimentPlan) -> Result<Self> {
        let bayes = plan
            .estimators
            .iter()
            .any(|m| matches!(m, Method::Bfpe | Method::Bjpe));
        let jeffreys = plan.estimators.contains(&Method::Bjpe);
        let (fixed, lattice) = match (bayes, plan.window) {
            (false, _) => (None, None),
            (true, WindowMode::TrueTheta) => {
                (Some(BayesGrid::new(theta, plan.grid, jeffreys)?), None)
            }
            (true, WindowMode::Estimate) => {
                let lattice = if jeffreys {
                    let h = step(plan.grid);
                    let k = ((MLE_BOUND + plan.grid.half_width) / h).ceil() as i64;
                    let nodes: Vec<f64> = (-k..=k).map(|i| i as f64 * h).collect();
                    Some(JeffreysTable::build(&nodes)?)
                } else {
                    None
                };
                (None, lattice)
            }
        };
        Ok(Self {
            theta,
            grid: plan.grid,
            window: plan.window,
            want: plan.estimators.clone(),
            fixed,
            lattice,
        })
    }

    fn estimate(&self, data: &[UnitPair]) -> Vec<Option<f64>> {
        let mut score = None;
        let mut mle_score = || -> Option<f64> {
            if score.is_none() {
                score = Some(
                    estimation::mle(data, MleApproach::ScoreRoot)
                        .ok()
                        .map(|r| r.value()),
                );
            }
            score.unwrap()
        };
        let mut bayes: Option<(Option<f64>, Option<f64>)> = None;
        let mut out = Vec::with_capacity(self.want.len());
        for &m in &self.want {
            let v = match m {
                Method::MleScore => mle_score(),
                Method::MleLoglik => estimation::mle(data, MleApproach::LoglikMax)
                    .ok()
                    .map(|r| r.value()),
                Method::Mme1 => estimation::mme1(data).ok().map(|r| r.value()),
                Method::Mme2 => estimation::mme2(data).ok().map(|r| r.value()),
                Method::Bfpe | Method::Bjpe => {
                    if bayes.is_none() {
                        bayes = Some(self.bayes(data, &mut mle_score));
                    }
                    let (f, j) = bayes.unwrap();
                    if m == Method::Bfpe {
                        f
                    } else {
                        j
                    }
                }
            };
            out.push(v);
        }
        out
    }

    fn bayes(
        &self,
        data: &[UnitPair],
        mle_score: &mut dyn FnMut() -> Option<f64>,
    ) -> (Option<f64>, Option<f64>) {
        let built;
        let grid = match self.window {
            WindowMode::TrueTheta => self.fixed.as_ref().expect("window built"),
            WindowMode::Estimate => {
                let Some(center) = mle_score() else {
                    return (None, None);
                };
                let h = step(self.grid);
                let center = (center / h).round() * h;
                let nodes = self.grid.nodes(center);
                let jeffreys = self.lattice.as_ref().map(|t| {
                    let offset = ((t.nodes.len() - 1) / 2) as i64;
                    let log_prior = nodes
                        .iter()
                        .map(|x| t.log_prior[((x / h).round() as i64 + offset) as usize])
                        .collect();
                    JeffreysTable {
                        nodes: nodes.clone(),
                        log_prior,
                    }
                });
                built = BayesGrid { nodes, jeffreys };
                &built
            }
        };
        match estimation::bayes_on_grid(data, grid) {
            Ok((f, j)) => (Some(f.value()), j.map(|j| j.value())),
            Err(_) => (None, None),
        }
    }
}

fn step(grid: GridSpec) -> f64 {
    2.0 * grid.half_width / grid.intervals as f64
}

/// Simulate one `(n, θ)` cell for every planned estimator.
pub fn run_cell(
    n: usize,
    theta: AssociationParameter,
    plan: &ExperimentPlan,
) -> Result<Vec<SimulationRow>> {
    plan.validate()?;
    let t = theta.value();
    let ctx = CellContext::new(t, plan)?;
    let seed = cell_seed(plan.seed, n, t);
    let draws: Vec<Vec<Option<f64>>> = (0..plan.reps_total as u64)
        .into_par_iter()
        .map(|rep| ctx.estimate(&draw(seed, rep, n, t)))
        .collect();

    let per_batch = plan.reps_total / plan.batches;
    let mut rows = Vec::with_capacity(plan.estimators.len());
    for (k, &method) in plan.estimators.iter().enumerate() {
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut ok = 0usize;
        let mut batch_mse = Vec::with_capacity(plan.batches);
        for batch in draws.chunks(per_batch) {
            let (mut s2, mut m) = (0.0, 0usize);
            for v in batch.iter().filter_map(|d| d[k]) {
                let e = v - ctx.theta;
                sum += e;
                sum_sq += e * e;
                s2 += e * e;
                m += 1;
            }
            ok += m;
            batch_mse.push(if m > 0 { s2 / m as f64 } else { f64::NAN });
        }
        let failures = plan.reps_total - ok;
        let limit = (MAX_FAILURE_RATE * plan.reps_total as f64).floor() as usize;
        if failures > limit {
            return Err(Error::ReplicationFailures {
                failed: failures,
                total: plan.reps_total,
                limit,
            });
        }
        let m = ok as f64;
        let mse = sum_sq / m;
        let bm = batch_mse.iter().sum::<f64>() / plan.batches as f64;
        let var =
            batch_mse.iter().map(|x| (x - bm).powi(2)).sum::<f64>() / (plan.batches - 1) as f64;
        rows.push(SimulationRow {
            n,
            theta: t,
            estimator: method,
            bias: sum / m,
            bias_se: (mse / m).sqrt(),
            mse,
            mse_se: var.sqrt() / (plan.batches as f64).sqrt(),
            reps: ok,
            failures,
        });
    }
    Ok(rows)
}

/// Every cell of the plan, ordered by `n`, then `θ`, then estimator.
pub fn run(plan: &ExperimentPlan) -> Result<SimulationReport> {
    plan.validate()?;
    let mut rows = Vec::new();
    for &n in &plan.n_grid {
        for &t in &plan.theta_grid {
            rows.extend(run_cell(n, AssociationParameter::new(t)?, plan)?);
        }
    }
    Ok(SimulationReport {
        plan: plan.clone(),
        rows,
    })
}

/// Outcome of comparing the cells at `θ` and `−θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NegationVerdict {
    pub n: usize,
    pub theta: f64,
    pub estimator: Method,
    /// `bias(θ) + bias(−θ)` in units of its combined standard error.
    pub bias_z: f64,
    /// `mse(θ) − mse(−θ)` in units of its combined standard error.
    pub mse_z: f64,
    pub pass: bool,
}

/// `bias(−θ) = −bias(θ)` and `mse(−θ) = mse(θ)` within three combined
/// standard errors, for every estimator present in both row sets.
pub fn negation_check(pos: &[SimulationRow], neg: &[SimulationRow]) -> Vec<NegationVerdict> {
    let z = |d: f64, se: f64| if d == 0.0 { 0.0 } else { d / se };
    pos.iter()
        .filter_map(|p| {
            let q = neg
                .iter()
                .find(|q| q.n == p.n && q.estimator == p.estimator && q.theta == -p.theta)?;
            let bias_z = z(p.bias + q.bias, p.bias_se.hypot(q.bias_se));
            let mse_z = z(p.mse - q.mse, p.mse_se.hypot(q.mse_se));
            Some(NegationVerdict {
                n: p.n,
                theta: p.theta,
                estimator: p.estimator,
                bias_z,
                mse_z,
                pass: bias_z.abs() <= 3.0 && mse_z.abs() <= 3.0,
            })
        })
        .collect()
}

fn fmt(x: f64, decimals: usize) -> String {
    format!("{x:.decimals$}")
}

/// CSV `n,theta,estimator,bias,bias_se,mse,mse_se,reps`.
pub fn write_csv<W: Write>(rows: &[SimulationRow], decimals: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Data(format!("writing simulation table: {e}"));
    w.write_record([
        "n",
        "theta",
        "estimator",
        "bias",
        "bias_se",
        "mse",
        "mse_se",
        "reps",
    ])
    .map_err(io)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            fmt(r.theta, decimals),
            r.estimator.label().to_string(),
            fmt(r.bias, decimals),
            fmt(r.bias_se, decimals),
            fmt(r.mse, decimals),
            fmt(r.mse_se, decimals),
            r.reps.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Data(e.to_string()))
}

/// One value per line, `n,theta,estimator,quantity,value`, including the
/// standardised bias and MSE and the failure count.
pub fn write_long<W: Write>(rows: &[SimulationRow], decimals: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Data(format!("writing simulation table: {e}"));
    w.write_record(["n", "theta", "estimator", "quantity", "value"])
        .map_err(io)?;
    for r in rows {
        let values = [
            ("bias", r.bias),
            ("bias_se", r.bias_se),
            ("mse", r.mse),
            ("mse_se", r.mse_se),
            ("sb", r.sb()),
            ("smse", r.smse()),
            ("failures", r.failures as f64),
        ];
        for (name, v) in values {
            w.write_record([
                r.n.to_string(),
                fmt(r.theta, decimals),
                r.estimator.label().to_string(),
                name.to_string(),
                fmt(v, decimals),
            ])
            .map_err(io)?;
        }
    }
    w.flush().map_err(|e| Error::Data(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(n: usize, thetas: Vec<f64>, reps: usize, estimators: Vec<Method>) -> ExperimentPlan {
        ExperimentPlan {
            estimators,
            grid: GridSpec {
                half_width: 25.0,
                intervals: 400,
            },
            ..ExperimentPlan::new(vec![n], thetas, reps, 4, 17)
        }
    }

    #[test]
    fn plan_validation() {
        let mut p = ExperimentPlan::new(vec![20], vec![1.0], 100, 4, 1);
        assert!(p.validate().is_ok());
        p.batches = 1;
        assert!(p.validate().is_err());
        p.batches = 3;
        assert!(p.validate().is_err());
        p.batches = 4;
        p.theta_grid = vec![60.0];
        assert!(p.validate().is_err());
        p.theta_grid = vec![1.0];
        p.n_grid = vec![2];
        assert!(p.validate().is_err());
    }

    #[test]
    fn cell_statistics_are_consistent() {
        let plan = small(
            30,
            vec![3.0],
            200,
            vec![Method::MleScore, Method::Mme1, Method::Bfpe],
        );
        let rows = run_cell(30, AssociationParameter::new(3.0).unwrap(), &plan).unwrap();
        assert_eq!(rows.len(), 3);
        for r in &rows {
            assert!(r.mse >= r.bias * r.bias);
            assert_eq!(r.reps + r.failures, 200);
            assert!((r.bias_se - (r.mse / r.reps as f64).sqrt()).abs() < 1e-15);
            assert!(r.mse_se > 0.0);
        }
    }

    #[test]
    fn mirrored_cells_negate_exactly() {
        let plan = small(
            20,
            vec![-3.0, 3.0],
            100,
            vec![Method::MleScore, Method::Bfpe, Method::Bjpe],
        );
        let report = run(&plan).unwrap();
        let (neg, pos): (Vec<SimulationRow>, Vec<SimulationRow>) =
            report.rows.iter().partition(|r| r.theta < 0.0);
        for (p, q) in pos.iter().zip(&neg) {
            assert!((p.bias + q.bias).abs() < 1e-6, "{p:?} {q:?}");
            assert!((p.mse - q.mse).abs() < 1e-6);
        }
        assert!(negation_check(&pos, &neg).iter().all(|v| v.pass));
    }

    #[test]
    fn repeated_runs_are_identical() {
        let plan = small(15, vec![2.0], 100, vec![Method::MleScore, Method::Mme2]);
        let a = run(&plan).unwrap();
        let b = run(&plan).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn estimate_window_matches_true_window_when_wide() {
        let mut plan = small(40, vec![4.0], 40, vec![Method::Bfpe]);
        let a = run(&plan).unwrap().rows[0];
        plan.window = WindowMode::Estimate;
        let b = run(&plan).unwrap().rows[0];
        // both windows hold essentially all posterior mass
        assert!((a.bias - b.bias).abs() < 1e-6, "{a:?} {b:?}");
    }

    #[test]
    fn csv_layout() {
        let row = SimulationRow {
            n: 15,
            theta: 10.0,
            estimator: Method::Bjpe,
            bias: 0.5,
            bias_se: 0.01,
            mse: 9.5,
            mse_se: 0.04,
            reps: 100,
            failures: 0,
        };
        let mut buf = Vec::new();
        write_csv(&[row], 3, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "n,theta,estimator,bias,bias_se,mse,mse_se,reps\n15,10.000,BJPE,0.500,0.010,9.500,0.040,100\n"
        );
        let mut buf = Vec::new();
        write_long(&[row], 6, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 8);
        assert!((row.sb() - 0.05).abs() < 1e-15 && (row.smse() - 0.095).abs() < 1e-15);
    }
}
