//! Goodness-of-fit tests for the Frank copula built on Kendall's process:
//! pseudo-observations, the empirical Kendall distribution, the Cramér–von
//! Mises statistic `Sₙ` and the Kolmogorov–Smirnov statistic `Tₙ`, simulated
//! critical values and nonparametric bootstrap p-values.

use std::io::{Read, Write};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::{self, AssociationParameter, UnitPair};
use crate::data::BivariateSample;
use crate::error::{Error, Result};
use crate::estimation::{mle, MleApproach};
use crate::ranks;
use crate::rng;

const PUBLISHED_TABLE: &str = include_str!("../data/published_critical_values.csv");

/// Below this signed estimate the data are reflected before reading the
/// positive-θ critical values.
pub const REORIENT_THRESHOLD: f64 = -2.5;

/// How tied raw values are ranked before the margins are mapped to `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TieMethod {
    /// `#{k : x_k ≤ x_i}`, the literal empirical distribution function.
    #[default]
    Max,
    /// Average rank within a tie group.
    Average,
}

/// Rank-based pseudo-observations together with the counts
/// `n·W_j = #{k : u_k ≤ u_j, v_k ≤ v_j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoSample {
    pairs: Vec<UnitPair>,
    counts: Vec<usize>,
}

fn grades(x: &[f64], tie: TieMethod) -> Vec<f64> {
    let n = x.len() as f64;
    match tie {
        TieMethod::Max => ranks::max_counts(x)
            .into_iter()
            .map(|c| (c as f64 + 0.5) / (n + 1.0))
            .collect(),
        TieMethod::Average => ranks::mid_ranks(x)
            .into_iter()
            .map(|r| (r + 0.5) / (n + 1.0))
            .collect(),
    }
}

/// `#{k : u_k ≤ u_j, v_k ≤ v_j}` for every `j` with a Fenwick tree.
fn dominance_counts(pairs: &[UnitPair]) -> Vec<usize> {
    let n = pairs.len();
    let mut vs: Vec<f64> = pairs.iter().map(|p| p.v).collect();
    vs.sort_by(f64::total_cmp);
    vs.dedup();
    // 1-based position of the last v value ≤ the query
    let slot = |v: f64| vs.partition_point(|&x| x <= v);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| pairs[a].u.total_cmp(&pairs[b].u));
    let mut tree = vec![0usize; vs.len() + 1];
    let mut out = vec![0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && pairs[order[end]].u == pairs[order[start]].u {
            end += 1;
        }
        for &i in &order[start..end] {
            let mut k = slot(pairs[i].v);
            while k < tree.len() {
                tree[k] += 1;
                k += k & k.wrapping_neg();
            }
        }
        for &i in &order[start..end] {
            let mut k = slot(pairs[i].v);
            let mut s = 0;
            while k > 0 {
                s += tree[k];
                k -= k & k.wrapping_neg();
            }
            out[i] = s;
        }
        start = end;
    }
    out
}

impl PseudoSample {
    /// Pseudo-observations of a raw sample, ties ranked by [`TieMethod::Max`].
    pub fn from_sample(sample: &BivariateSample) -> Result<Self> {
        Self::from_sample_with(sample, TieMethod::Max)
    }

    pub fn from_sample_with(sample: &BivariateSample, tie: TieMethod) -> Result<Self> {
        Self::from_columns(sample.xs(), sample.ys(), tie)
    }

    pub fn from_columns(x: &[f64], y: &[f64], tie: TieMethod) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Data(format!(
                "column lengths differ: {} vs {}",
                x.len(),
                y.len()
            )));
        }
        if x.len() < 2 {
            return Err(Error::TooFewObservations {
                needed: 2,
                got: x.len(),
            });
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite observation".into()));
        }
        let pairs = grades(x, tie)
            .into_iter()
            .zip(grades(y, tie))
            .map(|(u, v)| UnitPair::new(u, v))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_pairs(pairs))
    }

    /// Use copula-scale pairs as they are. The counts depend only on the
    /// coordinate orderings, so they agree with those of the ranked pairs.
    pub fn from_pairs(pairs: Vec<UnitPair>) -> Self {
        let counts = dominance_counts(&pairs);
        Self { pairs, counts }
    }

    pub fn n(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[UnitPair] {
        &self.pairs
    }

    /// `n·W_j` for every observation.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// `W_j = #{k : u_k ≤ u_j, v_k ≤ v_j} / n`.
    pub fn w(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    /// The sample after `v ↦ 1 − v`, with the counts recomputed.
    pub fn reflected(&self) -> Self {
        Self::from_pairs(copula::reflect(&self.pairs))
    }

    /// `n·K_n(j/n)` for `j = 0..=n`.
    fn step_counts(&self) -> Vec<usize> {
        let n = self.n();
        let mut hist = vec![0usize; n + 1];
        for &c in &self.counts {
            hist[c] += 1;
        }
        let mut acc = 0;
        hist.iter()
            .map(|h| {
                acc += h;
                acc
            })
            .collect()
    }
}

/// Empirical Kendall distribution `K_n(t) = #{W_j ≤ t}/n`.
pub fn empirical_k(ps: &PseudoSample, t: f64) -> f64 {
    let n = ps.n() as f64;
    ps.counts.iter().filter(|&&c| c as f64 / n <= t).count() as f64 / n
}

fn k_at_grid(n: usize, theta: f64) -> Vec<f64> {
    // K(j/n) for j = 0..=n+1, with K ≡ 1 beyond t = 1
    (0..=n + 1)
        .map(|j| {
            if j >= n {
                1.0
            } else {
                copula::k_cdf_raw(j as f64 / n as f64, theta)
            }
        })
        .collect()
}

/// Cramér–von Mises statistic `Sₙ = ∫ n {K_n(t) − K(t, θ̂)}² dK(t, θ̂)`.
pub fn sn_statistic(ps: &PseudoSample, theta_hat: AssociationParameter) -> f64 {
    let n = ps.n();
    let nf = n as f64;
    let kn: Vec<f64> = ps
        .step_counts()
        .into_iter()
        .map(|c| c as f64 / nf)
        .collect();
    let k = k_at_grid(n, theta_hat.value());
    let mut first = 0.0;
    for j in 1..n {
        first += kn[j] * kn[j] * (k[j + 1] - k[j]);
    }
    let mut second = 0.0;
    for j in 1..=n {
        second += kn[j] * (k[j + 1] * k[j + 1] - k[j] * k[j]);
    }
    (nf / 3.0 + nf * first - nf * second).max(0.0)
}

/// Which jump points enter the Kolmogorov–Smirnov maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TnRange {
    /// `1 ≤ j ≤ n − 1`: the supremum over `[1/n, 1]`.
    #[default]
    FromFirstJump,
    /// `0 ≤ j ≤ n − 1`: the supremum over `[0, 1]`.
    Full,
}

/// Kolmogorov–Smirnov statistic `Tₙ = √n sup |K_n(t) − K(t, θ̂)|`.
pub fn tn_statistic(ps: &PseudoSample, theta_hat: AssociationParameter) -> f64 {
    tn_statistic_with(ps, theta_hat, TnRange::default())
}

pub fn tn_statistic_with(
    ps: &PseudoSample,
    theta_hat: AssociationParameter,
    range: TnRange,
) -> f64 {
    let n = ps.n();
    let nf = n as f64;
    let kn = ps.step_counts();
    let k = k_at_grid(n, theta_hat.value());
    let first = match range {
        TnRange::FromFirstJump => 1,
        TnRange::Full => 0,
    };
    let mut best: f64 = 0.0;
    for j in first..n {
        let e = kn[j] as f64 / nf;
        best = best.max((e - k[j]).abs()).max((e - k[j + 1]).abs());
    }
    nf.sqrt() * best
}

/// Observed statistics of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Statistics {
    pub theta_hat: f64,
    pub sn: f64,
    pub tn: f64,
}

/// Options shared by every goodness-of-fit computation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GofOptions {
    pub tie: TieMethod,
    pub tn_range: TnRange,
}

/// `θ̂` by maximum likelihood on the pseudo-observations, then `Sₙ` and `Tₙ`.
pub fn statistics(ps: &PseudoSample, opts: GofOptions) -> Result<Statistics> {
    let theta = mle(ps.pairs(), MleApproach::ScoreRoot)?.estimate;
    Ok(statistics_at(ps, theta, opts))
}

pub fn statistics_at(
    ps: &PseudoSample,
    theta: AssociationParameter,
    opts: GofOptions,
) -> Statistics {
    Statistics {
        theta_hat: theta.value(),
        sn: sn_statistic(ps, theta),
        tn: tn_statistic_with(ps, theta, opts.tn_range),
    }
}

// ---------------------------------------------------------------------------
// critical values

/// Where the `θ̂` inside each simulated statistic comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ThetaSource {
    /// The MLE of the simulated copula pairs themselves.
    #[default]
    KnownMargins,
    /// The MLE of their rank-based pseudo-observations.
    Ranks,
}

/// Replication settings for simulated critical values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalConfig {
    pub reps: usize,
    pub seed: u64,
    pub theta_source: ThetaSource,
    pub tn_range: TnRange,
}

impl CriticalConfig {
    pub fn new(reps: usize, seed: u64) -> Self {
        Self {
            reps,
            seed,
            theta_source: ThetaSource::default(),
            tn_range: TnRange::default(),
        }
    }
}

/// One `(level, n, θ)` entry of a critical-value table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalCell {
    pub level: f64,
    pub n: usize,
    pub theta: f64,
    pub sn: f64,
    pub tn: f64,
    pub reps: usize,
    pub seed: Option<u64>,
}

/// Seed of the replication streams of cell `(n, θ)`.
pub fn cell_seed(seed: u64, n: usize, theta: f64) -> u64 {
    rng::derive_seed(seed, &[n as u64, theta.to_bits()])
}

/// The `(Sₙ, Tₙ)` pairs of every replication, in replication order.
pub fn simulate_statistics(
    n: usize,
    theta: AssociationParameter,
    cfg: CriticalConfig,
) -> Result<Vec<(f64, f64)>> {
    if n < 3 {
        return Err(Error::TooFewObservations { needed: 3, got: n });
    }
    let base = cell_seed(cfg.seed, n, theta.value());
    let opts = GofOptions {
        tie: TieMethod::Max,
        tn_range: cfg.tn_range,
    };
    (0..cfg.reps as u64)
        .into_par_iter()
        .map(|rep| {
            let mut r = rng::stream(base, rep);
            let pairs = copula::sample_with(&mut r, n, theta);
            let ps = match cfg.theta_source {
                ThetaSource::KnownMargins => PseudoSample::from_pairs(pairs),
                ThetaSource::Ranks => {
                    let u: Vec<f64> = pairs.iter().map(|p| p.u).collect();
                    let v: Vec<f64> = pairs.iter().map(|p| p.v).collect();
                    PseudoSample::from_columns(&u, &v, TieMethod::Max)?
                }
            };
            let s = statistics(&ps, opts)?;
            Ok((s.sn, s.tn))
        })
        .collect()
}

/// Type-1 empirical quantile: the order statistic at `ceil(len · level)`.
pub fn upper_quantile(values: &mut [f64], level: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let k = ((values.len() as f64 * level).ceil() as usize).clamp(1, values.len());
    values[k - 1]
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "level must lie in (0, 1), got {level}"
        )))
    }
}

/// Simulated critical values of `Sₙ` and `Tₙ` at each level.
pub fn simulate_critical_values(
    n: usize,
    theta: AssociationParameter,
    levels: &[f64],
    cfg: CriticalConfig,
) -> Result<Vec<CriticalCell>> {
    if cfg.reps < 100 {
        return Err(Error::Config(format!(
            "at least 100 replications are required, got {}",
            cfg.reps
        )));
    }
    for &l in levels {
        check_level(l)?;
    }
    let stats = simulate_statistics(n, theta, cfg)?;
    let mut sn: Vec<f64> = stats.iter().map(|s| s.0).collect();
    let mut tn: Vec<f64> = stats.iter().map(|s| s.1).collect();
    Ok(levels
        .iter()
        .map(|&level| CriticalCell {
            level,
            n,
            theta: theta.value(),
            sn: upper_quantile(&mut sn, level),
            tn: upper_quantile(&mut tn, level),
            reps: cfg.reps,
            seed: Some(cfg.seed),
        })
        .collect())
}

/// Which statistic a lookup refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Statistic {
    Sn,
    Tn,
}

/// A grid of critical values indexed by level, `n` and `θ`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CriticalValueTable {
    pub cells: Vec<CriticalCell>,
}

const LEVEL_EPS: f64 = 1e-9;
const THETA_EPS: f64 = 1e-9;

fn lerp(x0: f64, y0: f64, x1: f64, y1: f64, x: f64) -> f64 {
    if x1 == x0 {
        y0
    } else {
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}

impl CriticalValueTable {
    pub fn new(mut cells: Vec<CriticalCell>) -> Self {
        cells.sort_by(|a, b| {
            a.level
                .total_cmp(&b.level)
                .then(a.n.cmp(&b.n))
                .then(a.theta.total_cmp(&b.theta))
        });
        Self { cells }
    }

    /// The tables shipped with the crate (`reps = 10⁴`, seed unknown).
    pub fn published() -> Self {
        Self::from_csv(PUBLISHED_TABLE.as_bytes()).expect("bundled critical-value table parses")
    }

    /// Parse the CSV layout written by [`write_csv`](Self::write_csv); lines
    /// starting with `#` are skipped.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(reader);
        let cells = rdr
            .deserialize()
            .collect::<std::result::Result<Vec<CriticalCell>, _>>()
            .map_err(|e| Error::Data(format!("critical-value table: {e}")))?;
        for c in &cells {
            check_level(c.level)?;
            if !(c.theta.is_finite() && c.sn.is_finite() && c.tn.is_finite()) {
                return Err(Error::Data(format!(
                    "non-finite entry in critical-value table at n={}",
                    c.n
                )));
            }
        }
        Ok(Self::new(cells))
    }

    /// CSV with header `level,n,theta,sn,tn,reps,seed`, six decimals.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        self.write_csv_with(writer, 6)
    }

    pub fn write_csv_with<W: Write>(&self, writer: W, decimals: usize) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::Data(format!("writing critical-value table: {e}"));
        w.write_record(["level", "n", "theta", "sn", "tn", "reps", "seed"])
            .map_err(io)?;
        for c in &self.cells {
            w.write_record([
                format!("{:.2}", c.level),
                c.n.to_string(),
                format!("{:.decimals$}", c.theta),
                format!("{:.decimals$}", c.sn),
                format!("{:.decimals$}", c.tn),
                c.reps.to_string(),
                c.seed.map(|s| s.to_string()).unwrap_or_default(),
            ])
            .map_err(io)?;
        }
        w.flush()
            .map_err(|e| Error::Data(format!("writing critical-value table: {e}")))
    }

    pub fn levels(&self) -> Vec<f64> {
        let mut l: Vec<f64> = self.cells.iter().map(|c| c.level).collect();
        l.dedup_by(|a, b| (*a - *b).abs() < LEVEL_EPS);
        l
    }

    fn row(&self, level: f64, n: usize) -> Vec<&CriticalCell> {
        self.cells
            .iter()
            .filter(|c| c.n == n && (c.level - level).abs() < LEVEL_EPS)
            .collect()
    }

    fn hole(n: usize, theta: f64, level: f64, reason: impl Into<String>) -> Error {
        Error::OutOfTable {
            n,
            theta,
            level,
            reason: reason.into(),
        }
    }

    fn row_value(
        &self,
        level: f64,
        n: usize,
        theta: f64,
        stat: Statistic,
        target_n: usize,
    ) -> Result<f64> {
        let row = self.row(level, n);
        let pick = |c: &CriticalCell| match stat {
            Statistic::Sn => c.sn,
            Statistic::Tn => c.tn,
        };
        let hi = row.partition_point(|c| c.theta < theta - THETA_EPS);
        if hi < row.len() && (row[hi].theta - theta).abs() <= THETA_EPS {
            return Ok(pick(row[hi]));
        }
        if hi == 0 || hi == row.len() {
            let span = match (row.first(), row.last()) {
                (Some(a), Some(b)) => format!(
                    "θ outside the tabulated range [{}, {}] at n = {n}",
                    a.theta, b.theta
                ),
                _ => format!("no entries for n = {n}"),
            };
            return Err(Self::hole(target_n, theta, level, span));
        }
        let (a, b) = (row[hi - 1], row[hi]);
        Ok(lerp(a.theta, pick(a), b.theta, pick(b), theta))
    }

    /// Critical value at `(n, θ, level)`: exact on grid points, otherwise
    /// linear in θ within the bracketing `n` rows and then linear in `n`.
    /// Requests outside the grid are refused.
    pub fn lookup(&self, n: usize, theta: f64, level: f64, stat: Statistic) -> Result<f64> {
        if !theta.is_finite() {
            return Err(Error::NonFiniteTheta(theta));
        }
        let mut ns: Vec<usize> = self
            .cells
            .iter()
            .filter(|c| (c.level - level).abs() < LEVEL_EPS)
            .map(|c| c.n)
            .collect();
        if ns.is_empty() {
            return Err(Self::hole(n, theta, level, "level not tabulated"));
        }
        ns.sort_unstable();
        ns.dedup();
        if ns.binary_search(&n).is_ok() {
            return self.row_value(level, n, theta, stat, n);
        }
        let hi = ns.partition_point(|&m| m < n);
        if hi == 0 || hi == ns.len() {
            return Err(Self::hole(
                n,
                theta,
                level,
                format!(
                    "n outside the tabulated range [{}, {}]",
                    ns[0],
                    ns[ns.len() - 1]
                ),
            ));
        }
        let (n0, n1) = (ns[hi - 1], ns[hi]);
        let v0 = self.row_value(level, n0, theta, stat, n)?;
        let v1 = self.row_value(level, n1, theta, stat, n)?;
        Ok(lerp(n0 as f64, v0, n1 as f64, v1, n as f64))
    }

    /// `(Sₙ, Tₙ)` critical values at one point.
    pub fn lookup_pair(&self, n: usize, theta: f64, level: f64) -> Result<(f64, f64)> {
        Ok((
            self.lookup(n, theta, level, Statistic::Sn)?,
            self.lookup(n, theta, level, Statistic::Tn)?,
        ))
    }
}

/// `θ_use = |θ̂|`, flagged for reorientation when `θ̂ ≤ −2.5`.
pub fn theta_use_policy(theta_hat: AssociationParameter) -> (f64, bool) {
    let t = theta_hat.value();
    (t.abs(), t <= REORIENT_THRESHOLD)
}

// ---------------------------------------------------------------------------
// bootstrap

/// Bootstrap p-values of both statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BootstrapResult {
    pub observed: Statistics,
    pub p_sn: f64,
    pub p_tn: f64,
    pub resamples: usize,
    /// Resamples drawn again because they had fewer than three distinct rows.
    pub redraws: usize,
}

impl BootstrapResult {
    pub fn p_value(&self, stat: Statistic) -> f64 {
        match stat {
            Statistic::Sn => self.p_sn,
            Statistic::Tn => self.p_tn,
        }
    }
}

fn distinct_rows(sample: &BivariateSample, rows: &[usize]) -> usize {
    let mut keys: Vec<(u64, u64)> = rows
        .iter()
        .map(|&i| (sample.xs()[i].to_bits(), sample.ys()[i].to_bits()))
        .collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

/// Nonparametric bootstrap: resample rows with replacement, re-rank,
/// re-estimate θ and recompute the statistics; the p-value is the share of
/// resamples whose statistic strictly exceeds the observed one.
pub fn bootstrap(
    sample: &BivariateSample,
    b: usize,
    seed: u64,
    opts: GofOptions,
) -> Result<BootstrapResult> {
    if b == 0 {
        return Err(Error::Config(
            "the number of bootstrap resamples must be positive".into(),
        ));
    }
    let n = sample.n();
    let ps = PseudoSample::from_sample_with(sample, opts.tie)?;
    let observed = statistics(&ps, opts)?;
    if distinct_rows(sample, &(0..n).collect::<Vec<_>>()) < 3 {
        return Err(Error::Data(
            "bootstrap needs at least three distinct rows".into(),
        ));
    }
    let draws: Vec<(f64, f64, usize)> = (0..b as u64)
        .into_par_iter()
        .map(|rep| {
            let mut r = rng::stream(seed, rep);
            let mut redraws = 0;
            let rows = loop {
                let rows: Vec<usize> = (0..n).map(|_| r.gen_range(0..n)).collect();
                if distinct_rows(sample, &rows) >= 3 {
                    break rows;
                }
                redraws += 1;
            };
            let resample = sample.select_rows(&rows);
            let ps = PseudoSample::from_sample_with(&resample, opts.tie)?;
            let s = statistics(&ps, opts)?;
            Ok((s.sn, s.tn, redraws))
        })
        .collect::<Result<_>>()?;
    let exceed =
        |f: fn(&(f64, f64, usize)) -> f64, obs: f64| draws.iter().filter(|d| f(d) > obs).count();
    let bf = b as f64;
    Ok(BootstrapResult {
        observed,
        p_sn: exceed(|d| d.0, observed.sn) as f64 / bf,
        p_tn: exceed(|d| d.1, observed.tn) as f64 / bf,
        resamples: b,
        redraws: draws.iter().map(|d| d.2).sum(),
    })
}

/// Bootstrap p-value of one statistic.
pub fn bootstrap_pvalue(
    sample: &BivariateSample,
    stat: Statistic,
    b: usize,
    seed: u64,
) -> Result<f64> {
    bootstrap(sample, b, seed, GofOptions::default()).map(|r| r.p_value(stat))
}

// ---------------------------------------------------------------------------
// full test

/// How the signed estimate is matched to the critical-value tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CriticalReading {
    /// Read the table at `|θ̂|`; for `θ̂ ≤ −2.5` reflect the data first and
    /// compare the reflected statistics.
    #[default]
    Reorient,
    /// Read the table at the signed `θ̂` with the original statistics.
    Signed,
}

/// Source of the critical values used for verdicts.
#[derive(Debug, Clone, Copy)]
pub enum CriticalSource<'a> {
    Table(&'a CriticalValueTable),
    Simulate(CriticalConfig),
    None,
}

/// Critical values and verdicts at one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelVerdict {
    pub level: f64,
    pub critical_sn: f64,
    pub critical_tn: f64,
    pub reject_sn: bool,
    pub reject_tn: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GofReport {
    pub n: usize,
    /// Statistics of the data as given.
    pub observed: Statistics,
    /// `|θ̂|`.
    pub theta_use: f64,
    pub reoriented: bool,
    /// Statistics compared with the critical values (the reflected sample's
    /// when reoriented).
    pub tested: Statistics,
    /// θ at which the critical values were read.
    pub theta_lookup: f64,
    pub verdicts: Vec<LevelVerdict>,
    pub bootstrap: Option<BootstrapResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GofPlan {
    pub options: GofOptions,
    pub reading: CriticalReading,
    pub levels: Vec<f64>,
    /// Bootstrap resamples and seed, if p-values are wanted.
    pub bootstrap: Option<(usize, u64)>,
}

impl Default for GofPlan {
    fn default() -> Self {
        Self {
            options: GofOptions::default(),
            reading: CriticalReading::default(),
            levels: vec![0.90, 0.95],
            bootstrap: None,
        }
    }
}

/// Observed statistics, critical values at the planned levels and (when
/// requested) bootstrap p-values for one sample.
pub fn gof_test(
    sample: &BivariateSample,
    plan: &GofPlan,
    source: CriticalSource<'_>,
) -> Result<GofReport> {
    let ps = PseudoSample::from_sample_with(sample, plan.options.tie)?;
    let observed = statistics(&ps, plan.options)?;
    let theta_hat = AssociationParameter::new(observed.theta_hat)?;
    let (theta_use, flagged) = theta_use_policy(theta_hat);
    let reoriented = flagged && plan.reading == CriticalReading::Reorient;
    let tested = if reoriented {
        statistics(&ps.reflected(), plan.options)?
    } else {
        observed
    };
    let theta_lookup = match plan.reading {
        CriticalReading::Reorient if reoriented => tested.theta_hat,
        CriticalReading::Reorient => theta_use,
        CriticalReading::Signed => observed.theta_hat,
    };
    let n = ps.n();
    let critical: Vec<(f64, f64, f64)> = match source {
        CriticalSource::None => Vec::new(),
        CriticalSource::Table(table) => plan
            .levels
            .iter()
            .map(|&l| {
                table
                    .lookup_pair(n, theta_lookup, l)
                    .map(|(s, t)| (l, s, t))
            })
            .collect::<Result<_>>()?,
        CriticalSource::Simulate(cfg) => {
            let cfg = CriticalConfig {
                tn_range: plan.options.tn_range,
                ..cfg
            };
            simulate_critical_values(
                n,
                AssociationParameter::new(theta_lookup)?,
                &plan.levels,
                cfg,
            )?
            .into_iter()
            .map(|c| (c.level, c.sn, c.tn))
            .collect()
        }
    };
    let verdicts = critical
        .into_iter()
        .map(|(level, cs, ct)| LevelVerdict {
            level,
            critical_sn: cs,
            critical_tn: ct,
            reject_sn: tested.sn > cs,
            reject_tn: tested.tn > ct,
        })
        .collect();
    let bootstrap = match plan.bootstrap {
        Some((b, seed)) => Some(bootstrap(sample, b, seed, plan.options)?),
        None => None,
    };
    Ok(GofReport {
        n,
        observed,
        theta_use,
        reoriented,
        tested,
        theta_lookup,
        verdicts,
        bootstrap,
    })
}
