use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use frank_copula::copula::{self, AssociationParameter};
use frank_copula::data::{self, BdlRule, BivariateSample, Region, Schema, TauVariant};
use frank_copula::estimation::{self, GridSpec, Method, MleApproach};
use frank_copula::gof::{
    self, CriticalConfig, CriticalReading, CriticalSource, CriticalValueTable, GofOptions, GofPlan,
    ThetaSource, TieMethod, TnRange,
};
use frank_copula::montecarlo::{self, ExperimentPlan, WindowMode};
use frank_copula::Error;

const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Parser)]
#[command(
    name = "frank-copula",
    version,
    about = "Frank copula estimation and goodness-of-fit tests"
)]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print three decimals instead of six.
    #[arg(long, global = true)]
    paper_format: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// All six estimates of θ for one variable pair.
    Estimate(EstimateArgs),
    /// Sₙ and Tₙ with critical values and optional bootstrap p-values.
    Gof(GofArgs),
    /// Simulate a critical-value table.
    CritTable(CritTableArgs),
    /// Simulate bias and MSE of the estimators.
    BiasMse(BiasMseArgs),
    /// Bootstrap p-values of Sₙ and Tₙ.
    Bootstrap(BootstrapArgs),
    /// Kendall, Spearman and Pearson correlations with their Frank counterparts.
    Correlations(CorrelationArgs),
    /// Kendall's tau, Spearman's rho and the Jeffreys prior along a θ grid.
    RhoCurves(RhoCurveArgs),
}

#[derive(Args, Serialize)]
struct Input {
    /// CSV file with a header row.
    #[arg(
        long = "in",
        conflicts_with = "region",
        required_unless_present = "region"
    )]
    input: Option<PathBuf>,
    /// Use the bundled groundwater data of a subregion (north or south).
    #[arg(long)]
    region: Option<Region>,
    #[arg(long)]
    x: String,
    #[arg(long)]
    y: String,
    /// Token marking values below the detection limit.
    #[arg(long, default_value = "bdl")]
    bdl_token: String,
    /// Extra substitution rule COLUMN=VALUE for the detection-limit token.
    #[arg(long = "bdl", value_parser = parse_bdl)]
    bdl: Vec<BdlRuleArg>,
}

#[derive(Clone, Serialize)]
struct BdlRuleArg {
    column: String,
    value: f64,
}

#[derive(Args, Serialize)]
struct GridArgs {
    /// Half-width A of the posterior window.
    #[arg(long, default_value_t = 25.0)]
    half_width: f64,
    /// Number L of posterior grid intervals.
    #[arg(long, default_value_t = 2000)]
    intervals: usize,
}

#[derive(Args, Serialize)]
struct EstimateArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args, Serialize)]
struct GofArgs {
    #[command(flatten)]
    input: Input,
    /// Test levels.
    #[arg(long, value_delimiter = ',', default_values_t = [0.90, 0.95])]
    level: Vec<f64>,
    /// Critical-value table in CSV form; the bundled tables when omitted.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Simulate the critical values with this many replications instead of
    /// reading a table.
    #[arg(long)]
    crit_reps: Option<usize>,
    /// Bootstrap resamples for p-values.
    #[arg(long)]
    bootstrap: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Reading::Reorient)]
    reading: Reading,
    #[command(flatten)]
    stats: StatArgs,
}

#[derive(Args, Serialize)]
struct StatArgs {
    #[arg(long, value_enum, default_value_t = Ties::Max)]
    ties: Ties,
    #[arg(long, value_enum, default_value_t = Range::FromFirstJump)]
    tn_range: Range,
}

impl StatArgs {
    fn options(&self) -> GofOptions {
        GofOptions {
            tie: match self.ties {
                Ties::Max => TieMethod::Max,
                Ties::Average => TieMethod::Average,
            },
            tn_range: self.tn_range.into(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Reading {
    Reorient,
    Signed,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Ties {
    Max,
    Average,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Range {
    FromFirstJump,
    Full,
}

impl From<Range> for TnRange {
    fn from(r: Range) -> Self {
        match r {
            Range::FromFirstJump => TnRange::FromFirstJump,
            Range::Full => TnRange::Full,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Source {
    KnownMargins,
    Ranks,
}

#[derive(Args, Serialize)]
struct CritTableArgs {
    /// Sample sizes, e.g. `25,50,100` or `25:100:25`.
    #[arg(long)]
    n_grid: String,
    /// Values of θ, e.g. `-3,-1,1,3` or `-5:5:0.5`.
    #[arg(long, allow_hyphen_values = true)]
    theta_grid: String,
    #[arg(long, value_delimiter = ',', default_values_t = [0.90, 0.95])]
    level: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    reps: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Source::KnownMargins)]
    theta_source: Source,
    #[arg(long, value_enum, default_value_t = Range::FromFirstJump)]
    tn_range: Range,
}

#[derive(Args, Serialize)]
struct BiasMseArgs {
    #[arg(long)]
    n_grid: String,
    #[arg(long, allow_hyphen_values = true)]
    theta_grid: String,
    /// Replications per cell.
    #[arg(long, default_value_t = 10_000)]
    reps: usize,
    #[arg(long, default_value_t = 4)]
    batches: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Estimators to simulate.
    #[arg(long, value_delimiter = ',', default_values_t = ["MLE".to_string(), "BFPE".to_string(), "BJPE".to_string()])]
    estimators: Vec<String>,
    /// Centre of the posterior window.
    #[arg(long, value_enum, default_value_t = Window::TrueTheta)]
    window: Window,
    #[command(flatten)]
    grid: GridArgs,
    /// Also write the long-format table here.
    #[arg(long)]
    long: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Window {
    TrueTheta,
    Estimate,
}

#[derive(Args, Serialize)]
struct BootstrapArgs {
    #[command(flatten)]
    input: Input,
    /// Number of resamples.
    #[arg(long, alias = "reps", default_value_t = 10_000)]
    bootstrap: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[command(flatten)]
    stats: StatArgs,
}

#[derive(Args, Serialize)]
struct CorrelationArgs {
    #[command(flatten)]
    input: Input,
    /// Kendall tie convention.
    #[arg(long, value_enum, default_value_t = Tau::B)]
    tau: Tau,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
enum Tau {
    A,
    B,
}

#[derive(Args, Serialize)]
struct RhoCurveArgs {
    #[arg(long, default_value = "-25:25:0.5", allow_hyphen_values = true)]
    theta_grid: String,
}

fn parse_bdl(s: &str) -> Result<BdlRuleArg, String> {
    let (column, value) = s.split_once('=').ok_or("expected COLUMN=VALUE")?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|_| format!("'{value}' is not a number"))?;
    Ok(BdlRuleArg {
        column: column.trim().to_string(),
        value,
    })
}

/// `a,b,c` or an inclusive range `start:stop:step`.
fn parse_grid(s: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| -> anyhow::Result<f64> {
        let v: f64 = t
            .trim()
            .parse()
            .with_context(|| format!("'{t}' is not a number"))?;
        if !v.is_finite() {
            bail!("'{t}' is not finite");
        }
        Ok(v)
    };
    let out = match parts.as_slice() {
        [start, stop, step] => {
            let (a, b, h) = (num(start)?, num(stop)?, num(step)?);
            if !(h > 0.0) || b < a {
                bail!("range '{s}' needs start ≤ stop and a positive step");
            }
            let k = ((b - a) / h + 1e-9).floor() as usize;
            (0..=k)
                .map(|i| a + i as f64 * h)
                .map(|v| (v * 1e9).round() / 1e9)
                .collect()
        }
        [_] => s.split(',').map(num).collect::<anyhow::Result<Vec<_>>>()?,
        _ => bail!("cannot read grid '{s}'"),
    };
    if out.is_empty() {
        bail!("empty grid '{s}'");
    }
    Ok(out)
}

fn parse_n_grid(s: &str) -> anyhow::Result<Vec<usize>> {
    parse_grid(s)?
        .into_iter()
        .map(|v| {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                bail!("sample size {v} is not a positive integer")
            }
        })
        .collect()
}

fn load(input: &Input) -> anyhow::Result<BivariateSample> {
    let mut schema = Schema::groundwater(&input.x, &input.y);
    schema.bdl_token = input.bdl_token.clone();
    for r in &input.bdl {
        schema.bdl_rules.retain(|b| b.column != r.column);
        schema.bdl_rules.push(BdlRule {
            column: r.column.clone(),
            value: r.value,
        });
    }
    let sample = match (&input.input, input.region) {
        (Some(path), _) => data::load_dataset(path, &schema)?,
        (None, Some(region)) => data::load_from_reader(
            region.csv().as_bytes(),
            &format!("bundled:{}", region.name()),
            &schema,
        )?,
        (None, None) => bail!(Error::Config("either --in or --region is required".into())),
    };
    Ok(sample)
}

struct Out {
    decimals: usize,
    text: String,
}

impl Out {
    fn num(&self, x: f64) -> String {
        format!("{x:.prec$}", prec = self.decimals)
    }

    fn line(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }
}

fn header(cli: &Cli, seed: Option<u64>) -> anyhow::Result<String> {
    #[derive(Serialize)]
    struct Meta<'a> {
        command: &'a Command,
        paper_format: bool,
    }
    let config = serde_json::to_string(&Meta {
        command: &cli.command,
        paper_format: cli.paper_format,
    })?;
    let seed = seed.map(|s| s.to_string()).unwrap_or_else(|| "none".into());
    Ok(format!(
        "# frank-copula {}\n# config: {config}\n# seed: {seed}\n",
        env!("CARGO_PKG_VERSION")
    ))
}

fn seed_of(cmd: &Command) -> Option<u64> {
    match cmd {
        Command::Gof(a) => Some(a.seed),
        Command::CritTable(a) => Some(a.seed),
        Command::BiasMse(a) => Some(a.seed),
        Command::Bootstrap(a) => Some(a.seed),
        _ => None,
    }
}

fn bool_cell(b: bool) -> String {
    b.to_string()
}

fn cmd_estimate(a: &EstimateArgs, out: &mut Out) -> anyhow::Result<()> {
    let sample = load(&a.input)?;
    let pairs = gof::PseudoSample::from_sample(&sample)?;
    let spec = GridSpec {
        half_width: a.grid.half_width,
        intervals: a.grid.intervals,
    };
    let results = estimation::estimate_all(pairs.pairs(), spec)?;
    out.line(&["method", "estimate", "iterations", "converged", "objective"].map(String::from));
    for r in results {
        out.line(&[
            r.method.label().to_string(),
            out.num(r.value()),
            r.diagnostics.iterations.to_string(),
            bool_cell(r.diagnostics.converged),
            format!("{:.6e}", r.diagnostics.objective),
        ]);
    }
    Ok(())
}

fn cmd_gof(a: &GofArgs, out: &mut Out) -> anyhow::Result<()> {
    let sample = load(&a.input)?;
    let plan = GofPlan {
        options: a.stats.options(),
        reading: match a.reading {
            Reading::Reorient => CriticalReading::Reorient,
            Reading::Signed => CriticalReading::Signed,
        },
        levels: a.level.clone(),
        bootstrap: a.bootstrap.map(|b| (b, a.seed)),
    };
    let table;
    let source = match (a.crit_reps, &a.table) {
        (Some(_), Some(_)) => bail!(Error::Config(
            "--crit-reps and --table are mutually exclusive".into()
        )),
        (Some(reps), None) => CriticalSource::Simulate(CriticalConfig::new(reps, a.seed)),
        (None, path) => {
            table = match path {
                Some(p) => CriticalValueTable::from_csv(
                    fs::File::open(p).map_err(|e| Error::Data(format!("{}: {e}", p.display())))?,
                )?,
                None => CriticalValueTable::published(),
            };
            CriticalSource::Table(&table)
        }
    };
    let report = match gof::gof_test(&sample, &plan, source) {
        Err(e @ Error::OutOfTable { .. }) => {
            return Err(anyhow::Error::new(e)
                .context("no critical values for this sample; use --crit-reps to simulate them"))
        }
        r => r?,
    };
    let mut head: Vec<String> = [
        "n",
        "theta_hat",
        "sn",
        "tn",
        "theta_use",
        "reoriented",
        "theta_lookup",
        "sn_tested",
        "tn_tested",
    ]
    .map(String::from)
    .to_vec();
    let mut row = vec![
        report.n.to_string(),
        out.num(report.observed.theta_hat),
        out.num(report.observed.sn),
        out.num(report.observed.tn),
        out.num(report.theta_use),
        bool_cell(report.reoriented),
        out.num(report.theta_lookup),
        out.num(report.tested.sn),
        out.num(report.tested.tn),
    ];
    for v in &report.verdicts {
        let l = format!("{:.2}", v.level);
        head.extend([
            format!("sn_crit_{l}"),
            format!("tn_crit_{l}"),
            format!("reject_sn_{l}"),
            format!("reject_tn_{l}"),
        ]);
        row.extend([
            out.num(v.critical_sn),
            out.num(v.critical_tn),
            bool_cell(v.reject_sn),
            bool_cell(v.reject_tn),
        ]);
    }
    if let Some(b) = &report.bootstrap {
        head.extend(["p_boot_sn", "p_boot_tn", "resamples", "redraws"].map(String::from));
        row.extend([
            out.num(b.p_sn),
            out.num(b.p_tn),
            b.resamples.to_string(),
            b.redraws.to_string(),
        ]);
    }
    out.line(&head);
    out.line(&row);
    Ok(())
}

fn cmd_crit_table(a: &CritTableArgs, out: &mut Out) -> anyhow::Result<()> {
    let ns = parse_n_grid(&a.n_grid)?;
    let thetas = parse_grid(&a.theta_grid)?;
    let cfg = CriticalConfig {
        reps: a.reps,
        seed: a.seed,
        theta_source: match a.theta_source {
            Source::KnownMargins => ThetaSource::KnownMargins,
            Source::Ranks => ThetaSource::Ranks,
        },
        tn_range: a.tn_range.into(),
    };
    let mut cells = Vec::new();
    for &n in &ns {
        for &t in &thetas {
            cells.extend(gof::simulate_critical_values(
                n,
                AssociationParameter::new(t)?,
                &a.level,
                cfg,
            )?);
        }
    }
    let mut buf = Vec::new();
    CriticalValueTable::new(cells).write_csv_with(&mut buf, out.decimals)?;
    out.text.push_str(&String::from_utf8(buf)?);
    Ok(())
}

fn cmd_bias_mse(a: &BiasMseArgs, out: &mut Out) -> anyhow::Result<()> {
    let estimators = a
        .estimators
        .iter()
        .map(|s| s.parse::<Method>())
        .collect::<Result<Vec<_>, _>>()?;
    let plan = ExperimentPlan {
        n_grid: parse_n_grid(&a.n_grid)?,
        theta_grid: parse_grid(&a.theta_grid)?,
        reps_total: a.reps,
        batches: a.batches,
        estimators,
        seed: a.seed,
        grid: GridSpec {
            half_width: a.grid.half_width,
            intervals: a.grid.intervals,
        },
        window: match a.window {
            Window::TrueTheta => WindowMode::TrueTheta,
            Window::Estimate => WindowMode::Estimate,
        },
    };
    let report = montecarlo::run(&plan)?;
    let mut buf = Vec::new();
    montecarlo::write_csv(&report.rows, out.decimals, &mut buf)?;
    out.text.push_str(&String::from_utf8(buf)?);
    if let Some(path) = &a.long {
        let mut buf = Vec::new();
        montecarlo::write_long(&report.rows, out.decimals, &mut buf)?;
        let body = String::from_utf8(buf)?;
        write_atomically(path, &body)?;
    }
    Ok(())
}

fn cmd_bootstrap(a: &BootstrapArgs, out: &mut Out) -> anyhow::Result<()> {
    let sample = load(&a.input)?;
    let r = gof::bootstrap(&sample, a.bootstrap, a.seed, a.stats.options())?;
    out.line(
        &[
            "statistic",
            "theta_hat",
            "observed",
            "p_value",
            "resamples",
            "redraws",
        ]
        .map(String::from),
    );
    for (name, obs, p) in [("Sn", r.observed.sn, r.p_sn), ("Tn", r.observed.tn, r.p_tn)] {
        out.line(&[
            name.to_string(),
            out.num(r.observed.theta_hat),
            out.num(obs),
            out.num(p),
            r.resamples.to_string(),
            r.redraws.to_string(),
        ]);
    }
    Ok(())
}

fn cmd_correlations(a: &CorrelationArgs, out: &mut Out) -> anyhow::Result<()> {
    let sample = load(&a.input)?;
    let variant = match a.tau {
        Tau::A => TauVariant::A,
        Tau::B => TauVariant::B,
    };
    let ps = gof::PseudoSample::from_sample(&sample)?;
    let theta = estimation::mle(ps.pairs(), MleApproach::ScoreRoot)?.estimate;
    let param = data::parametric_correlations(theta);
    out.line(
        &[
            "n",
            "kendall",
            "spearman",
            "pearson",
            "theta_mle",
            "kendall_frank",
            "spearman_frank",
        ]
        .map(String::from),
    );
    out.line(&[
        sample.n().to_string(),
        out.num(data::kendall_hat_with(&sample, variant)),
        out.num(data::spearman_hat(&sample)),
        out.num(data::pearson_hat(&sample)),
        out.num(theta.value()),
        out.num(param.kendall),
        out.num(param.spearman),
    ]);
    Ok(())
}

fn cmd_rho_curves(a: &RhoCurveArgs, out: &mut Out) -> anyhow::Result<()> {
    let grid = parse_grid(&a.theta_grid)?;
    out.line(&["theta", "rho_k", "rho_s", "jeffreys"].map(String::from));
    for t in grid {
        let th = AssociationParameter::new(t)?;
        out.line(&[
            out.num(t),
            out.num(copula::kendall_tau(th)),
            out.num(copula::spearman_rho(th)),
            out.num(estimation::jeffreys_prior(th)?),
        ]);
    }
    Ok(())
}

/// Write to a sibling temporary file and rename, so a failed run never
/// leaves a truncated output behind.
fn write_atomically(path: &Path, body: &str) -> anyhow::Result<()> {
    let name = path
        .file_name()
        .context("output path has no file name")?
        .to_string_lossy();
    let tmp = path.with_file_name(format!(".{name}.partial"));
    let result = fs::write(&tmp, body).and_then(|_| fs::rename(&tmp, path));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.with_context(|| format!("writing {}", path.display()))
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            bail!(Error::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()?;
    }
    let mut out = Out {
        decimals: if cli.paper_format { 3 } else { 6 },
        text: header(cli, seed_of(&cli.command))?,
    };
    match &cli.command {
        Command::Estimate(a) => cmd_estimate(a, &mut out)?,
        Command::Gof(a) => cmd_gof(a, &mut out)?,
        Command::CritTable(a) => cmd_crit_table(a, &mut out)?,
        Command::BiasMse(a) => cmd_bias_mse(a, &mut out)?,
        Command::Bootstrap(a) => cmd_bootstrap(a, &mut out)?,
        Command::Correlations(a) => cmd_correlations(a, &mut out)?,
        Command::RhoCurves(a) => cmd_rho_curves(a, &mut out)?,
    }
    match &cli.out {
        Some(path) => write_atomically(path, &out.text),
        None => io::stdout()
            .lock()
            .write_all(out.text.as_bytes())
            .context("writing output"),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Config(_) => 1,
                Error::Domain(_)
                | Error::TooFewObservations { .. }
                | Error::OutOfRange(_)
                | Error::PerfectDependence(_)
                | Error::OutOfTable { .. }
                | Error::Data(_) => 2,
                Error::NonFiniteTheta(_)
                | Error::DegeneratePosterior
                | Error::Quadrature(_)
                | Error::ReplicationFailures { .. } => 3,
            };
        }
        if cause.downcast_ref::<io::Error>().is_some() {
            return 2;
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
