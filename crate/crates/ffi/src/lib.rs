//! C interface to `frank-copula`.
//!
//! Every fallible function returns an [`FcStatus`] and writes its result
//! through an out-pointer. On failure the message is kept per thread and can
//! be read with [`fc_last_error_message`]. Samples and critical-value tables
//! are opaque handles released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use frank_copula::copula::{self, AssociationParameter, UnitPair};
use frank_copula::data::BivariateSample;
use frank_copula::estimation::{self, GridSpec, MleApproach};
use frank_copula::gof::{
    self, CriticalConfig, CriticalValueTable, GofOptions, PseudoSample, Statistic, TieMethod,
};
use frank_copula::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FcStatus {
    Ok = 0,
    /// A null pointer, a bad enum value or an invalid option.
    InvalidArgument = 1,
    /// An argument outside the mathematical domain.
    Domain = 2,
    /// Input data that cannot be analysed.
    Data = 3,
    /// A numerical routine failed.
    Numerical = 4,
    /// A critical value outside the table.
    OutOfTable = 5,
    /// The library panicked; this is a bug.
    Panic = 6,
}

/// Estimators accepted by [`fc_estimate`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FcMethod {
    MleLoglik = 0,
    Mle = 1,
    Mme1 = 2,
    Mme2 = 3,
    Bfpe = 4,
    Bjpe = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FcStatistic {
    Sn = 0,
    Tn = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FcTies {
    Max = 0,
    Average = 1,
}

/// A bivariate sample and its pseudo-observations.
pub struct FcSample {
    raw: BivariateSample,
    pseudo: PseudoSample,
}

/// A critical-value table.
pub struct FcTable {
    table: CriticalValueTable,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> FcStatus {
    match e {
        Error::Config(_) => FcStatus::InvalidArgument,
        Error::Domain(_) | Error::OutOfRange(_) | Error::NonFiniteTheta(_) => FcStatus::Domain,
        Error::TooFewObservations { .. } | Error::PerfectDependence(_) | Error::Data(_) => {
            FcStatus::Data
        }
        Error::DegeneratePosterior | Error::Quadrature(_) | Error::ReplicationFailures { .. } => {
            FcStatus::Numerical
        }
        Error::OutOfTable { .. } => FcStatus::OutOfTable,
    }
}

struct Fail(FcStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn invalid(msg: &str) -> Fail {
    Fail(FcStatus::InvalidArgument, msg.to_string())
}

/// Run `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> FcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            FcStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            FcStatus::Panic
        }
    }
}

impl FcMethod {
    fn from_raw(v: i32) -> Result<Self, Fail> {
        Ok(match v {
            0 => Self::MleLoglik,
            1 => Self::Mle,
            2 => Self::Mme1,
            3 => Self::Mme2,
            4 => Self::Bfpe,
            5 => Self::Bjpe,
            _ => return Err(invalid("unknown estimator")),
        })
    }
}

impl FcStatistic {
    fn from_raw(v: i32) -> Result<Self, Fail> {
        match v {
            0 => Ok(Self::Sn),
            1 => Ok(Self::Tn),
            _ => Err(invalid("unknown statistic")),
        }
    }
}

impl FcTies {
    fn from_raw(v: i32) -> Result<Self, Fail> {
        match v {
            0 => Ok(Self::Max),
            1 => Ok(Self::Average),
            _ => Err(invalid("unknown tie method")),
        }
    }
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(invalid("null output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn slice<'a>(p: *const f64, len: usize) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(invalid("null input array"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn sample_ref<'a>(s: *const FcSample) -> Result<&'a FcSample, Fail> {
    s.as_ref().ok_or_else(|| invalid("null sample handle"))
}

unsafe fn table_ref<'a>(t: *const FcTable) -> Result<&'a FcTable, Fail> {
    t.as_ref().ok_or_else(|| invalid("null table handle"))
}

fn theta(t: f64) -> Result<AssociationParameter, Fail> {
    Ok(AssociationParameter::new(t)?)
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn fc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn fc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Copula density `c(u, v | θ)`.
///
/// # Safety
/// `out` must be valid for a write of one `double`.
#[no_mangle]
pub unsafe extern "C" fn fc_density(u: f64, v: f64, theta_value: f64, out: *mut f64) -> FcStatus {
    guard(|| {
        let p = UnitPair::new(u, v)?;
        write(out, copula::density(p, theta(theta_value)?))
    })
}

/// Copula distribution function `C(u, v | θ)`.
///
/// # Safety
/// `out` must be valid for a write of one `double`.
#[no_mangle]
pub unsafe extern "C" fn fc_cdf(u: f64, v: f64, theta_value: f64, out: *mut f64) -> FcStatus {
    guard(|| write(out, copula::cdf(u, v, theta(theta_value)?)?))
}

/// Kendall's tau and Spearman's rho of the Frank copula at θ.
///
/// # Safety
/// Both pointers must be valid for a write of one `double`.
#[no_mangle]
pub unsafe extern "C" fn fc_rank_correlations(
    theta_value: f64,
    tau: *mut f64,
    rho: *mut f64,
) -> FcStatus {
    guard(|| {
        let t = theta(theta_value)?;
        write(tau, copula::kendall_tau(t))?;
        write(rho, copula::spearman_rho(t))
    })
}

/// Kendall distribution function `K(t, θ)`.
///
/// # Safety
/// `out` must be valid for a write of one `double`.
#[no_mangle]
pub unsafe extern "C" fn fc_kendall_distribution(
    t: f64,
    theta_value: f64,
    out: *mut f64,
) -> FcStatus {
    guard(|| write(out, copula::k_cdf(t, theta(theta_value)?)?))
}

/// Draw `n` pairs from the Frank copula into `u` and `v`.
///
/// # Safety
/// `u` and `v` must each be valid for `n` writes of `double`.
#[no_mangle]
pub unsafe extern "C" fn fc_draw(
    n: usize,
    theta_value: f64,
    seed: u64,
    u: *mut f64,
    v: *mut f64,
) -> FcStatus {
    guard(|| {
        if n > 0 && (u.is_null() || v.is_null()) {
            return Err(invalid("null output array"));
        }
        let pairs = copula::sample(n, theta(theta_value)?, seed);
        for (i, p) in pairs.iter().enumerate() {
            u.add(i).write(p.u);
            v.add(i).write(p.v);
        }
        Ok(())
    })
}

/// Build a sample from two columns of length `n`; `ties` is an [`FcTies`].
///
/// # Safety
/// `x` and `y` must each point to `n` readable `double`s and `out` must be
/// valid for a pointer write. Release the handle with [`fc_sample_free`].
#[no_mangle]
pub unsafe extern "C" fn fc_sample_new(
    x: *const f64,
    y: *const f64,
    n: usize,
    ties: i32,
    out: *mut *mut FcSample,
) -> FcStatus {
    guard(|| {
        let raw =
            BivariateSample::from_columns(slice(x, n)?.to_vec(), slice(y, n)?.to_vec(), "ffi")?;
        let tie = match FcTies::from_raw(ties)? {
            FcTies::Max => TieMethod::Max,
            FcTies::Average => TieMethod::Average,
        };
        let pseudo = PseudoSample::from_sample_with(&raw, tie)?;
        write(out, Box::into_raw(Box::new(FcSample { raw, pseudo })))
    })
}

/// Release a sample; null is ignored.
///
/// # Safety
/// `sample` must come from [`fc_sample_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fc_sample_free(sample: *mut FcSample) {
    if !sample.is_null() {
        drop(Box::from_raw(sample));
    }
}

/// Number of observations in a sample, 0 for null.
///
/// # Safety
/// `sample` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fc_sample_len(sample: *const FcSample) -> usize {
    sample.as_ref().map_or(0, |s| s.raw.n())
}

/// Estimate θ from the pseudo-observations of a sample with the
/// [`FcMethod`] `method`. Bayes windows have
/// half-width 25 with 2000 intervals, centred at the maximum likelihood
/// estimate.
///
/// # Safety
/// `sample` must be a live handle and `out` valid for one `double` write.
#[no_mangle]
pub unsafe extern "C" fn fc_estimate(
    sample: *const FcSample,
    method: i32,
    out: *mut f64,
) -> FcStatus {
    guard(|| {
        let pairs = sample_ref(sample)?.pseudo.pairs();
        let r = match FcMethod::from_raw(method)? {
            FcMethod::MleLoglik => estimation::mle(pairs, MleApproach::LoglikMax)?,
            FcMethod::Mle => estimation::mle(pairs, MleApproach::ScoreRoot)?,
            FcMethod::Mme1 => estimation::mme1(pairs)?,
            FcMethod::Mme2 => estimation::mme2(pairs)?,
            FcMethod::Bfpe => estimation::bayes_flat_with(pairs, GridSpec::default())?,
            FcMethod::Bjpe => estimation::bayes_jeffreys_with(pairs, GridSpec::default())?,
        };
        write(out, r.value())
    })
}

/// Maximum likelihood θ̂ with the statistics `Sₙ` and `Tₙ` at θ̂.
///
/// # Safety
/// `sample` must be a live handle; each output pointer must be valid for one
/// `double` write.
#[no_mangle]
pub unsafe extern "C" fn fc_gof_statistics(
    sample: *const FcSample,
    theta_hat: *mut f64,
    sn: *mut f64,
    tn: *mut f64,
) -> FcStatus {
    guard(|| {
        let s = gof::statistics(&sample_ref(sample)?.pseudo, GofOptions::default())?;
        write(theta_hat, s.theta_hat)?;
        write(sn, s.sn)?;
        write(tn, s.tn)
    })
}

/// Nonparametric bootstrap p-values of `Sₙ` and `Tₙ` from `b` resamples.
///
/// # Safety
/// `sample` must be a live handle; both output pointers must be valid for one
/// `double` write.
#[no_mangle]
pub unsafe extern "C" fn fc_bootstrap(
    sample: *const FcSample,
    b: usize,
    seed: u64,
    p_sn: *mut f64,
    p_tn: *mut f64,
) -> FcStatus {
    guard(|| {
        let r = gof::bootstrap(&sample_ref(sample)?.raw, b, seed, GofOptions::default())?;
        write(p_sn, r.p_sn)?;
        write(p_tn, r.p_tn)
    })
}

/// Simulated critical values of `Sₙ` and `Tₙ` at one level.
///
/// # Safety
/// Both output pointers must be valid for one `double` write.
#[no_mangle]
pub unsafe extern "C" fn fc_simulate_critical_values(
    n: usize,
    theta_value: f64,
    level: f64,
    reps: usize,
    seed: u64,
    sn: *mut f64,
    tn: *mut f64,
) -> FcStatus {
    guard(|| {
        let cells = gof::simulate_critical_values(
            n,
            theta(theta_value)?,
            &[level],
            CriticalConfig::new(reps, seed),
        )?;
        write(sn, cells[0].sn)?;
        write(tn, cells[0].tn)
    })
}

/// The critical-value tables bundled with the library.
///
/// # Safety
/// `out` must be valid for a pointer write. Release with [`fc_table_free`].
#[no_mangle]
pub unsafe extern "C" fn fc_table_published(out: *mut *mut FcTable) -> FcStatus {
    guard(|| {
        let table = CriticalValueTable::published();
        write(out, Box::into_raw(Box::new(FcTable { table })))
    })
}

/// Load a critical-value table from a CSV file.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` valid for a pointer
/// write. Release with [`fc_table_free`].
#[no_mangle]
pub unsafe extern "C" fn fc_table_load(path: *const c_char, out: *mut *mut FcTable) -> FcStatus {
    guard(|| {
        if path.is_null() {
            return Err(invalid("null path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| invalid("path is not valid UTF-8"))?;
        let file =
            std::fs::File::open(path).map_err(|e| Fail(FcStatus::Data, format!("{path}: {e}")))?;
        let table = CriticalValueTable::from_csv(file)?;
        write(out, Box::into_raw(Box::new(FcTable { table })))
    })
}

/// Critical value of the [`FcStatistic`] `statistic` at `(n, θ, level)`,
/// interpolated inside the table.
///
/// # Safety
/// `table` must be a live handle and `out` valid for one `double` write.
#[no_mangle]
pub unsafe extern "C" fn fc_table_lookup(
    table: *const FcTable,
    n: usize,
    theta_value: f64,
    level: f64,
    statistic: i32,
    out: *mut f64,
) -> FcStatus {
    guard(|| {
        let stat = match FcStatistic::from_raw(statistic)? {
            FcStatistic::Sn => Statistic::Sn,
            FcStatistic::Tn => Statistic::Tn,
        };
        write(
            out,
            table_ref(table)?
                .table
                .lookup(n, theta_value, level, stat)?,
        )
    })
}

/// Release a table; null is ignored.
///
/// # Safety
/// `table` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fc_table_free(table: *mut FcTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}
