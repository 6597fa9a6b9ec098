//! The bivariate Frank copula: density, distribution function, rank
//! correlation maps, the Kendall distribution `K(t, θ)` and sampling.
//!
//! All evaluations are written for `θ ≥ 0` in terms of sums of positive
//! quantities and extended to `θ < 0` through the reflection
//! `(U, V) ↦ (U, 1 − V)`, which maps the copula with parameter `θ` onto the
//! copula with parameter `−θ`. Below [`EPS0`] the closed forms are replaced
//! by their Taylor expansions around independence.

use rand::distributions::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize;
use crate::quadrature;

/// Below this magnitude of θ the series branches are used.
pub const EPS0: f64 = 1e-5;

/// Tolerance used when inverting the rank-correlation maps.
const INVERT_X_TOL: f64 = 1e-10;

/// The copula association parameter θ. Any finite real is valid; θ = 0 is
/// independence.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct AssociationParameter(f64);

impl AssociationParameter {
    pub const INDEPENDENCE: Self = Self(0.0);

    pub fn new(theta: f64) -> Result<Self> {
        if theta.is_finite() {
            Ok(Self(theta))
        } else {
            Err(Error::NonFiniteTheta(theta))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// True when the series branch applies.
    #[inline]
    pub fn is_near_zero(self) -> bool {
        self.0.abs() < EPS0
    }

    pub fn abs(self) -> Self {
        Self(self.0.abs())
    }
}

impl std::ops::Neg for AssociationParameter {
    type Output = Self;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

impl TryFrom<f64> for AssociationParameter {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<AssociationParameter> for f64 {
    fn from(t: AssociationParameter) -> f64 {
        t.0
    }
}

impl std::fmt::Display for AssociationParameter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// A point strictly inside the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitPair {
    pub u: f64,
    pub v: f64,
}

impl UnitPair {
    pub fn new(u: f64, v: f64) -> Result<Self> {
        if is_interior(u) && is_interior(v) {
            Ok(Self { u, v })
        } else {
            Err(Error::Domain(format!(
                "({u}, {v}) is not inside the open unit square"
            )))
        }
    }

    /// The reflected point `(u, 1 − v)`.
    #[inline]
    pub fn reflected(self) -> Self {
        Self {
            u: self.u,
            v: 1.0 - self.v,
        }
    }
}

#[inline]
fn is_interior(x: f64) -> bool {
    x > 0.0 && x < 1.0
}

/// Values of the Debye-type integrals `D₁(θ)` and `D₂(θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DebyeValues {
    pub d1: f64,
    pub d2: f64,
}

// ---------------------------------------------------------------------------
// density and distribution function

/// `ln` of `e^{-θu} + e^{-θv} − e^{-θ} − e^{-θ(u+v)}` for θ > 0, computed as
/// the sum of two positive terms.
#[inline]
fn log_a2_pos(u: f64, v: f64, t: f64) -> f64 {
    let first = -t * u + (-(-t * v).exp_m1()).ln();
    let second = -t * v + (-(-t * (1.0 - v)).exp_m1()).ln();
    log_add_exp(first, second)
}

#[inline]
pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(θ(1 − e^{-θ}))` for θ > 0.
#[inline]
fn log_norm_pos(t: f64) -> f64 {
    t.ln() + (-(-t).exp_m1()).ln()
}

/// Log-density for θ > 0, no validation.
#[inline]
fn log_density_pos(u: f64, v: f64, t: f64) -> f64 {
    log_norm_pos(t) - t * (u + v) - 2.0 * log_a2_pos(u, v, t)
}

/// Log-density without argument checks; `(u, v)` must be interior.
#[inline]
pub(crate) fn log_density_raw(u: f64, v: f64, t: f64) -> f64 {
    if t.abs() < EPS0 {
        let a = 0.5 * (2.0 * u - 1.0) * (2.0 * v - 1.0);
        let b = u * v * (1.0 - u) * (1.0 - v) - 1.0 / 24.0;
        t * a + t * t * b
    } else if t > 0.0 {
        log_density_pos(u, v, t)
    } else {
        log_density_pos(u, 1.0 - v, -t)
    }
}

/// `Σ ln c(u_i, v_i | θ)` with the normalising constant taken out of the sum.
pub(crate) fn log_likelihood_raw(pairs: &[UnitPair], t: f64) -> f64 {
    if t.abs() < EPS0 {
        return pairs.iter().map(|p| log_density_raw(p.u, p.v, t)).sum();
    }
    let (a, flip) = if t > 0.0 { (t, false) } else { (-t, true) };
    let mut margins = 0.0;
    let mut log_a2 = 0.0;
    for p in pairs {
        let v = if flip { 1.0 - p.v } else { p.v };
        margins += p.u + v;
        log_a2 += log_a2_pos(p.u, v, a);
    }
    pairs.len() as f64 * log_norm_pos(a) - a * margins - 2.0 * log_a2
}

/// Natural log of the copula density `c(u, v | θ)`.
pub fn log_density(p: UnitPair, theta: AssociationParameter) -> f64 {
    log_density_raw(p.u, p.v, theta.value())
}

/// Copula density `c(u, v | θ)`.
pub fn density(p: UnitPair, theta: AssociationParameter) -> f64 {
    log_density(p, theta).exp()
}

/// Per-observation score `∂/∂θ ln c(u, v | θ)`.
#[inline]
pub(crate) fn score_raw(u: f64, v: f64, t: f64) -> f64 {
    if t.abs() < EPS0 {
        let a = 0.5 * (2.0 * u - 1.0) * (2.0 * v - 1.0);
        let b = u * v * (1.0 - u) * (1.0 - v) - 1.0 / 24.0;
        a + 2.0 * t * b
    } else if t > 0.0 {
        score_pos(u, v, t)
    } else {
        -score_pos(u, 1.0 - v, -t)
    }
}

/// Score for θ > 0: `1/θ + 1/(e^θ − 1) − (u + v) + 2 A₁/A₂`.
#[inline]
fn score_pos(u: f64, v: f64, t: f64) -> f64 {
    let eu = (-t * u).exp();
    let ev = (-t * v).exp();
    let one_m_ev = -(-t * v).exp_m1();
    let erest = (-t * (1.0 - v)).exp();
    let one_m_erest = -(-t * (1.0 - v)).exp_m1();
    // A₂ = e^{-θu}(1 − e^{-θv}) + e^{-θv}(1 − e^{-θ(1−v)})
    let a2 = eu * one_m_ev + ev * one_m_erest;
    // A₁ = −∂A₂/∂θ
    let a1 = u * eu * one_m_ev - eu * v * ev + v * ev * one_m_erest - ev * (1.0 - v) * erest;
    1.0 / t + 1.0 / t.exp_m1() - (u + v) + 2.0 * a1 / a2
}

/// Copula distribution function `C(u, v | θ)` on the closed unit square.
pub fn cdf(u: f64, v: f64, theta: AssociationParameter) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) {
        return Err(Error::Domain(format!(
            "({u}, {v}) is outside the unit square"
        )));
    }
    Ok(cdf_raw(u, v, theta.value()))
}

pub(crate) fn cdf_raw(u: f64, v: f64, t: f64) -> f64 {
    if u == 0.0 || v == 0.0 {
        return 0.0;
    }
    if u == 1.0 {
        return v;
    }
    if v == 1.0 {
        return u;
    }
    if t.abs() < EPS0 {
        let g = u * v * (1.0 - u) * (1.0 - v);
        return u * v + 0.5 * t * g + t * t * g * (2.0 * u - 1.0) * (2.0 * v - 1.0) / 12.0;
    }
    let c = if t > 0.0 {
        cdf_pos(u, v, t)
    } else {
        u - cdf_pos(u, 1.0 - v, -t)
    };
    c.clamp(0.0, u.min(v))
}

#[inline]
fn cdf_pos(u: f64, v: f64, t: f64) -> f64 {
    // 1 + (e^{-θu} − 1)(e^{-θv} − 1)/(e^{-θ} − 1) = A₂ / (1 − e^{-θ})
    -(log_a2_pos(u, v, t) - (-(-t).exp_m1()).ln()) / t
}

/// Conditional distribution `∂C/∂u = P(V ≤ v | U = u)`.
pub fn conditional_cdf(u: f64, v: f64, theta: AssociationParameter) -> f64 {
    let t = theta.value();
    if t.abs() < EPS0 {
        return v + 0.5 * t * v * (1.0 - v) * (1.0 - 2.0 * u);
    }
    // e^{-θu}(e^{-θv} − 1) / (e^{-θ} − 1 + (e^{-θu} − 1)(e^{-θv} − 1))
    let num = (-t * u).exp() * (-t * v).exp_m1();
    let den = (-t).exp_m1() + (-t * u).exp_m1() * (-t * v).exp_m1();
    (num / den).clamp(0.0, 1.0)
}

// ---------------------------------------------------------------------------
// rank correlation maps

// Bernoulli numbers B₂, B₄, …, B₂₀.
const BERNOULLI_EVEN: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// Below this |θ| the correlation maps use their power series, which avoid the
/// `1 − D₁` cancellation.
const SERIES_LIMIT: f64 = 1.0;

/// Σ_{k even ≥ 2} B_k θ^{k−1} w(k) / k!
fn bernoulli_series(theta: f64, weight: impl Fn(f64) -> f64) -> f64 {
    let mut sum = 0.0;
    let mut factorial = 1.0;
    let mut power = 1.0; // θ^{k-1}, starting at k = 2 → θ¹
    let mut k = 0u32;
    for (i, b) in BERNOULLI_EVEN.iter().enumerate() {
        let k_even = 2 * (i as u32 + 1);
        while k < k_even {
            k += 1;
            factorial *= k as f64;
        }
        power = if i == 0 { theta } else { power * theta * theta };
        sum += b * power * weight(k_even as f64) / factorial;
    }
    sum
}

/// ∫₀^x t^m / (e^t − 1) dt for x ≥ 0.
fn bose_integral(x: f64, m: i32) -> f64 {
    // Integrand is below 1e-300 beyond t = 750; truncate there.
    let upper = x.min(750.0);
    let tol = 1e-14 * upper.clamp(1e-300, 1.0);
    quadrature::integrate(
        |t| {
            if t < 1e-8 {
                t.powi(m - 1) * (1.0 - 0.5 * t)
            } else {
                t.powi(m) / t.exp_m1()
            }
        },
        0.0,
        upper,
        tol,
    )
    .map(|r| r.value)
    .expect("Bose integrand is smooth and bounded")
}

/// `D₁(θ) = (1/θ)∫₀^θ t/(e^t − 1) dt` and `D₂(θ) = (2/θ²)∫₀^θ t²/(e^t − 1) dt`.
pub fn debye_integrals(theta: AssociationParameter) -> DebyeValues {
    let t = theta.value();
    if t.abs() < EPS0 {
        return DebyeValues {
            d1: 1.0 - t / 4.0 + t * t / 36.0,
            d2: 1.0 - t / 3.0 + t * t / 24.0,
        };
    }
    let a = t.abs();
    let d1 = bose_integral(a, 1) / a;
    let d2 = 2.0 * bose_integral(a, 2) / (a * a);
    if t > 0.0 {
        DebyeValues { d1, d2 }
    } else {
        // For t < 0: t/(e^t − 1) = s + s/(e^s − 1) with s = −t.
        DebyeValues {
            d1: d1 + a / 2.0,
            d2: d2 + 2.0 * a / 3.0,
        }
    }
}

/// Kendall's tau of the Frank copula, `1 − (4/θ)(1 − D₁(θ))`.
pub fn kendall_tau(theta: AssociationParameter) -> f64 {
    let t = theta.value();
    if t.abs() < SERIES_LIMIT {
        return 4.0 * bernoulli_series(t, |k| 1.0 / (k + 1.0));
    }
    let d = debye_integrals(theta);
    1.0 - 4.0 / t * (1.0 - d.d1)
}

/// Spearman's rho of the Frank copula, `1 − (12/θ)(D₁(θ) − D₂(θ))`.
pub fn spearman_rho(theta: AssociationParameter) -> f64 {
    let t = theta.value();
    if t.abs() < SERIES_LIMIT {
        return 12.0 * bernoulli_series(t, |k| k / ((k + 1.0) * (k + 2.0)));
    }
    let d = debye_integrals(theta);
    1.0 - 12.0 / t * (d.d1 - d.d2)
}

fn invert_monotone(
    target: f64,
    map: fn(AssociationParameter) -> f64,
) -> Result<AssociationParameter> {
    if !(target > -1.0 && target < 1.0) {
        return Err(Error::OutOfRange(target));
    }
    if target == 0.0 {
        return Ok(AssociationParameter::INDEPENDENCE);
    }
    let f = |t: f64| map(AssociationParameter(t)) - target;
    let mut bound: f64 = 500.0;
    while f(bound.copysign(target)).signum() != target.signum() {
        bound *= 2.0;
        if bound > 1e7 {
            return Err(Error::OutOfRange(target));
        }
    }
    let (lo, hi) = if target > 0.0 {
        (0.0, bound)
    } else {
        (-bound, 0.0)
    };
    let sol = optimize::brent_root(f, lo, hi, INVERT_X_TOL, 200)
        .filter(|s| s.converged)
        .unwrap_or_else(|| optimize::bisect(f, lo, hi, INVERT_X_TOL, 400));
    AssociationParameter::new(sol.x)
}

/// θ with `kendall_tau(θ) = target`.
pub fn invert_tau(target: f64) -> Result<AssociationParameter> {
    invert_monotone(target, kendall_tau)
}

/// θ with `spearman_rho(θ) = target`.
pub fn invert_rho(target: f64) -> Result<AssociationParameter> {
    invert_monotone(target, spearman_rho)
}

// ---------------------------------------------------------------------------
// Kendall distribution K(t, θ) = P(C(U, V) ≤ t)

/// `ln(1 + x) / x`, continuous at 0.
#[inline]
fn log1p_ratio(x: f64) -> f64 {
    if x.abs() < 1e-10 {
        1.0 - 0.5 * x
    } else if x.is_infinite() {
        0.0
    } else {
        x.ln_1p() / x
    }
}

/// `K(t, θ)` without domain checks; returns 0 for `t ≤ 0` and 1 for `t ≥ 1`.
pub(crate) fn k_cdf_raw(t: f64, theta: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let lt = t.ln();
    if theta.abs() < EPS0 {
        let k0 = t * (1.0 - lt);
        let k1 = -t * (t * lt - t + 1.0) / 2.0;
        let k2 = -t * (4.0 * t * t * lt - 5.0 * t * t + 6.0 * t - 1.0) / 24.0;
        return k0 + theta * k1 + theta * theta * k2;
    }
    let k = if theta > 0.0 {
        // K = t + (1 − e^{-θ(1−t)}) · ln(1+x)/x / θ,
        // x = e^{-θt}(1 − e^{-θ(1−t)})/(1 − e^{-θt})
        let a = -(-theta * (1.0 - t)).exp_m1();
        let x = (-theta * t).exp() * a / -(-theta * t).exp_m1();
        t + a * log1p_ratio(x) / theta
    } else {
        let a = -theta;
        let one_m_eat = -(-a * t).exp_m1();
        let x = (-a * t).exp() * -(-a * (1.0 - t)).exp_m1() / one_m_eat;
        t + one_m_eat * (a * (1.0 - t) + x.ln_1p()) / a
    };
    k.clamp(t, 1.0)
}

/// `k(t, θ) = ∂K/∂t` without domain checks, for `0 < t < 1`.
pub(crate) fn k_density_raw(t: f64, theta: f64) -> f64 {
    let lt = t.ln();
    if theta.abs() < EPS0 {
        let k0 = -lt;
        let k1 = -(2.0 * t * lt - t + 1.0) / 2.0;
        let k2 = -(12.0 * t * t * lt - 11.0 * t * t + 12.0 * t - 1.0) / 24.0;
        return k0 + theta * k1 + theta * theta * k2;
    }
    if theta > 0.0 {
        // e^{θt} ln(1 + x) = r · ln(1+x)/x,  r = (1 − e^{-θ(1−t)})/(1 − e^{-θt})
        let r = -(-theta * (1.0 - t)).exp_m1() / -(-theta * t).exp_m1();
        let x = (-theta * t).exp() * r;
        r * log1p_ratio(x)
    } else {
        let a = -theta;
        let x = (-a * t).exp() * -(-a * (1.0 - t)).exp_m1() / -(-a * t).exp_m1();
        (-a * t).exp() * (a * (1.0 - t) + x.ln_1p())
    }
}

/// The Kendall distribution function `K(t, θ)`, clamped to 1 for `t ≥ 1`.
pub fn k_cdf(t: f64, theta: AssociationParameter) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("K(t, θ) requires t > 0, got {t}")));
    }
    Ok(k_cdf_raw(t, theta.value()))
}

/// Density `k(t, θ)` of the Kendall distribution on `(0, 1)`.
pub fn k_density(t: f64, theta: AssociationParameter) -> Result<f64> {
    if !is_interior(t) {
        return Err(Error::Domain(format!(
            "k(t, θ) requires 0 < t < 1, got {t}"
        )));
    }
    Ok(k_density_raw(t, theta.value()))
}

// ---------------------------------------------------------------------------
// sampling

/// Smallest and largest values kept for sampled coordinates.
const OPEN_LO: f64 = f64::MIN_POSITIVE;
const OPEN_HI: f64 = 1.0 - f64::EPSILON / 2.0;

/// Solve `∂C/∂u (v | u) = w` for `v`.
pub(crate) fn conditional_inverse(u: f64, w: f64, t: f64) -> f64 {
    let v = if t.abs() < EPS0 {
        w - 0.5 * t * w * (1.0 - w) * (1.0 - 2.0 * u)
    } else {
        // v = [ln(w + (1−w)e^{-θu}) − ln((1−w)e^{-θu} + w e^{-θ})] / θ
        let lw = w.ln();
        let l1w = (-w).ln_1p();
        let den = log_add_exp(lw, l1w - t * u);
        let num = log_add_exp(l1w - t * u, lw - t);
        (den - num) / t
    };
    v.clamp(OPEN_LO, OPEN_HI)
}

/// Draw one pair from the copula by conditional inversion.
pub fn sample_pair<R: Rng + ?Sized>(rng: &mut R, theta: AssociationParameter) -> UnitPair {
    let u: f64 = rng.sample(Open01);
    let w: f64 = rng.sample(Open01);
    UnitPair {
        u,
        v: conditional_inverse(u, w, theta.value()),
    }
}

/// Draw `n` i.i.d. pairs. The stream is a pure function of `seed`.
pub fn sample(n: usize, theta: AssociationParameter, seed: u64) -> Vec<UnitPair> {
    let mut rng = crate::rng::stream(seed, 0);
    sample_with(&mut rng, n, theta)
}

/// Draw `n` pairs from a caller-supplied generator.
pub fn sample_with<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    theta: AssociationParameter,
) -> Vec<UnitPair> {
    (0..n).map(|_| sample_pair(rng, theta)).collect()
}

/// Map every `(u, v)` to `(u, 1 − v)`.
pub fn reflect(pairs: &[UnitPair]) -> Vec<UnitPair> {
    pairs.iter().map(|p| p.reflected()).collect()
}
