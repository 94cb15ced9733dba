//! Special functions: log-gamma, the regularized incomplete beta function,
//! the Student t, normal and Cauchy distribution functions, and a bisection
//! inverter for monotone functions.
//!
//! The Student t distribution function goes through the incomplete beta
//! function for every number of degrees of freedom. The closed forms for one
//! and two degrees of freedom are kept out of the evaluation path and only
//! appear in the tests.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use serde::Serialize;

use crate::error::{domain, Error, Result};

/// Target absolute accuracy of the distribution functions.
pub const FUNCTION_TOL: f64 = 1e-12;

/// Default bracket width for root solves.
pub const ROOT_TOL: f64 = 1e-9;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Degrees of freedom of a Student t law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct DegreesOfFreedom(u32);

impl DegreesOfFreedom {
    pub fn new(value: u32) -> Result<Self> {
        if value == 0 {
            return domain(
                "DegreesOfFreedom::new",
                "degrees of freedom must be at least 1",
            );
        }
        Ok(Self(value))
    }

    /// Degrees of freedom for a sample of size `n`, i.e. `n - 1`.
    pub fn for_sample_size(n: usize) -> Result<Self> {
        if n < 2 {
            return domain(
                "DegreesOfFreedom::for_sample_size",
                format!("sample size {n} < 2"),
            );
        }
        let v = u32::try_from(n - 1).map_err(|_| Error::Domain {
            func: "DegreesOfFreedom::for_sample_size",
            detail: format!("sample size {n} too large"),
        })?;
        Ok(Self(v))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub(crate) fn as_f64(self) -> f64 {
        f64::from(self.0)
    }
}

impl fmt::Display for DegreesOfFreedom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct Probability(f64);

impl Probability {
    pub const ZERO: Probability = Probability(0.0);
    pub const HALF: Probability = Probability(0.5);
    pub const ONE: Probability = Probability(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return domain("Probability::new", format!("{value} is not in [0, 1]"));
        }
        Ok(Self(value))
    }

    /// Clamps rounding noise back into `[0, 1]`.
    pub(crate) fn clamped(value: f64) -> Self {
        Self(value.clamp(0.0, 1.0))
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn complement(self) -> Self {
        Self(1.0 - self.0)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

// Lanczos approximation, g = 607/128, 14 terms.
const LANCZOS_G: f64 = 5.242_187_5;
const LANCZOS_COEF: [f64; 14] = [
    57.156_235_665_862_923_5,
    -59.597_960_355_475_491_2,
    14.136_097_974_741_747_1,
    -0.491_913_816_097_620_199,
    0.339_946_499_848_118_887e-4,
    0.465_236_289_270_485_756e-4,
    -0.983_744_753_048_795_646e-4,
    0.158_088_703_224_912_494e-3,
    -0.210_264_441_724_104_883e-3,
    0.217_439_618_115_212_643e-3,
    -0.164_318_106_536_763_890e-3,
    0.844_182_239_838_527_433e-4,
    -0.261_908_384_015_814_087e-4,
    0.368_991_826_595_316_234e-5,
];

fn ln_gamma_lanczos(x: f64) -> f64 {
    let mut y = x;
    let tmp = x + LANCZOS_G;
    let tmp = (x + 0.5) * tmp.ln() - tmp;
    let mut ser = 0.999_999_999_999_997_092;
    for c in LANCZOS_COEF {
        y += 1.0;
        ser += c / y;
    }
    tmp + (2.506_628_274_631_000_5 * ser / x).ln()
}

/// `ln Γ(x) - ((x - 1/2) ln x - x + ln √(2π))` for `x >= 10`.
fn stirling_correction(x: f64) -> f64 {
    let r = 1.0 / x;
    let r2 = r * r;
    r * (1.0 / 12.0
        - r2 * (1.0 / 360.0
            - r2 * (1.0 / 1260.0
                - r2 * (1.0 / 1680.0 - r2 * (1.0 / 1188.0 - r2 * (691.0 / 360_360.0))))))
}

fn ln_gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        ln_gamma_lanczos(x + 1.0) - x.ln()
    } else if x < 10.0 {
        ln_gamma_lanczos(x)
    } else {
        (x - 0.5) * x.ln() - x + LN_SQRT_2PI + stirling_correction(x)
    }
}

/// Natural logarithm of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return domain("ln_gamma", format!("x = {x} must be positive and finite"));
    }
    Ok(ln_gamma_unchecked(x))
}

/// `ln B(a, b)`. Large arguments avoid subtracting two huge log-gammas.
fn ln_beta(a: f64, b: f64) -> f64 {
    let (small, big) = if a < b { (a, b) } else { (b, a) };
    if big < 10.0 {
        return ln_gamma_unchecked(a) + ln_gamma_unchecked(b) - ln_gamma_unchecked(a + b);
    }
    // ln Γ(big) - ln Γ(big + small), Stirling form
    let delta = -(big - 0.5) * (small / big).ln_1p() - small * (big + small).ln()
        + small
        + stirling_correction(big)
        - stirling_correction(big + small);
    ln_gamma_unchecked(small) + delta
}

const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;

/// Continued fraction for `I_x(a, b)` (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    let max_iter = 1000 + 50 * (a.max(b).sqrt() as usize);
    for m in 1..=max_iter {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// Returns `(I_x(a, b), 1 - I_x(a, b))` given both `x` and `y = 1 - x`.
///
/// Passing `y` separately keeps full relative accuracy when `x` is close to 1,
/// which is the usual situation for the t tail at many degrees of freedom.
pub(crate) fn beta_inc_pair(a: f64, b: f64, x: f64, y: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    if y <= 0.0 {
        return (1.0, 0.0);
    }
    let ln_x = if x > 0.5 { (-y).ln_1p() } else { x.ln() };
    let ln_y = if y > 0.5 { (-x).ln_1p() } else { y.ln() };
    let front = (a * ln_x + b * ln_y - ln_beta(a, b)).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        let v = front * beta_cf(a, b, x) / a;
        (v, 1.0 - v)
    } else {
        let w = front * beta_cf(b, a, y) / b;
        (1.0 - w, w)
    }
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> Result<Probability> {
    if !(a > 0.0) || !(b > 0.0) || !a.is_finite() || !b.is_finite() {
        return domain(
            "reg_inc_beta",
            format!("shape parameters a = {a}, b = {b} must be positive"),
        );
    }
    if !(0.0..=1.0).contains(&x) {
        return domain("reg_inc_beta", format!("x = {x} is not in [0, 1]"));
    }
    Ok(Probability::clamped(beta_inc_pair(a, b, x, 1.0 - x).0))
}

/// Upper tail `P(T > t)` of Student's t with `dof` degrees of freedom.
pub fn student_t_sf(t: f64, dof: DegreesOfFreedom) -> Probability {
    if t.is_nan() {
        return Probability(f64::NAN);
    }
    if t.is_infinite() {
        return if t > 0.0 {
            Probability::ZERO
        } else {
            Probability::ONE
        };
    }
    let nu = dof.as_f64();
    let t2 = t * t;
    let denom = nu + t2;
    // P(|T| > |t|) = I_{nu/(nu+t^2)}(nu/2, 1/2)
    let (two_sided, inner) = beta_inc_pair(0.5 * nu, 0.5, nu / denom, t2 / denom);
    if t >= 0.0 {
        Probability::clamped(0.5 * two_sided)
    } else {
        Probability::clamped(0.5 + 0.5 * inner)
    }
}

/// Distribution function of Student's t with `dof` degrees of freedom.
pub fn student_t_cdf(t: f64, dof: DegreesOfFreedom) -> Probability {
    student_t_sf(-t, dof)
}

/// Quantile of Student's t: the smallest `t` with `student_t_cdf(t) >= p`.
pub fn student_t_quantile(p: f64, dof: DegreesOfFreedom) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return domain("student_t_quantile", format!("p = {p} is not in (0, 1)"));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let q = p.max(1.0 - p);
    let mut hi = 2.0;
    while student_t_cdf(hi, dof).get() < q {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::Solver(format!("no finite t quantile for p = {p}")));
        }
    }
    let t = invert_monotone(|t| student_t_cdf(t, dof).get(), q, 0.0, hi, ROOT_TOL * 1e-3)?;
    Ok(if p > 0.5 { t } else { -t })
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> Probability {
    Probability::clamped(0.5 * libm::erfc(-x * FRAC_1_SQRT_2))
}

/// Standard normal upper tail `1 - Φ(x)`, without cancellation for large `x`.
pub fn normal_sf(x: f64) -> Probability {
    Probability::clamped(0.5 * libm::erfc(x * FRAC_1_SQRT_2))
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return domain("normal_quantile", format!("p = {p} is not in (0, 1)"));
    }
    invert_monotone(|x| normal_cdf(x).get(), p, -40.0, 40.0, ROOT_TOL * 1e-3)
}

/// Standard Cauchy distribution function.
pub fn cauchy_cdf(x: f64) -> Probability {
    Probability::clamped(0.5 + x.atan() / PI)
}

/// Solves `f(x) = target` for a monotone `f` on `[lo, hi]` by bisection.
///
/// The bracket is shrunk until its width is at most `tol`; the end returned is
/// the one on which `f` has reached `target`, so for nondecreasing `f` the
/// result approximates `inf {x : f(x) >= target}` and for nonincreasing `f`
/// it approximates `inf {x : f(x) <= target}`.
pub fn invert_monotone<F>(f: F, target: f64, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return domain("invert_monotone", format!("invalid interval [{lo}, {hi}]"));
    }
    if !(tol > 0.0) {
        return domain(
            "invert_monotone",
            format!("tolerance {tol} must be positive"),
        );
    }
    let (mut lo, mut hi) = (lo, hi);
    let f_lo = f(lo);
    let f_hi = f(hi);
    let bracket_err = || Error::Bracket {
        target,
        lo,
        hi,
        f_lo,
        f_hi,
    };
    if f_lo.is_nan() || f_hi.is_nan() || target.is_nan() {
        return Err(bracket_err());
    }
    let increasing = f_hi >= f_lo;
    let reached = |v: f64| if increasing { v >= target } else { v <= target };
    if !(f_lo.min(f_hi) <= target && target <= f_lo.max(f_hi)) {
        return Err(bracket_err());
    }
    if reached(f_lo) {
        return Ok(lo);
    }
    while hi - lo > tol {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        if reached(f(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
