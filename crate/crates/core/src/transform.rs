//! The t statistic, the self-normalized ratio `(Σξ)² / Σξ²`, and the map
//! between a t threshold `x` and the ratio threshold `a`:
//!
//! ```text
//! a² = n x² / (x² + n - 1),      x² = a² (n - 1) / (n - a²)
//! ```
//!
//! With `ξ = X - μ`, `T² = (n - 1) R / (n - R)` where `R` is the ratio, so
//! `|T| > x` and `R > a²` are the same event.

use serde::Serialize;

use crate::error::{domain, Error, Result};

/// Sample size and one-sided significance level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleConfig {
    n: usize,
    alpha: f64,
}

impl SampleConfig {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        if n < 2 {
            return domain("SampleConfig::new", format!("sample size {n} < 2"));
        }
        if !(alpha > 0.0 && alpha < 0.5) {
            return domain(
                "SampleConfig::new",
                format!("alpha = {alpha} is not in (0, 0.5)"),
            );
        }
        Ok(Self { n, alpha })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// A t threshold together with the matching ratio threshold for sample size `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdPair {
    pub n: usize,
    pub x: f64,
    pub a: f64,
}

impl ThresholdPair {
    pub fn from_x(x: f64, n: usize) -> Result<Self> {
        Ok(Self {
            n,
            x,
            a: a_from_x(x, n)?,
        })
    }

    pub fn from_a(a: f64, n: usize) -> Result<Self> {
        Ok(Self {
            n,
            x: x_from_a(a, n)?,
            a,
        })
    }
}

fn check_n(func: &'static str, n: usize) -> Result<f64> {
    if n < 2 {
        return domain(func, format!("sample size {n} < 2"));
    }
    Ok(n as f64)
}

/// `a = √(n x² / (x² + n - 1))`. Strictly increasing in `x`, with range `[0, √n)`.
pub fn a_from_x(x: f64, n: usize) -> Result<f64> {
    let nf = check_n("a_from_x", n)?;
    if !(x >= 0.0) {
        return domain("a_from_x", format!("x = {x} must be nonnegative"));
    }
    if x.is_infinite() {
        return Ok(nf.sqrt());
    }
    let x2 = x * x;
    Ok((nf * x2 / (x2 + nf - 1.0)).sqrt())
}

/// `x = √(a² (n - 1) / (n - a²))`, the inverse of [`a_from_x`].
pub fn x_from_a(a: f64, n: usize) -> Result<f64> {
    let nf = check_n("x_from_a", n)?;
    if !(a >= 0.0) {
        return domain("x_from_a", format!("a = {a} must be nonnegative"));
    }
    let a2 = a * a;
    if !(a2 < nf) {
        return domain(
            "x_from_a",
            format!("a = {a} must be below √n = {}", nf.sqrt()),
        );
    }
    Ok((a2 * (nf - 1.0) / (nf - a2)).sqrt())
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Student's statistic `√n (X̄ - μ) / S`, with `S` from a two-pass variance.
pub fn t_statistic(sample: &[f64], mu: f64) -> Result<f64> {
    let n = sample.len();
    if n < 2 {
        return domain("t_statistic", format!("sample size {n} < 2"));
    }
    let m = mean(sample);
    let ss: f64 = sample.iter().map(|v| (v - m) * (v - m)).sum();
    if !(ss > 0.0) {
        return Err(Error::Degenerate("sample standard deviation is zero"));
    }
    let s = (ss / (n - 1) as f64).sqrt();
    Ok((n as f64).sqrt() * (m - mu) / s)
}

/// `(Σξ)² / Σξ²`, which lies in `[0, n]` and equals `n` iff all entries agree.
pub fn ratio_statistic(errors: &[f64]) -> Result<f64> {
    let sum: f64 = errors.iter().sum();
    let sum_sq: f64 = errors.iter().map(|e| e * e).sum();
    if !(sum_sq > 0.0) {
        return Err(Error::Degenerate("all errors are zero"));
    }
    Ok((sum * sum / sum_sq).min(errors.len() as f64))
}
