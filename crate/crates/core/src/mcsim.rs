//! Seeded Monte Carlo checks of the critical values.
//!
//! Replication `i` draws from its own ChaCha8 stream (root seed, stream `i`),
//! so a run is reproducible bit for bit regardless of how many threads share
//! the work. Rejections are summed as integers.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{domain, Error, Result};
use crate::gmix::{g_argmax_k, g_critical_value, g_tail};
use crate::specfun::{student_t_quantile, DegreesOfFreedom, Probability};
use crate::symt::s_critical_value;
use crate::transform::{ratio_statistic, t_statistic};

/// Smallest replication count accepted by the simulators.
pub const MIN_REPS: u64 = 10_000;

/// Stand-in for the vanishing scales of the adversarial configuration.
pub const ADVERSARIAL_EPS: f64 = 1e-9;

/// Error law `ξ = s · η` with random scale `s >= 0` independent of `η`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MixtureSpec {
    /// `s = large` with probability `weight`, else `small`; `η` standard normal.
    TwoPointScale { small: f64, large: f64, weight: f64 },
    /// `s = scale · √(2E)` with `E ~ Exp(1)`: Laplace errors with this scale.
    ExponentialScale { scale: f64 },
    /// `s = √(ν / χ²_ν)`: Student t errors with `ν` degrees of freedom.
    InverseSqrtGammaScale { dof: f64 },
    /// `s = sigma`: Gaussian errors.
    ConstantScale { sigma: f64 },
    /// `ξ = ±1` with equal probability.
    Rademacher,
}

impl MixtureSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Spec(msg));
        match *self {
            MixtureSpec::TwoPointScale {
                small,
                large,
                weight,
            } => {
                if !(small >= 0.0 && large >= 0.0 && small.is_finite() && large.is_finite()) {
                    return bad(format!(
                        "scales {small}, {large} must be finite and nonnegative"
                    ));
                }
                if !(0.0..=1.0).contains(&weight) {
                    return bad(format!("weight {weight} is not in [0, 1]"));
                }
                let zero_small = small == 0.0 && weight < 1.0;
                let zero_large = large == 0.0 && weight > 0.0;
                if zero_small && zero_large {
                    return bad("both scales in use are zero".into());
                }
            }
            MixtureSpec::ExponentialScale { scale } => {
                if !(scale > 0.0 && scale.is_finite()) {
                    return bad(format!("scale {scale} must be positive"));
                }
            }
            MixtureSpec::InverseSqrtGammaScale { dof } => {
                if !(dof > 0.0 && dof.is_finite()) {
                    return bad(format!("degrees of freedom {dof} must be positive"));
                }
            }
            MixtureSpec::ConstantScale { sigma } => {
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return bad(format!("sigma {sigma} must be positive"));
                }
            }
            MixtureSpec::Rademacher => {}
        }
        Ok(())
    }

    /// Whether `η` is Gaussian, so that the law is a Gaussian scale mixture.
    pub fn is_gaussian_mixture(&self) -> bool {
        !matches!(self, MixtureSpec::Rademacher)
    }

    /// The four built-in Gaussian scale mixtures.
    pub fn builtin_gaussian() -> Vec<MixtureSpec> {
        vec![
            MixtureSpec::ConstantScale { sigma: 1.0 },
            MixtureSpec::TwoPointScale {
                small: 1.0,
                large: 10.0,
                weight: 0.5,
            },
            MixtureSpec::ExponentialScale { scale: 1.0 },
            MixtureSpec::InverseSqrtGammaScale { dof: 3.0 },
        ]
    }

    /// Built-in Gaussian mixtures followed by the Rademacher law.
    pub fn builtin() -> Vec<MixtureSpec> {
        let mut all = Self::builtin_gaussian();
        all.push(MixtureSpec::Rademacher);
        all
    }
}

impl fmt::Display for MixtureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MixtureSpec::TwoPointScale {
                small,
                large,
                weight,
            } => {
                write!(f, "two-point:{small},{large},{weight}")
            }
            MixtureSpec::ExponentialScale { scale } => write!(f, "exponential:{scale}"),
            MixtureSpec::InverseSqrtGammaScale { dof } => write!(f, "student:{dof}"),
            MixtureSpec::ConstantScale { sigma } => write!(f, "constant:{sigma}"),
            MixtureSpec::Rademacher => f.write_str("rademacher"),
        }
    }
}

impl FromStr for MixtureSpec {
    type Err = Error;

    /// Parses `two-point:S,L,W`, `exponential:B`, `student:NU`,
    /// `constant:SIGMA` or `rademacher`. Parameters may be omitted to take the
    /// built-in defaults.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, params) = match s.split_once(':') {
            Some((k, p)) => (k.trim(), Some(p)),
            None => (s.trim(), None),
        };
        let values: Vec<f64> = match params {
            None => Vec::new(),
            Some(p) => p
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Spec(format!("{v:?}: {e}")))
                })
                .collect::<Result<_>>()?,
        };
        let arity = |want: usize| -> Result<()> {
            if values.is_empty() || values.len() == want {
                Ok(())
            } else {
                Err(Error::Spec(format!(
                    "{kind} takes {want} parameter(s), got {}",
                    values.len()
                )))
            }
        };
        let spec = match kind {
            "two-point" | "two_point_scale" => {
                arity(3)?;
                match values.as_slice() {
                    [small, large, weight] => MixtureSpec::TwoPointScale {
                        small: *small,
                        large: *large,
                        weight: *weight,
                    },
                    _ => MixtureSpec::TwoPointScale {
                        small: 1.0,
                        large: 10.0,
                        weight: 0.5,
                    },
                }
            }
            "exponential" | "exponential_scale" | "laplace" => {
                arity(1)?;
                MixtureSpec::ExponentialScale {
                    scale: values.first().copied().unwrap_or(1.0),
                }
            }
            "student" | "inverse_sqrt_gamma_scale" | "inverse-sqrt-gamma" => {
                arity(1)?;
                MixtureSpec::InverseSqrtGammaScale {
                    dof: values.first().copied().unwrap_or(3.0),
                }
            }
            "constant" | "constant_scale" | "normal" => {
                arity(1)?;
                MixtureSpec::ConstantScale {
                    sigma: values.first().copied().unwrap_or(1.0),
                }
            }
            "rademacher" => {
                arity(0)?;
                MixtureSpec::Rademacher
            }
            other => return Err(Error::Spec(format!("unknown mixture kind {other:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl Serialize for MixtureSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Which critical value a simulated test uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    /// Classical Student t critical value.
    Classic,
    /// Worst case over Gaussian scale mixtures.
    G,
    /// Worst case over symmetric laws.
    S,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Classic => "classic",
            Model::G => "G",
            Model::S => "S",
        })
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classic" => Ok(Model::Classic),
            "G" | "g" => Ok(Model::G),
            "S" | "s" => Ok(Model::S),
            other => Err(Error::Spec(format!("unknown model {other:?}"))),
        }
    }
}

impl Serialize for Model {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Critical value at one-sided level `alpha` for sample size `n`.
pub fn critical_value(model: Model, n: usize, alpha: f64) -> Result<f64> {
    match model {
        Model::Classic => {
            if !(alpha > 0.0 && alpha < 0.5) {
                return domain(
                    "critical_value",
                    format!("alpha = {alpha} is not in (0, 0.5)"),
                );
            }
            student_t_quantile(1.0 - alpha, DegreesOfFreedom::for_sample_size(n)?)
        }
        Model::G => g_critical_value(n, alpha),
        Model::S => Ok(s_critical_value(n, alpha)?.x),
    }
}

/// Stream for replication `rep` under root `seed`.
pub fn replication_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// Draws `n` independent errors from `spec`.
pub fn sample_errors<R: Rng + ?Sized>(
    spec: &MixtureSpec,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    spec.validate()?;
    let out = match *spec {
        MixtureSpec::TwoPointScale {
            small,
            large,
            weight,
        } => (0..n)
            .map(|_| {
                let s = if rng.random::<f64>() < weight {
                    large
                } else {
                    small
                };
                let z: f64 = StandardNormal.sample(rng);
                s * z
            })
            .collect(),
        MixtureSpec::ExponentialScale { scale } => (0..n)
            .map(|_| {
                let e: f64 = Exp1.sample(rng);
                let z: f64 = StandardNormal.sample(rng);
                scale * (2.0 * e).sqrt() * z
            })
            .collect(),
        MixtureSpec::InverseSqrtGammaScale { dof } => {
            let chi = ChiSquared::new(dof).map_err(|e| Error::Spec(e.to_string()))?;
            (0..n)
                .map(|_| {
                    let g: f64 = chi.sample(rng);
                    let z: f64 = StandardNormal.sample(rng);
                    (dof / g).sqrt() * z
                })
                .collect()
        }
        MixtureSpec::ConstantScale { sigma } => (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                sigma * z
            })
            .collect(),
        MixtureSpec::Rademacher => (0..n)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect(),
    };
    Ok(out)
}

fn binomial_se(p: f64, reps: u64) -> f64 {
    (p * (1.0 - p) / reps as f64).sqrt()
}

/// Outcome of a type-I error simulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub spec: MixtureSpec,
    pub n: usize,
    pub alpha: f64,
    pub model: Model,
    pub critical_value: f64,
    pub reps: u64,
    pub rejections: u64,
    pub estimate: f64,
    pub std_error: f64,
    pub seed: u64,
}

impl SimulationReport {
    /// Whether the rejection rate stays within `sigmas` standard errors of
    /// the two-sided nominal level `2 alpha`.
    pub fn is_conservative(&self, sigmas: f64) -> bool {
        self.estimate <= 2.0 * self.alpha + sigmas * self.std_error
    }
}

/// Simulates the two-sided test `|T| > c` at one-sided level `alpha` under the
/// null, with `c` the critical value of `model`.
///
/// Samples with zero spread have `|T| = ∞` unless they sit exactly on the
/// null mean, matching the ratio form of the statistic.
pub fn type_one_error(
    spec: MixtureSpec,
    n: usize,
    alpha: f64,
    model: Model,
    reps: u64,
    seed: u64,
) -> Result<SimulationReport> {
    spec.validate()?;
    if reps < MIN_REPS {
        return domain(
            "type_one_error",
            format!("reps = {reps} is below {MIN_REPS}"),
        );
    }
    let crit = critical_value(model, n, alpha)?;
    let mu = 0.0;
    let rejections: u64 = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replication_rng(seed, rep);
            let sample: Vec<f64> = sample_errors(&spec, n, &mut rng)
                .expect("validated spec")
                .into_iter()
                .map(|e| mu + e)
                .collect();
            let reject = match t_statistic(&sample, mu) {
                Ok(t) => t.abs() > crit,
                Err(_) => sample[0] != mu,
            };
            u64::from(reject)
        })
        .sum();
    let estimate = rejections as f64 / reps as f64;
    Ok(SimulationReport {
        spec,
        n,
        alpha,
        model,
        critical_value: crit,
        reps,
        rejections,
        estimate,
        std_error: binomial_se(estimate, reps),
        seed,
    })
}

/// Monte Carlo check that the equal-scales configuration attains the
/// worst-case tail.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttainmentReport {
    pub n: usize,
    pub a: f64,
    /// Number of unit scales; the remaining `n - k` are [`ADVERSARIAL_EPS`].
    pub k: usize,
    pub reps: u64,
    pub seed: u64,
    pub hits: u64,
    /// Observed frequency of `ratio > a²` (two-sided event).
    pub empirical: f64,
    /// One-sided worst-case tail `g_tail(a, n)`.
    pub theoretical: Probability,
    /// Binomial standard error at the theoretical two-sided rate.
    pub std_error: f64,
}

impl AttainmentReport {
    /// `|empirical - 2 theoretical|` in standard errors.
    pub fn deviation_in_se(&self) -> f64 {
        let diff = (self.empirical - 2.0 * self.theoretical.get()).abs();
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Simulates `P(ratio > a²)` with `k = g_argmax_k(a, n)` unit scales.
pub fn adversarial_attainment(n: usize, a: f64, reps: u64, seed: u64) -> Result<AttainmentReport> {
    let k = g_argmax_k(a, n)?;
    if reps < MIN_REPS {
        return domain(
            "adversarial_attainment",
            format!("reps = {reps} is below {MIN_REPS}"),
        );
    }
    let theoretical = g_tail(a, n)?;
    let a2 = a * a;
    let hits: u64 = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replication_rng(seed, rep);
            let errors: Vec<f64> = (0..n)
                .map(|i| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    if i < k {
                        z
                    } else {
                        ADVERSARIAL_EPS * z
                    }
                })
                .collect();
            u64::from(ratio_statistic(&errors).is_ok_and(|r| r > a2))
        })
        .sum();
    let p = 2.0 * theoretical.get();
    Ok(AttainmentReport {
        n,
        a,
        k,
        reps,
        seed,
        hits,
        empirical: hits as f64 / reps as f64,
        theoretical,
        std_error: binomial_se(p, reps),
    })
}
