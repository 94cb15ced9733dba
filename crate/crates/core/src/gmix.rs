//! Worst-case distribution of the t statistic when the errors are Gaussian
//! scale mixtures.
//!
//! For fixed nonrandom scales the one-sided tail of `Σσᵢ Zᵢ / √(Σσᵢ² Zᵢ²)` is
//! largest when `k` of the scales are equal and the rest vanish. With `k`
//! equal scales the ratio statistic is an ordinary t statistic on `k - 1`
//! degrees of freedom, so the worst-case tail at ratio threshold `a` is
//!
//! ```text
//! max over a² < k <= n of  P(t_{k-1} > √(a² (k - 1) / (k - a²)))
//! ```
//!
//! together with the degenerate cases: a single nonzero scale gives ratio 1,
//! so the tail is 1/2 below `a = 1`, and nothing exceeds `a = √n`.
//!
//! Neighbouring terms `k` and `k + 1` cross once, at a point that increases
//! with `k` towards `√3`. Above `√3` the maximum sits at `k = n` and the
//! worst case coincides with the classical t test.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::specfun::{
    invert_monotone, normal_sf, student_t_sf, DegreesOfFreedom, Probability, ROOT_TOL,
};
use crate::transform::{a_from_x, x_from_a};

pub const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Degrees-of-freedom rows of the reference critical-value table.
pub const STANDARD_DOFS: [u32; 27] = [
    2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 23, 24, 25, 100,
    500, 1000,
];

/// One-sided levels of the reference critical-value table.
pub const STANDARD_ALPHAS: [f64; 4] = [0.125, 0.100, 0.050, 0.025];

/// Bracket width used when locating crossing points.
pub const CROSSING_TOL: f64 = 1e-12;

/// Upper limit on the number of equal-scale configurations scanned by
/// [`phi_g`]. The maximizing count exceeds this only within about `2e-5` of
/// `√3`, where the sup differs from the normal tail by less than `2e-11`.
pub const PHI_G_K_CAP: usize = 1 << 16;

/// Query for the worst-case tail at ratio threshold `a` and sample size `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GTailQuery {
    pub a: f64,
    pub n: usize,
}

impl GTailQuery {
    pub fn new(a: f64, n: usize) -> Result<Self> {
        if !(a >= 0.0) {
            return domain("GTailQuery::new", format!("a = {a} must be nonnegative"));
        }
        if n < 2 {
            return domain("GTailQuery::new", format!("sample size {n} < 2"));
        }
        Ok(Self { a, n })
    }

    pub fn tail(&self) -> Probability {
        g_tail_unchecked(self.a, self.n)
    }
}

/// Intersection of the equal-scale tail curves for `k` and `k + 1` scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossingPoint {
    pub k: usize,
    pub a_star: f64,
    pub a_star_squared: f64,
}

/// Tail `P(Σ_{i<=k} Zᵢ / √(Σ Zᵢ²) >= a)` for `k >= 2` equal scales; zero
/// once `a² >= k`.
fn equal_scale_term(a: f64, k: usize) -> f64 {
    let kf = k as f64;
    let a2 = a * a;
    let gap = kf - a2;
    if !(gap > 0.0) {
        return 0.0;
    }
    let y = (a2 * (kf - 1.0) / gap).sqrt();
    student_t_sf(y, DegreesOfFreedom::for_sample_size(k).expect("k >= 2")).get()
}

/// One-sided tail of the equal-scale configuration with `k >= 2` nonzero scales.
pub fn equal_scale_tail(a: f64, k: usize) -> Result<Probability> {
    if !(a >= 0.0) {
        return domain("equal_scale_tail", format!("a = {a} must be nonnegative"));
    }
    if k < 2 {
        return domain("equal_scale_tail", format!("k = {k} < 2"));
    }
    Ok(Probability::clamped(equal_scale_term(a, k)))
}

fn first_feasible_k(a: f64) -> usize {
    let a2 = a * a;
    let mut k = (a2.floor() as usize + 1).max(2);
    while (k as f64) <= a2 {
        k += 1;
    }
    k
}

fn g_tail_unchecked(a: f64, n: usize) -> Probability {
    if a < 1.0 {
        return Probability::HALF;
    }
    if a * a >= n as f64 {
        return Probability::ZERO;
    }
    let best = (first_feasible_k(a)..=n)
        .map(|k| equal_scale_term(a, k))
        .fold(0.0, f64::max);
    Probability::clamped(best)
}

/// Worst-case one-sided tail `1 - t^G_{n-1}(a)` over Gaussian scale mixtures.
///
/// Equal to 1/2 for `a < 1`, 1/4 at `a = 1`, 0 for `a >= √n`, and otherwise
/// the maximum of the equal-scale tails over `a² < k <= n`.
pub fn g_tail(a: f64, n: usize) -> Result<Probability> {
    Ok(GTailQuery::new(a, n)?.tail())
}

/// Worst-case distribution function `t^G_{n-1}(a)`, extended to negative `a`
/// by symmetry.
pub fn g_cdf(a: f64, n: usize) -> Result<Probability> {
    if a.is_nan() {
        return domain("g_cdf", "a is NaN");
    }
    if a < 0.0 {
        return g_tail(-a, n);
    }
    Ok(g_tail(a, n)?.complement())
}

/// Number of equal nonzero scales attaining [`g_tail`] (smallest on ties).
pub fn g_argmax_k(a: f64, n: usize) -> Result<usize> {
    if n < 2 {
        return domain("g_argmax_k", format!("sample size {n} < 2"));
    }
    if !(a > 1.0 && a * a < n as f64) {
        return domain("g_argmax_k", format!("a = {a} is not in (1, √{n})"));
    }
    let mut best_k = 0;
    let mut best = f64::NEG_INFINITY;
    for k in first_feasible_k(a)..=n {
        let t = equal_scale_term(a, k);
        if t > best {
            best = t;
            best_k = k;
        }
    }
    Ok(best_k)
}

/// Solves for the threshold at which `k` and `k + 1` equal scales give the
/// same tail. The root lies in `(1, min(√k, √3))`.
pub fn crossing_point(k: usize) -> Result<CrossingPoint> {
    if k < 2 {
        return domain("crossing_point", format!("k = {k} < 2"));
    }
    let hi = (k as f64).sqrt().min(SQRT_3);
    let diff = |a: f64| equal_scale_term(a, k) - equal_scale_term(a, k + 1);
    let a_star = invert_monotone(diff, 0.0, 1.0, hi, CROSSING_TOL)?;
    Ok(CrossingPoint {
        k,
        a_star,
        a_star_squared: a_star * a_star,
    })
}

/// Upper tail `1 - Φ^G(x)` for `x >= 0`.
///
/// Between 1 and `√3` the equal-scale terms are scanned upwards from the first
/// feasible count. The terms rise to a single maximum and then fall back to
/// the normal tail, so the scan stops at the first decrease.
fn phi_g_upper(x: f64) -> f64 {
    if x < 1.0 {
        return 0.5;
    }
    if x == 1.0 {
        return 0.25;
    }
    if x >= SQRT_3 {
        return normal_sf(x).get();
    }
    let mut best = 0.0;
    let mut k = first_feasible_k(x);
    while k <= PHI_G_K_CAP {
        let t = equal_scale_term(x, k);
        if t < best {
            break;
        }
        best = t;
        k += 1;
    }
    best.max(normal_sf(x).get())
}

/// Large-sample worst-case distribution function `Φ^G`.
///
/// `Φ^G(x)` is 1/2 on `[0, 1)`, 3/4 at 1, `Φ(x)` from `√3` on, and in
/// between one minus the largest equal-scale tail over all feasible counts.
/// Negative arguments use `Φ^G(-x) = 1 - Φ^G(x)`.
pub fn phi_g(x: f64) -> Probability {
    if x.is_nan() {
        return Probability::clamped(f64::NAN);
    }
    if x < 0.0 {
        return Probability::clamped(phi_g_upper(-x));
    }
    Probability::clamped(1.0 - phi_g_upper(x))
}

/// Smallest `x` with `Φ^G(x) >= p` for `p` in `(1/2, 1)`. Every level up to
/// 3/4 maps to the jump at `x = 1`.
pub fn phi_g_quantile(p: f64) -> Result<f64> {
    if !(p > 0.5 && p < 1.0) {
        return domain("phi_g_quantile", format!("p = {p} is not in (0.5, 1)"));
    }
    if p <= 0.75 {
        return Ok(1.0);
    }
    let mut hi = 2.0;
    while phi_g(hi).get() < p {
        hi *= 2.0;
        if hi > 64.0 {
            return domain("phi_g_quantile", format!("p = {p} is too close to 1"));
        }
    }
    invert_monotone(|x| phi_g(x).get(), p, 1.0, hi, ROOT_TOL * 1e-3)
}

/// Smallest `x >= 0` with `g_tail(a_from_x(x, n), n) <= alpha`.
pub fn g_critical_value(n: usize, alpha: f64) -> Result<f64> {
    if n < 2 {
        return domain("g_critical_value", format!("sample size {n} < 2"));
    }
    if !(alpha > 0.0 && alpha < 0.25) {
        return domain(
            "g_critical_value",
            format!("alpha = {alpha} is not in (0, 0.25); levels at or above 1/4 are vacuous"),
        );
    }
    let tail_at = |x: f64| g_tail_unchecked(a_from_x(x, n).expect("x >= 0"), n).get();
    let lo = x_from_a(1.0, n)?;
    let mut hi = 2.0;
    while tail_at(hi) > alpha {
        hi *= 2.0;
        if !hi.is_finite() {
            return domain(
                "g_critical_value",
                format!("no finite critical value for alpha = {alpha}"),
            );
        }
    }
    invert_monotone(tail_at, alpha, lo, hi, ROOT_TOL)
}

/// One row of a [`CriticalTable`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalRow {
    pub dof: u32,
    pub values: Vec<f64>,
}

/// Critical values on a grid of degrees of freedom and one-sided levels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalTable {
    pub alphas: Vec<f64>,
    pub rows: Vec<CriticalRow>,
}

impl CriticalTable {
    pub fn get(&self, dof: u32, alpha: f64) -> Option<f64> {
        let j = self.alphas.iter().position(|&a| a == alpha)?;
        self.rows.iter().find(|r| r.dof == dof).map(|r| r.values[j])
    }
}

/// Builds a table of [`g_critical_value`]`(dof + 1, alpha)`. Cells are
/// evaluated in parallel; the result does not depend on scheduling.
pub fn generate_table(dofs: &[u32], alphas: &[f64]) -> Result<CriticalTable> {
    for &d in dofs {
        if d == 0 {
            return domain("generate_table", "degrees of freedom must be at least 1");
        }
    }
    for &alpha in alphas {
        if !(alpha > 0.0 && alpha < 0.25) {
            return domain(
                "generate_table",
                format!("alpha = {alpha} is not in (0, 0.25)"),
            );
        }
    }
    let width = alphas.len();
    let cells: Vec<f64> = (0..dofs.len() * width)
        .into_par_iter()
        .map(|idx| g_critical_value(dofs[idx / width.max(1)] as usize + 1, alphas[idx % width]))
        .collect::<Result<_>>()?;
    let rows = dofs
        .iter()
        .enumerate()
        .map(|(i, &dof)| CriticalRow {
            dof,
            values: cells[i * width..(i + 1) * width].to_vec(),
        })
        .collect();
    Ok(CriticalTable {
        alphas: alphas.to_vec(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{cauchy_cdf, normal_cdf, student_t_quantile};
    use approx::assert_abs_diff_eq;

    fn classical_tail(x: f64, n: usize) -> f64 {
        student_t_sf(x, DegreesOfFreedom::for_sample_size(n).unwrap()).get()
    }

    #[test]
    fn g_tail_examples() {
        assert_eq!(g_tail(0.5, 10).unwrap().get(), 0.5);
        assert_abs_diff_eq!(g_tail(1.0, 10).unwrap().get(), 0.25, epsilon = 1e-15);
        let a = a_from_x(4.303, 3).unwrap();
        assert_abs_diff_eq!(g_tail(a, 3).unwrap().get(), 0.025, epsilon = 1e-3);
        assert_eq!(g_tail(10f64.sqrt(), 10).unwrap().get(), 0.0);
        assert_eq!(g_tail(5.0, 10).unwrap().get(), 0.0);
        assert!(g_tail(-0.1, 10).is_err());
        assert!(g_tail(1.0, 1).is_err());
    }

    #[test]
    fn g_tail_just_below_sqrt_n_is_tiny() {
        let a = 10f64.sqrt() * (1.0 - 1e-13);
        let t = g_tail(a, 10).unwrap().get();
        assert!(t >= 0.0 && t < 1e-20);
    }

    #[test]
    fn g_cdf_symmetry() {
        for &a in &[0.3, 1.0, 1.4, 2.2] {
            let s = g_cdf(a, 12).unwrap().get() + g_cdf(-a, 12).unwrap().get();
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn argmax_examples() {
        assert_eq!(g_argmax_k(1.2, 100).unwrap(), 2);
        assert_eq!(g_argmax_k(1.4, 100).unwrap(), 3);
        assert!(g_argmax_k(1.5, 100).unwrap() > 3);
        assert_eq!(g_argmax_k(1.5, 3).unwrap(), 3);
        assert!(g_argmax_k(1.0, 10).is_err());
        assert!(g_argmax_k(4.0, 10).is_err());
        // closed form of the k = 3 term
        let t3 = equal_scale_term(1.5, 3);
        assert_abs_diff_eq!(t3, 0.5 - 1.5 / (2.0 * SQRT_3), epsilon = 1e-14);
        assert_abs_diff_eq!(t3, 0.0670, epsilon = 1e-4);
        let best = g_argmax_k(1.5, 100).unwrap();
        let top = equal_scale_term(1.5, best);
        assert!(top > t3);
        for k in 3..=100 {
            assert!(equal_scale_term(1.5, k) <= top);
        }
    }

    #[test]
    fn argmax_regions_follow_crossings() {
        let crossings: Vec<f64> = (2..=12)
            .map(|k| crossing_point(k).unwrap().a_star)
            .collect();
        for w in crossings.windows(2) {
            let k = crossings.iter().position(|&c| c == w[0]).unwrap() + 2;
            let inside = 0.5 * (w[0] + w[1]);
            assert_eq!(g_argmax_k(inside, 200).unwrap(), k + 1);
        }
    }

    #[test]
    fn crossing_examples() {
        let c2 = crossing_point(2).unwrap();
        assert_abs_diff_eq!(c2.a_star, 1.3136, epsilon = 1e-4);
        assert_abs_diff_eq!(c2.a_star_squared, 1.726, epsilon = 1e-3);
        let c3 = crossing_point(3).unwrap();
        assert_abs_diff_eq!(c3.a_star, 1.4282, epsilon = 1e-4);
        assert_abs_diff_eq!(c3.a_star_squared, 2.040, epsilon = 1e-3);
        let c = crossing_point(1000).unwrap();
        assert!(c.a_star > 1.72 && c.a_star < SQRT_3);
        let c = crossing_point(10_000).unwrap();
        assert!(c.a_star > 1.73 && c.a_star < SQRT_3);
        assert!(crossing_point(1).is_err());
    }

    #[test]
    fn crossings_increase_to_sqrt3() {
        let mut prev = 1.0;
        for k in 2..=100 {
            let c = crossing_point(k).unwrap();
            assert!(c.a_star > prev && c.a_star < SQRT_3, "k = {k}");
            prev = c.a_star;
        }
    }

    #[test]
    fn phi_g_examples() {
        assert_eq!(phi_g(0.7).get(), 0.5);
        assert_eq!(phi_g(0.0).get(), 0.5);
        assert_eq!(phi_g(1.0).get(), 0.75);
        assert_abs_diff_eq!(phi_g(4.0 * SQRT_3 / 5.0).get(), 0.9, epsilon = 1e-9);
        assert_abs_diff_eq!(phi_g(1.650).get(), 0.95, epsilon = 5e-4);
        assert_abs_diff_eq!(phi_g(1.307).get(), 0.875, epsilon = 5e-4);
        assert_abs_diff_eq!(phi_g(2.0).get(), normal_cdf(2.0).get(), epsilon = 1e-15);
        assert_abs_diff_eq!(phi_g(2.0).get(), 0.97725, epsilon = 1e-5);
        assert_abs_diff_eq!(phi_g(-1.2).get(), 1.0 - phi_g(1.2).get(), epsilon = 1e-15);
    }

    #[test]
    fn phi_g_cauchy_section() {
        let end = 2f64.sqrt().min(crossing_point(2).unwrap().a_star);
        for i in 1..1000 {
            let x = 1.0 + (end - 1.0) * i as f64 / 1000.0;
            let want = cauchy_cdf(x / (2.0 - x * x).sqrt()).get();
            assert_abs_diff_eq!(phi_g(x).get(), want, epsilon = 1e-10);
        }
    }

    #[test]
    fn phi_g_linear_section() {
        let lo = crossing_point(2).unwrap().a_star;
        let hi = crossing_point(3).unwrap().a_star;
        for i in 1..1000 {
            let x = lo + (hi - lo) * i as f64 / 1000.0;
            assert_abs_diff_eq!(phi_g(x).get(), x / (2.0 * SQRT_3) + 0.5, epsilon = 1e-10);
        }
    }

    #[test]
    fn phi_g_scan_matches_long_scan() {
        // a much longer scan of the equal-scale terms never beats the early stop
        for &x in &[1.05, 1.2, 1.4, 1.5, 1.6, 1.68, 1.71, 1.725] {
            let tail = 1.0 - phi_g(x).get();
            let k0 = first_feasible_k(x);
            let long = (k0..k0 + 20_000)
                .map(|k| equal_scale_term(x, k))
                .fold(0.0, f64::max);
            assert!(long <= tail + 1e-15, "x = {x}: {long} > {tail}");
            assert!(tail >= normal_sf(x).get());
        }
    }

    #[test]
    fn phi_g_monotone_and_continuous() {
        let mut prev = phi_g(1.0 + 1e-9).get();
        assert_abs_diff_eq!(prev, 0.75, epsilon = 1e-8);
        let h = 1e-4;
        let mut x = 1.0 + h;
        while x < 4.0 {
            let v = phi_g(x).get();
            assert!(v >= prev - 1e-15, "x = {x}");
            // slope is bounded by the Cauchy density part, well below 1
            assert!(v - prev < h, "jump at x = {x}");
            prev = v;
            x += h;
        }
        // across √3
        assert_abs_diff_eq!(
            phi_g(SQRT_3 - 1e-9).get(),
            phi_g(SQRT_3).get(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn phi_g_quantile_examples() {
        assert_abs_diff_eq!(
            phi_g_quantile(0.9).unwrap(),
            4.0 * SQRT_3 / 5.0,
            epsilon = 1e-9
        );
        assert_eq!(phi_g_quantile(0.6).unwrap(), 1.0);
        assert_eq!(phi_g_quantile(0.75).unwrap(), 1.0);
        assert_abs_diff_eq!(
            phi_g_quantile(0.975).unwrap(),
            1.959_963_984_540_054,
            epsilon = 1e-9
        );
        assert!(phi_g_quantile(0.5).is_err());
        assert!(phi_g_quantile(1.0).is_err());
        for &p in &[0.76, 0.8, 0.875, 0.95, 0.99] {
            let x = phi_g_quantile(p).unwrap();
            assert_abs_diff_eq!(phi_g(x).get(), p, epsilon = 1e-9);
        }
    }

    #[test]
    fn critical_value_examples() {
        assert_abs_diff_eq!(g_critical_value(4, 0.025).unwrap(), 3.182, epsilon = 1e-3);
        assert_abs_diff_eq!(g_critical_value(11, 0.100).unwrap(), 1.454, epsilon = 1e-3);
        // 30-digit root of the same equation, printed as 1.448
        assert_abs_diff_eq!(
            g_critical_value(12, 0.100).unwrap(),
            1.447_493_728_911_5,
            epsilon = 1e-8
        );
        assert_abs_diff_eq!(
            g_critical_value(1001, 0.100).unwrap(),
            1.386,
            epsilon = 1e-3
        );
        assert!(g_critical_value(5, 0.25).is_err());
        assert!(g_critical_value(1, 0.05).is_err());
    }

    #[test]
    fn critical_values_dominate_classical() {
        for n in [2usize, 3, 5, 8, 13, 30, 101] {
            for &alpha in &[0.2, 0.125, 0.1, 0.05, 0.025, 0.01] {
                let g = g_critical_value(n, alpha).unwrap();
                let dof = DegreesOfFreedom::for_sample_size(n).unwrap();
                let c = student_t_quantile(1.0 - alpha, dof).unwrap();
                assert!(g >= c - 1e-9, "n = {n}, alpha = {alpha}: {g} < {c}");
            }
        }
    }

    #[test]
    fn g_tail_nonincreasing_dense_grid() {
        for n in [2usize, 3, 4, 7, 26] {
            let top = (n as f64).sqrt();
            let mut prev = g_tail(0.0, n).unwrap().get();
            for i in 1..=4000 {
                let a = top * i as f64 / 4000.0;
                let t = g_tail(a, n).unwrap().get();
                assert!(t <= prev + 1e-15, "n = {n}, a = {a}");
                prev = t;
            }
        }
    }

    #[test]
    fn classical_region_and_domination() {
        for n in [4usize, 6, 11, 26, 101] {
            let top = (n as f64).sqrt();
            for i in 0..200 {
                let a = SQRT_3 + (top - SQRT_3) * i as f64 / 200.0;
                let x = x_from_a(a, n).unwrap();
                assert_abs_diff_eq!(
                    g_tail(a, n).unwrap().get(),
                    classical_tail(x, n),
                    epsilon = 1e-10
                );
            }
            for i in 0..500 {
                let x = 0.02 * i as f64;
                let g = g_tail(a_from_x(x, n).unwrap(), n).unwrap().get();
                assert!(g >= classical_tail(x, n) - 1e-15);
            }
        }
    }

    #[test]
    fn table_small_grid() {
        let t = generate_table(&[2, 10], &[0.1, 0.025]).unwrap();
        assert_abs_diff_eq!(t.get(2, 0.025).unwrap(), 4.303, epsilon = 1e-3);
        assert_abs_diff_eq!(t.get(10, 0.1).unwrap(), 1.454, epsilon = 1e-3);
        assert!(t.get(3, 0.1).is_none());
        let again = generate_table(&[2, 10], &[0.1, 0.025]).unwrap();
        assert_eq!(t, again);
        assert!(generate_table(&[0], &[0.1]).is_err());
        assert!(generate_table(&[3], &[0.3]).is_err());
        let empty = generate_table(&[], &STANDARD_ALPHAS).unwrap();
        assert!(empty.rows.is_empty());
    }

    #[test]
    fn table_strictly_monotone() {
        let dofs = [2, 3, 5, 9, 20, 100];
        let t = generate_table(&dofs, &STANDARD_ALPHAS).unwrap();
        for row in &t.rows {
            for w in row.values.windows(2) {
                assert!(w[0] < w[1]);
            }
        }
        for j in 0..STANDARD_ALPHAS.len() {
            for w in t.rows.windows(2) {
                assert!(w[0].values[j] > w[1].values[j]);
            }
        }
    }
}
