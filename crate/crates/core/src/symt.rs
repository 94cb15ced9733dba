//! Worst-case distribution of the t statistic under arbitrary symmetric errors.
//!
//! Every symmetric law is a scale mixture of ±1 coin flips, and with nonrandom
//! scales `p` (normalized to `‖p‖ = 1`) the tail `P(Σ pⱼ εⱼ >= a)` counts the
//! cube vertices `v ∈ {±1}ⁿ` in the closed halfspace `⟨v, p⟩ >= a`. The
//! worst case is therefore
//!
//! ```text
//! 1 - t^S_{n-1}(a) = m(n, a) / 2ⁿ,   m(n, a) = max_{‖u‖=1} #{v : ⟨v, u⟩ >= a}
//! ```
//!
//! Subscripts follow the degrees-of-freedom convention throughout: the
//! functions here take the sample size `n`, which is also the cube dimension.
//!
//! A vertex set `S` fits in such a halfspace iff `max_u min_{v∈S} ⟨v, u⟩ >= a`,
//! and for sets whose hull avoids the origin that max-min equals the norm of
//! the minimum-norm point of `conv(S)`. The optimal set for any direction is a
//! halfspace cut of the cube, so the exhaustive search walks the halfspace
//! cuts (one representative per orbit of the cube's symmetry group), records
//! the level at which each stops fitting, and reduces these to the step
//! function `a ↦ m(n, a)`.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::specfun::Probability;
use crate::transform::x_from_a;

/// Largest dimension handled by exhaustive search.
pub const N_MAX: usize = 5;

/// Slack allowed when deciding whether a vertex set fits at level `a`.
pub const COVER_TOL: f64 = 1e-10;

/// Conjectured values of the large-sample symmetric-error distribution
/// function, as `(a, Φ^S(a))`. These are consistency targets only.
pub const PHI_S_CONJECTURED: [(f64, f64); 3] = [
    (1.732_050_807_568_877_2, 0.9),
    (2.0, 0.95),
    (2.236_067_977_499_79, 0.975),
];

const WOLFE_TOL: f64 = 1e-12;
const WEIGHT_TOL: f64 = 1e-12;

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Solves `min ‖Σ αᵢ pᵢ‖` subject to `Σ αᵢ = 1` over the active points.
/// Returns `None` when the points are affinely dependent.
fn affine_minimizer(points: &[&[f64]], active: &[usize]) -> Option<Vec<f64>> {
    let m = active.len();
    let dim = m + 1;
    // [G 1; 1ᵀ 0] [α; λ] = [0; 1]
    let mut sys = vec![vec![0.0; dim + 1]; dim];
    for (r, &i) in active.iter().enumerate() {
        for (c, &j) in active.iter().enumerate() {
            sys[r][c] = dot(points[i], points[j]);
        }
        sys[r][m] = 1.0;
        sys[m][r] = 1.0;
    }
    sys[m][dim] = 1.0;
    let scale = sys
        .iter()
        .flat_map(|row| row[..dim].iter())
        .fold(1.0f64, |acc, v| acc.max(v.abs()));
    for col in 0..dim {
        let pivot = (col..dim).max_by(|&a, &b| sys[a][col].abs().total_cmp(&sys[b][col].abs()))?;
        if sys[pivot][col].abs() < 1e-13 * scale {
            return None;
        }
        sys.swap(col, pivot);
        for r in 0..dim {
            if r != col {
                let factor = sys[r][col] / sys[col][col];
                if factor != 0.0 {
                    for c in col..=dim {
                        sys[r][c] -= factor * sys[col][c];
                    }
                }
            }
        }
    }
    Some((0..m).map(|r| sys[r][dim] / sys[r][r]).collect())
}

fn combine(points: &[&[f64]], active: &[usize], weights: &[f64], d: usize) -> Vec<f64> {
    let mut x = vec![0.0; d];
    for (&i, &w) in active.iter().zip(weights) {
        for (xk, pk) in x.iter_mut().zip(points[i]) {
            *xk += w * pk;
        }
    }
    x
}

/// Point of minimal Euclidean norm in the convex hull of `points`
/// (Wolfe's active-set method).
///
/// Candidate points are taken in index order, so ties resolve to the lowest
/// index and the result is deterministic.
pub fn min_norm_point<P: AsRef<[f64]>>(points: &[P]) -> Result<Vec<f64>> {
    let pts: Vec<&[f64]> = points.iter().map(AsRef::as_ref).collect();
    let Some(first) = pts.first() else {
        return domain("min_norm_point", "empty point set");
    };
    let d = first.len();
    if d == 0 || pts.iter().any(|p| p.len() != d) {
        return domain("min_norm_point", "points must share a positive dimension");
    }
    if pts.iter().flat_map(|p| p.iter()).any(|v| !v.is_finite()) {
        return domain("min_norm_point", "non-finite coordinate");
    }
    let norms: Vec<f64> = pts.iter().map(|p| dot(p, p)).collect();
    let scale = norms.iter().fold(f64::MIN_POSITIVE, |a, &b| a.max(b));

    let mut start = 0;
    for (i, &nrm) in norms.iter().enumerate() {
        if nrm < norms[start] {
            start = i;
        }
    }
    let mut active = vec![start];
    let mut weights = vec![1.0];
    let mut x = pts[start].to_vec();

    let max_major = 50 * (pts.len() + d) + 100;
    for _ in 0..max_major {
        let xx = dot(&x, &x);
        if xx <= WOLFE_TOL * WOLFE_TOL * scale {
            return Ok(vec![0.0; d]);
        }
        let mut j = 0;
        let mut best = f64::INFINITY;
        for (i, p) in pts.iter().enumerate() {
            let v = dot(&x, p);
            if v < best {
                best = v;
                j = i;
            }
        }
        if xx - best <= WOLFE_TOL * scale || active.contains(&j) {
            return Ok(x);
        }
        active.push(j);
        weights.push(0.0);

        loop {
            let Some(alpha) = affine_minimizer(&pts, &active) else {
                // affinely dependent corral; drop the newcomer and stop
                active.pop();
                weights.pop();
                return Ok(combine(&pts, &active, &weights, d));
            };
            if alpha.iter().all(|&a| a > WEIGHT_TOL) {
                weights = alpha;
                break;
            }
            let mut theta = 1.0f64;
            for (w, a) in weights.iter().zip(&alpha) {
                if *a <= WEIGHT_TOL && w - a > 0.0 {
                    theta = theta.min(w / (w - a));
                }
            }
            for (w, a) in weights.iter_mut().zip(&alpha) {
                *w += theta * (a - *w);
            }
            let mut keep_active = Vec::with_capacity(active.len());
            let mut keep_weights = Vec::with_capacity(active.len());
            for (&i, &w) in active.iter().zip(&weights) {
                if w > WEIGHT_TOL {
                    keep_active.push(i);
                    keep_weights.push(w);
                }
            }
            let total: f64 = keep_weights.iter().sum();
            keep_weights.iter_mut().for_each(|w| *w /= total);
            active = keep_active;
            weights = keep_weights;
        }
        x = combine(&pts, &active, &weights, d);
    }
    Err(Error::Solver("min_norm_point did not terminate".into()))
}

/// Exact worst-case vertex count for one `(n, a)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VertexCoverResult {
    pub n: usize,
    pub a: f64,
    /// Largest number of vertices in a closed halfspace at distance `a`.
    pub m: u64,
    /// Unit normal of an optimal halfspace.
    pub witness: Vec<f64>,
    pub exact: bool,
}

impl VertexCoverResult {
    /// `m / 2ⁿ`, the worst-case one-sided tail.
    pub fn tail(&self) -> Probability {
        Probability::clamped(self.m as f64 / (1u64 << self.n) as f64)
    }

    /// Radius `√(n - a²)` of the covering sphere centred at `a · witness`.
    pub fn radius(&self) -> f64 {
        (self.n as f64 - self.a * self.a).max(0.0).sqrt()
    }
}

/// One step of `a ↦ m(n, a)`: for every `a <= level` (up to [`COVER_TOL`])
/// at least `m` vertices fit, witnessed by `witness`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverStep {
    pub level: f64,
    pub m: u64,
    pub witness: Vec<f64>,
}

/// Lower bound and, when available, the exact value of the worst-case tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SBound {
    pub a: f64,
    pub lower: Probability,
    pub exact_tail: Option<Probability>,
}

/// Critical value for the symmetric-error model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SCritical {
    pub n: usize,
    pub alpha: f64,
    /// Infimum of the t thresholds whose worst-case tail is at most `alpha`.
    pub x: f64,
    pub a: f64,
    /// `false` when derived from the `2^{-⌈a²⌉}` bound rather than the exact
    /// step function. Such values are not guaranteed to be conservative.
    pub exact: bool,
}

fn vertex(n: usize, idx: usize) -> Vec<f64> {
    (0..n)
        .map(|i| if idx >> i & 1 == 1 { -1.0 } else { 1.0 })
        .collect()
}

fn members(mask: u32) -> impl Iterator<Item = usize> {
    (0..32).filter(move |&i| mask >> i & 1 == 1)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Vertex relabelings induced by coordinate permutations and sign flips.
fn symmetry_tables(n: usize) -> Vec<Vec<u8>> {
    let count = 1usize << n;
    let mut tables = Vec::new();
    for perm in permutations(n) {
        for flip in 0..count {
            let table = (0..count)
                .map(|v| {
                    let w = v ^ flip;
                    (0..n).fold(0u8, |acc, i| acc | (((w >> i & 1) as u8) << perm[i]))
                })
                .collect();
            tables.push(table);
        }
    }
    tables
}

fn canonical(mask: u32, tables: &[Vec<u8>]) -> u32 {
    tables
        .iter()
        .map(|t| members(mask).fold(0u32, |acc, v| acc | 1 << t[v]))
        .min()
        .unwrap_or(mask)
}

/// `S` is a halfspace cut iff the hull of `{s - c : s ∈ S, c ∉ S}` misses 0.
fn is_halfspace_cut(n: usize, mask: u32) -> bool {
    let inside: Vec<Vec<f64>> = members(mask).map(|i| vertex(n, i)).collect();
    let full = if n == 5 {
        u32::MAX
    } else {
        (1u32 << (1 << n)) - 1
    };
    let outside: Vec<Vec<f64>> = members(full & !mask).map(|i| vertex(n, i)).collect();
    if outside.is_empty() {
        return true;
    }
    let diffs: Vec<Vec<f64>> = inside
        .iter()
        .flat_map(|s| {
            outside
                .iter()
                .map(move |c| s.iter().zip(c).map(|(a, b)| a - b).collect())
        })
        .collect();
    let p = min_norm_point(&diffs).expect("nonempty difference set");
    dot(&p, &p).sqrt() > 1e-9
}

/// Level `max_u min_{v∈S} ⟨v, u⟩` and the maximizing unit vector, or `None`
/// if the hull of `S` contains the origin.
fn fit_level(n: usize, mask: u32) -> Option<(f64, Vec<f64>)> {
    let pts: Vec<Vec<f64>> = members(mask).map(|i| vertex(n, i)).collect();
    let p = min_norm_point(&pts).expect("nonempty vertex set");
    let norm = dot(&p, &p).sqrt();
    if norm <= 1e-9 {
        return None;
    }
    Some((norm, p.iter().map(|v| v / norm).collect()))
}

fn build_steps(n: usize) -> Vec<CoverStep> {
    let tables = symmetry_tables(n);
    let half = 1usize << (n - 1);
    let mut found: Vec<(f64, u64, Vec<f64>)> = Vec::new();
    let mut layer: BTreeSet<u32> = BTreeSet::from([1u32]);
    let mut rejected: BTreeSet<u32> = BTreeSet::new();
    for size in 1..=half {
        let mut next = BTreeSet::new();
        for &rep in &layer {
            let (level, witness) = fit_level(n, rep).expect("layer sets avoid the origin");
            found.push((level, size as u64, witness));
            if size == half {
                continue;
            }
            for v in 0..(1usize << n) {
                if rep >> v & 1 == 1 {
                    continue;
                }
                let cand = rep | 1 << v;
                let canon = canonical(cand, &tables);
                if next.contains(&canon) || rejected.contains(&canon) {
                    continue;
                }
                if fit_level(n, cand).is_some() && is_halfspace_cut(n, cand) {
                    next.insert(canon);
                } else {
                    rejected.insert(canon);
                }
            }
        }
        layer = next;
    }
    found.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.cmp(&a.1)));
    let mut steps: Vec<CoverStep> = Vec::new();
    for (level, m, witness) in found {
        if steps.last().map_or(true, |s| m > s.m) {
            steps.push(CoverStep { level, m, witness });
        }
    }
    steps
}

static STEPS: [OnceLock<Vec<CoverStep>>; N_MAX + 1] = [
    OnceLock::new(),
    OnceLock::new(),
    OnceLock::new(),
    OnceLock::new(),
    OnceLock::new(),
    OnceLock::new(),
];

fn check_exact_n(func: &'static str, n: usize) -> Result<()> {
    if n == 0 {
        return domain(func, "dimension must be at least 1");
    }
    if n > N_MAX {
        return Err(Error::Capability { n, max: N_MAX });
    }
    Ok(())
}

/// The step function `a ↦ m(n, a)` for `n <= N_MAX`, with levels decreasing
/// and counts increasing.
pub fn s_tail_steps(n: usize) -> Result<&'static [CoverStep]> {
    check_exact_n("s_tail_steps", n)?;
    Ok(STEPS[n].get_or_init(|| build_steps(n)))
}

/// Exact worst-case vertex count `m(n, a)` with an optimal direction.
///
/// `a = 0` gives the right limit `2^{n-1}`; above `√n` nothing fits.
pub fn s_tail_exact(n: usize, a: f64) -> Result<VertexCoverResult> {
    check_exact_n("s_tail_exact", n)?;
    if !(a >= 0.0) || !a.is_finite() {
        return domain(
            "s_tail_exact",
            format!("a = {a} must be nonnegative and finite"),
        );
    }
    let steps = s_tail_steps(n)?;
    let hit = steps.iter().rev().find(|s| s.level >= a - COVER_TOL);
    let (m, witness) = match hit {
        Some(s) => (s.m, s.witness.clone()),
        None => (0, vec![1.0 / (n as f64).sqrt(); n]),
    };
    Ok(VertexCoverResult {
        n,
        a,
        m,
        witness,
        exact: true,
    })
}

/// `⌈a²⌉`, snapping `a²` to an integer when it is within rounding of one so
/// that `a = √3` gives 3.
fn ceil_square(a: f64) -> f64 {
    let s = a * a;
    let r = s.round();
    if (s - r).abs() <= 1e-9 * r.max(1.0) {
        r
    } else {
        s.ceil()
    }
}

/// `2^{-⌈a²⌉}`, a lower bound on the worst-case tail valid for `0 < a <= √n`.
pub fn s_tail_lower_bound(a: f64) -> Result<Probability> {
    if !(a > 0.0) || !a.is_finite() {
        return domain(
            "s_tail_lower_bound",
            format!("a = {a} must be positive and finite"),
        );
    }
    Ok(Probability::clamped((-ceil_square(a)).exp2()))
}

/// `1 - 2^{-⌈a²⌉}`: a lower bound on `Φ^S(a)` that is also conjectured to be
/// a close approximation (see [`PHI_S_CONJECTURED`]).
pub fn phi_s_approx(a: f64) -> Result<Probability> {
    Ok(s_tail_lower_bound(a)?.complement())
}

/// Bound and, for `n <= N_MAX`, the exact worst-case tail at `(n, a)`.
pub fn s_bound(n: usize, a: f64) -> Result<SBound> {
    if n == 0 {
        return domain("s_bound", "dimension must be at least 1");
    }
    let lower = if a * a <= n as f64 + 1e-9 {
        s_tail_lower_bound(a)?
    } else {
        Probability::ZERO
    };
    let exact_tail = if n <= N_MAX {
        Some(s_tail_exact(n, a)?.tail())
    } else {
        None
    };
    Ok(SBound {
        a,
        lower,
        exact_tail,
    })
}

/// Infimum of the t thresholds `x` whose worst-case tail is at most `alpha`.
///
/// Exact from the step function for `n <= N_MAX`; for larger `n` the value
/// comes from the `2^{-⌈a²⌉}` bound and is marked inexact.
pub fn s_critical_value(n: usize, alpha: f64) -> Result<SCritical> {
    if n < 2 {
        return domain("s_critical_value", format!("sample size {n} < 2"));
    }
    if !(alpha > 0.0 && alpha < 0.5) {
        return domain(
            "s_critical_value",
            format!("alpha = {alpha} is not in (0, 0.5)"),
        );
    }
    let min_level = (-(n as f64)).exp2();
    if alpha < min_level {
        return Err(Error::Infeasible {
            n,
            alpha,
            min_level,
        });
    }
    let (a, exact) = if n <= N_MAX {
        let budget = alpha * (1u64 << n) as f64;
        let step = s_tail_steps(n)?
            .iter()
            .find(|s| s.m as f64 > budget)
            .expect("m = 2^{n-1} exceeds any feasible budget");
        (step.level, true)
    } else {
        let l = -alpha.log2();
        let r = l.round();
        let j = if (l - r).abs() <= 1e-9 { r } else { l.ceil() };
        ((j - 1.0).sqrt(), false)
    };
    Ok(SCritical {
        n,
        alpha,
        x: x_from_a(a, n)?,
        a,
        exact,
    })
}
