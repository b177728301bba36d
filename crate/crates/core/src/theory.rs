//! Closed-form predictions for the vacant set of a random walk.
//!
//! Regular graphs are parameterised by `n` and the degree `r >= 3`, with
//! `rho = (r - 1) / (r - 2)`. Times are absolute walk steps unless a name
//! says otherwise; [`t_star`] returns the per-vertex coefficient, so the
//! critical step count is `t_star(r) * n`.
//!
//! The branching fixed point is written in terms of `u`, the probability
//! that the branch hanging off a vacant half-edge is finite:
//!
//! ```text
//! u     = (1 - p + p u)^(r - 1)
//! theta = 1 - (1 - p + p u)^r
//! ```
//!
//! For `r = 3` this gives `u = ((1 - p) / p)^2` and
//! `theta = 1 - ((1 - p) / p)^3` above criticality. The Molloy-Reed
//! parameter `alpha` is `Lambda (1 - u^2) / 2` with `Lambda = r p`.

use alloc::vec::Vec;
use libm::{exp, log, pow};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TheoryError {
    #[error("degree r = {0} must be at least 3")]
    DegreeTooSmall(u32),
    #[error("c = np / log n = {0} must exceed 1")]
    BelowRegime(f64),
    #[error("b_{k} for r = {r} overflows 128-bit integers")]
    Overflow { r: u32, k: u32 },
    #[error("k_max = {0} exceeds the enumeration limit of {1}")]
    EnumerationTooLarge(u32, u32),
}

/// Bisection tolerance of the fixed-point solvers.
pub const FIXED_POINT_TOL: f64 = 1e-12;
/// Upper end of the root bracket is `1 - ROOT_GAP`; `u = 1` always solves.
pub const ROOT_GAP: f64 = 1e-9;
/// Largest `k_max` accepted by [`brute_force_subtrees`].
pub const ENUMERATION_LIMIT: u32 = 12;

fn check_r(r: u32) -> Result<(), TheoryError> {
    if r < 3 {
        Err(TheoryError::DegreeTooSmall(r))
    } else {
        Ok(())
    }
}

/// `(r - 1) / (r - 2)`, the expected number of visits to the root by a walk
/// on the infinite r-regular tree.
pub fn rho(r: u32) -> f64 {
    (r as f64 - 1.0) / (r as f64 - 2.0)
}

/// Critical time divided by `n`: `r (r - 1) log(r - 1) / (r - 2)^2`.
pub fn t_star(r: u32) -> Result<f64, TheoryError> {
    check_r(r)?;
    let r = r as f64;
    Ok(r * (r - 1.0) * log(r - 1.0) / ((r - 2.0) * (r - 2.0)))
}

/// `N_t = n exp(-t / (rho n))`.
pub fn vacant_size(n: usize, r: u32, t: f64) -> f64 {
    let n = n as f64;
    n * exp(-t / (rho(r) * n))
}

/// `p_t = exp(-(r - 2) t / (rho r n))`.
pub fn red_degree_prob(n: usize, r: u32, t: f64) -> f64 {
    exp(-(r as f64 - 2.0) * t / (rho(r) * r as f64 * n as f64))
}

/// Smallest root in `[0, 1]` of `u = (1 - p + p u)^(r - 1)`.
pub fn solve_branching_fixed_point(p: f64, r: u32) -> f64 {
    let g = |u: f64| pow(1.0 - p + p * u, (r - 1) as f64) - u;
    let mut lo = 0.0;
    let mut hi = 1.0 - ROOT_GAP;
    let g_lo = g(lo);
    if g_lo <= 0.0 {
        return 0.0;
    }
    // At or below criticality 1 is the smallest root; near it the root is
    // double and g is below rounding noise.
    if (r - 1) as f64 * p <= 1.0 || g(hi) > 0.0 {
        return 1.0;
    }
    // g is convex on [0, 1] and positive at 0, so the first sign change is
    // the smallest root.
    while hi - lo > FIXED_POINT_TOL {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Fraction of the vacant set in the giant component, `1 - (1 - p + p u)^r`.
pub fn giant_fraction(p: f64, r: u32) -> f64 {
    let u = solve_branching_fixed_point(p, r);
    if u >= 1.0 {
        return 0.0;
    }
    1.0 - pow(1.0 - p + p * u, r as f64)
}

/// Closed form `r p ((r - 1) p - 1)` of the Molloy-Reed sum for binomial degrees.
pub fn molloy_reed_l(p: f64, r: u32) -> f64 {
    let r = r as f64;
    r * p * ((r - 1.0) * p - 1.0)
}

/// `sum_s s (s - 2) lambda_s` for an arbitrary degree distribution, where
/// `lambda[s]` is the (possibly unnormalised) mass at degree `s`.
pub fn molloy_reed_sum(lambda: &[f64]) -> f64 {
    lambda.iter().enumerate().map(|(s, &l)| (s as f64) * (s as f64 - 2.0) * l).sum()
}

/// `ln C(a, b)` as a sum of logs of ratios; exact enough for identities at 1e-12.
pub fn ln_choose(a: u64, b: u64) -> f64 {
    if b > a {
        return f64::NEG_INFINITY;
    }
    let b = b.min(a - b);
    (1..=b).map(|i| log((a - b + i) as f64 / i as f64)).sum()
}

/// `x ln y` with the convention `0 ln 0 = 0`.
fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * log(y)
    }
}

/// Binomial degree profile `C(r, s) p^s (1 - p)^(r - s)` for `s = 0..=r`.
pub fn degree_profile(p: f64, r: u32) -> Vec<f64> {
    (0..=r).map(|s| exp(ln_choose(r as u64, s as u64) + xlogy(s as f64, p) + xlogy((r - s) as f64, 1.0 - p))).collect()
}

/// Expected number of tree components with `k` vertices at time `t`:
///
/// `n e^{-t/(rho n)} r / (k ((r-2)k + 2)) C((r-1)k, k-1) p_t^{k-1} (1-p_t)^{k(r-2)+2}`,
/// evaluated in log space.
pub fn tree_count(n: usize, r: u32, k: u32, t: f64) -> f64 {
    assert!(k >= 1, "tree size must be at least 1");
    let p = red_degree_prob(n, r, t);
    let (rf, kf) = (r as f64, k as f64);
    let boundary = kf * (rf - 2.0) + 2.0;
    let ln = log(n as f64) - t / (rho(r) * n as f64) + log(rf) - log(kf) - log((rf - 2.0) * kf + 2.0)
        + ln_choose(((r - 1) * k) as u64, (k - 1) as u64)
        + xlogy(kf - 1.0, p)
        + xlogy(boundary, 1.0 - p);
    exp(ln)
}

/// Number of subtrees with `k` vertices containing a fixed vertex of the
/// infinite r-regular tree: `r / ((r-2)k + 2) * C((r-1)k, k-1)`, exactly.
pub fn subtree_count(r: u32, k: u32) -> Result<u128, TheoryError> {
    check_r(r)?;
    assert!(k >= 1, "tree size must be at least 1");
    let overflow = TheoryError::Overflow { r, k };
    let a = (r as u128 - 1) * k as u128;
    let b = k as u128 - 1;
    let mut c: u128 = 1;
    for i in 1..=b {
        // c * (a - b + i) / i is C(a - b + i, i), always integral.
        c = c.checked_mul(a - b + i).ok_or(overflow.clone())? / i;
    }
    let num = c.checked_mul(r as u128).ok_or(overflow)?;
    let den = (r as u128 - 2) * k as u128 + 2;
    debug_assert_eq!(num % den, 0);
    Ok(num / den)
}

/// Counts rooted subtrees of the infinite r-regular tree by explicit
/// enumeration. Entry `k - 1` is the number with `k` vertices.
///
/// Each connected vertex set containing the root is built once: frontier
/// vertices are taken in order and every vertex skipped at a branch is
/// never reconsidered along that branch.
pub fn brute_force_subtrees(r: u32, k_max: u32) -> Result<Vec<u64>, TheoryError> {
    check_r(r)?;
    if k_max > ENUMERATION_LIMIT {
        return Err(TheoryError::EnumerationTooLarge(k_max, ENUMERATION_LIMIT));
    }
    let mut counts = alloc::vec![0u64; k_max as usize];
    if k_max == 0 {
        return Ok(counts);
    }
    // Vertex 0 is the root with r children; every other vertex has r - 1
    // children. Children are materialised with fresh ids when their parent
    // joins the subtree.
    struct Enumerator {
        r: u32,
        k_max: usize,
        next_id: u32,
        counts: Vec<u64>,
    }
    impl Enumerator {
        fn children(&mut self, is_root: bool) -> Vec<u32> {
            let c = if is_root { self.r } else { self.r - 1 };
            let first = self.next_id;
            self.next_id = self.next_id.wrapping_add(c);
            (0..c).map(|i| first.wrapping_add(i)).collect()
        }
        fn extend(&mut self, size: usize, frontier: &[u32]) {
            self.counts[size - 1] += 1;
            if size == self.k_max {
                return;
            }
            for i in 0..frontier.len() {
                let mut next = frontier[i + 1..].to_vec();
                next.extend(self.children(false));
                self.extend(size + 1, &next);
            }
        }
    }
    let mut e = Enumerator { r, k_max: k_max as usize, next_id: 1, counts: Vec::new() };
    e.counts = core::mem::take(&mut counts);
    let root_children = e.children(true);
    e.extend(1, &root_children);
    Ok(e.counts)
}

/// `tau_k = n^{1 - 1/k}` (with `tau_0 = 0`) and
/// `t_k = rho r n log n / (k (r - 2) + r)` for `k = 0..=k_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct CriticalTimes {
    pub tau: Vec<f64>,
    pub t: Vec<f64>,
}

impl CriticalTimes {
    /// Cover-time scale `t_0 = rho n log n`.
    pub fn t0(&self) -> f64 {
        self.t[0]
    }
}

pub fn critical_times(n: usize, r: u32, k_max: u32) -> CriticalTimes {
    let nf = n as f64;
    let rf = r as f64;
    let tau = (0..=k_max).map(|k| if k == 0 { 0.0 } else { pow(nf, 1.0 - 1.0 / k as f64) }).collect();
    let t = (0..=k_max).map(|k| rho(r) * rf * nf * log(nf) / (k as f64 * (rf - 2.0) + rf)).collect();
    CriticalTimes { tau, t }
}

/// Every regular-graph prediction for one `(n, r)`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TheoryPrediction {
    pub n: usize,
    pub r: u32,
    pub rho: f64,
    /// Critical time in steps, `t_star(r) * n`.
    pub t_star: f64,
    /// `rho n log n`.
    pub t0: f64,
}

impl TheoryPrediction {
    pub fn new(n: usize, r: u32) -> Result<Self, TheoryError> {
        let coeff = t_star(r)?;
        let nf = n as f64;
        Ok(TheoryPrediction { n, r, rho: rho(r), t_star: coeff * nf, t0: rho(r) * nf * log(nf) })
    }

    pub fn vacant_size(&self, t: f64) -> f64 {
        vacant_size(self.n, self.r, t)
    }

    pub fn red_degree_prob(&self, t: f64) -> f64 {
        red_degree_prob(self.n, self.r, t)
    }

    /// Branching fixed point `u` at time `t`.
    pub fn fixed_point(&self, t: f64) -> f64 {
        solve_branching_fixed_point(self.red_degree_prob(t), self.r)
    }

    pub fn theta(&self, t: f64) -> f64 {
        giant_fraction(self.red_degree_prob(t), self.r)
    }

    /// Predicted giant size `theta N_t`.
    pub fn giant_size(&self, t: f64) -> f64 {
        self.theta(t) * self.vacant_size(t)
    }

    pub fn molloy_reed_l(&self, t: f64) -> f64 {
        molloy_reed_l(self.red_degree_prob(t), self.r)
    }

    /// `Lambda = r p_t`.
    pub fn lambda(&self, t: f64) -> f64 {
        self.r as f64 * self.red_degree_prob(t)
    }

    /// Predicted `D_s(t)` for `s = 0..=r`.
    pub fn degree_counts(&self, t: f64) -> Vec<f64> {
        let nt = self.vacant_size(t);
        degree_profile(self.red_degree_prob(t), self.r).into_iter().map(|f| f * nt).collect()
    }

    pub fn tree_count(&self, k: u32, t: f64) -> f64 {
        tree_count(self.n, self.r, k, t)
    }

    pub fn critical_times(&self, k_max: u32) -> CriticalTimes {
        critical_times(self.n, self.r, k_max)
    }
}

/// Largest-component fraction of `G(N, lambda / N)` as `N -> infinity`: the
/// root of `beta = 1 - exp(-lambda beta)` in `(0, 1]`, or 0 for `lambda <= 1`.
pub fn poisson_giant_fraction(lambda: f64) -> f64 {
    if lambda <= 1.0 {
        return 0.0;
    }
    let h = |b: f64| 1.0 - exp(-lambda * b) - b;
    // h > 0 just above 0 and h(1) < 0.
    let (mut lo, mut hi) = (ROOT_GAP, 1.0);
    if h(lo) <= 0.0 {
        return 0.0;
    }
    while hi - lo > FIXED_POINT_TOL {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `G(n,p)` schedule for one `theta`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GnpPrediction {
    pub n: usize,
    pub p: f64,
    /// `np / log n`.
    pub c: f64,
    pub theta: f64,
    /// `n (log log n + (1 + theta) log c)`.
    pub t_theta: f64,
    /// `n / (c^{1 + theta} log n)`.
    pub vacant: f64,
}

impl GnpPrediction {
    /// Mean degree of the vacant graph, `N(t_theta) p = c^{-theta}`.
    pub fn vacant_mean_degree(&self) -> f64 {
        self.vacant * self.p
    }

    /// Giant fraction of `G(N, p)` at the predicted `N`.
    pub fn giant_fraction(&self) -> f64 {
        poisson_giant_fraction(self.vacant_mean_degree())
    }
}

pub fn gnp_schedule(n: usize, p: f64, theta: f64) -> Result<GnpPrediction, TheoryError> {
    let nf = n as f64;
    let ln_n = log(nf);
    let c = nf * p / ln_n;
    if c.is_nan() || c <= 1.0 {
        return Err(TheoryError::BelowRegime(c));
    }
    let t_theta = nf * (log(ln_n) + (1.0 + theta) * log(c));
    let vacant = nf / (pow(c, 1.0 + theta) * ln_n);
    Ok(GnpPrediction { n, p, c, theta, t_theta, vacant })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn t_star_values() {
        // 6 ln 2 and 3 ln 3.
        assert!((t_star(3).unwrap() - 4.158_883_083_359_672).abs() < 1e-12);
        assert!((t_star(4).unwrap() - 3.295_836_866_004_329).abs() < 1e-12);
        assert_eq!(t_star(2), Err(TheoryError::DegreeTooSmall(2)));
    }

    #[test]
    fn p_at_t_star_is_critical() {
        for r in 3..=10 {
            let n = 1000;
            let t = t_star(r).unwrap() * n as f64;
            let p = red_degree_prob(n, r, t);
            assert!((p - 1.0 / (r as f64 - 1.0)).abs() < 1e-12, "r = {r}");
        }
    }

    #[test]
    fn vacant_size_values() {
        let n = 10_000;
        assert_eq!(vacant_size(n, 3, 0.0), n as f64);
        let half = vacant_size(n, 3, 2.0 * n as f64 * core::f64::consts::LN_2);
        assert!(close(half, n as f64 / 2.0, 1e-12));
        let t0 = rho(3) * n as f64 * log(n as f64);
        assert!(close(vacant_size(n, 3, t0), 1.0, 1e-12));
    }

    #[test]
    fn red_degree_prob_values() {
        assert_eq!(red_degree_prob(500, 3, 0.0), 1.0);
        let n = 777;
        let p = red_degree_prob(n, 3, t_star(3).unwrap() * n as f64);
        assert!((p - 0.5).abs() < 1e-12);
    }

    #[test]
    fn branching_root_cases() {
        for r in 3..=6 {
            let crit = 1.0 / (r as f64 - 1.0);
            for i in 0..=20 {
                let p = crit * i as f64 / 20.0;
                assert_eq!(solve_branching_fixed_point(p, r), 1.0);
                assert_eq!(giant_fraction(p, r), 0.0);
            }
            assert_eq!(solve_branching_fixed_point(1.0, r), 0.0);
            assert_eq!(giant_fraction(1.0, r), 1.0);
        }
        let u = solve_branching_fixed_point(0.6, 3);
        assert!((u - 4.0 / 9.0).abs() < 1e-11);
        assert!((giant_fraction(0.6, 3) - 19.0 / 27.0).abs() < 1e-11);
    }

    #[test]
    fn dense_grid_has_no_root_below_one_when_subcritical() {
        // Independent scan of g(u) = (1 - p + pu)^(r-1) - u on a fine grid.
        for r in 3..=5 {
            let crit = 1.0 / (r as f64 - 1.0);
            for p in [0.2 * crit, 0.7 * crit, 0.999 * crit] {
                let positive = (0..100_000).all(|i| {
                    let u = i as f64 / 100_000.0;
                    pow(1.0 - p + p * u, (r - 1) as f64) - u > 0.0
                });
                assert!(positive, "r = {r}, p = {p}");
            }
        }
    }

    #[test]
    fn molloy_reed_values() {
        for r in 3..=8 {
            assert!(molloy_reed_l(1.0 / (r as f64 - 1.0), r).abs() < 1e-12);
            assert_eq!(molloy_reed_l(1.0, r), (r * (r - 2)) as f64);
        }
    }

    #[test]
    fn tree_count_k1_is_isolated_vertices() {
        let n = 50_000;
        for t in [1000.0, 60_000.0, 200_000.0] {
            let p = red_degree_prob(n, 3, t);
            let want = vacant_size(n, 3, t) * pow(1.0 - p, 3.0);
            assert!(close(tree_count(n, 3, 1, t), want, 1e-12));
            let d0 = TheoryPrediction::new(n, 3).unwrap().degree_counts(t)[0];
            assert!(close(d0, want, 1e-12));
        }
    }

    #[test]
    fn tree_count_k2_at_half() {
        let n = 10_000;
        let t = t_star(3).unwrap() * n as f64;
        let nt = vacant_size(n, 3, t);
        assert!(close(tree_count(n, 3, 2, t), nt * 3.0 / 64.0, 1e-12));
    }

    #[test]
    fn subtree_counts() {
        for r in 3..=9 {
            assert_eq!(subtree_count(r, 1).unwrap(), 1);
            assert_eq!(subtree_count(r, 2).unwrap(), r as u128);
        }
        assert_eq!(subtree_count(3, 2).unwrap(), 3);
        assert_eq!(subtree_count(3, 3).unwrap(), 9);
        assert_eq!(subtree_count(3, 4).unwrap(), 28);
        assert!(matches!(subtree_count(3, 200), Err(TheoryError::Overflow { .. })));
    }

    #[test]
    fn brute_force_matches_small_values() {
        assert_eq!(brute_force_subtrees(3, 3).unwrap(), vec![1, 3, 9]);
        assert_eq!(brute_force_subtrees(4, 2).unwrap(), vec![1, 4]);
        assert_eq!(brute_force_subtrees(3, 5).unwrap(), vec![1, 3, 9, 28, 90]);
        assert_eq!(brute_force_subtrees(3, 13), Err(TheoryError::EnumerationTooLarge(13, ENUMERATION_LIMIT)));
    }

    #[test]
    fn formula_agrees_with_enumeration() {
        for (r, k_max) in [(3, 10), (4, 7), (5, 6)] {
            let counts = brute_force_subtrees(r, k_max).unwrap();
            for (i, &c) in counts.iter().enumerate() {
                assert_eq!(subtree_count(r, i as u32 + 1).unwrap(), c as u128);
            }
        }
    }

    #[test]
    fn critical_time_values() {
        let n = 10_000;
        let ct = critical_times(n, 3, 3);
        let nf = n as f64;
        assert!(close(ct.t0(), 2.0 * nf * log(nf), 1e-12));
        assert_eq!(ct.tau[0], 0.0);
        assert_eq!(ct.tau[1], 1.0);
        assert!(close(ct.t[1], 1.5 * nf * log(nf), 1e-12));
    }

    #[test]
    fn gnp_schedule_identities() {
        let n = 100_000;
        let p = 4.0 * log(n as f64) / n as f64;
        let zero = gnp_schedule(n, p, 0.0).unwrap();
        assert!(close(zero.vacant_mean_degree(), 1.0, 1e-12));
        let below = gnp_schedule(n, p, -0.3).unwrap();
        assert!(close(below.vacant_mean_degree(), pow(4.0, 0.3), 1e-12));
        assert!(below.vacant_mean_degree() > 1.0);
        assert!(matches!(gnp_schedule(n, 0.5 / n as f64, 0.0), Err(TheoryError::BelowRegime(_))));
    }

    #[test]
    fn poisson_giant_at_two() {
        let b = poisson_giant_fraction(2.0);
        assert!((b - 0.796_812_130_020_020).abs() < 1e-9);
        assert_eq!(poisson_giant_fraction(0.9), 0.0);
    }
}
