//! Intersection detection between pairs of radial solutions.
//!
//! The difference of two dense trajectories is scanned on the union of both
//! node grids plus midpoints; sign changes are polished by bracketed root
//! refinement. Nearly touching configurations (|difference| under 1e-10
//! without a sign change) are flagged as tangencies rather than counted.
//!
//! Absence of crossings inside the scanned range is reported as "none found
//! up to r_max", never as a proof. The exception is the ordered regime (N ≥ 10),
//! where the positive minimum gap is itself the assertion.

use crate::solver::RadialSolution;
use thiserror::Error;

/// |difference| dips below this without a sign change are flagged.
pub const TANGENCY_EPS: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum IntersectError {
    #[error("solutions come from different setups ({0} vs {1})")]
    ProfileMismatch(String, String),
    #[error("identical initial heights alpha = beta = {0}")]
    IdenticalAlpha(f64),
    #[error("requested range {requested} exceeds an integrated range ({available})")]
    RangeMismatch { requested: f64, available: f64 },
}

/// Crossbetween u_α and u_β (α > β) over (0, r_max].
#[derive(Debug, Clone)]
pub struct IntersectionReport {
    pub alpha: f64,
    pub beta: f64,
    pub r_max: f64,
    /// Strictly increasing crossing radii, refined to ~1e-10.
    pub crossings: Vec<f64>,
    /// Near-touches without a sign change.
    pub tangencies: Vec<f64>,
    /// Minimum of u_α − u_β over the scan grid.
    pub min_difference: f64,
}

impl IntersectionReport {
    pub fn count(&self) -> usize {
        self.crossings.len()
    }
}

/// Scan two solutions of the same problem for intersections up to `r_max`.
pub fn find_intersections(
    sol_a: &RadialSolution,
    sol_b: &RadialSolution,
    r_max: f64,
) -> Result<IntersectionReport, IntersectError> {
    if sol_a.profile_id != sol_b.profile_id || sol_a.dimension != sol_b.dimension {
        return Err(IntersectError::ProfileMismatch(
            format!("{}/N={}", sol_a.profile_id, sol_a.dimension),
            format!("{}/N={}", sol_b.profile_id, sol_b.dimension),
        ));
    }
    if sol_a.alpha == sol_b.alpha {
        return Err(IntersectError::IdenticalAlpha(sol_a.alpha));
    }
    for s in [sol_a, sol_b] {
        if s.r_max < r_max * (1.0 - 1e-12) {
            return Err(IntersectError::RangeMismatch {
                requested: r_max,
                available: s.r_max,
            });
        }
    }
    let (hi, lo) = if sol_a.alpha > sol_b.alpha {
        (sol_a, sol_b)
    } else {
        (sol_b, sol_a)
    };
    let diff = |r: f64| hi.u(r) - lo.u(r);

    // merged grid: union of node radii plus midpoints
    let mut grid: Vec<f64> = hi
        .nodes
        .iter()
        .chain(lo.nodes.iter())
        .map(|n| n.r)
        .filter(|&r| r <= r_max)
        .collect();
    grid.push(r_max);
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-14 * a.abs().max(1e-300));
    let mut full = Vec::with_capacity(grid.len() * 2);
    for w in grid.windows(2) {
        full.push(w[0]);
        full.push(0.5 * (w[0] + w[1]));
    }
    full.push(*grid.last().unwrap());

    let samples: Vec<(f64, f64)> = full.iter().map(|&r| (r, diff(r))).collect();
    let min_difference = samples.iter().fold(f64::INFINITY, |m, &(_, d)| m.min(d));

    let mut crossings = Vec::new();
    for w in samples.windows(2) {
        let ((rp, dp), (r, d)) = (w[0], w[1]);
        if dp != 0.0 && d != 0.0 && dp.signum() != d.signum() {
            crossings.push(super::stability::refine_zero(diff, rp, r, 1e-10));
        }
    }
    // crossings found between adjacent scan points of the same bracket can
    // collapse onto one radius after refinement
    crossings.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * a.abs().max(1.0));

    Ok(IntersectionReport {
        alpha: hi.alpha,
        beta: lo.alpha,
        r_max,
        crossings,
        tangencies: scan_tangencies(&samples, TANGENCY_EPS),
        min_difference,
    })
}

/// Radii where |difference| has a local minimum below `eps` without a sign
/// change across it; near-touches are reported but never counted as
/// crossings.
pub(crate) fn scan_tangencies(samples: &[(f64, f64)], eps: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 1..samples.len().saturating_sub(1) {
        let (_, before) = samples[i - 1];
        let (r, at) = samples[i];
        let (_, after) = samples[i + 1];
        if at.abs() < eps
            && at.abs() <= before.abs()
            && at.abs() <= after.abs()
            && before.signum() == after.signum()
        {
            out.push(r);
        }
    }
    out
}

/// Verify that the difference changes sign across each reported crossing.
pub fn verify_sign_flips(
    report: &IntersectionReport,
    sol_a: &RadialSolution,
    sol_b: &RadialSolution,
) -> bool {
    let (hi, lo) = if sol_a.alpha > sol_b.alpha {
        (sol_a, sol_b)
    } else {
        (sol_b, sol_a)
    };
    report.crossings.iter().all(|&z| {
        let delta = (1e-6 * z.max(1e-3)).min(0.45 * z);
        let before = hi.u(z - delta) - lo.u(z - delta);
        let after = hi.u(z + delta) - lo.u(z + delta);
        before.signum() != after.signum() || before == 0.0 || after == 0.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::WarpProfile;
    use crate::solver::integrate_ivp;

    #[test]
    fn euclidean_low_dimension_pair_crosses_repeatedly() {
        let e = WarpProfile::euclidean();
        let a = integrate_ivp(&e, 3, 1.0, 1.0e6, 1e-10).unwrap();
        let b = integrate_ivp(&e, 3, 0.0, 1.0e6, 1e-10).unwrap();
        let rep = find_intersections(&a, &b, 1.0e6).unwrap();
        // reference crossings: 3.2045, 29.533, 337.56, 3566.8, 38546, 413666
        assert!(rep.count() >= 3, "count {}", rep.count());
        assert!((rep.crossings[0] - 3.2045).abs() < 1e-2);
        assert!((rep.crossings[1] - 29.5334).abs() < 0.1);
        assert!((rep.crossings[2] - 337.5589).abs() < 1.0);
        assert!(verify_sign_flips(&rep, &a, &b));
        let sorted = rep.crossings.windows(2).all(|w| w[0] < w[1]);
        assert!(sorted);
    }

    #[test]
    fn euclidean_two_dimensional_pair_crosses_once() {
        let e = WarpProfile::euclidean();
        let a = integrate_ivp(&e, 2, 1.0, 1.0e5, 1e-10).unwrap();
        let b = integrate_ivp(&e, 2, 0.0, 1.0e5, 1e-10).unwrap();
        let rep = find_intersections(&a, &b, 1.0e5).unwrap();
        assert_eq!(rep.count(), 1, "crossings {:?}", rep.crossings);
        assert!((rep.crossings[0] - 2.203).abs() < 1e-2);
    }

    #[test]
    fn euclidean_high_dimension_pair_is_ordered() {
        // exponential contraction pushes the true gap below f64 noise past
        // r ~ 400, so the ordered-gap assertion is made on [0, 50]
        let e = WarpProfile::euclidean();
        let a = integrate_ivp(&e, 10, 1.0, 50.0, 1e-11).unwrap();
        let b = integrate_ivp(&e, 10, 0.0, 50.0, 1e-11).unwrap();
        let rep = find_intersections(&a, &b, 50.0).unwrap();
        assert_eq!(rep.count(), 0, "crossings {:?}", rep.crossings);
        // reference minimum gap at r = 50 is 3.42e-4
        assert!(rep.min_difference > 1e-5, "min gap {}", rep.min_difference);
    }

    #[test]
    fn hyperbolic_high_dimension_ordering() {
        for n in [10usize, 11] {
            let h = WarpProfile::hyperbolic();
            let a = integrate_ivp(&h, n, 0.5, 50.0, 1e-10).unwrap();
            let b = integrate_ivp(&h, n, -0.5, 50.0, 1e-10).unwrap();
            let rep = find_intersections(&a, &b, 50.0).unwrap();
            assert_eq!(rep.count(), 0);
            assert!(rep.min_difference > 0.0);
        }
        let s = WarpProfile::spliced(2.0, 1.0).unwrap();
        let a = integrate_ivp(&s, 10, 0.5, 20.0, 1e-10).unwrap();
        let b = integrate_ivp(&s, 10, -0.5, 20.0, 1e-10).unwrap();
        let rep = find_intersections(&a, &b, 20.0).unwrap();
        assert_eq!(rep.count(), 0);
        assert!(rep.min_difference > 0.0);
    }

    #[test]
    fn first_intersection_ordering_in_alpha() {
        // for α1 > α2 >= α3 > α4, the first (α1, α2) crossing cannot come
        // after the first (α3, α4) crossing
        let e = WarpProfile::euclidean();
        let s28 = integrate_ivp(&e, 3, 2.8, 1.0e4, 1e-10).unwrap();
        let s18 = integrate_ivp(&e, 3, 1.8, 1.0e4, 1e-10).unwrap();
        let s1 = integrate_ivp(&e, 3, 1.0, 1.0e4, 1e-10).unwrap();
        let s0 = integrate_ivp(&e, 3, 0.0, 1.0e4, 1e-10).unwrap();
        let hi = find_intersections(&s28, &s18, 1.0e4).unwrap();
        let lo = find_intersections(&s1, &s0, 1.0e4).unwrap();
        // frozen references: 1.3028 and 3.2045
        assert!((hi.crossings[0] - 1.302844).abs() < 1e-3);
        assert!((lo.crossings[0] - 3.204480).abs() < 1e-3);
        assert!(hi.crossings[0] <= lo.crossings[0] + 1e-8);
    }

    #[test]
    fn stable_hyperbolic_pairs_do_not_cross() {
        // both heights below the threshold (eta ~ 1.41)
        let h = WarpProfile::hyperbolic();
        let a = integrate_ivp(&h, 3, 1.0, 50.0, 1e-10).unwrap();
        let b = integrate_ivp(&h, 3, 0.0, 50.0, 1e-10).unwrap();
        let rep = find_intersections(&a, &b, 50.0).unwrap();
        assert_eq!(rep.count(), 0);
    }

    #[test]
    fn unstable_hyperbolic_solution_is_crossed_from_above() {
        let h = WarpProfile::hyperbolic();
        let a = integrate_ivp(&h, 3, 2.2, 50.0, 1e-10).unwrap();
        let b = integrate_ivp(&h, 3, 1.7, 50.0, 1e-10).unwrap();
        let rep = find_intersections(&a, &b, 50.0).unwrap();
        assert!(rep.count() >= 1);
    }

    #[test]
    fn tangency_scan_on_synthetic_samples() {
        // dip to 1e-12 at r=2 without sign change: flagged
        let touch = vec![(1.0, 1e-3), (2.0, 1e-12), (3.0, 1e-3)];
        assert_eq!(scan_tangencies(&touch, 1e-10), vec![2.0]);

        // genuine crossing: sign flips, not a tangency
        let cross = vec![(1.0, 1e-3), (2.0, 1e-12), (3.0, -1e-3)];
        assert!(scan_tangencies(&cross, 1e-10).is_empty());

        // shallow local minimum above the threshold: not flagged
        let shallow = vec![(1.0, 1e-3), (2.0, 1e-6), (3.0, 1e-3)];
        assert!(scan_tangencies(&shallow, 1e-10).is_empty());

        // negative-side touch counts too
        let neg = vec![(1.0, -1e-3), (2.0, -1e-12), (3.0, -1e-3)];
        assert_eq!(scan_tangencies(&neg, 1e-10), vec![2.0]);

        // two separated touches both reported, monotone tails ignored
        let two = vec![
            (0.0, 1e-2),
            (1.0, 1e-12),
            (2.0, 1e-2),
            (3.0, 5e-11),
            (4.0, 1e-2),
        ];
        assert_eq!(scan_tangencies(&two, 1e-10), vec![1.0, 3.0]);
    }

    #[test]
    fn pair_validation_errors() {
        let e = WarpProfile::euclidean();
        let h = WarpProfile::hyperbolic();
        let a = integrate_ivp(&e, 3, 1.0, 10.0, 1e-10).unwrap();
        let b = integrate_ivp(&h, 3, 0.0, 10.0, 1e-10).unwrap();
        assert!(matches!(
            find_intersections(&a, &b, 10.0),
            Err(IntersectError::ProfileMismatch(..))
        ));
        let c = integrate_ivp(&e, 3, 1.0, 10.0, 1e-10).unwrap();
        assert!(matches!(
            find_intersections(&a, &c, 10.0),
            Err(IntersectError::IdenticalAlpha(..))
        ));
        let d = integrate_ivp(&e, 3, 0.0, 5.0, 1e-10).unwrap();
        assert!(matches!(
            find_intersections(&a, &d, 10.0),
            Err(IntersectError::RangeMismatch { .. })
        ));
    }
}
