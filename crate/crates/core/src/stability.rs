//! Stability of radial solutions via oscillation of the variational equation.
//!
//! A solution u_α is stable iff the radial quadratic form
//! ∫(χ′)²ψ^{N−1} − ∫eᵘχ²ψ^{N−1} is nonnegative. Numerically that is decided
//! through the variational solution v (v(0)=1, v′(0)=0): a sign change of v
//! at r* produces an explicit test function with vanishing form value (the
//! instability certificate), while positivity of v up to r_max is the
//! finite-range stability proxy recorded as `StableUpTo(r_max)`.
//!
//! An independent route goes through Dirichlet eigenvalues on balls computed
//! by shooting, both unweighted (λ₁) and weighted by eᵘ (Λ); the Sturm
//! equivalence `first zero < R  ⟺  Λ(B_R) < 1` cross-validates the two.
//! The stability threshold η is located by bisection in α, justified by the
//! interval structure of the stable set.

use crate::manifold::WarpProfile;
use crate::ode::{integrate_dopri5, RkOptions, StepDecision};
use crate::solver::{
    integrate_ivp, integrate_linearized, LinearizedSolution, RadialSolution, SolverError,
};
use thiserror::Error;

/// |v| dips below this without a sign change are reported as tangencies.
pub const TANGENCY_EPS: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum StabilityError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("eigenvalue bracket (1e-8, 1e8) does not straddle for R = {r}")]
    BracketFailure { r: f64 },
    #[error("bisection bracket invalid: alpha_lo = {alpha_lo} must be stable and alpha_hi = {alpha_hi} unstable")]
    BracketError { alpha_lo: f64, alpha_hi: f64 },
    #[error("stable verdict above an unstable one near alpha = {alpha}; increase r_max")]
    NonMonotoneWitness { alpha: f64 },
    #[error("test function support extends past the integrated range ({chi_end} > {r_max})")]
    SupportError { chi_end: f64, r_max: f64 },
    #[error("dimension must satisfy 2 <= N <= 9 for the threshold, got {0}")]
    DimensionRange(usize),
}

/// Stability decision with its finite-range evidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decision {
    /// v changes sign at r_star; the solution is unstable.
    UnstableAt { r_star: f64 },
    /// v > 0 on the whole integrated range.
    StableUpTo { r_max: f64 },
}

impl Decision {
    pub fn is_stable(&self) -> bool {
        matches!(self, Decision::StableUpTo { .. })
    }
}

#[derive(Debug, Clone)]
pub struct StabilityVerdict {
    pub alpha: f64,
    pub decision: Decision,
    /// Quadratic-form value of the trivially extended v on B_{r*}
    /// (unstable case only); nonpositive up to quadrature error.
    pub certificate: Option<f64>,
    /// (R, Λ(B_R, α)) when the weighted eigenvalue was evaluated.
    pub weighted_eig: Option<(f64, f64)>,
    /// Sturm agreement between the zero test and the weighted eigenvalue.
    pub method_agreement: Option<bool>,
    /// Radii where |v| < 1e-10 without a sign change (reported, not counted).
    pub tangencies: Vec<f64>,
}

/// Smallest sign-change radius of v, refined on the dense output to 1e-12.
pub fn first_zero(lin: &LinearizedSolution) -> Option<f64> {
    let nodes = &lin.nodes;
    for w in nodes.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.v > 0.0 && b.v <= 0.0 || a.v < 0.0 && b.v >= 0.0 {
            return Some(refine_zero(|r| lin.v(r), a.r, b.r, 1e-12));
        }
    }
    None
}

/// Radii where |v| dips below the tangency threshold without changing sign.
pub fn tangencies(lin: &LinearizedSolution) -> Vec<f64> {
    let samples: Vec<(f64, f64)> = lin.nodes.iter().map(|n| (n.r, n.v)).collect();
    crate::intersections::scan_tangencies(&samples, TANGENCY_EPS)
}

/// Bracketed root refinement: bisection with secant polishing, 60 iterations.
pub(crate) fn refine_zero<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    let mut fhi = f(hi);
    if flo == 0.0 {
        return lo;
    }
    if fhi == 0.0 {
        return hi;
    }
    debug_assert!(flo * fhi < 0.0, "root not bracketed");
    for _ in 0..60 {
        if (hi - lo).abs() <= tol * hi.abs().max(1.0) {
            break;
        }
        // secant proposal, bisection fallback to keep the bracket
        let mut mid = hi - fhi * (hi - lo) / (fhi - flo);
        let center = 0.5 * (lo + hi);
        if !mid.is_finite() || mid <= lo || mid >= hi {
            mid = center;
        }
        let fmid = f(mid);
        if fmid == 0.0 {
            return mid;
        }
        if flo * fmid < 0.0 {
            hi = mid;
            fhi = fmid;
        } else {
            lo = mid;
            flo = fmid;
        }
    }
    0.5 * (lo + hi)
}

/// Decide stability of u_α by integrating the base and variational problems
/// to r_max. An unstable verdict carries the quadratic-form certificate of
/// the trivially extended eigenfunction.
pub fn stability_test(
    profile: &WarpProfile,
    n: usize,
    alpha: f64,
    r_max: f64,
    tol: f64,
) -> Result<StabilityVerdict, StabilityError> {
    let base = integrate_ivp(profile, n, alpha, r_max, tol)?;
    stability_test_on(profile, &base, tol)
}

/// As `stability_test` for an already integrated base solution.
pub fn stability_test_on(
    profile: &WarpProfile,
    base: &RadialSolution,
    tol: f64,
) -> Result<StabilityVerdict, StabilityError> {
    let lin = integrate_linearized(base, tol)?;
    let tang = tangencies(&lin);
    match first_zero(&lin) {
        Some(r_star) => {
            let certificate = certificate_value(profile, base, &lin, r_star)?;
            Ok(StabilityVerdict {
                alpha: base.alpha,
                decision: Decision::UnstableAt { r_star },
                certificate: Some(certificate),
                weighted_eig: None,
                method_agreement: None,
                tangencies: tang,
            })
        }
        None => Ok(StabilityVerdict {
            alpha: base.alpha,
            decision: Decision::StableUpTo { r_max: base.r_max },
            certificate: None,
            weighted_eig: None,
            method_agreement: None,
            tangencies: tang,
        }),
    }
}

/// Normalized quadratic form of the sampled v restricted to [0, r*]. For
/// the true eigenfunction the raw form reduces to a vanishing boundary
/// term; dividing by the weighted norm ∫eᵘχ²ψ^{N−1} makes the certificate
/// scale-free (the raw value carries a ψ^{N−1}(r*) scale that dwarfs any
/// absolute tolerance once r* is large).
fn certificate_value(
    profile: &WarpProfile,
    base: &RadialSolution,
    lin: &LinearizedSolution,
    r_star: f64,
) -> Result<f64, StabilityError> {
    let n_samples = 200_000usize;
    let mut chi = Vec::with_capacity(n_samples + 1);
    for i in 0..=n_samples {
        let r = r_star * (i as f64) / (n_samples as f64);
        let v = if i == n_samples { 0.0 } else { lin.v(r) };
        chi.push((r, v));
    }
    let (q, norm) = quadratic_form_parts(profile, base, &chi)?;
    Ok(if norm > 0.0 { q / norm } else { q })
}

/// ∫(χ′)²ψ^{N−1} − ∫eᵘχ²ψ^{N−1} for a piecewise-linear radial test function
/// given as (r, value) samples ending at value 0. A negative value is an
/// instability certificate up to quadrature error.
pub fn quadratic_form(
    profile: &WarpProfile,
    base: &RadialSolution,
    chi: &[(f64, f64)],
) -> Result<f64, StabilityError> {
    quadratic_form_parts(profile, base, chi).map(|(q, _)| q)
}

/// The quadratic form together with the weighted norm ∫eᵘχ²ψ^{N−1} used to
/// normalize certificates. Two-point Gauss on each sample interval.
pub fn quadratic_form_parts(
    profile: &WarpProfile,
    base: &RadialSolution,
    chi: &[(f64, f64)],
) -> Result<(f64, f64), StabilityError> {
    if chi.len() < 2 {
        return Ok((0.0, 0.0));
    }
    let chi_end = chi.last().unwrap().0;
    if chi_end > base.r_max * (1.0 + 1e-12) {
        return Err(StabilityError::SupportError {
            chi_end,
            r_max: base.r_max,
        });
    }
    let nf = base.dimension as f64;
    const GP: f64 = 0.577_350_269_189_625_8;
    let mut total = 0.0;
    let mut norm = 0.0;
    for w in chi.windows(2) {
        let (r0, c0) = w[0];
        let (r1, c1) = w[1];
        if r1 <= r0 {
            continue;
        }
        let h = r1 - r0;
        let slope = (c1 - c0) / h;
        let mid = 0.5 * (r0 + r1);
        for &xi in &[-GP, GP] {
            let r = mid + 0.5 * h * xi;
            let c = c0 + slope * (r - r0);
            let weight = if r > 0.0 {
                ((nf - 1.0) * profile.log_psi(r)).exp()
            } else {
                0.0
            };
            let u = base.eval(r).0;
            let mass = u.exp() * c * c * weight;
            total += 0.5 * h * (slope * slope * weight - mass);
            norm += 0.5 * h * mass;
        }
    }
    Ok((total, norm))
}

/// Smallest μ whose shooting solution of φ″ + (N−1)(ψ′/ψ)φ′ + μ w(r) φ = 0,
/// φ(0)=1, φ′(0)=0, vanishes inside (0, R].
///
/// `w0`/`w2` are the series coefficients of the weight at 0 (w = w0 + w2 r²),
/// needed for the Taylor start.
fn shoot_smallest_eigenvalue(
    profile: &WarpProfile,
    n: usize,
    r_end: f64,
    tol: f64,
    weight: &dyn Fn(f64) -> f64,
    w0: f64,
    w2: f64,
) -> Result<f64, StabilityError> {
    const MU_LO: f64 = 1e-8;
    const MU_HI: f64 = 1e8;
    let nf = n as f64;
    let b1 = profile.series_beta1();
    let eps = 1e-6f64.min(r_end * 1e-4);
    let ode_tol = (tol * 1e-2).clamp(1e-13, 1e-9);
    let opts = RkOptions::with_tol(ode_tol);

    let has_zero = |mu: f64| -> bool {
        let g2 = -mu * w0 / (2.0 * nf);
        let g4 = -(2.0 * (nf - 1.0) * b1 * g2 + mu * w0 * g2 + mu * w2) / (4.0 * nf + 8.0);
        let y0 = [
            1.0 + g2 * eps * eps + g4 * eps.powi(4),
            2.0 * g2 * eps + 4.0 * g4 * eps.powi(3),
        ];
        let rhs = |r: f64, y: [f64; 2]| {
            let c = profile.log_derivative(r);
            [y[1], -(nf - 1.0) * c * y[1] - mu * weight(r) * y[0]]
        };
        let mut crossed = false;
        let res = integrate_dopri5(rhs, eps, y0, r_end, &opts, |seg| {
            if seg.y1[0] <= 0.0 {
                crossed = true;
                StepDecision::AcceptAndStop
            } else {
                StepDecision::Accept
            }
        });
        res.is_ok() && crossed
    };

    // grow the upper end inside the (1e-8, 1e8) bracket
    if has_zero(MU_LO) {
        return Err(StabilityError::BracketFailure { r: r_end });
    }
    let mut lo = MU_LO;
    let mut hi = 1e-2f64.max(0.5 / (r_end * r_end));
    loop {
        if has_zero(hi) {
            break;
        }
        lo = hi;
        hi *= 8.0;
        if hi > MU_HI {
            return Err(StabilityError::BracketFailure { r: r_end });
        }
    }
    for _ in 0..200 {
        if hi - lo <= tol * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if has_zero(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Attach the weighted-eigenvalue cross-check to a verdict: computes
/// Λ(B_R, α) and records whether it agrees with the oscillation decision
/// through the Sturm equivalence (zero before R ⟺ Λ < 1).
pub fn attach_sturm_cross_check(
    verdict: &mut StabilityVerdict,
    profile: &WarpProfile,
    base: &RadialSolution,
    lin: &LinearizedSolution,
    r_ball: f64,
    tol: f64,
) -> Result<(), StabilityError> {
    let lam = weighted_ball_eigenvalue(profile, base, r_ball, tol)?;
    let zero_before = first_zero(lin).map(|z| z < r_ball).unwrap_or(false);
    verdict.weighted_eig = Some((r_ball, lam));
    verdict.method_agreement = Some(zero_before == (lam < 1.0));
    Ok(())
}

/// Dirichlet ball eigenvalue λ₁(B_R) of −Δ_g on radial functions, by
/// shooting with zero counting and bisection in μ.
pub fn ball_eigenvalue(
    profile: &WarpProfile,
    n: usize,
    r_end: f64,
    tol: f64,
) -> Result<f64, StabilityError> {
    shoot_smallest_eigenvalue(profile, n, r_end, tol, &|_| 1.0, 1.0, 0.0)
}

/// Weighted eigenvalue Λ(B_R, α): smallest μ with a zero of the
/// eᵘ-weighted shooting problem at R. Sturm: Λ(B_R, α) < 1 ⟺ the
/// variational solution vanishes before R.
pub fn weighted_ball_eigenvalue(
    profile: &WarpProfile,
    base: &RadialSolution,
    r_end: f64,
    tol: f64,
) -> Result<f64, StabilityError> {
    assert!(
        base.r_max >= r_end * (1.0 - 1e-12),
        "base solution must be integrated past R ({} < {r_end})",
        base.r_max
    );
    let n = base.dimension;
    let ea = base.alpha.exp();
    let w2 = ea * (-ea / (2.0 * n as f64));
    shoot_smallest_eigenvalue(profile, n, r_end, tol, &|r| base.eval(r).0.exp(), ea, w2)
}

/// λ₁(B_R) samples together with a Richardson extrapolation in 1/R.
#[derive(Debug, Clone)]
pub struct Lambda1Estimate {
    pub samples: Vec<(f64, f64)>,
    /// Extrapolated limit from the two largest radii.
    pub value: f64,
    /// Spread between extrapolations from successive radius pairs.
    pub uncertainty: f64,
}

/// Estimate λ₁(M) from ball eigenvalues at increasing radii (default radii
/// 10, 20, 40), extrapolating λ(R) = λ∞ + c/R.
pub fn lambda1_extrapolated(
    profile: &WarpProfile,
    n: usize,
    radii: &[f64],
    tol: f64,
) -> Result<Lambda1Estimate, StabilityError> {
    assert!(radii.len() >= 2, "need at least two radii");
    let mut samples = Vec::with_capacity(radii.len());
    for &r in radii {
        samples.push((r, ball_eigenvalue(profile, n, r, tol)?));
    }
    let extrap = |(r1, l1): (f64, f64), (r2, l2): (f64, f64)| (r2 * l2 - r1 * l1) / (r2 - r1);
    let k = samples.len();
    let value = extrap(samples[k - 2], samples[k - 1]);
    let uncertainty = if k >= 3 {
        (value - extrap(samples[k - 3], samples[k - 2])).abs()
    } else {
        f64::NAN
    };
    Ok(Lambda1Estimate {
        samples,
        value,
        uncertainty,
    })
}

/// Bisection estimate of the stability threshold η = sup{α : u_α stable}.
#[derive(Debug, Clone)]
pub struct EtaReport {
    pub eta_hat: f64,
    pub tol_alpha: f64,
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub r_max: f64,
    /// Every probed (α, stable?) pair in probe order.
    pub probes: Vec<(f64, bool)>,
    pub stable_witness: f64,
    pub unstable_witness: f64,
}

/// Locate η by bisection on α over a validated bracket. Monotonicity of the
/// verdict in α (the stable set is an interval) justifies bisection; a
/// violation among the probes is reported as `NonMonotoneWitness`.
pub fn threshold_eta(
    profile: &WarpProfile,
    n: usize,
    alpha_lo: f64,
    alpha_hi: f64,
    r_max: f64,
    tol_alpha: f64,
) -> Result<EtaReport, StabilityError> {
    if !(2..=9).contains(&n) {
        return Err(StabilityError::DimensionRange(n));
    }
    let tol = 1e-10;
    let mut probes = Vec::new();
    let mut is_stable = |alpha: f64| -> Result<bool, StabilityError> {
        let v = stability_test(profile, n, alpha, r_max, tol)?;
        probes.push((alpha, v.decision.is_stable()));
        Ok(v.decision.is_stable())
    };
    if !is_stable(alpha_lo)? || is_stable(alpha_hi)? {
        return Err(StabilityError::BracketError { alpha_lo, alpha_hi });
    }
    let (mut lo, mut hi) = (alpha_lo, alpha_hi);
    while hi - lo > tol_alpha {
        let mid = 0.5 * (lo + hi);
        if is_stable(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // consistency scan over everything probed
    let mut sorted = probes.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in sorted.windows(2) {
        if !w[0].1 && w[1].1 {
            return Err(StabilityError::NonMonotoneWitness { alpha: w[1].0 });
        }
    }
    Ok(EtaReport {
        eta_hat: 0.5 * (lo + hi),
        tol_alpha,
        alpha_lo,
        alpha_hi,
        r_max,
        probes,
        stable_witness: lo,
        unstable_witness: hi,
    })
}
