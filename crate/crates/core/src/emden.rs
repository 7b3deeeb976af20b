//! Phase-plane picture behind the dimension-10 transition.
//!
//! The substitution v = u + 2 log ψ − log[2(N−2)] sends the radial equation
//! to a form whose Euclidean specialization, in t = log r, is the autonomous
//! system y′ = −(N−2)y − 2(N−2)(e^z − 1), z′ = y with unique fixed point at
//! the origin. Its linearization has characteristic polynomial
//! P(λ) = λ² + (N−2)λ + 2(N−2): complex roots (spiral, repeated crossings)
//! for 3 ≤ N ≤ 9, real roots (ordered solutions) from N = 10 on.
//!
//! For N ≥ 10 the same polynomial's negative root λ₁ powers the comparison
//! machinery: Z = ψ^{λ₁} satisfies 𝓛Z = λ₁ψ^{λ₁−1}ψ″ < 0 under (A5), which
//! forces every transformed solution below the barrier V = 2 log ψ′.

use crate::manifold::WarpProfile;
use crate::ode::{integrate_dopri5, OdeError, RkOptions, StepDecision};
use crate::solver::RadialSolution;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmdenError {
    #[error("the transform needs N >= 3 (log[2(N-2)] undefined), got {0}")]
    DimensionError(usize),
    #[error("trajectory left the regular-solution basin: |z| > 50 at t = {t}")]
    Divergence { t: f64 },
    #[error(transparent)]
    Ode(#[from] OdeError),
}

/// Point of the planar autonomous flow: y = w′(t), z = w(t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseState {
    pub t: f64,
    pub y: f64,
    pub z: f64,
}

/// Root layout of P(λ) = λ² + (N−2)λ + 2(N−2).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootClass {
    /// 3 ≤ N ≤ 9: complex pair, spiral focus.
    ComplexFocus,
    /// N = 10: repeated real root.
    RealDegenerate,
    /// N ≥ 11: distinct negative real roots.
    RealNode,
}

#[derive(Debug, Clone, Copy)]
pub struct SpectralSummary {
    pub n: usize,
    /// (λ₁, λ₂) ordered by real part; complex conjugates in the focus case.
    pub roots: (Complex64, Complex64),
    pub classification: RootClass,
    pub discriminant: f64,
}

/// Roots and classification of the characteristic polynomial for N ≥ 3.
pub fn char_roots(n: usize) -> Result<SpectralSummary, EmdenError> {
    if n < 3 {
        return Err(EmdenError::DimensionError(n));
    }
    let nf = n as f64;
    let b = nf - 2.0;
    let disc = b * (nf - 10.0);
    let (roots, classification) = if disc < 0.0 {
        let re = -b / 2.0;
        let im = (-disc).sqrt() / 2.0;
        (
            (Complex64::new(re, -im), Complex64::new(re, im)),
            RootClass::ComplexFocus,
        )
    } else {
        let s = disc.sqrt();
        let r1 = (-b - s) / 2.0;
        let r2 = (-b + s) / 2.0;
        (
            (Complex64::new(r1, 0.0), Complex64::new(r2, 0.0)),
            if disc == 0.0 {
                RootClass::RealDegenerate
            } else {
                RootClass::RealNode
            },
        )
    };
    Ok(SpectralSummary {
        n,
        roots,
        classification,
        discriminant: disc,
    })
}

/// The transformed height v = u + 2 log ψ − log[2(N−2)] at one radius.
pub fn transform_value(profile: &WarpProfile, n: usize, r: f64, u: f64) -> f64 {
    u + 2.0 * profile.log_psi(r) - (2.0 * (n as f64 - 2.0)).ln()
}

/// Inverse transform u = v − 2 log ψ + log[2(N−2)].
pub fn inverse_transform(profile: &WarpProfile, n: usize, r: f64, v: f64) -> f64 {
    v - 2.0 * profile.log_psi(r) + (2.0 * (n as f64 - 2.0)).ln()
}

/// Barrier V(r) = 2 log ψ′(r).
pub fn barrier_value(profile: &WarpProfile, r: f64) -> f64 {
    // ψ′ = ψ · (ψ′/ψ), both factors overflow-safe
    2.0 * (profile.log_psi(r) + profile.log_derivative(r).ln())
}

/// One node of the transformed trajectory.
#[derive(Debug, Clone, Copy)]
pub struct EmdenPoint {
    pub r: f64,
    /// Transformed height v(r).
    pub v: f64,
    /// Barrier 2 log ψ′(r).
    pub big_v: f64,
}

#[derive(Debug, Clone)]
pub struct EmdenTransform {
    pub points: Vec<EmdenPoint>,
    /// Largest relative residual of the transformed equation over the nodes.
    pub max_residual: f64,
}

/// Transform a radial solution to (v, V) on its node grid, checking the
/// transformed equation residual at every node as a self-test of the
/// algebra (the terms are recomputed independently and must cancel).
pub fn emden_transform(
    sol: &RadialSolution,
    profile: &WarpProfile,
    n: usize,
) -> Result<EmdenTransform, EmdenError> {
    if n < 3 {
        return Err(EmdenError::DimensionError(n));
    }
    let nf = n as f64;
    let mut points = Vec::with_capacity(sol.nodes.len());
    let mut max_residual = 0.0f64;
    for node in &sol.nodes {
        let r = node.r;
        let v = transform_value(profile, n, r, node.u);
        let big_v = barrier_value(profile, r);
        points.push(EmdenPoint { r, v, big_v });

        let c = profile.log_derivative(r);
        let c2 = profile.log_psi1_derivative(r) * c; // ψ″/ψ = (ψ″/ψ′)(ψ′/ψ)
        let u2 = sol.u2(r);
        let v1 = node.u1 + 2.0 * c;
        let v2 = u2 + 2.0 * (c2 - c * c);
        let log_psi = profile.log_psi(r);
        let term_exp = 2.0 * (nf - 2.0) * (v - 2.0 * log_psi).exp();
        let residual = v2 + (nf - 1.0) * c * v1 + term_exp - 2.0 * (nf - 2.0) * c * c - 2.0 * c2;
        let scale = v2
            .abs()
            .max(((nf - 1.0) * c * v1).abs())
            .max(term_exp.abs())
            .max((2.0 * (nf - 2.0) * c * c).abs())
            .max(1.0);
        max_residual = max_residual.max(residual.abs() / scale);
    }
    Ok(EmdenTransform {
        points,
        max_residual,
    })
}

/// Phase point of the Euclidean autonomous system read off a radial solution
/// at radius r: z = v(r), y = r·v′(r), with the clock set to t = 0.
pub fn phase_start_from_solution(
    sol: &RadialSolution,
    profile: &WarpProfile,
    n: usize,
    r: f64,
) -> Result<PhaseState, EmdenError> {
    if n < 3 {
        return Err(EmdenError::DimensionError(n));
    }
    let (u, u1) = sol.eval(r);
    let z = transform_value(profile, n, r, u);
    let y = r * (u1 + 2.0 * profile.log_derivative(r));
    Ok(PhaseState { t: 0.0, y, z })
}

/// Integrate y′ = −(N−2)y − 2(N−2)(e^z − 1), z′ = y from `start` to `t_end`.
///
/// A |z| > 50 excursion aborts with `Divergence` (initial data outside the
/// regular-solution basin).
pub fn integrate_autonomous(
    n: usize,
    start: PhaseState,
    t_end: f64,
    tol: f64,
) -> Result<Vec<PhaseState>, EmdenError> {
    if n < 3 {
        return Err(EmdenError::DimensionError(n));
    }
    let b = n as f64 - 2.0;
    let rhs = move |_t: f64, w: [f64; 2]| [-b * w[0] - 2.0 * b * w[1].exp_m1(), w[0]];
    let opts = RkOptions::with_tol(tol);
    let mut diverged: Option<f64> = None;
    let dense = integrate_dopri5(rhs, start.t, [start.y, start.z], t_end, &opts, |seg| {
        if seg.y1[1].abs() > 50.0 {
            diverged = Some(seg.x1);
            StepDecision::AcceptAndStop
        } else {
            StepDecision::Accept
        }
    })?;
    if let Some(t) = diverged {
        return Err(EmdenError::Divergence { t });
    }
    let mut out = vec![start];
    out.extend(dense.segments.iter().map(|s| PhaseState {
        t: s.x1,
        y: s.y1[0],
        z: s.y1[1],
    }));
    Ok(out)
}

/// Cumulative winding angle of (y, z) around the origin at each trajectory
/// point. Accumulation freezes while the point sits inside a 1e-8 exclusion
/// disk around the fixed point.
pub fn cumulative_angle(traj: &[PhaseState]) -> Vec<f64> {
    const EXCLUSION: f64 = 1e-8;
    let mut out = Vec::with_capacity(traj.len());
    let mut total = 0.0;
    let mut prev: Option<f64> = None;
    for p in traj {
        if p.y.hypot(p.z) < EXCLUSION {
            prev = None;
            out.push(total);
            continue;
        }
        let ang = p.z.atan2(p.y);
        if let Some(a) = prev {
            let mut d = ang - a;
            while d > std::f64::consts::PI {
                d -= 2.0 * std::f64::consts::PI;
            }
            while d < -std::f64::consts::PI {
                d += 2.0 * std::f64::consts::PI;
            }
            total += d;
        }
        prev = Some(ang);
        out.push(total);
    }
    out
}

/// Full turns around the origin: |cumulative angle| / 2π.
pub fn winding_turns(traj: &[PhaseState]) -> f64 {
    cumulative_angle(traj).last().copied().unwrap_or(0.0).abs() / (2.0 * std::f64::consts::PI)
}

/// 𝓛φ = φ″ + (N−1)(ψ′/ψ)φ′ + 2(N−2)(ψ′/ψ)²φ at one radius.
pub fn l_operator(profile: &WarpProfile, n: usize, r: f64, phi: f64, phi1: f64, phi2: f64) -> f64 {
    let c = profile.log_derivative(r);
    phi2 + (n as f64 - 1.0) * c * phi1 + 2.0 * (n as f64 - 2.0) * c * c * phi
}

/// 𝓛 applied to the comparison function Z = ψ^{λ₁}, which reduces to
/// λ₁ ψ^{λ₁−1} ψ″ because P(λ₁) = 0; strictly negative under (A5) for
/// N ≥ 10. Computed as λ₁ ψ^{λ₁} (ψ″/ψ′)(ψ′/ψ) to stay overflow-safe.
pub fn l_barrier(profile: &WarpProfile, n: usize, r: f64) -> Result<f64, EmdenError> {
    let roots = char_roots(n)?;
    let lambda1 = roots.roots.0.re;
    let log_z = lambda1 * profile.log_psi(r);
    Ok(lambda1 * log_z.exp() * profile.log_psi1_derivative(r) * profile.log_derivative(r))
}
